"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "CirLdpError",
    "RegimeError",
    "DomainError",
    "GridError",
    "DegenerateError",
    "BoundaryError",
    "ConfigError",
    "InconclusiveError",
]


class CirLdpError(Exception):
    """Base class for all package-specific errors."""


class RegimeError(CirLdpError, ValueError):
    """Model parameters outside the ergodic regime a > 2, b < 0, x0 > 0."""


class DomainError(CirLdpError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class GridError(CirLdpError, ValueError):
    """Trajectory time grid unsuitable for quadrature (non-uniform or too short)."""


class DegenerateError(CirLdpError, ArithmeticError):
    """Estimator denominator V is numerically zero (constant-path degeneracy)."""


class BoundaryError(CirLdpError, ValueError):
    """Evaluation point too close to a domain boundary or branch-switching surface."""


class ConfigError(CirLdpError, ValueError):
    """Invalid or incomplete run configuration."""


class InconclusiveError(CirLdpError, RuntimeError):
    """Monte Carlo experiment produced too few events to estimate a probability."""
