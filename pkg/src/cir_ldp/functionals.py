"""Path functionals and the four estimator couples built from them.

A continuous-record trajectory enters estimation only through a handful of
observables: the terminal state, the time averages of X_t and 1/X_t, and the
terminal log.  This module reduces a trajectory to those observables
(trapezoidal quadrature on the uniform grid) and evaluates the maximum
likelihood estimator of (a, b) together with its simplified variants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cir_model import Trajectory
from .errors import DegenerateError, GridError

__all__ = [
    "EstimatePair",
    "PathFunctionals",
    "compute_functionals",
    "estimate_check",
    "estimate_combined",
    "estimate_mle",
    "estimate_tilde",
    "functionals_from_summary",
    "ito_log_integral",
]

#: Degeneracy threshold on V before any estimator division.
EPS_V = 1e-12


@dataclass(frozen=True)
class PathFunctionals:
    """Observables of one path over the horizon T.

    Attributes
    ----------
    T : float
        Horizon.
    xT_over_T : float
        X_T / T.
    sqrt_xT_over_T : float
        sqrt(X_T / T).
    S : float
        Time average of X_t (trapezoid).
    Sigma : float
        Time average of 1/X_t (trapezoid).
    L : float
        (log X_T - log x0) / T.
    curlyL : float
        -sqrt(-log(X_T)/T) when X_T < 1, else log(X_T)/T.
    V : float
        S * Sigma - 1; nonnegative by the Cauchy-Schwarz inequality on the
        quadrature weights, and zero only for constant paths.
    """

    T: float
    xT_over_T: float
    sqrt_xT_over_T: float
    S: float
    Sigma: float
    L: float
    curlyL: float
    V: float


def functionals_from_summary(
    T: float, x0: float, x_T: float, S: float, Sigma: float
) -> PathFunctionals:
    """Assemble PathFunctionals from already-reduced path quantities.

    Used by streaming simulation drivers that never materialize the path;
    (S, Sigma) must come from the same trapezoid rule compute_functionals
    applies to stored trajectories.
    """
    log_xT = math.log(x_T)
    if x_T < 1.0:
        curly = -math.sqrt(-log_xT / T)
    else:
        curly = log_xT / T
    return PathFunctionals(
        T=T,
        xT_over_T=x_T / T,
        sqrt_xT_over_T=math.sqrt(x_T / T),
        S=S,
        Sigma=Sigma,
        L=(log_xT - math.log(x0)) / T,
        curlyL=curly,
        V=S * Sigma - 1.0,
    )


def compute_functionals(traj: Trajectory) -> PathFunctionals:
    """Reduce a trajectory to its estimation observables.

    S and Sigma are trapezoid averages on the uniform grid; the grid must
    have at least two points and constant spacing.

    Raises
    ------
    GridError
        If the trajectory has fewer than two points or a non-uniform grid.
    """
    times = traj.times
    values = traj.values
    if times.size < 2:
        raise GridError("need at least two grid points for quadrature")
    steps = np.diff(times)
    dt = steps.mean()
    if np.any(np.abs(steps - dt) > 1e-9 * dt):
        raise GridError("time grid is not uniform; trapezoid weights invalid")
    T = float(times[-1])
    w = np.ones_like(values)
    w[0] = 0.5
    w[-1] = 0.5
    S = float(np.dot(w, values)) * dt / T
    Sigma = float(np.dot(w, 1.0 / values)) * dt / T
    return functionals_from_summary(T, float(values[0]), float(values[-1]), S, Sigma)


def ito_log_integral(pf: PathFunctionals) -> float:
    """The stochastic integral of dX_t / X_t over [0, T].

    Recovered through the Ito identity as T*L + 2*T*Sigma; no direct
    stochastic integration is ever performed.
    """
    return pf.T * pf.L + 2.0 * pf.T * pf.Sigma


@dataclass(frozen=True)
class EstimatePair:
    """A candidate (alpha, beta) point in parameter space."""

    alpha: float
    beta: float


def _checked_v(pf: PathFunctionals, eps_v: float) -> float:
    if pf.V <= eps_v:
        raise DegenerateError(
            f"V={pf.V} is below the degeneracy threshold {eps_v}; "
            "the path is (numerically) constant"
        )
    return pf.V


def estimate_mle(pf: PathFunctionals, eps_v: float = EPS_V) -> EstimatePair:
    """Maximum likelihood estimator of (a, b) from a continuous record.

    Raises
    ------
    DegenerateError
        If V <= eps_v.
    """
    v = _checked_v(pf, eps_v)
    alpha = (pf.S * (2.0 * pf.Sigma + pf.L) - pf.xT_over_T) / v
    beta = ((pf.xT_over_T - 2.0) * pf.Sigma - pf.L) / v
    return EstimatePair(alpha=alpha, beta=beta)


def estimate_tilde(pf: PathFunctionals, eps_v: float = EPS_V) -> EstimatePair:
    """Simplified estimator dropping the L term from the MLE."""
    v = _checked_v(pf, eps_v)
    alpha = (2.0 * pf.S * pf.Sigma - pf.xT_over_T) / v
    beta = (pf.xT_over_T - 2.0) * pf.Sigma / v
    return EstimatePair(alpha=alpha, beta=beta)


def estimate_check(pf: PathFunctionals, eps_v: float = EPS_V) -> EstimatePair:
    """Simplified estimator dropping the X_T/T term from the MLE."""
    v = _checked_v(pf, eps_v)
    alpha = pf.S * (2.0 * pf.Sigma + pf.L) / v
    beta = (-2.0 * pf.Sigma - pf.L) / v
    return EstimatePair(alpha=alpha, beta=beta)


def estimate_combined(pf: PathFunctionals, eps_v: float = EPS_V) -> EstimatePair:
    """Tilde estimator when X_T >= 1, check estimator otherwise."""
    if pf.xT_over_T * pf.T >= 1.0:
        return estimate_tilde(pf, eps_v)
    return estimate_check(pf, eps_v)
