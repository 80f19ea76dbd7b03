"""Monte Carlo experiments and figure-grid emitters.

The experiments validate the distributional limits of the estimators (CLT
with covariance 4 C^-1), the exponential decay of tail probabilities against
the closed-form rates, and produce the rate-surface and marginal-profile
grids as CSV.  All randomness flows through the deterministic substream
scheme of cir_model, so reports depend only on the master seed, never on
worker count.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cir_model import (
    EnsembleSummary,
    ProcessParams,
    _coerce_seed,
    _substream,
    simulate_ensemble,
)
from .errors import DomainError, InconclusiveError
from .functionals import (
    estimate_check,
    estimate_mle,
    estimate_tilde,
    functionals_from_summary,
)
from .rates import (
    rate_J,
    rate_K,
    rate_S,
    rate_Sigma,
    rate_V,
    rate_marginal,
    region_constants,
)

__all__ = [
    "CltCovariance",
    "CltReport",
    "ProfileCurves",
    "SlopeReport",
    "SurfaceGrid",
    "clt_experiment",
    "clt_experiments",
    "clt_target_covariance",
    "profile_curves",
    "slope_experiment",
    "surface_grid",
]

_ESTIMATORS: dict[str, Callable] = {
    "mle": estimate_mle,
    "tilde": estimate_tilde,
    "check": estimate_check,
}


@dataclass(frozen=True, eq=False)
class CltCovariance:
    """The asymptotic covariance 4 C^-1 of sqrt(T)(estimate - (a, b))."""

    C: np.ndarray
    target: np.ndarray

    @property
    def det_C(self) -> float:
        return float(self.C[0, 0] * self.C[1, 1] - self.C[0, 1] * self.C[1, 0])


def clt_target_covariance(params: ProcessParams) -> CltCovariance:
    """Asymptotic covariance matrix shared by all three estimator couples.

    C = [[-b/(a-2), 1], [1, -a/b]] has determinant 2/(a-2), so the target
    4 C^-1 evaluates in closed form to 2(a-2) [[-a/b, -1], [-1, -b/(a-2)]].
    """
    a, b = params.a, params.b
    C = np.array([[-b / (a - 2.0), 1.0], [1.0, -a / b]])
    s = 2.0 * (a - 2.0)
    target = np.array(
        [[-s * a / b, -s], [-s, -s * b / (a - 2.0)]]
    )
    return CltCovariance(C=C, target=target)


@dataclass(frozen=True, eq=False)
class CltReport:
    estimator: str
    T: float
    n_paths: int
    n_steps: int
    seed: int
    mean: np.ndarray
    covariance: np.ndarray
    target: np.ndarray
    relative_deviations: np.ndarray
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "experiment": "clt",
            "params": {},
            "settings": {
                "estimator": self.estimator,
                "T": self.T,
                "n_paths": self.n_paths,
                "n_steps": self.n_steps,
                "seed": self.seed,
                "tolerance": self.tolerance,
            },
            "metrics": {
                "mean": self.mean.tolist(),
                "covariance": self.covariance.tolist(),
                "target": self.target.tolist(),
                "relative_deviations": self.relative_deviations.tolist(),
            },
            "pass": self.passed,
        }


def _ensemble_estimates(
    params: ProcessParams, ens: EnsembleSummary, estimator: str
) -> np.ndarray:
    try:
        fn = _ESTIMATORS[estimator]
    except KeyError:
        raise DomainError(
            f"estimator must be one of {sorted(_ESTIMATORS)}, got {estimator!r}"
        ) from None
    out = np.empty((len(ens.x_T), 2))
    for i in range(len(ens.x_T)):
        pf = functionals_from_summary(
            ens.T, params.x0, float(ens.x_T[i]), float(ens.S[i]), float(ens.Sigma[i])
        )
        est = fn(pf)
        out[i, 0] = est.alpha
        out[i, 1] = est.beta
    return out


def _clt_report_from_ensemble(
    params: ProcessParams,
    ens: EnsembleSummary,
    estimator: str,
    seed: int,
    tolerance: float,
) -> CltReport:
    target = clt_target_covariance(params).target
    est = _ensemble_estimates(params, ens, estimator)
    dev = math.sqrt(ens.T) * (est - np.array([params.a, params.b]))
    mean = dev.mean(axis=0)
    cov = np.cov(dev, rowvar=False)
    rel = np.abs(cov - target) / np.abs(target)
    passed = bool(np.all(rel <= tolerance))
    return CltReport(
        estimator=estimator,
        T=ens.T,
        n_paths=len(ens.x_T),
        n_steps=ens.n_steps,
        seed=seed,
        mean=mean,
        covariance=cov,
        target=target,
        relative_deviations=rel,
        tolerance=tolerance,
        passed=passed,
    )


def clt_experiments(
    params: ProcessParams,
    estimators: Sequence[str],
    T: float,
    n_paths: int,
    rng,
    n_steps: int | None = None,
    n_workers: int | None = None,
    tolerance: float = 0.15,
) -> list[CltReport]:
    """Run the CLT check for several estimators on one shared ensemble."""
    for name in estimators:
        if name not in _ESTIMATORS:
            raise DomainError(
                f"estimator must be one of {sorted(_ESTIMATORS)}, got {name!r}"
            )
    seed = _coerce_seed(rng)
    if n_steps is None:
        n_steps = max(2, round(200.0 * T))
    ens = simulate_ensemble(params, T, n_steps, n_paths, seed, n_workers=n_workers)
    return [
        _clt_report_from_ensemble(params, ens, name, seed, tolerance)
        for name in estimators
    ]


def clt_experiment(
    params: ProcessParams,
    estimator: str,
    T: float,
    n_paths: int,
    rng,
    n_steps: int | None = None,
    n_workers: int | None = None,
    tolerance: float = 0.15,
) -> CltReport:
    """Empirical check of sqrt(T)(estimate - (a, b)) -> N(0, 4 C^-1).

    Simulates ``n_paths`` trajectories to horizon ``T``, computes the selected
    estimator on each, and compares the empirical covariance of the scaled
    deviations to the closed-form target, entrywise within ``tolerance``.
    """
    return clt_experiments(
        params,
        [estimator],
        T,
        n_paths,
        rng,
        n_steps=n_steps,
        n_workers=n_workers,
        tolerance=tolerance,
    )[0]


_ERGODIC_MEANS = {
    "S": lambda p: -p.a / p.b,
    "Sigma": lambda p: -p.b / (p.a - 2.0),
    "V": lambda p: 2.0 / (p.a - 2.0),
}

_RATE_FUNCTIONS = {"S": rate_S, "Sigma": rate_Sigma, "V": rate_V}


@dataclass(frozen=True, eq=False)
class SlopeReport:
    functional: str
    c: float
    T_grid: tuple[float, ...]
    slopes: tuple[float, ...]
    hits: tuple[int, ...]
    n_paths: int
    n_steps_per_unit: int
    n_min: int
    seed: int
    target_rate: float
    tolerance: float
    upper_tail: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "experiment": "slope",
            "params": {},
            "settings": {
                "functional": self.functional,
                "c": self.c,
                "T_grid": list(self.T_grid),
                "n_paths": self.n_paths,
                "n_steps_per_unit": self.n_steps_per_unit,
                "n_min": self.n_min,
                "seed": self.seed,
                "tolerance": self.tolerance,
            },
            "metrics": {
                "slopes": list(self.slopes),
                "hits": list(self.hits),
                "target_rate": self.target_rate,
                "upper_tail": self.upper_tail,
            },
            "pass": self.passed,
        }


def slope_experiment(
    params: ProcessParams,
    functional: str,
    c: float,
    T_grid: Sequence[float],
    n_paths: int,
    rng,
    n_steps_per_unit: int = 50,
    n_min: int = 50,
    n_workers: int | None = None,
    tolerance: float = 0.30,
) -> SlopeReport:
    """Empirical decay slope -(1/T) log P(functional in the c-tail) per T.

    The tail direction is upward when c is at or above the ergodic mean of
    the functional and downward otherwise.  The slope at the largest T is
    compared to the closed-form rate within the (loose, finite-T) tolerance.

    Raises
    ------
    InconclusiveError
        If the hit count at the largest T falls below ``n_min``.
    """
    if functional not in _RATE_FUNCTIONS:
        raise DomainError(
            f"functional must be one of {sorted(_RATE_FUNCTIONS)}, got {functional!r}"
        )
    if len(T_grid) == 0:
        raise DomainError("T_grid must be non-empty")
    seed = _coerce_seed(rng)
    target = _RATE_FUNCTIONS[functional](params, c)
    upper = c >= _ERGODIC_MEANS[functional](params)
    slopes: list[float] = []
    hit_counts: list[int] = []
    for i, T in enumerate(T_grid):
        n_steps = max(2, round(n_steps_per_unit * T))
        ens = simulate_ensemble(
            params, T, n_steps, n_paths, _substream(seed, 2, i), n_workers=n_workers
        )
        if functional == "S":
            values = ens.S
        elif functional == "Sigma":
            values = ens.Sigma
        else:
            values = ens.S * ens.Sigma - 1.0
        hits = int(np.count_nonzero(values >= c if upper else values <= c))
        hit_counts.append(hits)
        if hits == 0:
            slopes.append(math.inf)
        else:
            slopes.append(-math.log(hits / n_paths) / T)
    i_max = int(np.argmax(T_grid))
    if hit_counts[i_max] < n_min:
        raise InconclusiveError(
            f"only {hit_counts[i_max]} hits at T={T_grid[i_max]} "
            f"(need {n_min}); increase n_paths or move c"
        )
    passed = abs(slopes[i_max] - target) <= tolerance * abs(target)
    return SlopeReport(
        functional=functional,
        c=c,
        T_grid=tuple(float(T) for T in T_grid),
        slopes=tuple(slopes),
        hits=tuple(hit_counts),
        n_paths=n_paths,
        n_steps_per_unit=n_steps_per_unit,
        n_min=n_min,
        seed=seed,
        target_rate=target,
        tolerance=tolerance,
        upper_tail=upper,
        passed=passed,
    )


# ---------------------------------------------------------------------------
# Figure grids.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SurfaceGrid:
    """Rate surfaces J, K, I on an (alpha, beta) grid."""

    which: str
    alphas: np.ndarray
    betas: np.ndarray
    J: np.ndarray
    K: np.ndarray
    I: np.ndarray

    def shared_branch_mask(self, params: ProcessParams) -> np.ndarray:
        """Nodes where J and K evaluate their common closed form."""
        alpha_a = region_constants(params).alpha_a
        A = self.alphas[:, None] >= alpha_a
        B = self.betas[None, :] <= params.b / 3.0
        return A & B

    def max_shared_diff(self, params: ProcessParams) -> float:
        mask = self.shared_branch_mask(params)
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(self.J[mask] - self.K[mask])))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("alpha,beta,J,K,I\n")
        for i, al in enumerate(self.alphas):
            for j, be in enumerate(self.betas):
                buf.write(
                    f"{float(al)!r},{float(be)!r},{float(self.J[i, j])!r},"
                    f"{float(self.K[i, j])!r},{float(self.I[i, j])!r}\n"
                )
        return buf.getvalue()


def surface_grid(
    params: ProcessParams,
    which: str = "I",
    alpha_range: tuple[float, float] = (3.0, 5.0),
    beta_range: tuple[float, float] = (-4.0, -0.5),
    n_alpha: int = 41,
    n_beta: int = 41,
) -> SurfaceGrid:
    """Evaluate the J, K, I surfaces on a rectangular grid.

    The default window is the figure window [3, 5] x [-4, -0.5].
    """
    if which not in ("J", "K", "I"):
        raise DomainError(f"which must be J, K, or I, got {which!r}")
    if not all(map(math.isfinite, (*alpha_range, *beta_range))):
        raise DomainError("grid ranges must be finite")
    alphas = np.linspace(alpha_range[0], alpha_range[1], n_alpha)
    betas = np.linspace(beta_range[0], beta_range[1], n_beta)
    J = np.empty((n_alpha, n_beta))
    K = np.empty((n_alpha, n_beta))
    for i, al in enumerate(alphas):
        for j, be in enumerate(betas):
            J[i, j] = rate_J(params, float(al), float(be))
            K[i, j] = rate_K(params, float(al), float(be))
    return SurfaceGrid(
        which=which, alphas=alphas, betas=betas, J=J, K=K, I=np.minimum(J, K)
    )


@dataclass(frozen=True, eq=False)
class ProfileCurves:
    """Marginal rate curves on a shared 1-D grid."""

    v: np.ndarray
    Ja: np.ndarray
    Ka: np.ndarray
    Ia: np.ndarray
    Jb: np.ndarray
    Kb: np.ndarray
    Ib: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("v,Ja,Ka,Ia,Jb,Kb,Ib\n")
        for i, v in enumerate(self.v):
            buf.write(
                f"{float(v)!r},{float(self.Ja[i])!r},{float(self.Ka[i])!r},"
                f"{float(self.Ia[i])!r},{float(self.Jb[i])!r},"
                f"{float(self.Kb[i])!r},{float(self.Ib[i])!r}\n"
            )
        return buf.getvalue()


def profile_curves(
    params: ProcessParams, grid: Sequence[float] | None = None
) -> ProfileCurves:
    """Evaluate the six marginal rate functions on a shared grid."""
    if grid is None:
        grid = np.linspace(-4.0, 8.0, 61)
    v = np.asarray([float(x) for x in grid])
    cols = {name: np.empty(len(v)) for name in ("Ja", "Ka", "Ia", "Jb", "Kb", "Ib")}
    for i, x in enumerate(v):
        for name in cols:
            cols[name][i] = rate_marginal(params, name, float(x))
    return ProfileCurves(v=v, **cols)
