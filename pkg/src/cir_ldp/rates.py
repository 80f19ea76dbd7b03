"""Closed-form rate functions and the numerical inf-sup cross-check.

Conventions: extended-real values use math.inf; every rate function is a
total function of its arguments and returns +inf outside its effective
domain.  Branch boundaries route to the lower-indexed branch (the closed
forms agree there, which the continuity tests pin down).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _optimize

from .cgf import lambda_star
from .cir_model import ProcessParams
from .errors import DomainError

__all__ = [
    "RateRegionConstants",
    "marginal_inf_numeric",
    "rate_I_infsup",
    "rate_I_mle",
    "rate_J",
    "rate_K",
    "rate_S",
    "rate_Sigma",
    "rate_V",
    "rate_marginal",
    "rate_pair",
    "rate_triplet_L",
    "rate_triplet_x",
    "region_constants",
]

INF = math.inf

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class RateRegionConstants:
    """Branch-boundary constants of the simplified-estimator rate functions."""

    a: float
    b: float
    ell_a: float
    alpha_a: float

    def C_alpha(self, alpha: float) -> float:
        return 0.125 * (self.a - alpha) ** 2 + 2.0 - alpha

    def beta_b(self, alpha: float) -> float:
        """Minimizing beta of K along the alpha-section, for alpha < alpha_a."""
        # C_alpha is positive below alpha_a but can round to a tiny negative
        # right at the boundary.
        c = max(self.C_alpha(alpha), 0.0)
        return self.b * alpha / math.sqrt(
            16.0 * _SQRT2 * math.sqrt(c) + self.a * self.a - 8.0 * alpha + 32.0
        )


def region_constants(params: ProcessParams) -> RateRegionConstants:
    a, b = params.a, params.b
    ell_a = 10.0 / 9.0 + math.sqrt(64.0 + 9.0 * (a - 2.0) ** 2) / 9.0
    alpha_a = -(2.0 / 3.0) * (0.5 * a - 2.0 - math.sqrt(a * a - 2.0 * a + 4.0))
    return RateRegionConstants(a=a, b=b, ell_a=ell_a, alpha_a=alpha_a)


# ---------------------------------------------------------------------------
# One-dimensional functionals: S, Sigma, V, and the couple/triplets.
# ---------------------------------------------------------------------------


def rate_S(params: ProcessParams, x: float) -> float:
    """LDP rate of the time average S_T; zero at -a/b."""
    if x <= 0.0:
        return INF
    a, b = params.a, params.b
    return (a + b * x) ** 2 / (8.0 * x)


def rate_Sigma(params: ProcessParams, y: float) -> float:
    """LDP rate of the inverse time average Sigma_T; zero at -b/(a-2)."""
    if y <= 0.0:
        return INF
    a, b = params.a, params.b
    return ((a - 2.0) * y + b) ** 2 / (8.0 * y)


def rate_V(params: ProcessParams, v: float) -> float:
    """LDP rate of V_T = S_T Sigma_T - 1; zero at 2/(a-2)."""
    if v <= 0.0:
        return INF
    a, b = params.a, params.b
    return -0.25 * b * math.sqrt((v + 1.0) * ((a - 2.0) ** 2 + 4.0 / v)) + 0.25 * a * b


def rate_pair(params: ProcessParams, x: float, y: float) -> float:
    """Joint rate of (S_T, Sigma_T) on the cone {x > 0, y > 0, xy > 1}."""
    if x <= 0.0 or y <= 0.0 or x * y - 1.0 <= 0.0:
        return INF
    a, b = params.a, params.b
    return (
        y / (2.0 * (x * y - 1.0))
        + b * b * x / 8.0
        + (a - 2.0) ** 2 * y / 8.0
        + 0.25 * a * b
    )


def rate_triplet_x(params: ProcessParams, x: float, y: float, z: float) -> float:
    """Joint rate of (sqrt(X_T/T), S_T, Sigma_T) on {x >= 0, y,z > 0, yz > 1}."""
    if x < 0.0 or y <= 0.0 or z <= 0.0 or y * z - 1.0 <= 0.0:
        return INF
    a, b = params.a, params.b
    return (
        0.25 * a * b
        + b * b * y / 8.0
        + (a - 2.0) ** 2 * z / 8.0
        - 0.25 * b * x * x
        + (x * x + 2.0) ** 2 * z / (8.0 * (y * z - 1.0))
    )


def rate_triplet_L(params: ProcessParams, y: float, z: float, t: float) -> float:
    """Joint rate of (S_T, Sigma_T, curlyL_T) on {t <= 0, y,z > 0, yz > 1}."""
    if t > 0.0 or y <= 0.0 or z <= 0.0 or y * z - 1.0 <= 0.0:
        return INF
    a, b = params.a, params.b
    return (
        0.25 * a * b
        + b * b * y / 8.0
        + (a - 2.0) ** 2 * z / 8.0
        + 0.25 * a * t * t
        + (4.0 * z * (y * t * t + 1.0) + t**4 * y) / (8.0 * (y * z - 1.0))
    )


# ---------------------------------------------------------------------------
# Estimator-couple rate functions J, K, I.
# ---------------------------------------------------------------------------


def _J_first_term(a: float, b: float, alpha: float, beta: float) -> float:
    return ((a - 2.0) ** 2 * beta / (8.0 * (2.0 - alpha))) * (
        1.0 + (2.0 - alpha) * b / (beta * (a - 2.0))
    ) ** 2


def _rate_J_branch_A(params: ProcessParams, alpha: float, beta: float) -> float:
    a, b = params.a, params.b
    return _J_first_term(a, b, alpha, beta) + 2.0 * beta - b


def _rate_J_branch_B(params: ProcessParams, alpha: float, beta: float) -> float:
    a, b = params.a, params.b
    return _J_first_term(a, b, alpha, beta) - 0.25 * beta * (1.0 - b / beta) ** 2


def rate_J(params: ProcessParams, alpha: float, beta: float) -> float:
    """Rate function of the tilde estimator couple; zero at (a, b)."""
    b = params.b
    if alpha == 2.0 and beta == 0.0:
        return -b
    if (alpha > 2.0 and b / 3.0 <= beta < 0.0) or (alpha < 2.0 and beta > 0.0):
        return _rate_J_branch_A(params, alpha, beta)
    if alpha > 2.0 and beta <= b / 3.0:
        return _rate_J_branch_B(params, alpha, beta)
    return INF


def _K_common(a: float, b: float, alpha: float, beta: float) -> float:
    return 0.25 * a * (b - beta) - (alpha / (8.0 * beta)) * (b * b - beta * beta)


def _rate_K_branch_1(params: ProcessParams, alpha: float, beta: float) -> float:
    a, b = params.a, params.b
    c = max(region_constants(params).C_alpha(alpha), 0.0)
    return _K_common(a, b, alpha, beta) - (beta / alpha) * (_SQRT2 + math.sqrt(c)) ** 2


def _rate_K_branch_2(params: ProcessParams, alpha: float, beta: float) -> float:
    a, b = params.a, params.b
    return _K_common(a, b, alpha, beta) - beta * (a - alpha) ** 2 / (
        8.0 * (alpha - 2.0)
    )


def rate_K(params: ProcessParams, alpha: float, beta: float) -> float:
    """Rate function of the check estimator couple; zero at (a, b)."""
    a, b = params.a, params.b
    if alpha == 0.0 and beta == 0.0:
        return -0.25 * b * (4.0 - a + math.sqrt(a * a + 16.0))
    alpha_a = region_constants(params).alpha_a
    if (beta < 0.0 and 0.0 < alpha <= alpha_a) or (beta > 0.0 and alpha < 0.0):
        return _rate_K_branch_1(params, alpha, beta)
    if beta < 0.0 and alpha >= alpha_a:
        return _rate_K_branch_2(params, alpha, beta)
    return INF


def rate_I_mle(params: ProcessParams, alpha: float, beta: float) -> float:
    """Rate function of the MLE couple: pointwise min of rate_J and rate_K."""
    return min(rate_J(params, alpha, beta), rate_K(params, alpha, beta))


# ---------------------------------------------------------------------------
# Marginal rate functions.
# ---------------------------------------------------------------------------


def _Ja_low(params: ProcessParams, alpha: float) -> float:
    a, b = params.a, params.b
    return 0.25 * b * (a - 6.0 - math.sqrt((a - 2.0) ** 2 + 16.0 * (2.0 - alpha)))


def _Ja_high(params: ProcessParams, alpha: float) -> float:
    a, b = params.a, params.b
    return 0.25 * b * (a - math.sqrt(alpha * ((a - 2.0) ** 2 / (alpha - 2.0) + 2.0)))


def _Ja(params: ProcessParams, alpha: float) -> float:
    if alpha <= region_constants(params).ell_a:
        return _Ja_low(params, alpha)
    return _Ja_high(params, alpha)


def _Jb(params: ProcessParams, beta: float) -> float:
    b = params.b
    if beta <= b / 3.0:
        return -0.25 * beta * (1.0 - b / beta) ** 2
    return 2.0 * beta - b


def _Ka(params: ProcessParams, alpha: float) -> float:
    rc = region_constants(params)
    if alpha == 0.0:
        return rate_K(params, 0.0, 0.0)
    if alpha < rc.alpha_a:
        return rate_K(params, alpha, rc.beta_b(alpha))
    return _Ja_high(params, alpha)


def _scan_refine_min(fn, lo: float, hi: float, n: int = 241) -> float:
    xs = np.linspace(lo, hi, n)
    vals = [fn(float(x)) for x in xs]
    i = int(np.argmin(vals))
    best = vals[i]
    if not math.isfinite(best):
        return best
    b_lo = float(xs[max(i - 1, 0)])
    b_hi = float(xs[min(i + 1, n - 1)])
    res = _optimize.minimize_scalar(
        fn, bounds=(b_lo, b_hi), method="bounded", options={"xatol": 1e-11}
    )
    return min(best, float(res.fun))


def _expand_hi(fn, start: float, ceiling: float, cap: float = 1e6) -> float:
    hi = start
    while hi < cap and fn(hi) < ceiling:
        hi *= 2.0
    return hi


def _Kb(params: ProcessParams, beta: float) -> float:
    # No closed form exists; sign-restricted 1-D infimum over alpha.
    if beta == 0.0:
        return rate_K(params, 0.0, 0.0)
    a = params.a
    eps = 1e-8
    if beta < 0.0:

        def fn(al: float) -> float:
            return rate_K(params, al, beta)

        probe = min(fn(x) for x in (0.5, 1.0, a, 2.0 * a))
        hi = _expand_hi(fn, max(8.0, 2.0 * a), probe + 10.0)
        return _scan_refine_min(fn, eps, hi)

    def fn_neg(u: float) -> float:
        return rate_K(params, -u, beta)

    probe = min(fn_neg(x) for x in (0.5, 1.0, a))
    hi = _expand_hi(fn_neg, max(8.0, 2.0 * a), probe + 10.0)
    return _scan_refine_min(fn_neg, eps, hi)


def rate_marginal(params: ProcessParams, which: str, v: float) -> float:
    """Marginal rate functions: which in {Ja, Jb, Ka, Kb, Ia, Ib}.

    Ja, Jb, Ka use their closed piecewise forms; Kb is a numeric infimum of
    rate_K over the sign-appropriate alpha half-line; Ia and Ib are pointwise
    minima of the corresponding pair.
    """
    if which == "Ja":
        return _Ja(params, v)
    if which == "Jb":
        return _Jb(params, v)
    if which == "Ka":
        return _Ka(params, v)
    if which == "Kb":
        return _Kb(params, v)
    if which == "Ia":
        return min(_Ja(params, v), _Ka(params, v))
    if which == "Ib":
        return min(_Jb(params, v), _Kb(params, v))
    raise DomainError(f"unknown marginal selector {which!r}")


def marginal_inf_numeric(params: ProcessParams, which: str, axis: str, v: float) -> float:
    """Numeric 1-D infimum of rate_J or rate_K along one axis.

    ``which`` picks the surface (J or K); ``axis`` names the held coordinate:
    axis='a' holds alpha=v and minimizes over beta, axis='b' holds beta=v and
    minimizes over alpha.  Used to cross-check the closed-form marginals.
    """
    if which not in ("J", "K"):
        raise DomainError(f"which must be 'J' or 'K', got {which!r}")
    surface = rate_J if which == "J" else rate_K
    a, b = params.a, params.b
    eps = 1e-8
    if axis == "a":
        alpha = v
        if which == "K" and alpha == 0.0:
            return rate_K(params, 0.0, 0.0)
        if which == "J" and alpha == 2.0:
            return rate_J(params, 2.0, 0.0)
        lo_sign = (alpha > 2.0) if which == "J" else (alpha > 0.0)
        if lo_sign:

            def fn(u: float) -> float:
                return surface(params, alpha, -u)

        else:

            def fn(u: float) -> float:
                return surface(params, alpha, u)

        probe = min(fn(x) for x in (0.1, -b, 1.0, -3.0 * b))
        hi = _expand_hi(fn, max(8.0, -8.0 * b), probe + 10.0)
        return _scan_refine_min(fn, eps, hi)
    if axis != "b":
        raise DomainError(f"axis must be 'a' or 'b', got {axis!r}")
    beta = v
    if which == "J" and beta == 0.0:
        return rate_J(params, 2.0, 0.0)
    if which == "K" and beta == 0.0:
        return rate_K(params, 0.0, 0.0)
    if which == "J":
        if beta > 0.0:

            def fn(u: float) -> float:
                return surface(params, 2.0 - u, beta)

        else:

            def fn(u: float) -> float:
                return surface(params, 2.0 + u, beta)

        probe = min(fn(x) for x in (0.5, 1.0, a))
        hi = _expand_hi(fn, max(8.0, 2.0 * a), probe + 10.0)
        return _scan_refine_min(fn, 1e-7, hi)
    if beta < 0.0:

        def fn(u: float) -> float:
            return surface(params, u, beta)

    else:

        def fn(u: float) -> float:
            return surface(params, -u, beta)

    probe = min(fn(x) for x in (0.5, 1.0, a))
    hi = _expand_hi(fn, max(8.0, 2.0 * a), probe + 10.0)
    return _scan_refine_min(fn, eps, hi)


# ---------------------------------------------------------------------------
# Numerical inf-sup characterization of the MLE rate function.
# ---------------------------------------------------------------------------


def _nelder_mead(fn, x0: np.ndarray) -> float:
    # Rejected points carry +inf; keep the solver's inf-inf bookkeeping quiet.
    with np.errstate(invalid="ignore"):
        res = _optimize.minimize(
            fn,
            x0,
            method="Nelder-Mead",
            options={"fatol": 1e-9, "xatol": 1e-7, "maxfev": 400},
        )
    return float(res.fun)


def _infsup_generic(params: ProcessParams, alpha: float, beta: float) -> float:
    a2 = 2.0 - alpha

    def y_of(x: float) -> float:
        return (x * x - alpha) / beta

    def z_of(t: float) -> float:
        return (t * t + beta) / a2

    def objective(v: np.ndarray) -> float:
        x, t = float(v[0]), float(v[1])
        if x < 0.0 or t > 0.0:
            return INF
        return lambda_star(params, x, y_of(x), z_of(t), t)

    # Sign-feasible (x, t) box for start placement; the objective itself
    # rejects anything outside the admissible set via +inf.
    if beta > 0.0:
        x_lo = math.sqrt(max(alpha, 0.0))
        x_hi = x_lo + 8.0
        t_lo, t_hi = -8.0, 0.0
    elif alpha < 2.0:
        x_lo, x_hi = 0.0, math.sqrt(alpha)
        t_hi = -math.sqrt(-beta)
        t_lo = t_hi - 8.0
    else:
        x_lo, x_hi = 0.0, math.sqrt(alpha)
        t_lo, t_hi = -math.sqrt(-beta), 0.0

    candidates: list[float] = []
    starts: list[np.ndarray] = []
    qs = (0.15, 0.4, 0.65, 0.9)
    for qx in qs:
        for qt in qs:
            starts.append(
                np.array(
                    [x_lo + qx * (x_hi - x_lo), t_lo + qt * (t_hi - t_lo)]
                )
            )
    # Slice seeds: the two candidate minimizers predicted by the theory.
    z0 = beta / a2
    if z0 > 0.0:

        def on_t0(x: float) -> float:
            return lambda_star(params, x, y_of(x), z0, 0.0)

        xs = _scan_argmin(on_t0, x_lo + 1e-9, x_hi)
        candidates.append(on_t0(xs))
        starts.append(np.array([xs, -1e-4]))
    y0 = -alpha / beta
    if y0 > 0.0:

        def on_x0(t: float) -> float:
            return lambda_star(params, 0.0, y0, z_of(t), t)

        ts = _scan_argmin(on_x0, t_lo, t_hi - 1e-9 if t_hi == 0.0 else t_hi)
        candidates.append(on_x0(ts))
        starts.append(np.array([1e-4, ts]))
    for s in starts:
        candidates.append(_nelder_mead(objective, s))
    return min(candidates)


def _scan_argmin(fn, lo: float, hi: float, n: int = 121) -> float:
    xs = np.linspace(lo, hi, n)
    vals = [fn(float(x)) for x in xs]
    i = int(np.argmin(vals))
    res = _optimize.minimize_scalar(
        fn,
        bounds=(float(xs[max(i - 1, 0)]), float(xs[min(i + 1, n - 1)])),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x) if res.fun < vals[i] else float(xs[i])


def _infsup_beta0(params: ProcessParams, alpha: float) -> float:
    # Limit of the constraint set as beta -> 0 for 0 <= alpha < 2: the first
    # coordinate is pinned at sqrt(alpha), z = t^2/(2-alpha), and y is free.
    x0 = math.sqrt(alpha)
    denom = 2.0 - alpha

    def objective(v: np.ndarray) -> float:
        t = float(v[0])
        if t >= 0.0 or abs(float(v[1])) > 50.0:
            return INF
        y = math.exp(float(v[1]))
        return lambda_star(params, x0, y, t * t / denom, t)

    candidates = []
    for t0 in (-0.5, -1.0, -2.0, -4.0):
        z = t0 * t0 / denom
        for m in (1.5, 3.0, 8.0, 20.0):
            candidates.append(
                _nelder_mead(objective, np.array([t0, math.log(m / z)]))
            )
    return min(candidates)


def _infsup_20(params: ProcessParams) -> float:
    # (2, 0): the first coordinate is pinned at sqrt(2) and t at 0; minimize
    # the triplet rate over the free (y, z) cone.
    def objective(v: np.ndarray) -> float:
        if abs(float(v[0])) > 50.0 or abs(float(v[1])) > 50.0:
            return INF
        y = math.exp(float(v[0]))
        z = math.exp(float(v[1]))
        return lambda_star(params, _SQRT2, y, z, 0.0)

    candidates = []
    for y0 in (1.5, 3.0, 6.0, 12.0):
        for m in (1.5, 3.0, 8.0, 20.0):
            candidates.append(
                _nelder_mead(
                    objective, np.array([math.log(y0), math.log(m / y0)])
                )
            )
    return min(candidates)


def _infsup_alpha2(params: ProcessParams, beta: float) -> float:
    # alpha = 2, beta < 0: t is pinned at -sqrt(-beta), y = (x^2 - 2)/beta
    # with x in [0, sqrt(2)), and z is free above 1/y.
    t0 = -math.sqrt(-beta)

    def objective(v: np.ndarray) -> float:
        x = float(v[0])
        if x < 0.0 or x >= _SQRT2 or abs(float(v[1])) > 50.0:
            return INF
        z = math.exp(float(v[1]))
        y = (x * x - 2.0) / beta
        return lambda_star(params, x, y, z, t0)

    candidates = []
    for qx in (0.05, 0.35, 0.65, 0.95):
        x = qx * _SQRT2
        y = (x * x - 2.0) / beta
        for m in (1.5, 3.0, 8.0, 20.0):
            candidates.append(
                _nelder_mead(objective, np.array([x, math.log(m / y)]))
            )
    return min(candidates)


def rate_I_infsup(params: ProcessParams, alpha: float, beta: float) -> float:
    """MLE rate via the inf-sup characterization, evaluated numerically.

    The outer infimum runs over the admissible (x, t) set of the quadruplet
    contraction; the inner supremum is the concave maximization performed by
    lambda_star.  Valid on D1 = {alpha <= 0, beta > 0}, D2 = {0 < alpha < 2},
    D3 = {alpha >= 2, beta < 0}, plus the special points (0, 0) and (2, 0);
    the constraint parameterization degenerates at beta = 0 and alpha = 2,
    where the limiting preimage sets are used instead.

    Raises
    ------
    DomainError
        Outside D1, D2, D3 and the two special points.
    """
    in_d1 = alpha <= 0.0 and beta > 0.0
    in_d2 = 0.0 < alpha < 2.0
    in_d3 = alpha >= 2.0 and beta < 0.0
    special = (alpha == 0.0 and beta == 0.0) or (alpha == 2.0 and beta == 0.0)
    if not (in_d1 or in_d2 or in_d3 or special):
        raise DomainError(
            f"({alpha}, {beta}) is outside the inf-sup domain D1 u D2 u D3"
        )
    if alpha == 2.0 and beta == 0.0:
        return _infsup_20(params)
    if beta == 0.0:
        return _infsup_beta0(params, alpha)
    if alpha == 2.0:
        return _infsup_alpha2(params, beta)
    return _infsup_generic(params, alpha, beta)
