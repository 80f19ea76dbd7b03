"""Limiting cumulant generating function of the quadruplet and its transforms.

The quadruplet is (sqrt(X_T/T), S_T, Sigma_T, curlyL_T) with argument vector
(lam, mu, nu, gamma).  The normalized cumulant generating functions converge
to a piecewise closed form Lambda, finite on
{mu < b^2/8, nu < (a-2)^2/8} and built from the dual variables

    d = sqrt(b^2 - 8 mu),   f = (1/2) sqrt((a-2)^2 - 8 nu),
    phi = 2 f + a + 2.

This module evaluates Lambda, its gradient, a finite-horizon Monte Carlo
estimate of it, the variational form of its Fenchel-Legendre transform
(a concave 2-D maximization over (d, f)), and an independent numerical 4-D
Fenchel-Legendre transform used to cross-check the variational form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _optimize

from . import cir_model
from .cir_model import ProcessParams
from .errors import BoundaryError, DomainError

__all__ = [
    "CgfPoint",
    "DualVars",
    "cgf_finite_T_mc",
    "cgf_gradient",
    "cgf_limit",
    "dual_vars",
    "lambda_star",
    "legendre_transform_numeric",
]

INF = math.inf

#: Evaluation points closer than this to the domain boundary or the branch
#: switching surface get a BoundaryError from cgf_gradient.
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class CgfPoint:
    """Argument (lam, mu, nu, gamma) of the limiting CGF.

    lam multiplies sqrt(T) * sqrt(X_T), mu the integral of X, nu the integral
    of 1/X, and gamma multiplies T * curlyL_T.
    """

    lam: float
    mu: float
    nu: float
    gamma: float


@dataclass(frozen=True)
class DualVars:
    """Dual variables (d, f) with the derived phi = 2f + a + 2 and g = phi/4."""

    d: float
    f: float
    phi: float
    g: float


def dual_vars(params: ProcessParams, mu: float, nu: float) -> DualVars | None:
    """Dual variables at (mu, nu), or None outside the open CGF domain."""
    a, b = params.a, params.b
    rad_d = b * b - 8.0 * mu
    rad_f = (a - 2.0) ** 2 - 8.0 * nu
    if rad_d <= 0.0 or rad_f <= 0.0:
        return None
    d = math.sqrt(rad_d)
    f = 0.5 * math.sqrt(rad_f)
    phi = 2.0 * f + a + 2.0
    return DualVars(d=d, f=f, phi=phi, g=0.25 * phi)


def _branch(lam: float, gamma: float, d_minus_b: float, phi: float) -> int:
    # 1: the lam^2/(d-b) sector, 2: the gamma^2/phi sector, 0: neither.
    # On the switching surface gamma^2/lam^2 = phi/(d-b) the two sector values
    # agree, so routing the equality case to sector 2 is observationally
    # irrelevant for Lambda itself.
    if lam > 0.0:
        if gamma >= 0.0:
            return 1
        return 1 if gamma * gamma * d_minus_b < lam * lam * phi else 2
    if gamma < 0.0:
        return 2
    return 0


def cgf_limit(params: ProcessParams, p: CgfPoint) -> float:
    """Limiting normalized CGF Lambda(lam, mu, nu, gamma).

    Returns +inf when mu >= b^2/8 or nu >= (a-2)^2/8 (the boundary itself is
    mapped to +inf); otherwise the piecewise closed form.  Total function:
    never raises.
    """
    dv = dual_vars(params, p.mu, p.nu)
    if dv is None:
        return INF
    a, b = params.a, params.b
    value = -0.5 * dv.d * (1.0 + dv.f) - 0.25 * a * b
    sector = _branch(p.lam, p.gamma, dv.d - b, dv.phi)
    if sector == 1:
        value += p.lam * p.lam / (dv.d - b)
    elif sector == 2:
        value += p.gamma * p.gamma / dv.phi
    return value


def _gradient_raw(params: ProcessParams, p: CgfPoint, dv: DualVars) -> np.ndarray:
    # One-sided gradient consistent with the branch dispatch of cgf_limit;
    # no boundary or switching-surface guards.
    b = params.b
    d, f, phi = dv.d, dv.f, dv.phi
    sector = _branch(p.lam, p.gamma, d - b, phi)
    g_lam = 2.0 * p.lam / (d - b) if sector == 1 else 0.0
    g_mu = 2.0 * (1.0 + f) / d
    if sector == 1:
        g_mu += 4.0 * p.lam * p.lam / (d * (d - b) ** 2)
    g_nu = d / (2.0 * f)
    g_gamma = 0.0
    if sector == 2:
        g_nu += 2.0 * p.gamma * p.gamma / (f * phi * phi)
        g_gamma = 2.0 * p.gamma / phi
    return np.array([g_lam, g_mu, g_nu, g_gamma])


def cgf_gradient(
    params: ProcessParams, p: CgfPoint, tol: float = BOUNDARY_TOL
) -> np.ndarray:
    """Gradient of Lambda at a point strictly inside its domain.

    Raises
    ------
    BoundaryError
        If the point is within ``tol`` of the domain boundary (mu near
        b^2/8, nu near (a-2)^2/8, or outside), or within ``tol`` of the
        branch switching surface gamma^2/lam^2 = phi/(d-b) in the sector
        lam > 0, gamma < 0 where Lambda is kinked.
    """
    a, b = params.a, params.b
    if b * b / 8.0 - p.mu < tol:
        raise BoundaryError(
            f"mu={p.mu} is within {tol} of the domain boundary b^2/8={b * b / 8.0}"
        )
    if (a - 2.0) ** 2 / 8.0 - p.nu < tol:
        raise BoundaryError(
            f"nu={p.nu} is within {tol} of the domain boundary "
            f"(a-2)^2/8={(a - 2.0) ** 2 / 8.0}"
        )
    dv = dual_vars(params, p.mu, p.nu)
    assert dv is not None
    if p.lam > 0.0 and p.gamma < 0.0:
        ratio_gap = abs(
            p.gamma * p.gamma / (p.lam * p.lam) - dv.phi / (dv.d - b)
        )
        if ratio_gap < tol:
            raise BoundaryError(
                "point is within tolerance of the branch switching surface "
                "gamma^2/lam^2 = phi/(d-b); Lambda is kinked there"
            )
    return _gradient_raw(params, p, dv)


def cgf_finite_T_mc(
    params: ProcessParams,
    p: CgfPoint,
    T: float,
    n_paths: int,
    rng: int | np.random.Generator,
    n_steps: int | None = None,
    n_workers: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of the normalized CGF at horizon T.

    Simulates ``n_paths`` exact paths, forms the exponent
    lam*sqrt(T)*sqrt(X_T) + gamma*T*curlyL + mu*Int(X) + nu*Int(1/X) per path,
    and returns (estimate, stderr) where the estimate is the log-sum-exp
    average divided by T and the standard error comes from the delta method.

    Raises
    ------
    OverflowError
        If any exponent is non-finite (extreme argument points).
    """
    if n_steps is None:
        n_steps = max(2, round(200 * T))
    ens = cir_model.simulate_ensemble(params, T, n_steps, n_paths, rng, n_workers)
    x_T = ens.x_T
    log_xT = np.log(x_T)
    curly = np.where(log_xT < 0.0, -np.sqrt(np.abs(log_xT) / T), log_xT / T)
    e = (
        p.lam * math.sqrt(T) * np.sqrt(x_T)
        + p.gamma * T * curly
        + p.mu * T * ens.S
        + p.nu * T * ens.Sigma
    )
    if not np.all(np.isfinite(e)):
        raise OverflowError("non-finite exponent in finite-horizon CGF estimate")
    m = float(e.max())
    w = np.exp(e - m)
    n = float(n_paths)
    mean_w = float(w.mean())
    estimate = (m + math.log(mean_w)) / T
    if n_paths > 1:
        stderr = float(w.std(ddof=1)) / (mean_w * math.sqrt(n) * T)
    else:
        stderr = 0.0
    return estimate, stderr


# ---------------------------------------------------------------------------
# Variational transform: Lambda*(x, y, z, t) = sup_{d>0, f>0} h(d, f).
# ---------------------------------------------------------------------------


def _h_with_derivs(
    params: ProcessParams, x: float, y: float, z: float, t: float, d: float, f: float
):
    a, b = params.a, params.b
    big_a = a - 2.0
    phi = 2.0 * f + a + 2.0
    sphi = math.sqrt(phi)
    db = d - b
    sdb = math.sqrt(db)
    s = t * sphi - x * sdb
    h = (
        0.25 * s * s
        + y * (b * b - d * d) / 8.0
        + (big_a * big_a - 4.0 * f * f) * z / 8.0
        + 0.5 * d * (1.0 + f)
        + 0.25 * a * b
    )
    h_d = -s * x / (4.0 * sdb) - 0.25 * y * d + 0.5 * (1.0 + f)
    h_f = s * t / (2.0 * sphi) - z * f + 0.5 * d
    h_dd = x * x / (8.0 * db) + s * x / (8.0 * sdb * db) - 0.25 * y
    h_ff = t * t / (2.0 * phi) - s * t / (2.0 * phi * sphi) - z
    h_df = -x * t / (4.0 * sdb * sphi) + 0.5
    return h, h_d, h_f, h_dd, h_ff, h_df


def _h_value(params: ProcessParams, x, y, z, t, d, f) -> float:
    return _h_with_derivs(params, x, y, z, t, d, f)[0]


def _golden_refine(params, x, y, z, t, u, v, obj) -> tuple[float, float, float]:
    # Coordinate-wise golden section in (u, v) = (log d, log f); fallback for
    # the rare states where the damped Newton iteration stalls.
    gr = (math.sqrt(5.0) - 1.0) / 2.0

    def val(uu, vv):
        return _h_value(params, x, y, z, t, math.exp(uu), math.exp(vv))

    for _ in range(60):
        improved = obj
        for coord in (0, 1):
            lo, hi = (u, v)[coord] - 1.0, (u, v)[coord] + 1.0

            def vc(c):
                return val(c, v) if coord == 0 else val(u, c)

            # expand the bracket while the maximum sits on its edge
            for _ in range(40):
                if vc(lo) > vc(lo + 1e-6):
                    lo -= 1.0
                elif vc(hi) > vc(hi - 1e-6):
                    hi += 1.0
                else:
                    break
            c1 = hi - gr * (hi - lo)
            c2 = lo + gr * (hi - lo)
            f1, f2 = vc(c1), vc(c2)
            while hi - lo > 1e-12:
                if f1 < f2:
                    lo, c1, f1 = c1, c2, f2
                    c2 = lo + gr * (hi - lo)
                    f2 = vc(c2)
                else:
                    hi, c2, f2 = c2, c1, f1
                    c1 = hi - gr * (hi - lo)
                    f1 = vc(c1)
            best = 0.5 * (lo + hi)
            if coord == 0:
                u = best
            else:
                v = best
        obj = val(u, v)
        if obj - improved < 1e-12:
            break
    return u, v, obj


def lambda_star(
    params: ProcessParams, x: float, y: float, z: float, t: float
) -> float:
    """Fenchel-Legendre transform of Lambda in variational form.

    Returns +inf outside the admissible cone (x < 0, t > 0, y <= 0, z <= 0,
    or y*z - 1 <= 0); otherwise the supremum over d > 0, f > 0 of the concave
    dual objective h(d, f), located by a damped Newton iteration in
    (log d, log f) with a golden-section fallback, converged to 1e-12 in the
    objective.
    """
    if x < 0.0 or t > 0.0 or y <= 0.0 or z <= 0.0 or y * z - 1.0 <= 0.0:
        return INF
    a, b = params.a, params.b
    u = math.log(-b)
    v = math.log(0.5 * (a - 2.0))
    d, f = math.exp(u), math.exp(v)
    h, h_d, h_f, h_dd, h_ff, h_df = _h_with_derivs(params, x, y, z, t, d, f)
    newton_ok = True
    for _ in range(200):
        # chain rule to (u, v) = (log d, log f)
        gu = d * h_d
        gv = f * h_f
        huu = d * d * h_dd + gu
        hvv = f * f * h_ff + gv
        huv = d * f * h_df
        det = huu * hvv - huv * huv
        if det > 0.0 and huu < 0.0:
            du = -(hvv * gu - huv * gv) / det
            dv = -(huu * gv - huv * gu) / det
        else:
            norm = math.hypot(gu, gv)
            if norm == 0.0:
                break
            du, dv = gu / norm, gv / norm
        cap = max(abs(du), abs(dv))
        if cap > 2.0:
            du *= 2.0 / cap
            dv *= 2.0 / cap
        step = 1.0
        accepted = False
        for _ in range(60):
            uu, vv = u + step * du, v + step * dv
            hh = _h_value(params, x, y, z, t, math.exp(uu), math.exp(vv))
            if hh > h:
                u, v, gain = uu, vv, hh - h
                h = hh
                d, f = math.exp(u), math.exp(v)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            newton_ok = abs(gu) < 1e-9 and abs(gv) < 1e-9
            break
        if gain < 1e-12:
            break
        h, h_d, h_f, h_dd, h_ff, h_df = _h_with_derivs(params, x, y, z, t, d, f)
    if not newton_ok:
        u, v, h = _golden_refine(params, x, y, z, t, u, v, h)
    return h


# ---------------------------------------------------------------------------
# Independent numerical 4-D Fenchel-Legendre transform.
# ---------------------------------------------------------------------------

#: Objective value past which the transform is declared unbounded (+inf).
UNBOUNDED_OBJECTIVE = 1e8


def _surface_candidate(
    params: ProcessParams,
    objective,
    mu_hi: float,
    nu_hi: float,
) -> tuple[float, np.ndarray | None]:
    # Best objective value over the switching surface gamma^2 (d - b) =
    # lam^2 phi restricted to the kinked quadrant lam > 0, gamma < 0.  The
    # surface is the one locus where Lambda is nonsmooth, so unconstrained
    # ascent can zigzag indefinitely when the maximizer sits on it; along the
    # surface itself the objective is smooth in (lam, mu, nu).  Coordinates
    # (p, u, w) map to lam = e^p, mu = mu_hi - e^u, nu = nu_hi - e^w, and
    # gamma is the on-surface value -lam sqrt(phi / (d - b)).
    b = params.b

    def theta_of(v: np.ndarray) -> np.ndarray | None:
        if np.max(np.abs(v)) > 50.0:
            return None
        lam = math.exp(v[0])
        mu = mu_hi - math.exp(v[1])
        nu = nu_hi - math.exp(v[2])
        dv = dual_vars(params, mu, nu)
        if dv is None:
            return None
        gamma = -lam * math.sqrt(dv.phi / (dv.d - b))
        return np.array([lam, mu, nu, gamma])

    def neg(v: np.ndarray) -> float:
        theta = theta_of(np.asarray(v))
        if theta is None:
            return INF
        return -objective(theta)

    # Coarse log-space lattice scan, then a derivative-free polish from the
    # leading nodes.  The lattice spans several orders of magnitude because
    # the maximizer's scale grows with the query point.
    axis = np.log(np.array([1e-2, 0.1, 0.7, 4.0, 25.0, 150.0, 1e3]))
    nodes = sorted(
        ((neg(np.array([p, u, w])), (p, u, w)) for p in axis for u in axis for w in axis),
        key=lambda item: item[0],
    )
    best_val, best_theta = -INF, None
    with np.errstate(invalid="ignore"):
        for fval, node in nodes[:3]:
            if fval == INF:
                continue
            res = _optimize.minimize(
                neg,
                np.array(node),
                method="Nelder-Mead",
                options={"fatol": 1e-12, "xatol": 1e-10, "maxiter": 2000, "maxfev": 2000},
            )
            if np.isfinite(res.fun) and -float(res.fun) > best_val:
                best_val = -float(res.fun)
                best_theta = theta_of(np.asarray(res.x))
    return best_val, best_theta


def legendre_transform_numeric(
    params: ProcessParams, x: float, y: float, z: float, t: float
) -> float:
    """sup over the CGF domain of <(x,y,z,t), (lam,mu,nu,gamma)> - Lambda.

    Projected gradient ascent with boundary-aware backtracking from 8
    quadrant-covering starts, combined with a smooth search along the
    switching surface (where Lambda is kinked, unconstrained ascent zigzags,
    and the maximizer sits whenever both sector terms bind), followed by a
    derivative-free polish.  Returns +inf when the objective is detected
    unbounded (exceeds 1e8 along some ascent path).
    """
    a, b = params.a, params.b
    mu_hi = b * b / 8.0
    nu_hi = (a - 2.0) ** 2 / 8.0
    target = np.array([x, y, z, t])

    def objective(theta: np.ndarray) -> float:
        p = CgfPoint(theta[0], theta[1], theta[2], theta[3])
        lam_val = cgf_limit(params, p)
        if lam_val == INF:
            return -INF
        return float(np.dot(target, theta)) - lam_val

    def in_domain(theta: np.ndarray) -> bool:
        return theta[1] < mu_hi and theta[2] < nu_hi

    starts = [
        np.array([sl, m, n, sg])
        for sl in (-0.5, 0.5)
        for sg in (-0.5, 0.5)
        for (m, n) in ((0.5 * mu_hi, 0.5 * nu_hi), (-1.0, -1.0))
    ]
    best_val = -INF
    best_theta: np.ndarray | None = None
    for theta in starts:
        theta = theta.copy()
        val = objective(theta)
        step = 1.0
        for _ in range(600):
            dv = dual_vars(params, theta[1], theta[2])
            if dv is None:
                break
            grad = target - _gradient_raw(
                params, CgfPoint(theta[0], theta[1], theta[2], theta[3]), dv
            )
            gnorm = float(np.linalg.norm(grad))
            if gnorm < 1e-12:
                break
            advanced = False
            while step > 1e-18:
                cand = theta + step * grad
                if in_domain(cand):
                    cand_val = objective(cand)
                    if cand_val > val + 1e-4 * step * gnorm * gnorm:
                        theta, val = cand, cand_val
                        advanced = True
                        break
                step *= 0.5
            if not advanced:
                break
            if val > UNBOUNDED_OBJECTIVE:
                return INF
            step = min(step * 1.5, 1e6)
        if val > best_val:
            best_val, best_theta = val, theta
    surface_val, surface_theta = _surface_candidate(params, objective, mu_hi, nu_hi)
    if surface_val > best_val and surface_theta is not None:
        best_val, best_theta = surface_val, surface_theta
    if best_val > UNBOUNDED_OBJECTIVE:
        return INF
    if best_theta is None:
        return INF
    # Derivative-free polish around the best ascent result.
    res = _optimize.minimize(
        lambda th: -objective(np.asarray(th)) if in_domain(np.asarray(th)) else INF,
        best_theta,
        method="Nelder-Mead",
        options={"fatol": 1e-13, "xatol": 1e-9, "maxiter": 4000, "maxfev": 4000},
    )
    polished = -float(res.fun) if np.isfinite(res.fun) else -INF
    best_val = max(best_val, polished)
    if best_val > UNBOUNDED_OBJECTIVE:
        return INF
    return best_val
