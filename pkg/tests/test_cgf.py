"""Limiting CGF, its gradient, the variational transform, and the MC check."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cir_ldp import (
    BoundaryError,
    CgfPoint,
    ProcessParams,
    cgf_finite_T_mc,
    cgf_gradient,
    cgf_limit,
    dual_vars,
    lambda_star,
    legendre_transform_numeric,
    rate_pair,
    rate_triplet_L,
    rate_triplet_x,
)

INF = float("inf")


class TestCgfLimit:
    def test_zero_at_origin(self, regimes):
        for p in regimes:
            assert cgf_limit(p, CgfPoint(0.0, 0.0, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-14)

    def test_domain_boundary_maps_to_inf(self, params44):
        b, a = params44.b, params44.a
        assert cgf_limit(params44, CgfPoint(0, b * b / 8.0, 0, 0)) == INF
        assert cgf_limit(params44, CgfPoint(0, 0, (a - 2.0) ** 2 / 8.0, 0)) == INF
        assert cgf_limit(params44, CgfPoint(0, 1.0, 0, 0)) == INF

    def test_quadratic_terms_by_sector(self, params44):
        b = params44.b
        dv = dual_vars(params44, -0.5, -0.5)
        base = cgf_limit(params44, CgfPoint(0.0, -0.5, -0.5, 0.0))
        lam_side = cgf_limit(params44, CgfPoint(1.2, -0.5, -0.5, 0.0))
        assert lam_side == pytest.approx(base + 1.2**2 / (dv.d - b), rel=1e-13)
        gam_side = cgf_limit(params44, CgfPoint(0.0, -0.5, -0.5, -0.9))
        assert gam_side == pytest.approx(base + 0.9**2 / dv.phi, rel=1e-13)
        # For lam <= 0 and gamma >= 0 neither quadratic term is active.
        assert cgf_limit(params44, CgfPoint(-1.2, -0.5, -0.5, 0.7)) == pytest.approx(base, rel=1e-13)

    def test_continuity_across_switching_surface(self, params44):
        b = params44.b
        dv = dual_vars(params44, -0.4, -0.7)
        lam = 0.8
        gam = -lam * math.sqrt(dv.phi / (dv.d - b))
        eps = 1e-9
        inner = cgf_limit(params44, CgfPoint(lam, -0.4, -0.7, gam + eps))
        outer = cgf_limit(params44, CgfPoint(lam, -0.4, -0.7, gam - eps))
        assert inner == pytest.approx(outer, abs=1e-7)

    def test_monotone_in_mu_and_nu(self, params44):
        vals = [cgf_limit(params44, CgfPoint(0.3, m, -0.2, -0.1)) for m in (-2.0, -1.0, -0.3)]
        assert vals[0] < vals[1] < vals[2]
        vals = [cgf_limit(params44, CgfPoint(0.3, -0.2, n, -0.1)) for n in (-2.0, -1.0, -0.3)]
        assert vals[0] < vals[1] < vals[2]


class TestGradient:
    def test_at_origin_equals_ergodic_means(self, regimes):
        for p in regimes:
            g = cgf_gradient(p, CgfPoint(0.0, 0.0, 0.0, 0.0))
            expect = np.array([0.0, -p.a / p.b, -p.b / (p.a - 2.0), 0.0])
            np.testing.assert_allclose(g, expect, rtol=1e-12, atol=1e-12)

    def test_matches_central_differences(self, params44):
        rng = np.random.default_rng(23)
        b, a = params44.b, params44.a
        h = 1e-6
        checked = 0
        while checked < 25:
            lam = float(rng.uniform(-2.0, 2.0))
            gam = float(rng.uniform(-2.0, 2.0))
            mu = float(rng.uniform(b * b / 8.0 - 3.0, b * b / 8.0 - 0.1))
            nu = float(rng.uniform((a - 2.0) ** 2 / 8.0 - 3.0, (a - 2.0) ** 2 / 8.0 - 0.1))
            p = CgfPoint(lam, mu, nu, gam)
            try:
                g = cgf_gradient(params44, p, tol=1e-4)
            except BoundaryError:
                continue
            theta = np.array([lam, mu, nu, gam])
            for i in range(4):
                up = theta.copy()
                dn = theta.copy()
                up[i] += h
                dn[i] -= h
                fd = (
                    cgf_limit(params44, CgfPoint(*up)) - cgf_limit(params44, CgfPoint(*dn))
                ) / (2.0 * h)
                assert g[i] == pytest.approx(fd, rel=2e-6, abs=2e-6)
            checked += 1

    def test_boundary_guards(self, params44):
        b, a = params44.b, params44.a
        with pytest.raises(BoundaryError):
            cgf_gradient(params44, CgfPoint(0.0, b * b / 8.0 - 1e-12, 0.0, 0.0))
        with pytest.raises(BoundaryError):
            cgf_gradient(params44, CgfPoint(0.0, 0.0, (a - 2.0) ** 2 / 8.0 - 1e-12, 0.0))
        dv = dual_vars(params44, -0.4, -0.7)
        lam = 0.8
        gam = -lam * math.sqrt(dv.phi / (dv.d - b))
        with pytest.raises(BoundaryError):
            cgf_gradient(params44, CgfPoint(lam, -0.4, -0.7, gam))

    def test_steepness_near_mu_boundary(self, params44):
        p = CgfPoint(0.0, params44.b**2 / 8.0 - 1e-8, 0.0, 0.0)
        g = cgf_gradient(params44, p, tol=1e-10)
        assert float(np.linalg.norm(g)) > 1e3


class TestLambdaStar:
    def test_zero_at_ergodic_limits(self, regimes):
        for p in regimes:
            v = lambda_star(p, 0.0, -p.a / p.b, -p.b / (p.a - 2.0), 0.0)
            assert abs(v) <= 1e-12

    def test_slices_match_closed_rates(self, params44):
        pts = [(3.0, 0.8), (4.5, 0.4), (2.0, 1.5)]
        for y, z in pts:
            assert lambda_star(params44, 0.0, y, z, 0.0) == pytest.approx(
                rate_pair(params44, y, z), abs=1e-12
            )
        assert lambda_star(params44, 1.0, 4.0, 0.5, 0.0) == pytest.approx(
            rate_triplet_x(params44, 1.0, 4.0, 0.5), abs=1e-12
        )
        assert lambda_star(params44, 0.0, 4.0, 0.5, -1.0) == pytest.approx(
            rate_triplet_L(params44, 4.0, 0.5, -1.0), abs=1e-12
        )

    def test_nonnegative_on_admissible_points(self, params44):
        rng = np.random.default_rng(3)
        for _ in range(40):
            x = float(rng.uniform(0.0, 2.5))
            y = float(rng.uniform(2.0, 6.0))
            z = float(rng.uniform(0.6, 1.7))
            t = float(rng.uniform(-1.6, 0.0))
            assert lambda_star(params44, x, y, z, t) >= -1e-12


class TestNumericTransform:
    def test_matches_closed_form_at_spot_points(self, params44):
        pts = [
            (0.0, 4.0, 0.5, 0.0),
            (0.5, 3.0, 0.8, -0.3),
            (1.5, 6.0, 1.0, -1.6),
            (2.5, 2.0, 0.6, -1.6),
        ]
        for x, y, z, t in pts:
            closed = lambda_star(params44, x, y, z, t)
            numeric = legendre_transform_numeric(params44, x, y, z, t)
            assert numeric == pytest.approx(closed, abs=1e-9)

    def test_other_regime(self):
        p = ProcessParams(3.0, -2.0)
        closed = lambda_star(p, 0.8, 2.0, 1.5, -0.5)
        numeric = legendre_transform_numeric(p, 0.8, 2.0, 1.5, -0.5)
        assert numeric == pytest.approx(closed, abs=1e-8)


class TestFiniteTMc:
    def test_zero_point_is_exact(self, params44):
        est, se = cgf_finite_T_mc(params44, CgfPoint(0.0, 0.0, 0.0, 0.0), 5.0, 200, 3)
        assert est == 0.0
        assert se == 0.0

    def test_deterministic_and_worker_invariant(self, params44):
        p = CgfPoint(0.05, -0.05, -0.05, -0.05)
        r1 = cgf_finite_T_mc(params44, p, 4.0, 600, 19, n_steps=400, n_workers=1)
        r2 = cgf_finite_T_mc(params44, p, 4.0, 600, 19, n_steps=400, n_workers=2)
        assert r1 == r2

    def test_small_argument_self_consistency(self, params44):
        p = CgfPoint(0.05, -0.05, -0.05, -0.05)
        est, se = cgf_finite_T_mc(params44, p, 10.0, 2000, 5, n_steps=1000)
        limit = cgf_limit(params44, p)
        assert abs(est - limit) <= 3.0 * se + 0.2

    def test_overflow_guard(self, params44):
        with pytest.raises(OverflowError):
            cgf_finite_T_mc(params44, CgfPoint(0.0, 1e308, 0.0, 0.0), 2.0, 50, 1, n_steps=20)
