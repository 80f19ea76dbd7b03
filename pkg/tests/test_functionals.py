"""Path functionals and the estimator couples."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from cir_ldp import (
    DegenerateError,
    GridError,
    ProcessParams,
    Trajectory,
    compute_functionals,
    estimate_check,
    estimate_combined,
    estimate_mle,
    estimate_tilde,
    functionals_from_summary,
    ito_log_integral,
    path_rng,
    simulate_path,
)


@pytest.fixture(scope="module")
def pf(params44):
    traj = simulate_path(params44, 100.0, 10000, path_rng(42, 0))
    return compute_functionals(traj)


class TestComputeFunctionals:
    def test_matches_manual_trapezoid(self, params44):
        traj = simulate_path(params44, 3.0, 90, path_rng(1, 5))
        pf = compute_functionals(traj)
        dt = 3.0 / 90
        w = np.ones(91)
        w[0] = w[-1] = 0.5
        assert pf.T == 3.0
        assert pf.S == pytest.approx(float(w @ traj.values) * dt / 3.0, rel=1e-14)
        assert pf.Sigma == pytest.approx(float(w @ (1.0 / traj.values)) * dt / 3.0, rel=1e-14)
        assert pf.xT_over_T == pytest.approx(traj.values[-1] / 3.0, rel=1e-14)
        assert pf.sqrt_xT_over_T == pytest.approx(math.sqrt(traj.values[-1] / 3.0), rel=1e-14)
        assert pf.L == pytest.approx(math.log(traj.values[-1]) / 3.0, rel=1e-12)
        assert pf.V == pytest.approx(pf.S * pf.Sigma - 1.0, rel=1e-14)

    def test_v_nonnegative(self, params44):
        for i in range(20):
            traj = simulate_path(params44, 0.5, 10, path_rng(2, i))
            assert compute_functionals(traj).V >= 0.0

    def test_grid_errors(self, params44):
        with pytest.raises(GridError):
            compute_functionals(Trajectory(np.array([0.0]), np.array([1.0]), params44))
        bad = Trajectory(np.array([0.0, 1.0, 3.0]), np.array([1.0, 2.0, 1.5]), params44)
        with pytest.raises(GridError):
            compute_functionals(bad)

    def test_curly_l_definition(self, params44):
        low = functionals_from_summary(4.0, 1.0, 0.5, 3.0, 0.6)
        assert low.curlyL == pytest.approx(-math.sqrt(-math.log(0.5) / 4.0), rel=1e-14)
        high = functionals_from_summary(4.0, 1.0, 2.5, 3.0, 0.6)
        assert high.curlyL == pytest.approx(math.log(2.5) / 4.0, rel=1e-14)


class TestEstimators:
    def test_mle_formula(self, pf):
        est = estimate_mle(pf)
        v = pf.S * pf.Sigma - 1.0
        assert est.alpha == pytest.approx(
            (pf.S * (2.0 * pf.Sigma + pf.L) - pf.xT_over_T) / v, rel=1e-14
        )
        assert est.beta == pytest.approx(
            ((pf.xT_over_T - 2.0) * pf.Sigma - pf.L) / v, rel=1e-14
        )

    def test_raw_integral_form_is_identical(self, pf):
        # The raw-integral estimator with R = int dX/X, recovered through the
        # Ito identity R = T L + 2 T Sigma, is the same rational function of
        # the path: both forms must agree to rounding.
        T = pf.T
        int_x = pf.S * T
        int_inv = pf.Sigma * T
        x_T = pf.xT_over_T * T
        r = ito_log_integral(pf)
        denom = int_x * int_inv - T * T
        alpha_raw = (int_x * r - T * x_T) / denom
        beta_raw = (x_T * int_inv - T * r) / denom
        est = estimate_mle(pf)
        assert est.alpha == pytest.approx(alpha_raw, rel=1e-12)
        assert est.beta == pytest.approx(beta_raw, rel=1e-12)

    def test_tilde_drops_the_log_term(self, pf):
        no_log = replace(pf, L=0.0)
        tilde = estimate_tilde(pf)
        assert tilde == estimate_mle(no_log)

    def test_check_drops_the_terminal_term(self, pf):
        no_term = replace(pf, xT_over_T=0.0)
        check = estimate_check(pf)
        assert check == estimate_mle(no_term)

    def test_combined_selects_by_terminal_state(self):
        above = functionals_from_summary(10.0, 1.0, 1.2, 4.1, 0.55)
        below = functionals_from_summary(10.0, 1.0, 0.8, 4.1, 0.55)
        assert estimate_combined(above) == estimate_tilde(above)
        assert estimate_combined(below) == estimate_check(below)

    def test_degenerate_path_raises(self, params44):
        flat = functionals_from_summary(1.0, 1.0, 1.0, 1.0, 1.0)
        assert flat.V == 0.0
        for est in (estimate_mle, estimate_tilde, estimate_check, estimate_combined):
            with pytest.raises(DegenerateError):
                est(flat)

    def test_consistency_on_a_long_path(self, pf, params44):
        mle = estimate_mle(pf)
        assert abs(mle.alpha - params44.a) < 1.5
        assert abs(mle.beta - params44.b) < 0.6
        tilde = estimate_tilde(pf)
        check = estimate_check(pf)
        assert abs(tilde.alpha - mle.alpha) < 0.5
        assert abs(check.beta - mle.beta) < 0.5


class TestItoLogIntegral:
    def test_identity(self, pf):
        assert ito_log_integral(pf) == pytest.approx(
            pf.T * pf.L + 2.0 * pf.T * pf.Sigma, rel=1e-14
        )

    def test_positive_for_ergodic_paths(self, params44):
        # 2 T Sigma dominates T L for long horizons since Sigma -> -b/(a-2).
        traj = simulate_path(params44, 50.0, 5000, path_rng(6, 1))
        assert ito_log_integral(compute_functionals(traj)) > 0.0
