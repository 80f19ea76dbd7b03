"""Experiment harness: CLT reports, tail slopes, surface grids, profiles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cir_ldp import (
    InconclusiveError,
    ProcessParams,
    clt_experiment,
    clt_experiments,
    clt_target_covariance,
    profile_curves,
    rate_I_mle,
    rate_J,
    rate_K,
    rate_marginal,
    rate_S,
    slope_experiment,
    surface_grid,
)
from cir_ldp.harness import SurfaceGrid


class TestCltTarget:
    def test_matrix_at_4_minus1(self, params44):
        cov = clt_target_covariance(params44)
        np.testing.assert_allclose(cov.C, [[0.5, 1.0], [1.0, 4.0]], rtol=1e-14)
        np.testing.assert_allclose(cov.target, [[16.0, -4.0], [-4.0, 2.0]], rtol=1e-14)
        assert cov.det_C == pytest.approx(1.0, rel=1e-14)

    def test_target_is_four_c_inverse(self, regimes):
        for p in regimes:
            cov = clt_target_covariance(p)
            np.testing.assert_allclose(
                cov.target, 4.0 * np.linalg.inv(cov.C), rtol=1e-12
            )
            assert cov.det_C == pytest.approx(2.0 / (p.a - 2.0), rel=1e-12)


class TestCltExperiment:
    def test_report_shape_and_determinism(self, params44):
        r1 = clt_experiment(params44, "mle", T=5.0, n_paths=400, rng=3, n_steps=500)
        r2 = clt_experiment(
            params44, "mle", T=5.0, n_paths=400, rng=3, n_steps=500, n_workers=2
        )
        assert r1.estimator == "mle"
        assert (r1.T, r1.n_paths, r1.n_steps, r1.seed) == (5.0, 400, 500, 3)
        np.testing.assert_array_equal(r1.covariance, r2.covariance)
        np.testing.assert_array_equal(r1.mean, r2.mean)
        assert r1.covariance.shape == (2, 2)
        assert r1.covariance[0, 1] == r1.covariance[1, 0]
        assert isinstance(r1.passed, bool)

    def test_to_dict_payload(self, params44):
        r = clt_experiment(params44, "tilde", T=2.0, n_paths=200, rng=1, n_steps=200)
        d = r.to_dict()
        assert d["experiment"] == "clt"
        assert d["settings"]["estimator"] == "tilde"
        assert set(d["metrics"]) == {"mean", "covariance", "target", "relative_deviations"}
        assert isinstance(d["pass"], bool)

    def test_shared_ensemble_matches_single_runs(self, params44):
        multi = clt_experiments(
            params44, ["mle", "tilde", "check"], T=4.0, n_paths=300, rng=9, n_steps=400
        )
        for report in multi:
            single = clt_experiment(
                params44, report.estimator, T=4.0, n_paths=300, rng=9, n_steps=400
            )
            np.testing.assert_array_equal(report.covariance, single.covariance)

    def test_unknown_estimator_rejected(self, params44):
        from cir_ldp import DomainError

        with pytest.raises(DomainError):
            clt_experiment(params44, "median", T=2.0, n_paths=50, rng=0, n_steps=100)


class TestSlopeExperiment:
    def test_upper_tail_report(self, params44):
        rep = slope_experiment(
            params44, "S", c=5.0, T_grid=(2.0, 4.0), n_paths=3000, rng=12,
            n_steps_per_unit=40,
        )
        assert rep.functional == "S"
        assert rep.upper_tail is True
        assert rep.target_rate == pytest.approx(rate_S(params44, 5.0), rel=1e-14)
        assert len(rep.slopes) == 2
        assert all(s > 0.0 for s in rep.slopes)
        assert all(h >= rep.n_min for h in rep.hits)

    def test_lower_tail_uses_left_probability(self, params44):
        rep = slope_experiment(
            params44, "S", c=3.0, T_grid=(2.0,), n_paths=3000, rng=12,
            n_steps_per_unit=40,
        )
        assert rep.upper_tail is False
        assert rep.target_rate == pytest.approx(rate_S(params44, 3.0), rel=1e-14)

    def test_deterministic_across_workers(self, params44):
        r1 = slope_experiment(
            params44, "Sigma", c=0.8, T_grid=(2.0, 3.0), n_paths=2000, rng=4,
            n_steps_per_unit=40, n_workers=1,
        )
        r2 = slope_experiment(
            params44, "Sigma", c=0.8, T_grid=(2.0, 3.0), n_paths=2000, rng=4,
            n_steps_per_unit=40, n_workers=3,
        )
        assert r1.slopes == r2.slopes
        assert r1.hits == r2.hits

    def test_inconclusive_when_tail_is_empty(self, params44):
        with pytest.raises(InconclusiveError):
            slope_experiment(
                params44, "S", c=40.0, T_grid=(2.0, 4.0), n_paths=500, rng=2,
                n_steps_per_unit=30,
            )


@pytest.fixture(scope="module")
def grid(params44) -> SurfaceGrid:
    return surface_grid(params44, which="I", n_alpha=13, n_beta=11)


@pytest.fixture(scope="module")
def curves(params44):
    return profile_curves(params44, grid=np.linspace(-4.0, 8.0, 25))


class TestSurfaceGrid:
    def test_axes_and_shapes(self, grid):
        assert grid.alphas.shape == (13,)
        assert grid.betas.shape == (11,)
        assert grid.J.shape == (13, 11)
        assert grid.alphas[0] == 3.0 and grid.alphas[-1] == 5.0
        assert grid.betas[0] == -4.0 and grid.betas[-1] == -0.5

    def test_i_is_elementwise_min(self, grid):
        np.testing.assert_array_equal(grid.I, np.minimum(grid.J, grid.K))

    def test_no_negative_values(self, grid):
        for surf in (grid.J, grid.K, grid.I):
            finite = surf[np.isfinite(surf)]
            assert finite.min() >= -1e-12

    def test_values_match_point_evaluations(self, grid, params44):
        for i in (0, 6, 12):
            for j in (0, 5, 10):
                al = float(grid.alphas[i])
                be = float(grid.betas[j])
                assert grid.J[i, j] == rate_J(params44, al, be)
                assert grid.K[i, j] == rate_K(params44, al, be)
                assert grid.I[i, j] == rate_I_mle(params44, al, be)

    def test_shared_branch_agreement(self, grid, params44):
        mask = grid.shared_branch_mask(params44)
        assert mask.any()
        assert grid.max_shared_diff(params44) <= 1e-9

    def test_argmin_near_truth(self, params44):
        g = surface_grid(params44, which="I", n_alpha=41, n_beta=41)
        i, j = np.unravel_index(np.argmin(g.I), g.I.shape)
        assert float(g.I[i, j]) <= 1e-3
        assert abs(float(g.alphas[i]) - params44.a) <= 0.06
        assert abs(float(g.betas[j]) - params44.b) <= 0.1

    def test_csv_is_stable(self, params44):
        g1 = surface_grid(params44, which="J", n_alpha=5, n_beta=4)
        g2 = surface_grid(params44, which="J", n_alpha=5, n_beta=4)
        assert g1.to_csv() == g2.to_csv()
        header = g1.to_csv().splitlines()[0]
        assert header == "alpha,beta,J,K,I"

    def test_inf_serialized_as_literal(self, params44):
        # Below alpha = 2 with beta < 0 the J surface is infinite while K stays
        # finite, so the CSV must carry the literal "inf".
        g = surface_grid(
            params44, which="I", alpha_range=(1.4, 1.6), beta_range=(-0.3, -0.2),
            n_alpha=2, n_beta=2,
        )
        text = g.to_csv()
        assert "inf" in text
        assert "Infinity" not in text


class TestProfileCurves:
    def test_pointwise_min_identities(self, curves):
        np.testing.assert_array_equal(curves.Ia, np.minimum(curves.Ja, curves.Ka))
        np.testing.assert_array_equal(curves.Ib, np.minimum(curves.Jb, curves.Kb))

    def test_matches_rate_marginal(self, curves, params44):
        for k in (0, 8, 16, 24):
            v = float(curves.v[k])
            assert curves.Ja[k] == rate_marginal(params44, "Ja", v)
            assert curves.Kb[k] == rate_marginal(params44, "Kb", v)

    def test_zero_point_values(self, params44):
        c = profile_curves(params44, grid=np.array([0.0]))
        assert c.Jb[0] == pytest.approx(1.0, abs=1e-12)
        assert c.Ib[0] == pytest.approx(1.0, abs=1e-12)
        assert c.Ja[0] == pytest.approx(2.0, abs=1e-12)
        assert c.Ka[0] == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_vanish_at_truth(self, params44):
        c = profile_curves(params44, grid=np.array([params44.b, params44.a]))
        assert abs(c.Jb[0]) <= 1e-12
        assert abs(c.Ja[1]) <= 1e-12
        assert abs(c.Ia[1]) <= 1e-12
