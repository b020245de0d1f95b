import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from persistence_lab import (
    CirculantPathSampler,
    ConditioningError,
    DensePathSampler,
    GPGrid,
    LimitCovariance,
    StationaryKernel,
    correlation_matrix,
    cov_sech,
    estimate_b_alpha,
    gp_persistence,
    gp_persistence_from_sampler,
    sample_gp,
    sample_limit_block_process,
    sech_covariance_matrix,
    substream,
    symmetric_sqrt_factor,
)
from persistence_lab.gp_engine import iter_path_blocks


class TestKernel:
    def test_at_zero(self):
        for alpha in (-0.5, 0.0, 1.0, 4.0):
            assert cov_sech(0.0, alpha) == 1.0

    @given(tau=st.floats(-100.0, 100.0), alpha=st.floats(-0.9, 5.0))
    @settings(max_examples=200, deadline=None)
    def test_even_and_bounded(self, tau, alpha):
        v = cov_sech(tau, alpha)
        assert 0.0 <= v <= 1.0
        assert v == cov_sech(-tau, alpha)

    def test_decreasing_in_lag(self):
        taus = np.linspace(0.0, 30.0, 301)
        vals = cov_sech(taus, 1.5)
        assert np.all(np.diff(vals) <= 0.0)

    def test_reference_value(self):
        # sech(1) evaluated independently at high precision
        expected = float(2 / (mpmath.e + 1 / mpmath.e))
        assert cov_sech(2.0, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_matrix_psd_on_test_grids(self):
        for alpha, horizon, dt in ((0.0, 30.0, 0.05), (2.0, 30.0, 0.05), (0.0, 5.0, 0.005)):
            cov = sech_covariance_matrix(alpha, GPGrid(horizon, dt))
            eigvals = np.linalg.eigvalsh(cov)
            assert eigvals[0] > -1e-8


class TestSamplers:
    def test_single_point_grid_is_standard_normal(self):
        rng = substream(1, "single")
        vals = np.array([sample_gp(np.array([[1.0]]), GPGrid(0.0, 1.0), rng)[0] for _ in range(4000)])
        assert abs(vals.mean()) < 4.0 / math.sqrt(vals.size)
        assert abs(vals.var() - 1.0) < 0.1

    def test_symmetric_sqrt_and_jitter(self):
        cov = sech_covariance_matrix(0.0, GPGrid(3.0, 0.1))
        L = symmetric_sqrt_factor(cov)
        assert np.allclose(L @ L.T, cov, atol=1e-8)
        with pytest.raises(ConditioningError) as err:
            symmetric_sqrt_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert err.value.min_eigenvalue == pytest.approx(-1.0, abs=1e-9)

    def test_circulant_marginals_and_lags(self):
        grid = GPGrid(10.0, 0.05)
        sampler = CirculantPathSampler(StationaryKernel(0.0), grid)
        paths = np.concatenate(list(iter_path_blocks(sampler, 100_000, 21, ("var",))))
        var = paths.var(axis=0)
        assert np.all(np.abs(var - 1.0) < 0.02)
        for lag_time in (0.5, 1.0, 2.0):
            k = int(round(lag_time / grid.dt))
            emp = np.mean(paths[:, :-k] * paths[:, k:], axis=0)
            se = 3.0 / math.sqrt(paths.shape[0])
            assert np.all(np.abs(emp - cov_sech(lag_time, 0.0)) < 3 * se + 0.01)

    def test_paired_draws_independent(self):
        grid = GPGrid(2.0, 0.1)
        sampler = CirculantPathSampler(StationaryKernel(1.0), grid)
        normals = substream(3, "pair").standard_normal((20_000, sampler.normals_per_draw))
        paths = sampler.paths_from_normals(normals)
        re_part, im_part = paths[0::2], paths[1::2]
        cross = np.mean(re_part * im_part, axis=0)
        assert np.all(np.abs(cross) < 4.0 / math.sqrt(re_part.shape[0]) + 0.01)

    def test_circulant_matches_dense_in_distribution(self):
        grid = GPGrid(5.0, 0.05)
        circ = CirculantPathSampler(StationaryKernel(0.0), grid)
        dense = DensePathSampler(sech_covariance_matrix(0.0, grid))
        sup_c = np.concatenate(
            [b.max(axis=1) for b in iter_path_blocks(circ, 20_000, 5, ("ks-c",))]
        )
        sup_d = np.concatenate(
            [b.max(axis=1) for b in iter_path_blocks(dense, 20_000, 6, ("ks-d",))]
        )
        assert ks_2samp(sup_c, sup_d).pvalue > 0.01


class TestPersistence:
    def test_level_infinite(self):
        cov = np.eye(3)
        est = gp_persistence(cov, GPGrid(2.0, 1.0), math.inf, 500, master_seed=2)
        assert est.p_hat == 1.0

    def test_single_point_half(self):
        est = gp_persistence(np.array([[1.0]]), GPGrid(0.0, 1.0), 0.0, 40_000, master_seed=3)
        se = math.sqrt(0.25 / est.trials)
        assert abs(est.p_hat - 0.5) < 3 * se

    @pytest.mark.parametrize("m", [2, 5, 10])
    def test_white_noise_power(self, m):
        est = gp_persistence(np.eye(m), GPGrid(float(m - 1), 1.0), 0.0, 60_000, master_seed=4)
        p = 2.0**-m
        se = math.sqrt(p * (1 - p) / est.trials)
        assert abs(est.p_hat - p) < 3 * se

    def test_curve_nesting(self):
        est = estimate_b_alpha(0.0, [2, 4, 6, 8], 0.05, 20_000, master_seed=9, refine=False)
        assert est.curve.non_increasing_up_to_ci()
        ps = [p for _, p, _, _ in est.curve.points]
        assert all(a > b for a, b in zip(ps, ps[1:]))  # strictly decaying here

    def test_b_zero_recovery_small(self):
        est = estimate_b_alpha(0.0, [5, 10, 15, 20], 0.02, 30_000, master_seed=10)
        assert abs(est.b_hat - 3.0 / 16.0) < 0.02
        assert est.dt_stable

    def test_slepian_alpha_ordering(self):
        # pointwise-larger covariance (smaller alpha) gives larger persistence
        grid = GPGrid(10.0, 0.1)
        ests = {}
        for alpha in (0.0, 2.0):
            sampler = CirculantPathSampler(StationaryKernel(alpha), grid)
            ests[alpha] = gp_persistence_from_sampler(sampler, 0.0, 40_000, 11, ("slep", str(alpha)))
        se = math.hypot(
            math.sqrt(ests[0.0].p_hat * (1 - ests[0.0].p_hat) / 40_000),
            math.sqrt(ests[2.0].p_hat * (1 - ests[2.0].p_hat) / 40_000),
        )
        assert ests[0.0].p_hat >= ests[2.0].p_hat - 3 * se

    def test_log_persistence_affine_tail(self):
        # exponential decay regime: -log p approximately affine in T >= 5
        est = estimate_b_alpha(0.0, [5, 10, 15, 20], 0.02, 50_000, master_seed=12, refine=False)
        ts = np.array([t for t, _, _, _ in est.curve.points])
        ys = np.array([-math.log(p) for _, p, _, _ in est.curve.points])
        pred = est.b_hat * ts + (ys - est.b_hat * ts).mean()
        ses = np.array(
            [math.sqrt((1 - p) / (est.trials * p)) for _, p, _, _ in est.curve.points]
        )
        assert np.all(np.abs(ys - pred) < 3 * ses + 0.02)


class TestLimitBlockSampler:
    def test_unit_diagonal_and_reproduction(self):
        lc = LimitCovariance(0, 8.0, 0.3, 1.0, "upper_bound_h")
        ts = np.linspace(1.0, 8.0 ** (1 - 2 * 0.3), 6)
        corr = correlation_matrix(lc, ts)
        assert np.allclose(np.diag(corr), 1.0, atol=1e-12)
        sampler = DensePathSampler(corr)
        paths = np.concatenate(list(iter_path_blocks(sampler, 100_000, 13, ("block",))))
        emp = (paths.T @ paths) / paths.shape[0]
        assert np.all(np.abs(emp - corr) < 3.0 / math.sqrt(paths.shape[0]) + 0.015)

    def test_offset_variant_also_unit_diagonal(self):
        lc = LimitCovariance(2, 8.0, 0.3, 0.0, "lower_bound_h_tilde")
        ts = np.linspace(1.0 / 8.0, 1.0, 5)
        corr = correlation_matrix(lc, ts)
        assert np.allclose(np.diag(corr), 1.0, atol=1e-12)

    def test_single_path_api(self):
        lc = LimitCovariance(0, 8.0, 0.3, 0.0, "upper_bound_h")
        corr = correlation_matrix(lc, np.linspace(1.0, 2.0, 4))
        path = sample_limit_block_process(corr, substream(14, "one"))
        assert path.shape == (4,)

    def test_separated_points_nearly_independent(self):
        # wide log-separation: corr = sech(log(t2/t1)/2)^(alpha+1), which is
        # sech(2.2)^3 = 0.0105 here
        lc = LimitCovariance(0, 10.0**6, 0.5, 2.0, "upper_bound_h")
        ts = np.array([math.exp(-2.2), math.exp(2.2)])
        corr = correlation_matrix(lc, ts)
        assert abs(corr[0, 1]) < 0.05
        sampler = DensePathSampler(corr)
        paths = np.concatenate(list(iter_path_blocks(sampler, 50_000, 15, ("sep",))))
        assert abs(np.mean(paths[:, 0] * paths[:, 1])) < 0.05
