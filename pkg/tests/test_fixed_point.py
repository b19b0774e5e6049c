import math

import numpy as np
import pytest

from kinetic_brw.fixed_point import (
    FixedPointPool,
    factorization_diagnostic,
    fit_symmetric_stable_scale,
    iterate_to_fixed_point,
    smoothing_step,
    tail_index_slope,
)
from kinetic_brw.initial_laws import symmetric_stable
from kinetic_brw.spectral import find_theta_star
from kinetic_brw.stats import ks_two_sample
from kinetic_brw.weight_models import deterministic_pair, power_uniform_split

THETA_PUS2 = 1.2071067811865475


class TestSmoothingStep:
    def test_zero_pool_is_invariant(self):
        pool = FixedPointPool.from_samples(np.zeros(500))
        out = smoothing_step(pool, power_uniform_split(2.0), -0.34,
                             np.random.default_rng(0))
        np.testing.assert_array_equal(out.samples, np.zeros(500))

    def test_deterministic_map_with_neutral_exponent(self):
        # unit pool, constant weights (a, a), u^0 = 1: every output is 2a
        pool = FixedPointPool.from_samples(np.ones(200))
        out = smoothing_step(pool, deterministic_pair(0.7), 0.0,
                             np.random.default_rng(1))
        np.testing.assert_allclose(out.samples, 1.4, atol=1e-12)

    def test_preserves_size_and_finiteness(self):
        pool = FixedPointPool.from_samples(np.random.default_rng(2).normal(size=777))
        out = smoothing_step(pool, power_uniform_split(2.0), -0.34,
                             np.random.default_rng(3))
        assert out.samples.size == 777
        assert np.all(np.isfinite(out.samples))
        assert out.iteration == 1
        assert len(out.scale_tracker) == 2

    def test_symmetric_pool_stays_symmetric_in_law(self):
        rng = np.random.default_rng(4)
        half = rng.normal(size=4000)
        pool = FixedPointPool.from_samples(np.concatenate([half, -half]))
        out = smoothing_step(pool, power_uniform_split(2.0), -0.34,
                             np.random.default_rng(5))
        assert not ks_two_sample(out.samples, -out.samples).rejected

    def test_distributional_homogeneity(self):
        rng = np.random.default_rng(6)
        base = rng.normal(size=5000)
        c = 3.5
        one = smoothing_step(FixedPointPool.from_samples(base),
                             power_uniform_split(2.0), -0.34,
                             np.random.default_rng(7))
        two = smoothing_step(FixedPointPool.from_samples(c * base),
                             power_uniform_split(2.0), -0.34,
                             np.random.default_rng(8))
        assert not ks_two_sample(c * one.samples, two.samples).rejected


class TestIteration:
    def test_degenerate_seed_is_an_immediate_fixed_point(self):
        pool = FixedPointPool.from_samples(np.zeros(300))
        final, report = iterate_to_fixed_point(
            pool, power_uniform_split(2.0), -0.34, max_iters=5, ks_tol=0.05,
            rng=np.random.default_rng(0),
        )
        assert report.converged and report.iterations == 1
        assert report.ks_trajectory[0] == 0.0

    def test_contracting_map_collapses_and_is_flagged(self):
        # tiny weights with a strongly damping exponent drain the pool to zero
        pool = FixedPointPool.from_samples(np.random.default_rng(1).normal(size=500))
        final, report = iterate_to_fixed_point(
            pool, deterministic_pair(0.05), 2.0, max_iters=50, ks_tol=1e-9,
            rng=np.random.default_rng(2),
        )
        assert report.collapsed
        assert report.scale_trajectory[-1] < 0.01 * report.scale_trajectory[0]

    def test_ks_trajectory_recorded(self):
        pool = FixedPointPool.from_samples(np.random.default_rng(3).normal(size=1000))
        final, report = iterate_to_fixed_point(
            pool, power_uniform_split(2.0), -0.343, max_iters=4, ks_tol=0.0,
            rng=np.random.default_rng(4),
        )
        assert len(report.ks_trajectory) == 4
        assert final.iteration == 4


class TestFactorization:
    def test_stable_scale_self_fit(self):
        # synthetic target with a known scale must recover itself
        rng = np.random.default_rng(5)
        law = symmetric_stable(THETA_PUS2)
        reference = law.sample(rng, 10_000)
        target = 2.5 * law.sample(np.random.default_rng(6), 10_000)
        scale = fit_symmetric_stable_scale(target, reference)
        assert scale == pytest.approx(2.5, rel=0.1)
        synthetic = scale * np.asarray(reference)
        assert ks_two_sample(target, synthetic).statistic < 0.02

    def test_tail_slope_recovers_the_stable_index(self):
        law = symmetric_stable(THETA_PUS2)
        x = law.sample(np.random.default_rng(7), 100_000)
        fit = tail_index_slope(x)
        assert abs(fit.slope - (-THETA_PUS2)) < 0.3 * THETA_PUS2

    def test_diagnostic_runs_end_to_end(self):
        model = power_uniform_split(2.0)
        profile = find_theta_star(model)
        rng = np.random.default_rng(8)
        seed = symmetric_stable(THETA_PUS2).sample(rng, 2000)
        pool = FixedPointPool.from_samples(seed)
        report = factorization_diagnostic(pool, model, profile, replicates=300,
                                          rng=np.random.default_rng(9),
                                          skeleton_steps=5)
        assert report.theta == profile.theta_star
        assert 0.0 <= report.w_negative_fraction <= 1.0
        assert math.isfinite(report.ks_distance)

    def test_requires_theta_below_two(self):
        from kinetic_brw.weight_models import kac

        profile = find_theta_star(kac())
        pool = FixedPointPool.from_samples(np.ones(10))
        with pytest.raises(ValueError, match="theta_star < 2"):
            factorization_diagnostic(pool, kac(), profile, 10,
                                     np.random.default_rng(0))

    def test_unstable_environment_estimates_flagged(self):
        # at the first lattice step the derivative sum is centered at zero,
        # so roughly half the draws are negative: clearly unreliable
        model = power_uniform_split(2.0)
        profile = find_theta_star(model)
        pool = FixedPointPool.from_samples(
            symmetric_stable(THETA_PUS2).sample(np.random.default_rng(10), 1000))
        report = factorization_diagnostic(pool, model, profile, replicates=400,
                                          rng=np.random.default_rng(11),
                                          skeleton_steps=1)
        assert report.w_negative_fraction > 0.4
        assert report.unreliable


class TestPoolValidation:
    def test_empty_pool_rejected(self):
        with pytest.raises(ValueError):
            FixedPointPool.from_samples(np.empty(0))

    def test_nonfinite_pool_rejected(self):
        with pytest.raises(ValueError):
            FixedPointPool.from_samples(np.array([1.0, math.nan]))
