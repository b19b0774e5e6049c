import math

import numpy as np
import pytest

from kinetic_brw.errors import ConfigError
from kinetic_brw.initial_laws import (
    centered_uniform,
    check_membership,
    gaussian,
    law_from_config,
    point_mass,
    sample_initial,
    symmetric_stable,
)
from kinetic_brw.stats import bootstrap_ci
from testutil import assert_within_se

# closed-form characteristic function of the standard symmetric 0.8-stable law
STABLE_CF_08 = {0.5: 0.5630712089955572, 1.0: 0.36787944117144233, 2.0: 0.17532723680481782}


class TestSampling:
    def test_point_mass_is_constant(self):
        law = point_mass(1.0)
        rng = np.random.default_rng(0)
        assert sample_initial(law, rng) == 1.0
        np.testing.assert_array_equal(sample_initial(law, rng, 5), np.ones(5))

    def test_centered_uniform_range_and_mean(self):
        law = centered_uniform(1.0)
        rng = np.random.default_rng(1)
        x = sample_initial(law, rng, 1_000_000)
        assert np.all((x >= -1.0) & (x <= 1.0))
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert_within_se(x.mean(), 0.0, se, label="uniform mean")

    def test_gaussian_moments(self):
        law = gaussian(2.0)
        x = sample_initial(law, np.random.default_rng(2), 200_000)
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert_within_se(x.mean(), 0.0, se, label="gaussian mean")

    def test_stable_cf_matches_closed_form(self):
        law = symmetric_stable(0.8)
        x = sample_initial(law, np.random.default_rng(3), 100_000)
        for xi, target in STABLE_CF_08.items():
            lo, hi = bootstrap_ci(
                x, lambda v, xi=xi: float(np.mean(np.cos(xi * v))),
                n_boot=300, rng=np.random.default_rng(7),
            )
            assert lo <= target <= hi, f"cf at xi={xi}: [{lo}, {hi}] misses {target}"

    def test_stable_alpha_two_is_gaussian_with_variance_two(self):
        x = sample_initial(symmetric_stable(2.0), np.random.default_rng(4), 200_000)
        se = (x**2).std(ddof=1) / math.sqrt(x.size)
        assert_within_se((x**2).mean(), 2.0, se, label="alpha=2 second moment")

    def test_cauchy_special_case_samples(self):
        x = sample_initial(symmetric_stable(1.0), np.random.default_rng(5), 10_000)
        assert np.all(np.isfinite(x))
        assert np.median(np.abs(x)) == pytest.approx(1.0, rel=0.1)


class TestMembership:
    def test_centered_uniform_second_moment(self):
        report = check_membership(centered_uniform(1.0), 2.0, rng=np.random.default_rng(0))
        assert report.member
        assert report.analytic_moment == pytest.approx(1.0 / 3.0)
        assert_within_se(report.mc_moment, 1.0 / 3.0, report.mc_se, label="E|X|^2")

    def test_stable_moment_criterion(self):
        assert not check_membership(symmetric_stable(0.8), 1.0, n=1000).member
        assert not check_membership(symmetric_stable(0.8), 0.8, n=1000).member
        assert check_membership(symmetric_stable(1.5), 1.0, n=1000).member

    def test_point_mass_zero_member_for_all_gamma(self):
        for gamma in (0.4, 1.0, 2.0):
            report = check_membership(point_mass(0.0), gamma, n=100)
            assert report.member and report.mc_moment == 0.0

    def test_noncentered_point_mass_fails_above_gamma_one(self):
        report = check_membership(point_mass(1.0), 1.5, n=100)
        assert not report.member
        assert check_membership(point_mass(1.0), 1.0, n=100).member

    def test_gamma_domain_checked(self):
        with pytest.raises(ValueError):
            check_membership(point_mass(0.0), 2.5)
        with pytest.raises(ValueError):
            check_membership(point_mass(0.0), 0.0)

    @pytest.mark.parametrize(
        "law",
        [point_mass(0.0), centered_uniform(2.0), gaussian(1.5)],
        ids=["point_mass", "uniform", "gaussian"],
    )
    def test_mc_moment_tracks_analytic_moment(self, law):
        report = check_membership(law, 1.5, rng=np.random.default_rng(9))
        assert math.isfinite(report.mc_moment)
        assert_within_se(report.mc_moment, report.analytic_moment, max(report.mc_se, 1e-12),
                         label=f"{law.kind} moment")


class TestDeclarations:
    def test_declaring_gamma_above_one_requires_centering(self):
        with pytest.raises(ConfigError, match="centered"):
            point_mass(1.0, gamma=2.0)

    def test_point_mass_defaults(self):
        assert point_mass(1.0).gamma == 1.0
        assert point_mass(0.0).gamma == 2.0
        assert symmetric_stable(0.8).gamma == 0.8

    def test_gamma_range_validated(self):
        with pytest.raises(ConfigError):
            centered_uniform(1.0, gamma=2.5)

    def test_config_round_trip(self):
        blocks = [
            {"kind": "point_mass", "c": 1.0},
            {"kind": "centered_uniform", "half_width": 1.0, "gamma": 2.0},
            {"kind": "gaussian", "sigma": 0.5},
            {"kind": "symmetric_stable", "alpha": 0.8, "scale": 1.0},
        ]
        for block in blocks:
            law = law_from_config(block)
            assert law.kind == block["kind"]

    def test_config_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            law_from_config({"kind": "gaussian", "sigma": 1.0, "mu": 3.0})
        with pytest.raises(ConfigError, match="unknown initial law"):
            law_from_config({"kind": "levy_flight"})
