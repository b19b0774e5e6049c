import math
from dataclasses import replace

import numpy as np
import pytest

from kinetic_brw.errors import BracketingError, BudgetError
from kinetic_brw.spectral import (
    characteristic_index_curve,
    classify_regime,
    find_theta_star,
    m_t_theta,
    phi,
    phi_log2,
    phi_prime,
    screen_assumptions,
)
from kinetic_brw.weight_models import (
    deterministic_pair,
    from_sampler,
    kac,
    power_uniform_split,
    user_table,
)

SQRT2 = math.sqrt(2.0)
THETA_PUS2 = (1.0 + SQRT2) / 2.0          # root of s^2 - 2s - 1 = 0 with s = 2*theta
F_PUS2 = 4.0 * SQRT2 - 6.0                # phi(theta)/theta at the minimizer
# bisection oracle on (1+x)exp(-x) = 1/2 (frozen from a 200-step bisection)
XSTAR_HALF = 1.6783469900166605
THETA_DETPAIR = XSTAR_HALF / math.log(2.0)
# quadrature oracle on the mean absolute trigonometric weights: 4/pi - 1
KAC_PHI_1 = 0.27323954473516276
# gamma-function oracle for the trigonometric moment curve
KAC_PHI = {0.5: 0.5255195270036264, 1.0: KAC_PHI_1, 1.5: 0.11283578889876433,
           2.0: 0.0, 3.0: -0.15117363684322482}
# minimizer of the same curve, from a bisection on the digamma closed form
KAC_THETA = 4.825168372152115
KAC_F = -0.06424090672604062


def mc_model(base):
    """Strip closed forms and the quadrature representation: forces the MC path."""
    return replace(base, analytic_phi=None, analytic_phi_prime=None,
                   analytic_phi_log2=None, uniform_param_weights=None)


@pytest.fixture(scope="module")
def pus2_profile():
    return find_theta_star(power_uniform_split(2.0))


class TestPhi:
    def test_deterministic_pair_at_one(self):
        assert phi(deterministic_pair(0.5), 1.0).value == pytest.approx(0.0, abs=1e-15)

    def test_power_split_at_one(self):
        assert phi(power_uniform_split(2.0), 1.0).value == pytest.approx(-1.0 / 3.0, abs=1e-14)

    def test_kac_quadrature_value(self):
        est = phi(kac(), 1.0)
        assert est.method == "quadrature"
        assert est.value == pytest.approx(KAC_PHI_1, abs=1e-9)

    @pytest.mark.parametrize("theta", sorted(KAC_PHI))
    def test_kac_matches_gamma_function_oracle(self, theta):
        assert phi(kac(), theta).value == pytest.approx(KAC_PHI[theta], abs=1e-8)

    @pytest.mark.parametrize("theta", [0.0, 0.5, 1.0, 1.5, 2.0])
    def test_all_paths_agree_with_closed_forms(self, theta):
        models = [deterministic_pair(0.5), power_uniform_split(2.0),
                  user_table([(0.4, (0.3, 0.7)), (0.6, (0.5,))])]
        for model in models:
            exact = model.analytic_phi(theta)
            assert phi(model, theta, method="analytic").value == pytest.approx(exact, abs=1e-14)
            if model.uniform_param_weights is not None:
                assert phi(model, theta, method="quadrature").value == pytest.approx(
                    exact, abs=1e-9)
            est = phi(model, theta, budget=100_000, rng=np.random.default_rng(5),
                      method="monte-carlo")
            assert abs(est.value - exact) <= max(4.0 * est.se, 1e-12)

    def test_phi_prime_and_log2_closed_forms(self):
        model = power_uniform_split(2.0)
        # d/dtheta of 2/(2 theta + 1) and its second derivative
        for theta in (0.5, 1.0, 2.0):
            assert phi_prime(model, theta).value == pytest.approx(
                -4.0 / (2 * theta + 1) ** 2, rel=1e-12)
            assert phi_log2(model, theta).value == pytest.approx(
                16.0 / (2 * theta + 1) ** 3, rel=1e-12)

    def test_theta_zero_counts_offspring(self):
        est = phi(deterministic_pair(0.5), 0.0)
        assert est.value == pytest.approx(1.0)  # two children, minus one

    def test_negative_theta_rejected(self):
        with pytest.raises(ValueError):
            phi(kac(), -0.5)

    def test_mc_needs_rng(self):
        with pytest.raises(ValueError, match="rng"):
            phi(mc_model(power_uniform_split(2.0)), 1.0)

    def test_divergence_flagged_on_heavy_tailed_weights(self):
        # pareto weights with tail index 0.5: the moment at theta = 2 is infinite
        def sampler(rng, n):
            u = rng.random(n)
            w = u ** (-2.0)  # P(W > x) = x^(-1/2)
            return -np.log(w), np.ones(n, dtype=np.int64)

        model = from_sampler("pareto_unit", sampler, nonlattice_declared=True)
        est = phi(model, 2.0, budget=40_000, rng=np.random.default_rng(0))
        assert est.diverged and math.isinf(est.value)


class TestFindThetaStar:
    @pytest.mark.parametrize("a", [1.0, 2.0, 4.0])
    def test_power_split_minimizer_closed_form(self, a):
        profile = find_theta_star(power_uniform_split(a))
        assert profile.theta_star == pytest.approx((1.0 + SQRT2) / a, abs=1e-8)
        assert abs(profile.d_at_theta) < 1e-9

    def test_power_split_f_value(self):
        profile = find_theta_star(power_uniform_split(2.0))
        assert profile.f_at_theta == pytest.approx(F_PUS2, abs=1e-8)
        # the defining identity at the minimizer
        lhs = profile.theta_star * profile.phi_prime(profile.theta_star) + 1.0
        rhs = profile.phi(profile.theta_star) + 1.0
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_deterministic_pair_against_bisection_oracle(self):
        profile = find_theta_star(deterministic_pair(0.5))
        assert profile.theta_star == pytest.approx(THETA_DETPAIR, abs=1e-8)

    def test_minimum_on_search_grid(self):
        profile = find_theta_star(power_uniform_split(2.0))
        f = lambda th: profile.phi(th) / th
        grid = np.linspace(0.1, 4.0, 79)
        assert all(profile.f_at_theta <= f(th) + 1e-12 for th in grid)

    def test_mc_path_agrees_within_three_se(self):
        model = mc_model(power_uniform_split(2.0))
        profile = find_theta_star(model, budget=200_000, rng=np.random.default_rng(2))
        assert profile.method == "monte-carlo"
        assert profile.theta_se > 0
        assert abs(profile.theta_star - THETA_PUS2) <= 3.0 * profile.theta_se

    def test_kac_minimizer_matches_digamma_oracle(self):
        profile = find_theta_star(kac())
        assert profile.theta_star == pytest.approx(KAC_THETA, abs=1e-6)
        assert profile.f_at_theta == pytest.approx(KAC_F, abs=1e-8)
        assert profile.theta_star > 2.0  # beyond the range of the scaling limit
        assert abs(profile.d_at_theta) < 1e-9

    def test_unreachable_minimizer_errors_with_defect_values(self):
        # the minimizer for this model sits far beyond the expanded bracket
        with pytest.raises(BracketingError, match=r"D\("):
            find_theta_star(deterministic_pair(0.99))

    def test_insufficient_mc_budget(self):
        # wide weight spread, no variance cancellation: batch roots scatter
        # far outside a tight bracket at this budget
        table = user_table([(0.5, (0.02,)), (0.5, (0.9, 0.9))])
        model = replace(table, analytic_phi=None, analytic_phi_prime=None,
                        analytic_phi_log2=None)
        with pytest.raises(BudgetError, match="budget insufficient"):
            find_theta_star(model, budget=1_000, rng=np.random.default_rng(0),
                            batches=10, bracket=(0.9, 1.0))
        healthy = find_theta_star(model, budget=200_000, rng=np.random.default_rng(1))
        exact = find_theta_star(table).theta_star
        assert abs(healthy.theta_star - exact) <= 3.0 * healthy.theta_se

    def test_quadrature_path_on_kac_table(self):
        # a single-atom table stripped to its quadrature-free sampler would go MC;
        # kac keeps the quadrature representation and must use it
        profile = find_theta_star(kac())
        assert profile.method == "quadrature"


class TestRegimes:
    def test_m_t_theta_values(self, pus2_profile):
        pair_profile = find_theta_star(deterministic_pair(0.5))
        assert m_t_theta(pair_profile, 3.0, 1.0) == pytest.approx(1.0, abs=1e-12)
        assert m_t_theta(pair_profile, 0.0, 1.7) == 1.0
        assert m_t_theta(pus2_profile, 2.0, 0.0) == pytest.approx(math.exp(2.0), rel=1e-12)

    def test_beyond_boundary_classification(self, pus2_profile):
        report = classify_regime(pus2_profile, 2.0)
        assert report.regime == "beyond_boundary"
        assert report.p == pytest.approx(3.0 / (2.0 * THETA_PUS2), abs=1e-8)
        assert report.r == pytest.approx(F_PUS2, abs=1e-8)

    def test_subcritical_classification(self, pus2_profile):
        report = classify_regime(pus2_profile, 0.8)
        assert report.regime == "subcritical"
        assert report.p == 0.0
        assert report.r == pytest.approx(-0.28846153846153855, abs=1e-10)

    def test_boundary_classification(self, pus2_profile):
        report = classify_regime(pus2_profile, pus2_profile.theta_star)
        assert report.regime == "boundary"
        assert report.p == pytest.approx(1.0 / (2.0 * THETA_PUS2), abs=1e-8)

    def test_tie_tolerance_stability(self, pus2_profile):
        gamma = 2.0
        margin = abs(gamma - pus2_profile.theta_star)
        for tol in (margin / 100, margin / 10, margin / 2):
            assert classify_regime(pus2_profile, gamma, tie_tol=tol).regime == "beyond_boundary"

    def test_gamma_domain(self, pus2_profile):
        with pytest.raises(ValueError):
            classify_regime(pus2_profile, 2.5)


class TestCharacteristicCurve:
    def test_tangency_at_the_minimizer(self, pus2_profile):
        curve = characteristic_index_curve(pus2_profile, np.linspace(0.2, 2.8, 27))
        assert curve.root == pytest.approx(pus2_profile.theta_star, abs=1e-6)

    def test_small_t_limit_is_mean_offspring(self, pus2_profile):
        curve = characteristic_index_curve(pus2_profile, [1e-9])
        assert curve.points[0][1] == pytest.approx(2.0, rel=1e-6)

    def test_below_the_minimizer_m_exceeds_one(self, pus2_profile):
        t = pus2_profile.theta_star / 2.0
        curve = characteristic_index_curve(pus2_profile, [t])
        assert curve.points[0][1] > 1.0

    def test_undefined_beyond_denominator_zero(self, pus2_profile):
        # denominator (t/theta)*phi(theta) + 1 crosses zero at -theta/phi(theta)
        t_bad = -pus2_profile.theta_star / pus2_profile.phi_at_theta() + 0.5
        curve = characteristic_index_curve(pus2_profile, [t_bad])
        assert math.isnan(curve.points[0][1])


class TestAssumptionScreen:
    def test_deterministic_pair_has_zero_logplus_terms(self):
        model = deterministic_pair(0.5)
        profile = find_theta_star(model)
        screen = screen_assumptions(model, profile, budget=1_000,
                                    rng=np.random.default_rng(0))
        # X = 2 * 0.5^theta < 1, so the log-plus statistics vanish identically
        assert screen.x_log2_x.value == 0.0
        assert screen.xt_log_xt.value == 0.0
        assert screen.bounded_offspring is True
        assert screen.nonlattice is False

    def test_power_split_screens_finite(self):
        model = power_uniform_split(2.0)
        profile = find_theta_star(model)
        screen = screen_assumptions(model, profile, budget=50_000,
                                    rng=np.random.default_rng(1))
        for est in (screen.log2_moment, screen.x_log2_x, screen.xt_log_xt):
            assert math.isfinite(est.value) and est.value >= 0.0
        assert screen.nonlattice is True

    def test_unbounded_offspring_reported_unknown(self):
        def sampler(rng, n):
            return np.zeros(n), np.ones(n, dtype=np.int64)

        model = from_sampler("unit", sampler, nonlattice_declared=False)
        profile = find_theta_star(power_uniform_split(2.0))
        screen = screen_assumptions(model, profile, budget=100,
                                    rng=np.random.default_rng(2))
        assert screen.bounded_offspring is None
