"""Monte Carlo analysis of kinetic-type evolution equations.

The solution of the evolution equation is represented as the law of a
weighted sum over the alive particles of a continuous-time branching random
walk; this package simulates that walk, analyzes the spectral function that
drives the scaling rates, verifies the self-similar scaling regimes at desk
scale and approximates the fixed point of the associated smoothing map.
"""

from ._kernel import IMPLEMENTATION as kernel_implementation
from .brw_engine import (
    ManyToOneResult,
    MartingaleReport,
    Particle,
    PopulationSnapshot,
    compute_Ut,
    many_to_one_check,
    sample_branching_composition,
    sample_mu_t,
    simulate_lattice,
    simulate_population,
    skeleton_diagnostics,
)
from .errors import (
    AnalysisError,
    BracketingError,
    BudgetError,
    ConfigError,
    KineticBrwError,
)
from .fixed_point import (
    FactorizationReport,
    FixedPointPool,
    FixedPointReport,
    factorization_diagnostic,
    iterate_to_fixed_point,
    smoothing_step,
)
from .initial_laws import (
    InitialLaw,
    centered_uniform,
    check_membership,
    gaussian,
    law_from_config,
    point_mass,
    sample_initial,
    symmetric_stable,
)
from .kinetic_solver import (
    SampleSet,
    ScalingStudyResult,
    empirical_cf_curve,
    rescale,
    scaling_study,
)
from .seeding import substream
from .spectral import (
    AssumptionScreen,
    CharacteristicCurve,
    Estimate,
    RegimeReport,
    SpectralProfile,
    characteristic_index_curve,
    classify_regime,
    find_theta_star,
    m_t_theta,
    phi,
    phi_log2,
    phi_prime,
    screen_assumptions,
)
from .stats import (
    KSResult,
    check_moment_subadditivity,
    empirical_cf,
    ks_two_sample,
    loglog_slope,
)
from .weight_models import (
    WeightModel,
    WeightVector,
    builtin_models,
    deterministic_pair,
    econophysics,
    kac,
    model_from_config,
    power_uniform_split,
    sample_weights,
    user_table,
)

__version__ = "0.1.0"
