"""persistence-lab: persistence probabilities of random polynomials.

Estimates p_n = P(Q_n has no real zero) for random polynomials with
regularly varying coefficient variances, the exponents b_alpha of
sech-covariance stationary Gaussian processes, and the numerical
machinery (limit covariances, comparison inequalities, exact root
oracles) that ties the two together.
"""

__version__ = "0.1.0"

from ._rng import substream
from ._stats import wilson_interval
from .errors import (
    AccuracyError,
    CapacityError,
    ConditioningError,
    ConfigError,
    ConstraintError,
    DegenerateDistributionError,
    DegenerateInputError,
    EvaluationOverflowError,
    InsufficientDataError,
    InsufficientTrialsError,
    PersistenceLabError,
    PreconditionError,
    ReliabilityError,
)
from .gp_engine import (
    BAlphaEstimate,
    CirculantPathSampler,
    DensePathSampler,
    GPGrid,
    PersistenceCurve,
    StationaryKernel,
    cov_sech,
    estimate_b_alpha,
    gp_persistence,
    gp_persistence_from_sampler,
    sample_gp,
    sample_limit_block_process,
    sech_covariance_matrix,
    symmetric_sqrt_factor,
)
from .limit_cov import (
    FiniteBlockSum,
    LimitCovariance,
    chaining_constant,
    convergence_ratio,
    corr_C,
    correlation_matrix,
    covariance_check_suite,
    h_finite_sum,
    h_integral,
    maximal_inequality_check,
    process_correlation,
    slepian_order_check,
)
from .persistence_mc import (
    ExponentFit,
    PersistenceEstimate,
    estimate_persistence,
    fit_exponent,
    negativity_block_certificate,
    predicted_exponent,
)
from .poly_model import (
    CoefficientDistribution,
    NormalizedEvaluator,
    PolynomialSample,
    RegionParameters,
    RegularlyVaryingWeight,
    discrete,
    evaluate_normalized,
    gaussian,
    rademacher,
    sample_polynomial,
    sigma_n,
    standardize,
    student_t,
    uniform_symmetric,
    weight_R,
)
from .root_count import (
    CertificationPolicy,
    RootCountResult,
    count_real_roots_eigen,
    count_real_roots_sturm,
    has_real_root_certified,
    kac_expected_roots,
    sign_change_count,
)
