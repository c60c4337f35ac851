"""Exact laws of m-dependent window statistics and compound Poisson bounds."""

from .errors import (
    CpApproxError,
    DomainError,
    NumericalDegeneracyError,
    ResourceError,
    ValidationError,
)
from .pmf import (
    CpParams,
    Pmf,
    compound_poisson_pmf,
    convolve,
    point_mass,
    poisson_pmf,
    scale_support,
)
from .metrics import (
    SignedMeasure,
    check_wasserstein_inequality,
    presman_bound,
    total_variation_norm,
    wasserstein_norm,
    weighted_difference,
)
from .models import (
    JointPair,
    WindowModel,
    block_marginal,
    block_pair_joint,
    brute_force_law,
    exact_sum_law,
    make_cp2_model,
    make_k_runs,
    make_kk_events,
    sample_sum,
)
from .moments import (
    MomentSummary,
    check_convergence_conditions,
    covariance,
    factorial_moment,
    summarize,
)
from .bounds import (
    BoundReport,
    constants,
    corollary_bound,
    theorem2_bound,
    wasserstein_bound,
)

__version__ = "0.1.0"
