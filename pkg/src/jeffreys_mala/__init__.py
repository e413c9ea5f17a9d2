"""Gradient-driven MCMC sampling of sqrt-information (Jeffreys-type) priors.

The target density is proportional to sqrt(det J(theta)) for a model's Fisher
information J; sampling runs a constrained Metropolis-adjusted Langevin chain
on the potential -1/2 log det J, with closed-form, Monte Carlo, or
particle-filter information estimates depending on the model.
"""

from .core import BoxConstraint, FimCapability, Model, ObservationBatch, as_params
from .diagnostics import (
    BinnedDensity,
    effective_sample_size,
    fd_gradient_check,
    histogram,
    reference_density,
    tv_distance,
)
from .errors import (
    ChainInitError,
    ContractViolationError,
    DegenerateFilterError,
    DegenerateSmootherError,
    DomainError,
    DomainExhaustedError,
    EstimationFailedError,
    JeffreysMalaError,
    SingularFimError,
    SupportError,
)
from .fim import (
    AnalyticFimProvider,
    CallableFimProvider,
    EmpiricalFimProvider,
    FimPotential,
    FimSource,
    FisherMatrix,
    GradientMode,
    OnePointConfig,
    PotentialEvaluation,
    empirical_fim,
    evaluate_potential,
    one_point_fim_derivative,
    potential,
    potential_gradient_analytic,
)
from .models import CoinModel, LgssModel, SvModel, WeibullModel, kalman_empirical_fim
from .particle import (
    NlssModel,
    ParticleSystem,
    PfFimProvider,
    SmoothedWeights,
    bootstrap_filter,
    ffbsm_score,
    ffbsm_smooth,
    filter_score,
    fisher_identity_score,
    pf_fim_estimate,
    systematic_resample,
)
from .rng import crn_pair, seed_sequence, stream
from .sampler import (
    CallablePotential,
    ChainResult,
    ChainState,
    SamplerConfig,
    constrained_acceptance,
    log_proposal,
    mala_acceptance,
    run_chain,
    ula_step,
)
from .two_stage import TrainingPair, TsEstimator, TsRunConfig, compress, evaluate, fit

__version__ = "0.1.0"
