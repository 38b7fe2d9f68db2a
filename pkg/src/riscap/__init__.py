"""Ergodic capacity of RIS-aided Rician MIMO channels: closed-form bounds,
Monte Carlo estimates, asymptotics and statistical-CSI phase design."""
from .asymptotics import (
    HighSnrExpansion,
    PowerScalingVerdict,
    affine_capacity,
    high_snr_expansion,
    large_m_capacity,
    large_m_expansion,
    large_m_upper_bound,
    power_scaling,
)
from .capacity_bounds import (
    CapacityQuery,
    CapacityResult,
    bound_pair,
    lower_bound,
    mc_ecc,
    mc_ecc_random_phases,
    upper_bound,
)
from .channel_model import (
    EffectiveStats,
    PathSet,
    PhaseShifts,
    SystemConfig,
    effective_stats,
    sample_path_set,
    sample_realization,
    upsilon,
)
from .config import ExperimentConfig, load_config, parse_config
from .errors import (RisCapError, InvalidDimensionError, ShapeError, DomainError, SingularCovarianceError, DegenerateSpectrumError, ConvergenceError, CombinatorialLimitError, AssumptionViolatedError, InconclusiveError, ConfigError)
from .matrix_analysis import (
    EigenList,
    MomentParams,
    digamma,
    expected_det,
    expected_logdet,
    logdet_sandwich,
    principal_minor_sum,
    wishart_F,
    wishart_J,
)
from .phase_optimizer import GaParams, OptimizationTrace, baseline_phases, ga_optimize, objective

__version__ = "0.1.0"
