"""Optimal stopping for Brownian motion with drift via the A-transform of the reward."""
from .atransform import (
    DegenerateLaw,
    ExponentialLaw,
    NegExponentialLaw,
    NormalLaw,
    NuLaw,
    TransformImage,
    appell_poly,
    eval_image,
    parse_law,
    transform,
    transform_power,
)
from .eta import (
    EmpiricalLaw,
    TwoSidedLaw,
    argmaxproc_of_path,
    eta_mgf_two_sided,
    sample_eta,
    two_sided_threshold,
)
from .levy import DomainError, LevyModel, extrema_rates, laplace_exponent, sample_killing, sample_path
from .region import Region
from .reward import RewardExpr, Term, derivative, eval_reward, power_reward, spectral, two_sided_reward
from .solver import (
    EtaMode,
    ScanGrid,
    StoppingProblem,
    StoppingSolution,
    check_comonotone,
    image_at,
    stopping_region,
    strategy_value,
    value_definition_mc,
    value_mc,
    value_one_sided,
)
from .verify import CheckReport, check_averaging, check_dominance, check_eta_law, check_martingale

__version__ = "0.1.0"
