"""Achievable rates of media-based modulation links, single-user and MAC."""

__version__ = "0.1.0"

from .constellation import (
    ConstellationSampler,
    CorrelationModel,
    CovarianceMatrix,
    JointConstellation,
    NotComparableError,
    Spectrum,
    UserConstellation,
    build_user_covariance,
    eigen_spectrum,
    joint_covariance,
    lemma1_spectrum,
    majorizes,
    sample_constellation,
    superpose,
)
from .entropy import (
    EntropyEstimate,
    GaussianMixture,
    QuadratureConvergenceError,
    conditional_pdf,
    entropy_bounds,
    mc_entropy,
    mixture_pdf,
    noise_entropy,
    quadrature_entropy,
)
from .rates import (
    ErgodicRate,
    LinkConfig,
    RateRegion,
    SubsetRate,
    awgn_capacity,
    awgn_mac_region,
    ergodic_average,
    mac_region,
    single_user_rate,
    subset_rate,
)

__all__ = [
    "__version__",
    "ConstellationSampler", "CorrelationModel", "CovarianceMatrix",
    "JointConstellation", "NotComparableError", "Spectrum", "UserConstellation",
    "build_user_covariance", "eigen_spectrum", "joint_covariance",
    "lemma1_spectrum", "majorizes", "sample_constellation", "superpose",
    "EntropyEstimate", "GaussianMixture", "QuadratureConvergenceError",
    "conditional_pdf", "entropy_bounds", "mc_entropy", "mixture_pdf",
    "noise_entropy", "quadrature_entropy",
    "ErgodicRate", "LinkConfig", "RateRegion", "SubsetRate",
    "awgn_capacity", "awgn_mac_region", "ergodic_average", "mac_region",
    "single_user_rate", "subset_rate",
]
