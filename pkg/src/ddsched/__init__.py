"""Joint sensor scheduling and remote estimation by convex-concave iterations."""
from .model import (
    BroadcastPolicy,
    CcpOptions,
    CcpTrace,
    DesignError,
    GaussianMixtureSpec,
    MomentSet,
    RiskReport,
    SampleMatrix,
    UnicastPolicy,
)
from .sampler import Empirical, MonteCarloMixture, QuadratureMixture

__version__ = "0.1.0"

__all__ = [
    "BroadcastPolicy",
    "CcpOptions",
    "CcpTrace",
    "DesignError",
    "Empirical",
    "GaussianMixtureSpec",
    "MomentSet",
    "MonteCarloMixture",
    "QuadratureMixture",
    "RiskReport",
    "SampleMatrix",
    "UnicastPolicy",
]
