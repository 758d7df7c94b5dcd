"""Bayesian inversion for PDE-governed problems: geometries, forward models and MCMC."""

from .distributions import Gaussian, JointDensity, Posterior
from .geometry import (Continuous1D, Continuous2D, Grid1D, Grid2D, KLExpansion, MappedGeometry,
                       NodalGeometry, StepExpansion, build_matern_kl, heaviside)
from .kernels import BACKEND
from .model import ForwardModel
from .pde import SteadyStateLinearPDE, TimeDependentLinearPDE
from .samplers import ChainConfig, cwmh_sample, mh_sample, pcn_sample
from .samples import Samples

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChainConfig", "Continuous1D", "Continuous2D", "ForwardModel", "Gaussian",
    "Grid1D", "Grid2D", "JointDensity", "KLExpansion", "MappedGeometry", "NodalGeometry",
    "Posterior", "Samples", "StepExpansion", "SteadyStateLinearPDE", "TimeDependentLinearPDE",
    "build_matern_kl", "cwmh_sample", "heaviside", "mh_sample", "pcn_sample",
]
