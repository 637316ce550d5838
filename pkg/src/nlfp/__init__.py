"""Nonlocal Fokker-Planck equation: spectral solver, stochastic oracles and rate probes.

The equation is ``du/dt = eps^-2 (J_eps * u - u) + div(x u)`` with a jump
kernel ``J`` of mass 1, mean 0 and covariance ``2 I``.
"""
__version__ = "0.1.0"

from .fields import DomainError, Grid, GridDensity, SpectralField, WeightSpec, weighted_norm
from .initial import BoxIndicator, GaussianBump, SkewedMixture, make_initial
from .kernels import KERNEL_NAMES, KernelError, KernelSpec, make_kernel
from .spectral import equilibrium, evolve_hat, local_fp, phase_integral, solve

__all__ = [
    "__version__",
    "DomainError",
    "Grid",
    "GridDensity",
    "SpectralField",
    "WeightSpec",
    "weighted_norm",
    "BoxIndicator",
    "GaussianBump",
    "SkewedMixture",
    "make_initial",
    "KERNEL_NAMES",
    "KernelError",
    "KernelSpec",
    "make_kernel",
    "equilibrium",
    "evolve_hat",
    "local_fp",
    "phase_integral",
    "solve",
]
