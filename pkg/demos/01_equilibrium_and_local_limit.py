"""Equilibria of the nonlocal equation and their approach to the Gaussian.

Run: python3 demos/01_equilibrium_and_local_limit.py
"""
import numpy as np

from nlfp.analysis import equilibria_gap, fourier_decay_exponent, local_limit_rate
from nlfp.fields import Grid, WeightSpec, coarsen, l1_distance
from nlfp.initial import GaussianBump
from nlfp.jump import empirical_density, simulate
from nlfp.kernels import make_kernel
from nlfp.spectral import equilibrium, solve, standard_gaussian

grid = Grid.default()
kernel = make_kernel("uniform")
w = WeightSpec("polynomial", 2)

# %% equilibria for shrinking jump size
G = standard_gaussian(grid)
for eps in (1.0, 0.5, 0.25, 0.1):
    F = equilibrium(kernel, eps, grid)
    print(f"eps = {eps:<5g} mass {F.mass():.12f}  min {F.values.min():+.1e}  ||F - G||_(1,2) = {l1_distance(F, G, w):.3e}")

# %% the gap shrinks like eps^2
fit = equilibria_gap(kernel, [0.4, 0.2, 0.1, 0.05], w, grid)
print(f"\nequilibria gap: slope {fit.slope:.3f}")

# %% near eps = 1 the equilibrium is rough: |F^(xi)| ~ |xi|^(-1/eps^2)
for eps in (1.0, 0.7):
    print(f"eps = {eps}: Fourier decay exponent {fourier_decay_exponent(kernel, eps).slope:.4f}, 1/eps^2 = {1 / eps**2:.4f}")

# %% a time-dependent solution, checked against particles
u0 = GaussianBump(2.0, 0.25)
u = solve(u0, kernel, 0.5, 1.0, grid, split_atom=True)
hist = empirical_density(simulate(kernel, 0.5, u0, 1.0, 200_000, seed=1), Grid(1, 12.0, 256))
print(f"\nspectral vs 2e5 particles at t = 1: L1 = {l1_distance(coarsen(u, 16), hist):.4f}")

# %% symmetric kernels reach the local limit at order eps^2, a skewed one at order eps
for name in ("uniform", "skew_step"):
    f = local_limit_rate(make_kernel(name), u0, [0.4, 0.2, 0.1, 0.05], 1.0, w, grid)
    print(f"{name:10s} local-limit slope {f.slope:.3f}")
