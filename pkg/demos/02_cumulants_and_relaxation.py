"""Cumulant dynamics, relaxation rates and the Lyapunov structure.

Run: python3 demos/02_cumulants_and_relaxation.py
"""
import math

import numpy as np

from nlfp.analysis import decay_rate_fit, lyapunov_fit, lyapunov_operator, tail_probe
from nlfp.cumulants import CumulantTable, equilibrium_cumulants, evolve_cumulant
from nlfp.fields import Grid, WeightSpec
from nlfp.initial import GaussianBump
from nlfp.kernels import make_kernel

grid = Grid.default()
kernel = make_kernel("uniform")

# %% each cumulant relaxes on its own clock e^{-n t}
kappa0 = CumulantTable(1, 4, {(1,): 2.0, (2,): 0.25})
for t in (0.0, 0.5, 1.0, 2.0, 8.0):
    ks = [evolve_cumulant(kernel, 0.5, kappa0, t, (n,)) for n in (1, 2, 3, 4)]
    print(f"t = {t:<4g} " + "  ".join(f"k{n} = {k:+.5f}" for n, k in zip((1, 2, 3, 4), ks)))

# %% equilibrium excess kurtosis is 1.8 eps^2 for this kernel
for eps in (1.0, 0.5, 0.25):
    eq = equilibrium_cumulants(kernel, eps, 4)
    print(f"eps = {eps:<5g} excess kurtosis {eq[(4,)] / eq[(2,)] ** 2:.5f}")

# %% the relaxation rate does not degenerate as eps -> 0
w = WeightSpec("polynomial", 2)
times = np.linspace(0.0, 6.0, 13)
for eps in (1.0, 0.5, 0.1):
    print(f"eps = {eps:<4g} fitted rate {decay_rate_fit(kernel, eps, GaussianBump(2.0, 0.25), w, times, grid).rate:.3f}")

# %% <x>^2 is an exact Lyapunov function: L* <x>^2 = 4 - 2 <x>^2 in one dimension
g = Grid(1, 10.0, 512)
r = lyapunov_operator(kernel, 0.3, w, g)
print(f"\nmax |L*<x>^2 - (4 - 2<x>^2)| = {np.max(np.abs(r - (4 - 2 * (1 + g.axis**2)))):.1e}")
cert = lyapunov_fit(kernel, 0.5, WeightSpec("poisson", 1 / (0.5 * math.sqrt(6))))
print(f"Poisson weight at the critical exponent: C = {cert.C:.3f}, lambda = {cert.lam:.3f}, certified {cert.certified}")

# %% tails: the critical Poisson-type moment is finite at eps = 1
rep = tail_probe(kernel, 1.0, 1 / math.sqrt(6), 10.0)
print(f"truncated tail integral {rep.integral:.4f}, finite {rep.finite}, decay per unit |x| {rep.decay_ratio:.3e}")
