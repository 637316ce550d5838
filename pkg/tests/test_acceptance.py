"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines appear at
the end of the session.  ``python3 tests/test_acceptance.py`` does the same.
"""
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, str(Path(__file__).parent))
import properties  # noqa: E402

from nlfp.analysis import (  # noqa: E402
    decay_rate_fit,
    equilibria_gap,
    fourier_decay_exponent,
    local_limit_rate,
    lyapunov_fit,
    lyapunov_operator,
    positivity_probe,
)
from nlfp.clt import CLTDensity, be_rate_experiment, default_sigma_rule, poisson_partial_sum  # noqa: E402
from nlfp.cumulants import CumulantTable, evolve_cumulant  # noqa: E402
from nlfp.fields import Grid, WeightSpec, coarsen, l1_distance  # noqa: E402
from nlfp.initial import BoxIndicator, GaussianBump  # noqa: E402
from nlfp.jump import simulate, empirical_density, wild_sum_truncated  # noqa: E402
from nlfp.kernels import KERNEL_NAMES, make_kernel  # noqa: E402
from nlfp.spectral import equilibrium, solve  # noqa: E402

ACCEPTANCE_LINES = []
U = make_kernel("uniform")
GRID = Grid.default()
K2 = WeightSpec("polynomial", 2)


def verdict(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_c01_solver_vs_monte_carlo():
    t0 = time.perf_counter()
    u0 = GaussianBump(2.0, 0.25)
    u = solve(u0, U, 0.5, 1.0, GRID, split_atom=True)
    coarse = Grid(1, 12.0, 256)
    hist = empirical_density(simulate(U, 0.5, u0, 1.0, 10**6, seed=2024), coarse)
    d = l1_distance(coarsen(u, 16), hist)
    elapsed = time.perf_counter() - t0
    verdict(1, d < 0.02 and elapsed < 60, f"L1 = {d:.4f} (< 0.02), {elapsed:.1f} s (< 60 s)")


def test_c02_wild_sum():
    u0 = GaussianBump(2.0, 0.25)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        w = wild_sum_truncated(u0, U, 1.0, 0.5, 8, grid=GRID)
    mass = w.mass()
    ref = math.exp(-0.5) * sum(0.5**n / math.factorial(n) for n in range(9))
    d = l1_distance(w, solve(u0, U, 1.0, 0.5, GRID))
    ok = abs(mass - ref) < 1e-10 and d < 1e-4
    verdict(2, ok, f"|mass - Poisson cdf| = {abs(mass - ref):.1e} (< 1e-10), L1 = {d:.1e} (< 1e-4)")


def _kurtosis_batches(x, batches=100):
    k = np.array([stats.kurtosis(b) for b in np.array_split(x, batches)])
    return k.mean(), k.std(ddof=1) / math.sqrt(batches)


def test_c03_cumulants():
    u0 = GaussianBump(2.0, 0.25)
    kappa0 = CumulantTable(1, 2, {(1,): 2.0, (2,): 0.25})
    worst = 0.0
    x = GRID.axis
    for name in KERNEL_NAMES:
        k = make_kernel(name)
        for eps in (1.0, 0.5, 0.25):
            for t in (0.5, 2.0):
                u = solve(u0, k, eps, t, GRID, split_atom=True)
                m2 = float(np.sum(u.values * x * x) * GRID.h)
                k1 = evolve_cumulant(k, eps, kappa0, t, (1,))
                k2 = evolve_cumulant(k, eps, kappa0, t, (2,))
                worst = max(worst, abs(m2 - (k2 + k1 * k1)) / (k2 + k1 * k1))
    lines = [f"second moment max rel err {worst:.1e} (< 1e-5)"]
    ok = worst < 1e-5
    for eps in (1.0, 0.5):
        target = 1.8 * eps**2
        F = equilibrium(U, eps, Grid(1, 24.0, 8192))
        mom = [float(np.sum(F.values * F.grid.axis**j) * F.grid.h) for j in (2, 4)]
        kurt = mom[1] / mom[0] ** 2 - 3.0
        mc = simulate(U, eps, GaussianBump(0.0, 1.0), 12.0, 10**6, seed=77)
        mk, se = _kurtosis_batches(mc.positions.ravel())
        ok &= abs(kurt - target) <= 0.05 * target and abs(mk - target) <= 4 * se
        lines.append(f"eps={eps:g}: kurtosis spectral {kurt:.4f}, MC {mk:.4f} +- {se:.4f}, target {target:.4f}")
    verdict(3, ok, "; ".join(lines))


def test_c04_local_limit():
    t0 = time.perf_counter()
    eps = [0.4, 0.2, 0.1, 0.05]
    u0 = GaussianBump(2.0, 0.25)
    out, ok = [], True
    for name, lo, hi in (("uniform", 1.8, 2.3), ("skew_step", 0.8, 1.3)):
        for t in (1.0, 5.0):
            s = local_limit_rate(make_kernel(name), u0, eps, t, K2, GRID).slope
            ok &= lo <= s <= hi
            out.append(f"{name} t={t:g} slope {s:.3f}")
    g = equilibria_gap(U, eps, K2, GRID).slope
    ok &= 1.8 <= g <= 2.3
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    verdict(4, ok, "; ".join(out) + f"; gap slope {g:.3f}; {elapsed:.0f} s")


def test_c05_uniform_gap():
    u0 = GaussianBump(2.0, 0.25)
    times = np.linspace(0.0, 6.0, 13)
    rates = {e: decay_rate_fit(U, e, u0, K2, times, GRID).rate for e in (1.0, 0.5, 0.25, 0.1)}
    ok = all(r > 0 for r in rates.values()) and min(rates.values()) >= 0.5 * rates[1.0]
    verdict(5, ok, ", ".join(f"gamma({e:g}) = {r:.3f}" for e, r in rates.items()))


def test_c06_positivity():
    rep = positivity_probe(U, [1.0, 0.5, 0.25, 0.125, 0.0625], 1.0, 1.0, 1.0, BoxIndicator(0.0, 1.0), GRID)
    ok = all(a > 0 for a in rep.alphas) and rep.ratio >= 0.1
    verdict(6, ok, "alpha = " + ", ".join(f"{a:.4f}" for a in rep.alphas) + f"; min/max {rep.ratio:.3f} (>= 0.1)")


def test_c07_berry_esseen():
    fit = be_rate_experiment(CLTDensity.named("uniform"), default_sigma_rule)
    gauss = be_rate_experiment(CLTDensity.named("gaussian"), default_sigma_rule)
    gmax = float(np.max(gauss.ordinates))
    ok = fit.slope <= -0.45 and gmax < 1e-9
    verdict(7, ok, f"uniform slope {fit.slope:.3f} (<= -0.45), Gaussian max sup-distance {gmax:.1e} (< 1e-9)")


def test_c08_poisson_sums():
    s = np.array([poisson_partial_sum(m) for m in range(1, 10**4 + 1)])
    ok = abs(s[0] - 0.551819) <= 1e-6 and s.min() >= 0.22 and abs(s[-1] - 0.5) <= 0.01
    verdict(8, ok, f"s_1 = {s[0]:.7f}, min {s.min():.4f}, s_10^4 = {s[-1]:.5f}")


def test_c09_lyapunov():
    worst = 0.0
    for dim in (1, 2):
        g = Grid(dim, 10.0, 512 if dim == 1 else 64)
        for name in KERNEL_NAMES:
            k = make_kernel(name, dim)
            for eps in (1.0, 0.1):
                r = lyapunov_operator(k, eps, K2, g)
                worst = max(worst, float(np.max(np.abs(r - ((2 * dim + 2) - 2 * (1 + g.radius**2))))))
    g1 = Grid(1, 10.0, 1024)
    exp_m = min(lyapunov_fit(make_kernel(n), 0.5, WeightSpec("exponential", 1.0), g1).margin for n in KERNEL_NAMES)
    poi_m = lyapunov_fit(U, 0.5, WeightSpec("poisson", 1 / (0.5 * math.sqrt(6))), g1).margin
    ok = worst < 1e-6 and exp_m >= -1e-6 and poi_m >= -1e-6
    verdict(9, ok, f"identity err {worst:.1e} (< 1e-6), exponential margin {exp_m:.1e}, Poisson margin {poi_m:.1e}")


def test_c10_fourier_decay():
    out, ok = [], True
    for eps in (1.0, 0.7):
        s = fourier_decay_exponent(U, eps).slope
        target = -1 / eps**2
        ok &= abs(s - target) <= 0.15 * abs(target)
        out.append(f"eps={eps:g}: {s:.4f} vs {target:.4f}")
    verdict(10, ok, "; ".join(out))


def test_c11_structural_identities():
    names = ["test_weighted_young", "test_contractivity", "test_semigroup_commutation", "test_product_factorization"]
    failed = []
    for n in names:
        try:
            getattr(properties, n)()
        except Exception as exc:  # report every identity, not just the first
            failed.append(f"{n}: {type(exc).__name__}")
    verdict(11, not failed, "4 x 100 property cases passed" if not failed else "; ".join(failed))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
