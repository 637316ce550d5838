"""Quantitative central limit behaviour and uniform positivity.

Run: python3 demos/03_clt_and_positivity.py
"""
from nlfp.analysis import positivity_probe
from nlfp.clt import CLTDensity, be_rate_experiment, default_sigma_rule, poisson_lower_bound, poisson_partial_sum
from nlfp.initial import BoxIndicator
from nlfp.kernels import make_kernel

# %% rescaled sums of independent, differently scaled copies approach N(0, 1)
for name in ("uniform", "triangular", "gaussian"):
    fit = be_rate_experiment(CLTDensity.named(name), default_sigma_rule)
    dists = "  ".join(f"{d:.2e}" for d in fit.ordinates)
    print(f"{name:10s} sup-distances {dists}  slope {fit.slope:.3f}")

# %% Poisson mass between m and 2m stays bounded below
for m in (1, 2, 5, 10, 100, 1000, 10000):
    print(f"m = {m:<6d} s_m = {poisson_partial_sum(m):.6f}  lower bound {poisson_lower_bound(m):+.6f}")

# %% positivity constant for box initial data does not vanish as eps -> 0
rep = positivity_probe(make_kernel("uniform"), [1.0, 0.5, 0.25, 0.125, 0.0625], 1.0, 1.0, 1.0, BoxIndicator(0.0, 1.0))
for e, a in zip(rep.epsilons, rep.alphas):
    print(f"eps = {e:<7g} alpha = {a:.4f}")
print(f"min / max = {rep.ratio:.3f}")
