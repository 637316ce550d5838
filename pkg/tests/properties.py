"""Randomized structural identities shared by the unit and acceptance suites."""
import math

import numpy as np
from hypothesis import given, strategies as st

from nlfp.clt import product_factorization_check
from nlfp.fields import Grid, GridDensity, WeightSpec, convolve, dilate_semigroup, l1_distance, weighted_norm
from nlfp.kernels import KERNEL_NAMES, make_kernel

GRID = Grid(1, 12.0, 4096)
WIDE = Grid(1, 24.0, 8192)

bumps = st.lists(
    st.tuples(st.floats(0.1, 1.0), st.floats(-2.0, 2.0), st.floats(0.2, 1.5)),
    min_size=1,
    max_size=3,
)


def mixture(grid, comps):
    x = grid.points
    tot = sum(w for w, _, _ in comps)
    vals = sum(w / tot * np.exp(-0.5 * (x - m) ** 2 / v) / math.sqrt(2 * math.pi * v) for w, m, v in comps)
    return GridDensity(grid, vals)


def kernel_weighted_mass(kernel, eps, k):
    z, w = kernel.quadrature(64)
    return float(w @ (1.0 + (eps * z) ** 2) ** (k / 2))


@given(
    name=st.sampled_from(KERNEL_NAMES),
    eps=st.floats(0.1, 1.0),
    k=st.sampled_from([0, 1, 2]),
    comps=bumps,
)
def test_weighted_young(name, eps, k, comps):
    kern = make_kernel(name)
    u = mixture(GRID, comps)
    w = WeightSpec("polynomial", k)
    lhs = weighted_norm(convolve(kern, eps, u), w, warn=False)
    rhs = 2.0**k * kernel_weighted_mass(kern, eps, k) * weighted_norm(u, w, warn=False)
    assert lhs <= rhs * (1 + 1e-12)


@given(
    eps=st.floats(0.3, 1.0),
    t=st.floats(0.1, 1.0),
    k=st.sampled_from([0, 2]),
    comps=bumps,
)
def test_contractivity(eps, t, k, comps):
    u = mixture(GRID, comps)
    w = WeightSpec("polynomial", k)
    before = weighted_norm(u, w, warn=False)
    after = weighted_norm(dilate_semigroup(u, t, eps), w, warn=False)
    assert after <= math.exp(-t / eps**2) * before + 1e-6 * before


@given(
    name=st.sampled_from(KERNEL_NAMES),
    eps=st.sampled_from([0.5, 1.0]),
    t=st.sampled_from([0.3, 1.0]),
    comps=bumps,
)
def test_semigroup_commutation(name, eps, t, comps):
    kern = make_kernel(name)
    f = mixture(WIDE, comps)
    lhs = convolve(kern, eps, dilate_semigroup(f, t, eps))
    rhs = dilate_semigroup(convolve(kern, eps * math.exp(t), f), t, eps)
    assert l1_distance(lhs, rhs) < 1e-6


@given(
    pairs=st.integers(1, 16).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(-2.0, 2.0), min_size=n, max_size=n),
            st.lists(st.floats(-2.0, 2.0), min_size=n, max_size=n),
        )
    )
)
def test_product_factorization(pairs):
    a, b = pairs
    assert product_factorization_check(a, b) < 1e-12
