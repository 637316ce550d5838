"""Stochastic and iterative oracles for the nonlocal equation.

* :func:`simulate` runs the jump process behind the equation: exponential
  clocks of rate ``eps^-2``, deterministic contraction ``x -> x e^{-dt}``
  between jumps, increments ``eps * J``.
* :func:`wild_sum_truncated` sums the first terms of the Poisson-weighted
  series of iterated convolutions.
* :func:`duhamel_picard` iterates the mild-solution map on a time grid.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .fields import (
    Grid,
    GridDensity,
    SpectralField,
    _dilate_array,
    _fft_frequencies,
    from_spectral,
)
from .kernels import KernelSpec
from .spectral import _initial_hat

__all__ = [
    "ParticleEnsemble",
    "EscapedMassWarning",
    "simulate",
    "empirical_density",
    "wild_sum_truncated",
    "poisson_missing_mass",
    "duhamel_picard",
]

BLOCK_SIZE = 1 << 16
WILD_MAX_RATE = 15.0


class EscapedMassWarning(UserWarning):
    """Particles fell outside the histogram box."""


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    dim: int
    time: float
    positions: np.ndarray
    seed_record: dict = field(default_factory=dict)

    def __len__(self):
        return self.positions.shape[0]

    def to_csv(self, path) -> None:
        pts = self.positions.reshape(len(self), -1)
        cols = ",".join(f"x{i + 1}" for i in range(pts.shape[1]))
        meta = ",".join(f"{k}={v}" for k, v in sorted(self.seed_record.items()))
        np.savetxt(path, pts, delimiter=",", fmt="%.16e", header=f"time={self.time!r} {meta}\n{cols}", comments="# ")


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _draw_initial(u0_sampler, rng, n):
    if hasattr(u0_sampler, "sample"):
        return np.asarray(u0_sampler.sample(rng, n), dtype=float)
    if callable(u0_sampler):
        return np.asarray(u0_sampler(rng, n), dtype=float)
    # a fixed point: delta initial data
    x0 = np.asarray(u0_sampler, dtype=float)
    return np.broadcast_to(x0, (n,) + x0.shape).copy()


def _simulate_block(kernel, eps, u0_sampler, t, n, rng):
    x = _draw_initial(u0_sampler, rng, n)
    if t == 0:
        return x
    clock = np.zeros(n)
    active = np.arange(n)
    while active.size:
        # inversion keeps the waiting-time stream platform independent
        wait = -(eps * eps) * np.log1p(-rng.random(active.size))
        nxt = clock[active] + wait
        jumps = nxt < t
        done = active[~jumps]
        x[done] *= np.exp(-(t - clock[done]))[(...,) + (None,) * (x.ndim - 1)]
        active = active[jumps]
        wait = wait[jumps]
        x[active] *= np.exp(-wait)[(...,) + (None,) * (x.ndim - 1)]
        x[active] += eps * kernel.sample(rng, active.size)
        clock[active] = nxt[jumps]
    return x


def simulate(
    kernel: KernelSpec,
    epsilon: float,
    u0_sampler,
    t: float,
    n_particles: int,
    seed: int,
    *,
    workers: int = 1,
) -> ParticleEnsemble:
    """Monte Carlo sample of the solution at time ``t``.

    ``u0_sampler`` is an :class:`~nlfp.initial.InitialData`, a callable
    ``(rng, n) -> positions`` or a fixed point (delta initial data).
    Particles are processed in blocks of ``BLOCK_SIZE``; block ``b`` uses the
    stream ``SeedSequence(seed, spawn_key=(b,))`` so the output does not
    depend on ``workers``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    n_blocks = -(-n_particles // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_particles - b * BLOCK_SIZE) for b in range(n_blocks)]

    def run(b):
        return _simulate_block(kernel, epsilon, u0_sampler, t, sizes[b], _block_rng(seed, b))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    else:
        parts = [run(b) for b in range(n_blocks)]
    pos = np.concatenate(parts)
    record = {"seed": int(seed), "block_size": BLOCK_SIZE, "n_blocks": n_blocks}
    return ParticleEnsemble(kernel.dim, float(t), pos, record)


def empirical_density(e: ParticleEnsemble, grid: Grid) -> GridDensity:
    """Histogram on the grid cells, normalized by the total particle count."""
    n = len(e)
    if n == 0:
        return GridDensity.zeros(grid)
    edges = -grid.half_width + grid.h * np.arange(grid.points_per_axis + 1)
    pts = e.positions.reshape(n, -1)
    counts, _ = np.histogramdd(pts, bins=[edges] * grid.dim)
    escaped = 1.0 - counts.sum() / n
    if escaped > 1e-3:
        warnings.warn(f"{escaped:.3%} of particles lie outside the box", EscapedMassWarning, stacklevel=2)
    return GridDensity(grid, counts / (n * grid.cell_volume))


def poisson_missing_mass(t: float, epsilon: float, n_max: int) -> float:
    """``1 - P(N <= n_max)`` for ``N ~ Poisson(t / eps^2)``: mass left out of the truncated sum."""
    return float(special.pdtrc(n_max, t / epsilon**2))


def _jump_integral(kernel, eps, t, eta, quad_nodes):
    """``int_0^t J^(eps e^s eta) ds`` by composite Gauss-Legendre."""
    x, w = special.roots_legendre(quad_nodes)
    pts = eta.reshape(-1, kernel.dim) if kernel.dim > 1 else eta.reshape(-1, 1)
    omega = eps * kernel.scale * np.max(np.sum(np.abs(pts), axis=1)) * (math.exp(t) - 1.0)
    m = max(1, math.ceil(omega / math.pi))
    edges = np.linspace(0.0, t, m + 1)
    half = 0.5 * np.diff(edges)
    s = ((0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * x).ravel()
    ws = (half[:, None] * w).ravel()
    out = np.zeros(pts.shape[0], dtype=complex)
    step = max(1, 2_000_000 // s.size)
    for i in range(0, pts.shape[0], step):
        arg = eps * np.exp(s)[None, :, None] * pts[i : i + step, None, :]
        out[i : i + step] = kernel.fourier(arg if kernel.dim > 1 else arg[..., 0]) @ ws
    return out.reshape(eta.shape[:-1] if kernel.dim > 1 else eta.shape)


def wild_sum_truncated(
    u0,
    kernel: KernelSpec,
    epsilon: float,
    t: float,
    n_max: int,
    quad_nodes: int = 16,
    grid: Grid | None = None,
) -> GridDensity:
    """Truncated Wild sum ``sum_{n <= n_max}`` evaluated in frequency space.

    Term ``n`` integrates ``prod_i J^(eps e^{t_i} eta)`` over the ordered
    simplex in ``[0, t]^n``.  The integrand is symmetric in the ``t_i`` so the
    order-statistics map turns it into ``1/n!`` times the cube integral, and
    the tensor Gauss-Legendre rule on the cube of a product integrand is
    exactly the ``n``-th power of the one-dimensional rule.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if t <= 0:
        raise ValueError("t must be positive")
    rate = t / epsilon**2
    if rate > WILD_MAX_RATE:
        raise ValueError(
            f"t/eps^2 = {rate:.3g} > {WILD_MAX_RATE}: the Poisson weights spread over too many "
            "terms; use nlfp.spectral.solve instead"
        )
    missing = poisson_missing_mass(t, epsilon, n_max)
    if missing > 1e-3:
        warnings.warn(f"truncated Wild sum misses Poisson mass {missing:.2e}", stacklevel=2)
    g, base = _initial_hat(u0, grid, math.exp(-t))
    eta = math.exp(-t) * g.frequencies
    q = _jump_integral(kernel, epsilon, t, eta, quad_nodes) / epsilon**2
    total = np.zeros_like(base)
    term = np.ones_like(base)
    for n in range(n_max + 1):
        if n:
            term = term * q / n
        total += term
    vals = math.exp(-rate) * base * total
    return from_spectral(SpectralField(g, vals))


def duhamel_picard(
    u0: GridDensity,
    kernel: KernelSpec,
    epsilon: float,
    t: float,
    dt: float,
    iters: int,
    *,
    return_history: bool = False,
):
    """Picard iterates of ``u -> T_t u0 + eps^-2 int_0^t T_{t-s}[J_eps * u(s)] ds``.

    The iteration runs on the time nodes ``s_j = j dt`` with the composite
    trapezoid rule; iterate 0 is ``s -> T_s u0``.  With ``return_history``
    also returns ``sup_j ||u_{k+1}(s_j) - u_k(s_j)||_{L^1}`` for each step.
    """
    m = round(t / dt)
    if m < 1 or abs(m * dt - t) > 1e-12 * max(1.0, t):
        raise ValueError("dt must divide t")
    if iters < 0:
        raise ValueError("iters must be >= 0")
    g = u0.grid
    eps2 = epsilon**2
    free = np.stack([_dilate_array(u0.values, g, j * dt, epsilon) for j in range(m + 1)])
    cur = free.copy()
    mult = kernel.fourier(epsilon * _fft_frequencies(g))
    axes = tuple(range(1, g.dim + 1))
    history = []
    for _ in range(iters):
        conv = np.fft.ifftn(np.fft.fftn(cur, axes=axes) * mult, axes=axes).real
        new = free.copy()
        # target node i collects dt * [f_0/2 + f_1 + ... + f_{i-1} + f_i/2], f_j = T_{(i-j)dt} conv_j
        for lag in range(m + 1):
            w = np.full(m + 1 - lag, dt / eps2)
            if lag == 0:
                w *= 0.5
                w[0] = 0.0
                src = conv
            else:
                w[0] *= 0.5
                src = _dilate_array(conv[: m + 1 - lag], g, lag * dt, epsilon)
            new[lag:] += w.reshape((-1,) + (1,) * g.dim) * src
        if return_history:
            diff = np.abs(new - cur).reshape(m + 1, -1).sum(axis=1) * g.cell_volume
            history.append(float(diff.max()))
        cur = new
    out = GridDensity(g, cur[-1])
    return (out, history) if return_history else out
