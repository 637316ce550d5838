"""Closed-form Fourier solutions of the nonlocal and local Fokker-Planck equations.

The nonlocal solution is

    u^(t, xi) = u0^(e^{-t} xi) * exp(P(xi, t)),
    P(xi, t)  = eps^-2 int_0^t zeta(e^{-s} xi) ds = eps^-2 int_{e^-t}^1 zeta(y xi) / y dy,

with ``zeta(xi) = J^(eps xi) - 1``.  ``t = inf`` gives the equilibrium.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .fields import (
    Grid,
    GridDensity,
    SpectralField,
    from_spectral,
    hat_scaled,
    to_spectral,
)
from .initial import InitialData
from .kernels import KernelSpec

__all__ = [
    "PhaseIntegrand",
    "phase_integral",
    "evolve_hat",
    "equilibrium_hat",
    "equilibrium_transform",
    "local_fp_hat",
    "solve",
    "equilibrium",
    "local_fp",
    "standard_gaussian",
]

_GL_NODES, _GL_WEIGHTS = special.roots_legendre(16)
_Y_FLOOR = 1e-8
_MAX_BLOCK = 2_000_000  # evaluations per vectorized block


@dataclass(frozen=True)
class PhaseIntegrand:
    """``zeta_eps(xi) = J^(eps xi) - 1`` for a kernel and scale."""

    kernel: KernelSpec
    epsilon: float

    def __call__(self, xi):
        return self.kernel.fourier(self.epsilon * np.asarray(xi, dtype=float)) - 1.0


def _panel_edges(lower: float) -> list:
    floor = max(lower, _Y_FLOOR)
    edges = [1.0]
    while edges[-1] / 2 > floor:
        edges.append(edges[-1] / 2)
    if edges[-1] > floor:
        edges.append(floor)
    if lower < floor:
        edges.append(lower) if lower > 0 else None
    return edges


def _nodes(edges: list, omega: float):
    """Composite Gauss-Legendre nodes with sub-panels of phase width <= pi."""
    ys, ws = [], []
    for b, a in zip(edges[:-1], edges[1:]):
        m = max(1, math.ceil(omega * (b - a) / math.pi))
        sub = np.linspace(a, b, m + 1)
        half = 0.5 * np.diff(sub)
        mid = 0.5 * (sub[1:] + sub[:-1])
        ys.append((mid[:, None] + half[:, None] * _GL_NODES).ravel())
        ws.append((half[:, None] * _GL_WEIGHTS).ravel())
    return np.concatenate(ys), np.concatenate(ws)


def phase_integral(pi, xi, t=np.inf, epsilon: float | None = None):
    """``P(xi, t) = eps^-2 int_0^t zeta_eps(e^{-s} xi) ds``.

    Parameters
    ----------
    pi : PhaseIntegrand or KernelSpec
        When a kernel is passed, ``epsilon`` is required.
    xi : array_like
        Frequencies, shape ``(...)`` in 1-D or ``(..., dim)``.
    t : float or ``np.inf``
        ``np.inf`` selects the equilibrium exponent.

    Notes
    -----
    After ``y = e^{-s}`` the integrand is ``zeta(y xi) / y`` on ``[e^{-t}, 1]``.
    Panels halve geometrically down to ``y = 1e-8``; each is split so that
    ``J^`` oscillates at most half a period per 16-node Gauss-Legendre panel.
    Below ``1e-8`` the integrand is replaced by its Taylor term
    ``-eps^2 y |xi|^2``.
    """
    if not isinstance(pi, PhaseIntegrand):
        if epsilon is None:
            raise TypeError("epsilon is required when passing a kernel")
        pi = PhaseIntegrand(pi, float(epsilon))
    kernel, eps = pi.kernel, pi.epsilon
    if t < 0:
        raise ValueError("t must be nonnegative")
    xi = np.asarray(xi, dtype=float)
    dim = kernel.dim
    pts = xi.reshape(-1, dim) if dim > 1 else xi.reshape(-1, 1)
    out = np.zeros(pts.shape[0], dtype=complex)
    if t == 0 or pts.shape[0] == 0:
        return out.reshape(xi.shape[:-1] if dim > 1 else xi.shape)

    lower = 0.0 if math.isinf(t) else math.exp(-t)
    edges = _panel_edges(lower)
    omega = eps * kernel.scale * np.sum(np.abs(pts), axis=1)
    order = np.argsort(omega, kind="stable")
    start = 0
    while start < order.size:
        om = omega[order[min(order.size - 1, start + 255)]]
        y, w = _nodes(edges, om)
        block = max(1, min(order.size - start, _MAX_BLOCK // y.size))
        idx = order[start : start + block]
        om = omega[idx[-1]]
        y, w = _nodes(edges, om)
        arg = eps * y[None, :, None] * pts[idx][:, None, :]
        z = kernel.fourier(arg if dim > 1 else arg[..., 0]) - 1.0
        out[idx] = (z / y) @ w
        start += block
    out /= eps * eps
    if math.isinf(t):
        out -= 0.5 * np.sum(pts * pts, axis=1) * _Y_FLOOR**2
    if kernel.symmetric:
        out = out.real.astype(complex)
    return out.reshape(xi.shape[:-1] if dim > 1 else xi.shape)


@lru_cache(maxsize=32)
def _phase_on_grid(kernel: KernelSpec, epsilon: float, t: float, grid: Grid) -> np.ndarray:
    vals = phase_integral(kernel, grid.frequencies, t, epsilon=epsilon)
    vals.flags.writeable = False
    return vals


def _initial_hat(u0, grid: Grid | None, scale: float):
    """Values of ``u0^(scale * xi)`` on the grid frequencies."""
    if isinstance(u0, SpectralField):
        if scale == 1.0:
            return u0.grid, u0.values
        return u0.grid, hat_scaled(from_spectral(u0), scale)
    if isinstance(u0, GridDensity):
        if scale == 1.0:
            return u0.grid, to_spectral(u0).values
        return u0.grid, hat_scaled(u0, scale)
    if grid is None:
        raise ValueError("a grid is required for analytic initial data")
    fn = u0.fourier if isinstance(u0, InitialData) else u0
    return grid, np.asarray(fn(scale * grid.frequencies), dtype=complex)


def evolve_hat(u0_hat, kernel: KernelSpec, epsilon: float, t: float, grid: Grid | None = None) -> SpectralField:
    """Transform of the nonlocal solution at time ``t``.

    ``u0_hat`` may be a :class:`SpectralField`, a :class:`GridDensity`, an
    :class:`InitialData` or any callable ``xi -> u0^(xi)``.  Grid data are
    evaluated at ``e^{-t} xi`` by direct summation of the midpoint transform.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    g, base = _initial_hat(u0_hat, grid, math.exp(-t))
    if t == 0:
        return SpectralField(g, base)
    return SpectralField(g, base * np.exp(_phase_on_grid(kernel, float(epsilon), float(t), g)))


def equilibrium_transform(kernel: KernelSpec, epsilon: float):
    """Callable ``xi -> F_eps^(xi)`` (closed form with ``t = inf``)."""

    def fhat(xi):
        return np.exp(phase_integral(kernel, xi, np.inf, epsilon=epsilon))

    return fhat


def equilibrium_hat(kernel: KernelSpec, epsilon: float, grid: Grid | None = None) -> SpectralField:
    grid = grid or Grid.default(kernel.dim)
    return SpectralField(grid, np.exp(_phase_on_grid(kernel, float(epsilon), math.inf, grid)))


def local_fp_hat(u0_hat, t: float, grid: Grid | None = None) -> SpectralField:
    """``u0^(e^{-t} xi) exp(-(1 - e^{-2t}) |xi|^2 / 2)``: solution of the local equation."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    g, base = _initial_hat(u0_hat, grid, math.exp(-t))
    xi = g.frequencies
    r2 = xi * xi if g.dim == 1 else np.sum(xi * xi, axis=-1)
    return SpectralField(g, base * np.exp(-0.5 * (1.0 - math.exp(-2.0 * t)) * r2))


def solve(u0, kernel: KernelSpec, epsilon: float, t: float, grid: Grid | None = None, *, split_atom: bool = False) -> GridDensity:
    """Nonlocal solution on the grid.

    With ``split_atom`` the jump-free part ``e^{-t/eps^2} T_t u0`` is evaluated
    in physical space and only the remainder goes through the inverse
    transform; this avoids Gibbs ripples from discontinuous initial data and
    aliasing of the contracted profile once ``e^t`` outruns the grid.  For
    analytic data that part is stored as exact cell averages, so its mass is
    kept at any contraction.
    """
    grid = grid or (u0.grid if isinstance(u0, (GridDensity, SpectralField)) else Grid.default(kernel.dim))
    uh = evolve_hat(u0, kernel, epsilon, t, grid)
    if not split_atom or t == 0:
        return from_spectral(uh)
    g, base = _initial_hat(u0, grid, math.exp(-t))
    decay = math.exp(-t / epsilon**2)
    rest = from_spectral(SpectralField(g, uh.values - decay * base))
    if isinstance(u0, InitialData):
        edges = math.exp(t) * (-g.half_width + g.h * np.arange(g.points_per_axis + 1))
        return rest + decay * u0.cell_mass(edges) / g.cell_volume
    from .fields import dilate_semigroup

    src = u0 if isinstance(u0, GridDensity) else from_spectral(u0)
    return rest + dilate_semigroup(src, t, epsilon)


def equilibrium(kernel: KernelSpec, epsilon: float, grid: Grid | None = None) -> GridDensity:
    return from_spectral(equilibrium_hat(kernel, epsilon, grid))


def local_fp(u0, t: float, grid: Grid | None = None) -> GridDensity:
    return from_spectral(local_fp_hat(u0, t, grid))


def standard_gaussian(grid: Grid) -> GridDensity:
    r = grid.radius
    return GridDensity(grid, np.exp(-0.5 * r * r) / (2 * np.pi) ** (grid.dim / 2))
