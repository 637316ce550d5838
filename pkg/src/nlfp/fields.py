"""Grid-sampled densities, their discrete Fourier bridge, and weighted norms.

Conventions
-----------
A :class:`Grid` covers ``[-X, X]^dim`` with ``N`` cells per axis; samples sit
at the cell centres ``x_j = -X + (j + 1/2) h`` with ``h = 2X / N``.  The dual
frequencies are ``xi_k = pi k / X`` for ``k = -N/2, ..., N/2 - 1`` stored in
increasing order.  The forward transform is the midpoint-rule approximation
of ``u^(xi) = int exp(-i x.xi) u(x) dx`` and the inverse is its exact inverse.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import KernelSpec

__all__ = [
    "DomainError",
    "BoundaryMassWarning",
    "Grid",
    "GridDensity",
    "SpectralField",
    "WeightSpec",
    "weighted_norm",
    "convolve",
    "dilate_semigroup",
    "to_spectral",
    "from_spectral",
    "hat_scaled",
    "hat_at",
    "coarsen",
    "l1_distance",
]


class DomainError(ValueError):
    """A numerical precondition (domain size, parameter range) is violated."""


class BoundaryMassWarning(UserWarning):
    """Non-negligible weighted mass near the edge of the computational box."""


@dataclass(frozen=True)
class Grid:
    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        n = self.points_per_axis
        if self.dim not in (1, 2):
            raise ValueError(f"grid machinery supports dim 1 or 2, got {self.dim}")
        if n < 2 or n & (n - 1):
            raise ValueError(f"points_per_axis must be a power of two, got {n}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @classmethod
    def default(cls, dim: int = 1, half_width: float = 12.0) -> "Grid":
        return cls(dim, half_width, 4096 if dim == 1 else 512)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def axis(self) -> np.ndarray:
        n, X = self.points_per_axis, self.half_width
        return -X + (np.arange(n) + 0.5) * self.h

    @property
    def xi_axis(self) -> np.ndarray:
        n = self.points_per_axis
        return np.pi * np.arange(-n // 2, n // 2) / self.half_width

    def _mesh(self, ax):
        if self.dim == 1:
            return ax
        return np.stack(np.meshgrid(*([ax] * self.dim), indexing="ij"), axis=-1)

    @property
    def points(self) -> np.ndarray:
        """Coordinates, shape ``(N,)`` for dim 1 else ``(N, ..., N, dim)``."""
        return self._mesh(self.axis)

    @property
    def frequencies(self) -> np.ndarray:
        return self._mesh(self.xi_axis)

    @property
    def radius(self) -> np.ndarray:
        p = self.points
        return np.abs(p) if self.dim == 1 else np.sqrt(np.sum(p * p, axis=-1))

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def key(self) -> str:
        return f"d{self.dim}_X{self.half_width!r}_N{self.points_per_axis}"


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Real samples of a function on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "GridDensity":
        return cls(grid, fn(grid.points))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridDensity":
        return cls(grid, np.zeros(grid.shape))

    def mass(self) -> float:
        return float(self.grid.cell_volume * np.sum(self.values))

    def with_values(self, values) -> "GridDensity":
        return GridDensity(self.grid, values)

    def _other(self, other):
        if isinstance(other, GridDensity):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def moment(self, alpha) -> float:
        """Grid quadrature of ``int x^alpha u``."""
        alpha = (int(alpha),) if np.isscalar(alpha) else tuple(alpha)
        p = self.grid.points
        if self.grid.dim == 1:
            mono = p ** alpha[0]
        else:
            mono = np.prod([p[..., i] ** a for i, a in enumerate(alpha)], axis=0)
        return float(self.grid.cell_volume * np.sum(mono * self.values))

    # -- serialization -------------------------------------------------
    def to_csv(self, path) -> None:
        cols = [f"x{i + 1}" for i in range(self.grid.dim)] + ["value"]
        pts = self.grid.points.reshape(-1, self.grid.dim)
        data = np.column_stack([pts, self.values.reshape(-1)])
        header = f"# grid dim={self.grid.dim} half_width={self.grid.half_width!r} N={self.grid.points_per_axis}\n"
        with open(path, "w") as fh:
            fh.write(header)
            fh.write(",".join(cols) + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.16e")

    @classmethod
    def from_csv(cls, path) -> "GridDensity":
        with open(path) as fh:
            meta = fh.readline()
        fields = dict(kv.split("=") for kv in meta[len("# grid"):].split())
        grid = Grid(int(fields["dim"]), float(fields["half_width"]), int(fields["N"]))
        data = np.loadtxt(path, delimiter=",", skiprows=2)
        return cls(grid, data[:, -1].reshape(grid.shape))

    def save_cache(self, directory, tag: str) -> Path:
        """Store values in ``directory`` under a name keyed by grid metadata."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha1(f"{self.grid.key()}|{tag}".encode()).hexdigest()[:16]
        path = directory / f"{digest}.npz"
        np.savez(path, values=self.values, meta=json.dumps({"grid": self.grid.key(), "tag": tag}))
        return path

    @classmethod
    def load_cache(cls, directory, grid: Grid, tag: str) -> "GridDensity | None":
        digest = hashlib.sha1(f"{grid.key()}|{tag}".encode()).hexdigest()[:16]
        path = Path(directory) / f"{digest}.npz"
        if not path.exists():
            return None
        with np.load(path) as z:
            return cls(grid, z["values"])


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex samples of a transform on ``grid.frequencies``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    @property
    def zero_value(self) -> complex:
        return complex(self.values[(self.grid.points_per_axis // 2,) * self.grid.dim])


@dataclass(frozen=True)
class WeightSpec:
    """Weight function ``phi(x) >= 1`` depending only on ``r = |x|``.

    kind : 'polynomial' -> <x>^k, 'exponential' -> exp(a <x>),
           'poisson' -> exp(a |x| log(1 + |x|)).
    """

    kind: str = "polynomial"
    parameter: float = 0.0

    def __post_init__(self):
        if self.kind not in ("polynomial", "exponential", "poisson"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if not self.parameter >= 0:
            raise ValueError("weight parameter must be nonnegative")

    def of_radius(self, r):
        r = np.asarray(r, dtype=float)
        p = self.parameter
        if self.kind == "polynomial":
            return (1.0 + r * r) ** (0.5 * p)
        if self.kind == "exponential":
            return np.exp(p * np.sqrt(1.0 + r * r))
        return np.exp(p * r * np.log1p(r))

    def radial_drift(self, r):
        """``x . grad phi`` as a function of ``r``."""
        r = np.asarray(r, dtype=float)
        p = self.parameter
        if self.kind == "polynomial":
            return p * r * r * (1.0 + r * r) ** (0.5 * p - 1.0)
        if self.kind == "exponential":
            br = np.sqrt(1.0 + r * r)
            return p * r * r / br * np.exp(p * br)
        return p * r * (np.log1p(r) + r / (1.0 + r)) * self.of_radius(r)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.of_radius(np.abs(x) if x.ndim <= 1 else np.sqrt(np.sum(x * x, axis=-1)))

    def on_grid(self, grid: Grid) -> np.ndarray:
        return self.of_radius(grid.radius)


def _edge_mask(grid: Grid) -> np.ndarray:
    n = grid.points_per_axis
    m = max(1, int(np.ceil(0.05 * n)))
    idx = np.arange(n)
    edge1 = (idx < m) | (idx >= n - m)
    if grid.dim == 1:
        return edge1
    return edge1[:, None] | edge1[None, :]


def weighted_norm(u: GridDensity, w: WeightSpec = WeightSpec(), *, warn: bool = True) -> float:
    """``h^d * sum_j w(x_j) |u_j|``.

    Emits :class:`BoundaryMassWarning` when the outer 5% of cells on each axis
    hold more than ``1e-6`` of the weighted sum.
    """
    dens = w.on_grid(u.grid) * np.abs(u.values)
    total = float(u.grid.cell_volume * np.sum(dens))
    if warn and total > 0:
        edge = float(u.grid.cell_volume * np.sum(dens[_edge_mask(u.grid)]))
        if edge > 1e-6 * total:
            warnings.warn(
                f"outer 5% of the box carries {edge / total:.2e} of the weighted norm",
                BoundaryMassWarning,
                stacklevel=2,
            )
    return total


def l1_distance(u: GridDensity, v: GridDensity, w: WeightSpec = WeightSpec()) -> float:
    return weighted_norm(u - v, w, warn=False)


def _fft_frequencies(grid: Grid) -> np.ndarray:
    xi = 2.0 * np.pi * np.fft.fftfreq(grid.points_per_axis, d=grid.h)
    if grid.dim == 1:
        return xi
    return np.stack(np.meshgrid(*([xi] * grid.dim), indexing="ij"), axis=-1)


def convolve(kernel: KernelSpec, epsilon: float, u: GridDensity) -> GridDensity:
    """``J_eps * u`` by multiplication with ``J^(eps xi)`` on the FFT grid."""
    if kernel.dim != u.grid.dim:
        raise ValueError("kernel and grid dimensions differ")
    reach = epsilon * kernel.axis_radius
    if np.isfinite(reach) and reach >= u.grid.half_width:
        raise DomainError(
            f"domain too small: eps * R = {reach:.3g} >= half_width {u.grid.half_width}"
        )
    mult = kernel.fourier(epsilon * _fft_frequencies(u.grid))
    out = np.fft.ifftn(np.fft.fftn(u.values) * mult).real
    return u.with_values(out)


def _shift_phase(grid: Grid, xi_axis: np.ndarray) -> np.ndarray:
    return np.exp(1j * xi_axis * (grid.half_width - 0.5 * grid.h))


def to_spectral(u: GridDensity) -> SpectralField:
    g = u.grid
    vals = np.fft.fftshift(np.fft.fftn(u.values)) * g.cell_volume
    ph = _shift_phase(g, g.xi_axis)
    for ax in range(g.dim):
        shape = [1] * g.dim
        shape[ax] = -1
        vals = vals * ph.reshape(shape)
    return SpectralField(g, vals)


def from_spectral(s: SpectralField) -> GridDensity:
    """Inverse of :func:`to_spectral`; keeps the real part."""
    g = s.grid
    vals = s.values
    ph = np.conj(_shift_phase(g, g.xi_axis))
    for ax in range(g.dim):
        shape = [1] * g.dim
        shape[ax] = -1
        vals = vals * ph.reshape(shape)
    out = np.fft.ifftn(np.fft.ifftshift(vals)).real / g.cell_volume
    return GridDensity(g, out)


def _dft_axis(values: np.ndarray, grid: Grid, scale: float, axis: int, chunk: int = 512) -> np.ndarray:
    # sum_j v_j exp(-i x_j eta_k) h, eta_k = scale * xi_k; chunked dense sums
    x = grid.axis
    eta = scale * grid.xi_axis
    v = np.moveaxis(values, axis, 0)
    flat = v.reshape(v.shape[0], -1)
    out = np.empty((eta.size, flat.shape[1]), dtype=complex)
    for s in range(0, eta.size, chunk):
        out[s : s + chunk] = np.exp(-1j * np.outer(eta[s : s + chunk], x)) @ flat
    out = out.reshape((eta.size,) + v.shape[1:]) * grid.h
    return np.moveaxis(out, 0, axis)


def hat_scaled(u: GridDensity, scale: float) -> np.ndarray:
    """Transform of the grid data evaluated at ``scale * grid.frequencies``.

    The midpoint-rule transform is summed directly at the off-grid
    frequencies, i.e. band-limited (not polynomial) interpolation in
    frequency.
    """
    vals = u.values.astype(complex)
    for ax in range(u.grid.dim):
        vals = _dft_axis(vals, u.grid, scale, ax)
    return vals


def hat_at(u: GridDensity, xi, chunk: int = 512) -> np.ndarray:
    """Direct midpoint-rule transform at arbitrary frequencies (dim 1)."""
    if u.grid.dim != 1:
        raise ValueError("hat_at is implemented for dim 1; use hat_scaled for tensor grids")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    x = u.grid.axis
    out = np.empty(xi.shape, dtype=complex)
    flat = xi.reshape(-1)
    res = out.reshape(-1)
    for s in range(0, flat.size, chunk):
        blk = flat[s : s + chunk]
        res[s : s + chunk] = np.exp(-1j * np.outer(blk, x)) @ u.values * u.grid.h
    return out


def _catmull_rom(values: np.ndarray, pos: np.ndarray, axis: int) -> np.ndarray:
    """Interpolate ``values`` along ``axis`` at fractional indices ``pos``; outside reads 0."""
    n = values.shape[axis]
    i = np.floor(pos).astype(int)
    f = pos - i
    f2, f3 = f * f, f * f * f
    wts = (
        0.5 * (-f3 + 2 * f2 - f),
        0.5 * (3 * f3 - 5 * f2 + 2),
        0.5 * (-3 * f3 + 4 * f2 + f),
        0.5 * (f3 - f2),
    )
    v = np.moveaxis(values, axis, 0)
    padded = np.concatenate([np.zeros((2,) + v.shape[1:]), v, np.zeros((2,) + v.shape[1:])])
    out = np.zeros((pos.size,) + v.shape[1:])
    for off, w in zip(range(-1, 3), wts):
        idx = np.clip(i + off + 2, 0, n + 3)
        w = w.reshape((-1,) + (1,) * (v.ndim - 1))
        out += w * padded[idx]
    return np.moveaxis(out, 0, axis)


def _dilate_array(vals: np.ndarray, grid: Grid, t: float, epsilon: float) -> np.ndarray:
    # leading axes are batch axes; the last grid.dim axes are spatial
    pos = (np.exp(t) * grid.axis + grid.half_width) / grid.h - 0.5
    for ax in range(vals.ndim - grid.dim, vals.ndim):
        vals = _catmull_rom(vals, pos, ax)
    return np.exp((grid.dim - 1.0 / epsilon**2) * t) * vals


def dilate_semigroup(u: GridDensity, t: float, epsilon: float) -> GridDensity:
    """``(T_t u)(x) = exp((d - 1/eps^2) t) u(e^t x)`` by Catmull-Rom interpolation."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return u
    return u.with_values(_dilate_array(u.values, u.grid, t, epsilon))


def coarsen(u: GridDensity, factor: int) -> GridDensity:
    """Average blocks of ``factor`` cells per axis (cell averages on a coarser grid)."""
    g = u.grid
    if g.points_per_axis % factor:
        raise ValueError("factor must divide points_per_axis")
    n = g.points_per_axis // factor
    shape = []
    for _ in range(g.dim):
        shape += [n, factor]
    vals = u.values.reshape(shape).mean(axis=tuple(range(1, 2 * g.dim, 2)))
    return GridDensity(Grid(g.dim, g.half_width, n), vals)
