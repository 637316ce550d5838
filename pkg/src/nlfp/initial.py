"""Analytic initial data: density, transform, cumulant generating function, sampler.

Supplying the transform analytically lets the spectral solver evaluate
``u0^(e^{-t} xi)`` without interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .fields import Grid, GridDensity

__all__ = ["InitialData", "GaussianBump", "BoxIndicator", "SkewedMixture", "make_initial"]


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    return x[..., None] if dim == 1 else x


class InitialData:
    dim: int

    def density(self, x):
        raise NotImplementedError

    def fourier(self, xi):
        raise NotImplementedError

    def cgf(self, xi):
        """Log moment generating function ``log int exp(x.xi) u0``."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int):
        raise NotImplementedError

    def axis_mass(self, edges, axis: int):
        """Mass of the slabs between consecutive ``edges`` along ``axis`` (product laws)."""
        raise NotImplementedError

    def cell_mass(self, edges):
        """Mass of each cell of the tensor mesh built from ``edges`` on every axis."""
        out = self.axis_mass(edges, 0)
        for ax in range(1, self.dim):
            out = np.multiply.outer(out, self.axis_mass(edges, ax))
        return out

    def on_grid(self, grid: Grid) -> GridDensity:
        return GridDensity(grid, self.density(grid.points))


@dataclass(frozen=True)
class GaussianBump(InitialData):
    """Isotropic normal law ``N(mean, variance * I)``."""

    mean: float | tuple = 0.0
    variance: float = 1.0
    dim: int = 1

    def _mu(self):
        return np.broadcast_to(np.asarray(self.mean, dtype=float), (self.dim,))

    def density(self, x):
        z = _as_points(x, self.dim) - self._mu()
        r2 = np.sum(z * z, axis=-1)
        return np.exp(-0.5 * r2 / self.variance) / (2 * np.pi * self.variance) ** (self.dim / 2)

    def fourier(self, xi):
        k = _as_points(xi, self.dim)
        return np.exp(-1j * (k @ self._mu()) - 0.5 * self.variance * np.sum(k * k, axis=-1))

    def cgf(self, xi):
        k = _as_points(xi, self.dim)
        return k @ self._mu() + 0.5 * self.variance * np.sum(k * k, axis=-1)

    def axis_mass(self, edges, axis):
        z = (np.asarray(edges, dtype=float) - self._mu()[axis]) / np.sqrt(self.variance)
        return np.diff(special.ndtr(z))

    def laplacian(self, x):
        z = _as_points(x, self.dim) - self._mu()
        v = self.variance
        return self.density(x) * (np.sum(z * z, axis=-1) / v**2 - self.dim / v)

    def sample(self, rng, n):
        z = self._mu() + np.sqrt(self.variance) * rng.standard_normal((n, self.dim))
        return z[:, 0] if self.dim == 1 else z


@dataclass(frozen=True)
class BoxIndicator(InitialData):
    """Normalized indicator of the cube ``center + [-half_width, half_width]^dim``."""

    center: float | tuple = 0.0
    half_width: float = 1.0
    dim: int = 1

    def _c(self):
        return np.broadcast_to(np.asarray(self.center, dtype=float), (self.dim,))

    def density(self, x):
        z = np.abs(_as_points(x, self.dim) - self._c())
        inside = np.all(z <= self.half_width, axis=-1)
        return np.where(inside, (0.5 / self.half_width) ** self.dim, 0.0)

    def fourier(self, xi):
        k = _as_points(xi, self.dim)
        s = np.prod(np.sinc(self.half_width * k / np.pi), axis=-1)
        return np.exp(-1j * (k @ self._c())) * s

    def cgf(self, xi):
        k = _as_points(xi, self.dim)
        a = self.half_width * k
        with np.errstate(invalid="ignore", divide="ignore"):
            # log(sinh(a)/a), stable for large |a|
            ab = np.abs(a)
            val = np.where(
                ab < 1e-6,
                a * a / 6.0,
                ab + np.log1p(-np.exp(-2 * ab)) - np.log(2 * np.where(ab == 0, 1.0, ab)),
            )
        return k @ self._c() + np.sum(val, axis=-1)

    def axis_mass(self, edges, axis):
        e = np.clip(np.asarray(edges, dtype=float) - self._c()[axis], -self.half_width, self.half_width)
        return np.diff(e) / (2 * self.half_width)

    def sample(self, rng, n):
        z = self._c() + self.half_width * (2 * rng.random((n, self.dim)) - 1)
        return z[:, 0] if self.dim == 1 else z


@dataclass(frozen=True)
class SkewedMixture(InitialData):
    """Two-component Gaussian mixture (1-D), asymmetric by default."""

    weights: tuple = (0.7, 0.3)
    means: tuple = (-0.6, 1.4)
    variances: tuple = (0.3, 0.8)
    dim: int = 1

    def __post_init__(self):
        if self.dim != 1:
            raise ValueError("SkewedMixture is one-dimensional")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return sum(
            w * np.exp(-0.5 * (x - m) ** 2 / v) / np.sqrt(2 * np.pi * v)
            for w, m, v in zip(self.weights, self.means, self.variances)
        )

    def axis_mass(self, edges, axis=0):
        e = np.asarray(edges, dtype=float)
        return sum(
            w * np.diff(special.ndtr((e - m) / np.sqrt(v)))
            for w, m, v in zip(self.weights, self.means, self.variances)
        )

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        return sum(
            w * np.exp(-0.5 * (x - m) ** 2 / v) / np.sqrt(2 * np.pi * v) * ((x - m) ** 2 / v**2 - 1 / v)
            for w, m, v in zip(self.weights, self.means, self.variances)
        )

    def fourier(self, xi):
        xi = np.asarray(xi, dtype=float)
        return sum(
            w * np.exp(-1j * m * xi - 0.5 * v * xi * xi)
            for w, m, v in zip(self.weights, self.means, self.variances)
        )

    def cgf(self, xi):
        xi = np.asarray(xi, dtype=float)
        terms = [np.log(w) + m * xi + 0.5 * v * xi * xi for w, m, v in zip(self.weights, self.means, self.variances)]
        return special.logsumexp(np.stack(terms), axis=0)

    def sample(self, rng, n):
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        m = np.asarray(self.means)[comp]
        s = np.sqrt(np.asarray(self.variances))[comp]
        return m + s * rng.standard_normal(n)


def make_initial(name: str, dim: int = 1, params: dict | None = None) -> InitialData:
    """Initial data by catalog name: 'gaussian', 'box' or 'skewed'."""
    params = dict(params or {})
    if name == "gaussian":
        return GaussianBump(mean=params.get("mean", 0.0), variance=float(params.get("variance", 1.0)), dim=dim)
    if name == "box":
        return BoxIndicator(center=params.get("center", 0.0), half_width=float(params.get("half_width", 1.0)), dim=dim)
    if name == "skewed":
        kw = {k: tuple(v) for k, v in params.items() if k in ("weights", "means", "variances")}
        return SkewedMixture(dim=dim, **kw)
    raise ValueError(f"unknown initial data {name!r}; choose gaussian, box or skewed")
