"""Catalog of jump kernels.

Every kernel is normalized to unit mass, zero mean and second moments
``2 * delta_ij``.  Multi-dimensional kernels are tensor products of the 1-D
family, so moments, transforms and samplers factorize per coordinate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Mapping

import numpy as np
from scipy import special

__all__ = [
    "KernelError",
    "KernelSpec",
    "make_kernel",
    "moment",
    "fourier_transform",
    "sample",
    "KERNEL_NAMES",
]

KERNEL_NAMES = ("uniform", "triangular", "gaussian", "skew_step")


class KernelError(ValueError):
    """Invalid kernel name or parameters."""


def _sinc(x):
    # sin(x)/x with the removable singularity filled in
    return np.sinc(np.asarray(x) / np.pi)


def _shc(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(np.abs(x) < 1e-8, 1.0 + x * x / 6.0, np.sinh(x) / np.where(x == 0, 1.0, x))
    return out


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


class _Family:
    """One-dimensional building block of a catalog kernel."""

    name: str
    symmetric: bool
    radius: float  # np.inf when unbounded
    breakpoints: tuple  # interior points where the density is not smooth

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, q):
        raise NotImplementedError

    def fourier(self, xi):
        raise NotImplementedError

    def mgf(self, xi):
        raise NotImplementedError

    def moment(self, n: int) -> float:
        raise NotImplementedError

    def charfn_tail(self, r: float) -> float:
        """Upper bound of ``|fourier(xi)|`` valid for all ``|xi| >= r``."""
        raise NotImplementedError


class _Uniform(_Family):
    name = "uniform"
    symmetric = True
    breakpoints = ()

    def __init__(self, a: float):
        self.a = a
        self.radius = a

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.a, 0.5 / self.a, 0.0)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) + self.a) / (2 * self.a), 0.0, 1.0)

    def ppf(self, q):
        return self.a * (2.0 * np.asarray(q) - 1.0)

    def fourier(self, xi):
        return _sinc(self.a * np.asarray(xi, dtype=float))

    def mgf(self, xi):
        return _shc(self.a * np.asarray(xi, dtype=float))

    def moment(self, n):
        return 0.0 if n % 2 else self.a**n / (n + 1)

    def charfn_tail(self, r):
        return min(1.0, 1.0 / (self.a * r))


class _Triangular(_Family):
    name = "triangular"
    symmetric = True
    breakpoints = (0.0,)

    def __init__(self, b: float):
        self.b = b
        self.radius = b

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(self.b - np.abs(x), 0.0, None) / self.b**2

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), -self.b, self.b)
        left = 0.5 * ((x + self.b) / self.b) ** 2
        right = 1.0 - 0.5 * ((self.b - x) / self.b) ** 2
        return np.where(x < 0, left, right)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        left = self.b * (np.sqrt(2.0 * q) - 1.0)
        right = self.b * (1.0 - np.sqrt(2.0 * (1.0 - q)))
        return np.where(q < 0.5, left, right)

    def fourier(self, xi):
        return _sinc(0.5 * self.b * np.asarray(xi, dtype=float)) ** 2

    def mgf(self, xi):
        return _shc(0.5 * self.b * np.asarray(xi, dtype=float)) ** 2

    def moment(self, n):
        return 0.0 if n % 2 else 2.0 * self.b**n / ((n + 1) * (n + 2))

    def charfn_tail(self, r):
        return min(1.0, (2.0 / (self.b * r)) ** 2)


class _Gaussian(_Family):
    name = "gaussian"
    symmetric = True
    radius = np.inf
    breakpoints = ()

    def __init__(self, variance: float = 2.0):
        self.var = variance
        self.sd = sqrt(variance)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x / self.var) / sqrt(2 * np.pi * self.var)

    def cdf(self, x):
        return special.ndtr(np.asarray(x, dtype=float) / self.sd)

    def ppf(self, q):
        return self.sd * special.ndtri(np.asarray(q, dtype=float))

    def fourier(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.exp(-0.5 * self.var * xi * xi)

    def mgf(self, xi):
        xi = np.asarray(xi, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(0.5 * self.var * xi * xi)

    def moment(self, n):
        return 0.0 if n % 2 else self.var ** (n // 2) * _double_factorial(n - 1)

    def charfn_tail(self, r):
        return float(np.exp(-0.5 * self.var * r * r))


class _SkewStep(_Family):
    """Two rectangles ``[-A, 0)`` and ``[0, B]`` with ``B = ratio * A``.

    Mass ``p`` sits on the left piece and ``1 - p`` on the right one; zero mean
    and second moment 2 fix ``p = r / (1 + r)`` and ``A = sqrt(6 / r)``.
    """

    name = "skew_step"
    symmetric = False
    breakpoints = (0.0,)

    def __init__(self, left: float, right: float, p_left: float):
        self.A = left
        self.B = right
        self.p = p_left
        self.radius = max(left, right)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= -self.A) & (x < 0), self.p / self.A, 0.0)
        return np.where((x >= 0) & (x <= self.B), (1 - self.p) / self.B, out)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), -self.A, self.B)
        left = self.p * (x + self.A) / self.A
        right = self.p + (1 - self.p) * x / self.B
        return np.where(x < 0, left, right)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        left = -self.A + self.A * q / self.p
        right = self.B * (q - self.p) / (1 - self.p)
        return np.where(q < self.p, left, right)

    def fourier(self, xi):
        xi = np.asarray(xi, dtype=float)
        hl = 0.5 * self.A * xi
        hr = 0.5 * self.B * xi
        return self.p * np.exp(1j * hl) * _sinc(hl) + (1 - self.p) * np.exp(-1j * hr) * _sinc(hr)

    def mgf(self, xi):
        xi = np.asarray(xi, dtype=float)
        hl = 0.5 * self.A * xi
        hr = 0.5 * self.B * xi
        with np.errstate(over="ignore"):
            return self.p * np.exp(-hl) * _shc(hl) + (1 - self.p) * np.exp(hr) * _shc(hr)

    def moment(self, n):
        return (self.p * (-self.A) ** n + (1 - self.p) * self.B**n) / (n + 1)

    def charfn_tail(self, r):
        return min(1.0, 2.0 * self.p / (self.A * r) + 2.0 * (1 - self.p) / (self.B * r))


@dataclass(frozen=True)
class KernelSpec:
    """A normalized jump kernel ``J`` on ``R^dim``.

    ``J_eps(x) = eps**-dim * J(x / eps)`` is never materialized; every method
    that needs it takes ``epsilon`` or rescales its argument.
    """

    name: str
    dim: int
    params: tuple = ()
    _family: _Family = field(default=None, repr=False, compare=False)

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    @property
    def symmetric(self) -> bool:
        return self._family.symmetric

    @property
    def support_radius(self) -> float:
        """Radius of a ball containing the support (``inf`` if unbounded)."""
        return self._family.radius * sqrt(self.dim)

    @property
    def axis_radius(self) -> float:
        return self._family.radius

    @property
    def exp_rate(self) -> float:
        # every catalog family has finite exponential moments of all orders
        return np.inf

    @property
    def s(self) -> float:
        return 1.0

    @property
    def rho_2s(self) -> float:
        """``int J |x|^(2+s)`` for the declared ``s`` (= 1)."""
        return _rho3(self)

    @property
    def scale(self) -> float:
        """Length scale used to size quadrature panels for ``fourier``."""
        return self._family.radius if np.isfinite(self._family.radius) else 3.0

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return [x]
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected trailing axis of length {self.dim}, got shape {x.shape}")
        return [x[..., i] for i in range(self.dim)]

    def density(self, x):
        """Evaluate ``J(x)``; ``x`` has shape ``(..., dim)`` (or ``(...)`` when dim=1)."""
        out = 1.0
        for xi in self._split(x):
            out = out * self._family.pdf(xi)
        return out

    def fourier(self, xi):
        """``J^(xi) = int exp(-i x.xi) J(x) dx``."""
        out = 1.0
        for c in self._split(xi):
            out = out * self._family.fourier(c)
        return out

    def mgf(self, xi):
        """``int exp(x.xi) J(x) dx`` (may be ``inf``)."""
        out = 1.0
        for c in self._split(xi):
            out = out * self._family.mgf(c)
        return out

    def moment(self, alpha, epsilon: float = 1.0) -> float:
        return moment(self, alpha, epsilon)

    def sample(self, rng: np.random.Generator, size=None):
        return sample(self, rng, size)

    def charfn_tail(self, r: float) -> float:
        """Bound on ``|J^(xi)|`` for ``|xi|_inf >= r``."""
        return self._family.charfn_tail(r)

    def quadrature(self, n_nodes: int = 64):
        """Nodes and weights with ``sum w g(z) ~= int J(z) g(z) dz`` in 1-D.

        Exact for polynomials of degree ``< 2 * n_nodes`` on compactly
        supported families (Gauss-Legendre on each smooth piece) and on the
        Gaussian family (Gauss-Hermite).
        """
        fam = self._family
        if not np.isfinite(fam.radius):
            t, w = special.roots_hermite(n_nodes)
            return np.sqrt(2.0 * fam.var) * t, w / np.sqrt(np.pi)
        lo, hi = (-fam.A, fam.B) if isinstance(fam, _SkewStep) else (-fam.radius, fam.radius)
        # splitting at 0 keeps |z|^p integrands piecewise smooth
        edges = sorted({lo, 0.0, *fam.breakpoints, hi})
        t, w = special.roots_legendre(n_nodes)
        zs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            z = 0.5 * (b - a) * t + 0.5 * (a + b)
            zs.append(z)
            ws.append(0.5 * (b - a) * w * fam.pdf(z))
        return np.concatenate(zs), np.concatenate(ws)


def _rho3(kernel: KernelSpec) -> float:
    z, w = kernel.quadrature(64)
    if kernel.dim == 1:
        return float(np.sum(w * np.abs(z) ** 3))
    grids = np.meshgrid(*([z] * kernel.dim), indexing="ij")
    wts = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * kernel.dim), indexing="ij"):
        wts = wts * g
    r = np.sqrt(sum(g * g for g in grids))
    return float(np.sum(wts * r**3))


def _check_width(given, expected: float, what: str) -> None:
    if given is None:
        return
    given = float(given)
    if not np.isfinite(given) or given <= 0:
        raise KernelError(f"{what} must be positive and finite, got {given}")
    if abs(given - expected) > 1e-12 * expected:
        raise KernelError(
            f"{what}={given} violates the normalization int J x_i x_j = 2 delta_ij "
            f"(required {what}={expected!r})"
        )


def make_kernel(name: str, dim: int = 1, params: Mapping | None = None) -> KernelSpec:
    """Build a catalog kernel normalized to mass 1, mean 0, covariance ``2 I``.

    Parameters
    ----------
    name : {'uniform', 'triangular', 'gaussian', 'skew_step'}
    dim : {1, 2, 3}
    params : mapping, optional
        ``uniform``/``triangular`` accept ``half_width``, ``gaussian`` accepts
        ``variance``; these are only checked against the normalization.
        ``skew_step`` takes ``ratio`` (right/left width, positive and != 1).

    Raises
    ------
    KernelError
        Unknown family, bad dimension or parameters incompatible with the
        moment normalization.
    """
    params = dict(params or {})
    if name not in KERNEL_NAMES:
        raise KernelError(f"unknown kernel {name!r}; choose one of {KERNEL_NAMES}")
    if dim not in (1, 2, 3):
        raise KernelError(f"dim must be 1, 2 or 3, got {dim}")

    if name == "uniform":
        a = sqrt(6.0)
        _check_width(params.pop("half_width", None), a, "half_width")
        fam: _Family = _Uniform(a)
    elif name == "triangular":
        b = sqrt(12.0)
        _check_width(params.pop("half_width", None), b, "half_width")
        fam = _Triangular(b)
    elif name == "gaussian":
        _check_width(params.pop("variance", None), 2.0, "variance")
        fam = _Gaussian(2.0)
    else:
        r = float(params.pop("ratio", 3.0))
        if not np.isfinite(r) or r <= 0:
            raise KernelError(f"skew_step ratio must be positive, got {r}")
        if abs(r - 1.0) < 1e-9:
            raise KernelError("skew_step ratio = 1 gives a symmetric kernel (vanishing third moment)")
        # mean: -p A / 2 + (1 - p) B / 2 = 0 ; second moment: (p A^2 + (1 - p) B^2) / 3 = 2
        p = r / (1.0 + r)
        A = sqrt(6.0 / r)
        fam = _SkewStep(A, r * A, p)
        params = {"ratio": r, **params}
    if name != "skew_step" and params:
        raise KernelError(f"unexpected parameters for {name}: {sorted(params)}")
    return KernelSpec(name=name, dim=dim, params=tuple(sorted(params.items())), _family=fam)


def moment(kernel: KernelSpec, alpha, epsilon: float = 1.0) -> float:
    """Mixed moment ``m_alpha(J_eps) = eps**|alpha| * prod_i m_{alpha_i}(J_1d)``."""
    alpha = (int(alpha),) if np.isscalar(alpha) else tuple(int(a) for a in alpha)
    if len(alpha) != kernel.dim:
        raise ValueError(f"multi-index {alpha} does not match dim={kernel.dim}")
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index entries must be nonnegative")
    out = 1.0
    for a in alpha:
        out *= kernel._family.moment(a)
    return float(epsilon ** sum(alpha) * out)


def fourier_transform(kernel: KernelSpec, xi):
    """Fourier transform ``J^(xi)``; real-valued for symmetric kernels."""
    return kernel.fourier(xi)


def sample(kernel: KernelSpec, rng: np.random.Generator, size=None):
    """Exact draws from ``J`` by per-coordinate inverse-CDF sampling.

    Returns shape ``size`` (dim 1) or ``size + (dim,)``.
    """
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    u = rng.random(shape + (kernel.dim,))
    # keep the Gaussian ppf finite
    u = np.clip(u, np.finfo(float).tiny, None)
    x = kernel._family.ppf(u)
    if kernel.dim == 1:
        x = x[..., 0]
    return x
