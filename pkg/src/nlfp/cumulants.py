"""Cumulant and moment dynamics.

The log moment generating function ``C(t, xi) = log int exp(x.xi) u(t, x) dx``
evolves in closed form,

    C(t, xi) = C0(e^{-t} xi) + eps^-2 int_0^t (M_J(eps e^{-s} xi) - 1) ds,

so each cumulant relaxes exponentially with rate ``|alpha|`` towards
``m_alpha(J_eps) / (|alpha| eps^2)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .fields import DomainError, GridDensity
from .kernels import KernelSpec

__all__ = [
    "CumulantTable",
    "multi_indices",
    "cgf_eval",
    "evolve_cumulant",
    "equilibrium_cumulants",
    "bell_moments",
    "partial_bell",
    "moment_recursion",
    "empirical_cumulants",
    "MAX_BELL_ORDER",
]

MAX_BELL_ORDER = 20
_GL_NODES, _GL_WEIGHTS = special.roots_legendre(16)
_Y_FLOOR = 1e-8


def multi_indices(dim: int, max_order: int):
    """All ``alpha`` with ``|alpha| <= max_order``, graded then lexicographic."""
    out = []
    for n in range(max_order + 1):
        out += sorted((a for a in itertools.product(range(n + 1), repeat=dim) if sum(a) == n), reverse=True)
    return out


def _alpha(alpha, dim=None):
    a = (int(alpha),) if np.isscalar(alpha) else tuple(int(v) for v in alpha)
    if any(v < 0 for v in a):
        raise ValueError("multi-index entries must be nonnegative")
    if dim is not None and len(a) != dim:
        raise ValueError(f"multi-index {a} does not match dim={dim}")
    return a


@dataclass
class CumulantTable:
    """Map from multi-index to value.

    ``kind`` is ``'cumulant'`` (the default) or ``'moment'``; the same container
    carries raw moment tables for :func:`moment_recursion`.
    """

    dim: int
    max_order: int
    entries: dict = field(default_factory=dict)
    kind: str = "cumulant"

    def __post_init__(self):
        clean = {}
        for a, v in self.entries.items():
            a = _alpha(a, self.dim)
            if sum(a) > self.max_order:
                raise ValueError(f"entry {a} exceeds max_order={self.max_order}")
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"entry {a} is not finite")
            clean[a] = v
        zero = (0,) * self.dim
        clean.setdefault(zero, 0.0 if self.kind == "cumulant" else 1.0)
        self.entries = clean

    def __getitem__(self, alpha) -> float:
        a = _alpha(alpha, self.dim)
        if sum(a) > self.max_order:
            raise KeyError(f"|alpha|={sum(a)} exceeds max_order={self.max_order}")
        return self.entries.get(a, 0.0)

    def __contains__(self, alpha) -> bool:
        return _alpha(alpha, self.dim) in self.entries

    @classmethod
    def from_sequence(cls, values, kind: str = "cumulant") -> "CumulantTable":
        """1-D table from ``(v_1, ..., v_n)``."""
        vals = list(values)
        return cls(1, len(vals), {(i + 1,): v for i, v in enumerate(vals)}, kind)

    def as_sequence(self, n: int | None = None) -> list:
        if self.dim != 1:
            raise ValueError("as_sequence is one-dimensional")
        n = self.max_order if n is None else n
        return [self[(i,)] for i in range(1, n + 1)]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# kind={self.kind} dim={self.dim} max_order={self.max_order}\n")
            fh.write("alpha,value\n")
            for a in multi_indices(self.dim, self.max_order):
                if a in self.entries:
                    fh.write(f"{';'.join(map(str, a))},{self.entries[a]:.16e}\n")

    @classmethod
    def from_csv(cls, path) -> "CumulantTable":
        with open(path) as fh:
            meta = dict(kv.split("=") for kv in fh.readline()[1:].split())
            fh.readline()
            entries = {}
            for line in fh:
                a, v = line.strip().split(",")
                entries[tuple(int(s) for s in a.split(";"))] = float(v)
        return cls(int(meta["dim"]), int(meta["max_order"]), entries, meta["kind"])


def cgf_eval(kernel: KernelSpec, epsilon: float, u0_cgf, t: float, xi) -> float:
    """Closed-form ``C(t, xi)``.

    ``u0_cgf`` is a callable ``xi -> log int exp(x.xi) u0`` (an
    :class:`~nlfp.initial.InitialData` works through its ``cgf`` method); it
    is not called when ``t = inf``.  The ``s``-integral uses ``y = e^{-s}``
    and geometric Gauss-Legendre panels down to ``y = 1e-8`` followed by the
    quadratic Taylor term.

    Raises
    ------
    DomainError
        When the kernel MGF is infinite at ``eps * xi``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = np.asarray(xi, dtype=float).reshape(kernel.dim)
    if not np.all(epsilon * np.abs(x) < kernel.exp_rate):
        raise DomainError(f"|xi| must stay below exp_rate/eps = {kernel.exp_rate / epsilon}")
    arg = x[0] if kernel.dim == 1 else x
    fn = getattr(u0_cgf, "cgf", u0_cgf)
    base = 0.0 if math.isinf(t) else float(fn(math.exp(-t) * arg))
    if t == 0:
        return base
    lower = 0.0 if math.isinf(t) else math.exp(-t)
    edges = [1.0]
    while edges[-1] / 2 > max(lower, _Y_FLOOR):
        edges.append(edges[-1] / 2)
    edges.append(max(lower, _Y_FLOOR))
    total = 0.0
    for b, a in zip(edges[:-1], edges[1:]):
        y = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
        pts = epsilon * y[:, None] * x[None, :]
        m = kernel.mgf(pts[:, 0] if kernel.dim == 1 else pts)
        if not np.all(np.isfinite(m)):
            raise DomainError(f"kernel MGF diverges at eps*xi = {epsilon * x}")
        total += 0.5 * (b - a) * float(np.sum(_GL_WEIGHTS * (m - 1.0) / y))
    if lower < _Y_FLOOR:
        # (M(eps y xi) - 1)/y ~ eps m_1.xi + eps^2 y xi.Sigma xi / 2, Sigma = 2 I
        m1 = np.array([kernel.moment(tuple(int(i == j) for i in range(kernel.dim))) for j in range(kernel.dim)])
        lo = lower
        total += epsilon * float(m1 @ x) * (_Y_FLOOR - lo) + epsilon**2 * float(x @ x) * (_Y_FLOOR**2 - lo**2) / 2
    return base + total / epsilon**2


def _source(kernel: KernelSpec, epsilon: float, a: tuple) -> float:
    n = sum(a)
    return kernel.moment(a, epsilon) / (n * epsilon**2)


def evolve_cumulant(kernel: KernelSpec, epsilon: float, kappa0: CumulantTable, t: float, alpha) -> float:
    """``kappa_alpha(u(t)) = e^{-nt} kappa_alpha(u0) + (1 - e^{-nt}) m_alpha(J_eps) / (n eps^2)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    a = _alpha(alpha, kernel.dim)
    n = sum(a)
    if n == 0:
        return 0.0
    if math.isinf(t):
        return _source(kernel, epsilon, a)
    decay = math.exp(-n * t)
    return decay * kappa0[a] + (-math.expm1(-n * t)) * _source(kernel, epsilon, a)


def equilibrium_cumulants(kernel: KernelSpec, epsilon: float, max_order: int) -> CumulantTable:
    entries = {a: _source(kernel, epsilon, a) for a in multi_indices(kernel.dim, max_order) if sum(a)}
    return CumulantTable(kernel.dim, max_order, entries)


def bell_moments(kappas) -> list:
    """Raw moments ``m_1..m_n`` from cumulants ``kappa_1..kappa_n`` (one dimension).

    Complete Bell polynomials through
    ``B_{n+1} = sum_k C(n, k) kappa_{k+1} B_{n-k}``, ``B_0 = 1``.
    """
    k = [float(v) for v in kappas]
    if len(k) > MAX_BELL_ORDER:
        raise ValueError(f"order {len(k)} > {MAX_BELL_ORDER} refused (binomial growth overflows)")
    b = [1.0]
    for n in range(len(k)):
        b.append(sum(math.comb(n, j) * k[j] * b[n - j] for j in range(n + 1)))
    return b[1:]


def partial_bell(n: int, k: int, x) -> float:
    """Partial Bell polynomial ``B_{n,k}(x_1, ..., x_{n-k+1})``."""
    x = [float(v) for v in x]
    if n < 0 or k < 0:
        raise ValueError("n and k must be nonnegative")
    table = {(0, 0): 1.0}

    def b(m, j):
        if (m, j) in table:
            return table[(m, j)]
        if m == 0 or j == 0 or j > m:
            return 0.0
        val = sum(math.comb(m - 1, i - 1) * x[i - 1] * b(m - i, j - 1) for i in range(1, m - j + 2))
        table[(m, j)] = val
        return val

    if k <= n and n - k + 1 > len(x) and n > 0 and k > 0:
        raise ValueError(f"B_{{{n},{k}}} needs {n - k + 1} arguments")
    return b(n, k)


def _binom_multi(a: tuple, b: tuple) -> int:
    return math.prod(math.comb(ai, bi) for ai, bi in zip(a, b))


def _below(a: tuple):
    return itertools.product(*(range(v + 1) for v in a))


def moment_recursion(kernel: KernelSpec, epsilon: float, m0: CumulantTable, t: float, alpha) -> float:
    """Raw moment ``m_alpha(u(t)) = gamma_alpha (1 - e^{-nt}) + e^{-nt} m_alpha(u0)``.

    ``gamma_alpha = (n eps^2)^-1 sum_{0 < beta <= alpha} C(alpha, beta)
    m_beta(J_eps) m_{alpha - beta}`` where the lower-order moments are the
    steady-state ones, built recursively from order 0.  At ``t = inf`` this is
    the exact equilibrium moment.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    a = _alpha(alpha, kernel.dim)
    n = sum(a)
    if n == 0:
        return 1.0
    gamma = _steady_moments(kernel, epsilon, a)
    if math.isinf(t):
        return gamma[a]
    return gamma[a] * (-math.expm1(-n * t)) + math.exp(-n * t) * m0[a]


def _steady_moments(kernel, epsilon, alpha) -> dict:
    out = {}
    for a in sorted(_below(alpha), key=sum):
        n = sum(a)
        if n == 0:
            out[a] = 1.0
            continue
        acc = 0.0
        for b in _below(a):
            if sum(b):
                rest = tuple(x - y for x, y in zip(a, b))
                acc += _binom_multi(a, b) * kernel.moment(b, epsilon) * out[rest]
        out[a] = acc / (n * epsilon**2)
    return out


def _central_to_cumulants(m1, mu2, mu3, mu4, max_order):
    vals = [m1, mu2, mu3, mu4 - 3.0 * mu2 * mu2]
    return vals[:max_order]


def empirical_cumulants(data, max_order: int = 4) -> CumulantTable:
    """Cumulants up to order 4 from central moments, one coordinate at a time.

    ``data`` is a :class:`~nlfp.jump.ParticleEnsemble` (sample moments) or a
    :class:`GridDensity` (grid quadrature, normalized by its mass; the order
    0 entry is then ``log(mass)``).  In ``dim > 1`` only the pure entries
    ``k e_i`` are filled.
    """
    if max_order > 4:
        raise ValueError("empirical cumulants are limited to order 4")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    entries = {}
    if isinstance(data, GridDensity):
        g = data.grid
        dim = g.dim
        mass = data.mass()
        if mass <= 0:
            raise ValueError("density has nonpositive mass")
        pts = g.points.reshape(-1, dim) if dim > 1 else g.points.reshape(-1, 1)
        wts = data.values.reshape(-1) * g.cell_volume / mass
        entries[(0,) * dim] = math.log(mass)
    else:
        dim = data.dim
        pts = np.asarray(data.positions, dtype=float).reshape(len(data), -1)
        wts = np.full(pts.shape[0], 1.0 / pts.shape[0])
    for i in range(dim):
        x = pts[:, i]
        m1 = float(wts @ x)
        c = x - m1
        mu = [float(wts @ c**p) for p in (2, 3, 4)]
        for k, v in enumerate(_central_to_cumulants(m1, *mu, max_order), start=1):
            entries[tuple(k if j == i else 0 for j in range(dim))] = v
    return CumulantTable(dim, max_order, entries)
