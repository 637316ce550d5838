"""Rate fits and certificate probes built on the spectral solver.

Every routine returns plain data (:class:`RateFit`, dataclass reports) so the
experiment runner can serialize it without further processing.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fields import DomainError, Grid, GridDensity, SpectralField, WeightSpec, from_spectral, weighted_norm
from .initial import InitialData
from .kernels import KernelSpec
from .spectral import equilibrium, equilibrium_hat, local_fp, phase_integral, solve, standard_gaussian

__all__ = [
    "RateFit",
    "fit_loglog",
    "fit_semilog",
    "LyapunovCertificate",
    "lyapunov_operator",
    "lyapunov_fit",
    "PositivityReport",
    "positivity_probe",
    "decay_rate_fit",
    "local_limit_rate",
    "equilibria_gap",
    "consistency_field",
    "consistency_residual",
    "PolynomialWindow",
    "fourier_decay_exponent",
    "TailReport",
    "tail_probe",
]

NOISE_FLOOR = 1e-12
# weighted distances from the split-atom solver bottom out near 1e-9
EVOLUTION_FLOOR = 1e-8


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through ``(x, log y)`` or ``(log x, log y)``.

    ``used`` marks the points kept after dropping ordinates at or below the
    noise floor.  With fewer than three usable points the fit is
    ``degenerate`` and ``slope``/``intercept`` are NaN.
    """

    abscissae: np.ndarray
    ordinates: np.ndarray
    slope: float
    intercept: float
    max_residual: float
    scale: str = "loglog"
    degenerate: bool = False
    used: np.ndarray = field(default=None, repr=False)

    @property
    def rate(self) -> float:
        """``-slope``: the decay rate of a semilog fit."""
        return -self.slope

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        lx = np.log(x) if self.scale == "loglog" else x
        return np.exp(self.intercept + self.slope * lx)


def _fit(x, y, scale, floor):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("abscissae and ordinates must be 1-D arrays of equal length")
    if x.size < 3:
        raise ValueError(f"a rate fit needs at least 3 points, got {x.size}")
    used = np.isfinite(y) & (y > floor)
    if scale == "loglog":
        if np.any(x <= 0):
            raise ValueError("log-log fit needs positive abscissae")
        lx = np.log(x)
    else:
        lx = x
    if used.sum() < 3:
        return RateFit(x, y, math.nan, math.nan, math.nan, scale, True, used)
    A = np.stack([lx[used], np.ones(used.sum())], axis=1)
    ly = np.log(y[used])
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = float(np.max(np.abs(A @ [slope, icpt] - ly)))
    return RateFit(x, y, float(slope), float(icpt), res, scale, False, used)


def fit_loglog(x, y, floor: float = NOISE_FLOOR) -> RateFit:
    return _fit(x, y, "loglog", floor)


def fit_semilog(x, y, floor: float = NOISE_FLOOR) -> RateFit:
    return _fit(x, y, "semilog", floor)


# ----------------------------------------------------------------------------
# Lyapunov drift


@dataclass(frozen=True)
class LyapunovCertificate:
    weight: WeightSpec
    epsilon: float
    grid: Grid
    r: np.ndarray = field(repr=False)
    C: float
    lam: float
    margin: float

    @property
    def certified(self) -> bool:
        return self.margin >= -1e-6 and self.lam > 0


def _tensor_rule(kernel: KernelSpec, n_nodes: int):
    z, w = kernel.quadrature(n_nodes)
    if kernel.dim == 1:
        return z[:, None], w
    zz = np.stack(np.meshgrid(*([z] * kernel.dim), indexing="ij"), axis=-1).reshape(-1, kernel.dim)
    ww = np.ones(1)
    for _ in range(kernel.dim):
        ww = np.multiply.outer(ww, w).ravel()
    return zz, ww


def _nonlocal_increment(kernel, epsilon, fn, pts, n_nodes, chunk=4096):
    """``int J(z) (fn(x - eps z) - fn(x)) dz`` at each row of ``pts``."""
    z, w = _tensor_rule(kernel, n_nodes)
    out = np.empty(pts.shape[0])
    for i in range(0, pts.shape[0], chunk):
        x = pts[i : i + chunk]
        shifted = x[:, None, :] - epsilon * z[None, :, :]
        out[i : i + chunk] = (fn(shifted) - fn(x)[:, None]) @ w
    return out


def _check_weight(kernel: KernelSpec, epsilon: float, w: WeightSpec):
    if w.kind == "exponential" and not w.parameter < kernel.exp_rate / epsilon:
        raise DomainError(f"exponential weight needs a < exp_rate/eps = {kernel.exp_rate / epsilon}")
    if w.kind == "poisson":
        R = kernel.support_radius
        if not np.isfinite(R):
            raise DomainError("poisson weight needs a compactly supported kernel")
        if w.parameter > 1.0 / (epsilon * R) * (1 + 1e-12):
            raise DomainError(f"poisson weight needs a <= 1/(eps R) = {1.0 / (epsilon * R)}")


def lyapunov_operator(kernel: KernelSpec, epsilon: float, w: WeightSpec, grid: Grid, n_nodes: int | None = None) -> np.ndarray:
    """``L*_eps phi = eps^-2 (J_eps * phi - phi) - x . grad phi`` on the grid points."""
    _check_weight(kernel, epsilon, w)
    n_nodes = n_nodes or (64 if kernel.dim == 1 else 24)
    pts = grid.points.reshape(-1, grid.dim)

    def phi(x):
        return w.of_radius(np.sqrt(np.sum(x * x, axis=-1)))

    jump = _nonlocal_increment(kernel, epsilon, phi, pts, n_nodes) / epsilon**2
    r = jump - w.radial_drift(np.sqrt(np.sum(pts * pts, axis=-1)))
    return r.reshape(grid.shape)


def lyapunov_fit(
    kernel: KernelSpec,
    epsilon: float,
    w: WeightSpec,
    grid: Grid | None = None,
    *,
    lam: float | None = None,
) -> LyapunovCertificate:
    """Fit ``L*_eps phi <= C - lam phi`` on the grid box.

    ``lam`` defaults to half the asymptotic ratio ``-L* phi / phi``: ``k/2``
    for ``<x>^k`` and half its minimum over the outer tenth of the box for the
    exponential and Poisson weights, whose ratio grows without bound.  ``C``
    is the smallest constant that works on ``|x| <= 0.9 X``; the margin
    ``min(C - lam phi - r)`` over the whole box then checks that the drift
    dominates in the outer shell left out of the fit.

    Raises
    ------
    DomainError
        Weight parameter outside the range where ``J_eps * phi`` is finite.
    """
    grid = grid or Grid(kernel.dim, 10.0, 1024 if kernel.dim == 1 else 128)
    r = lyapunov_operator(kernel, epsilon, w, grid)
    phi = w.on_grid(grid)
    rad = grid.radius
    if lam is None:
        if w.kind == "polynomial":
            lam = 0.5 * w.parameter
        else:
            outer = rad >= 0.9 * grid.half_width
            lam = 0.5 * float(np.min(-r[outer] / phi[outer]))
    core = rad <= 0.9 * grid.half_width
    C = float(np.max((r + lam * phi)[core]))
    margin = float(np.min(C - lam * phi - r))
    return LyapunovCertificate(w, float(epsilon), grid, r, C, float(lam), margin)


# ----------------------------------------------------------------------------
# positivity


@dataclass(frozen=True)
class PositivityReport:
    epsilons: tuple
    alphas: tuple

    @property
    def ratio(self) -> float:
        a = np.asarray(self.alphas)
        return float(a.min() / a.max()) if a.max() > 0 else 0.0


def _ball(grid: Grid, R: float) -> np.ndarray:
    return grid.radius <= R


def positivity_probe(
    kernel: KernelSpec,
    epsilons,
    t: float,
    R1: float,
    R2: float,
    u0,
    grid: Grid | None = None,
) -> PositivityReport:
    """``alpha(eps) = min_{B_R1} u(t) / int_{B_R2} u0`` for each ``eps``.

    The jump-free part of the solution is evaluated in physical space so that
    discontinuous initial data do not produce Gibbs ripples.

    Raises
    ------
    DomainError
        Spectral values below ``-1e-6`` inside ``B_R1`` (under-resolved).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    grid = grid or (u0.grid if isinstance(u0, GridDensity) else Grid.default(kernel.dim))
    base = u0.on_grid(grid) if isinstance(u0, InitialData) else u0
    inner = _ball(grid, R1)
    if not inner.any():
        raise DomainError(f"grid does not resolve B_{R1}")
    denom = float(np.sum(base.values[_ball(grid, R2)]) * grid.cell_volume)
    if denom <= 0:
        raise ValueError(f"u0 carries no mass in B_{R2}")
    alphas = []
    for eps in epsilons:
        u = base if t == 0 else solve(u0, kernel, eps, t, grid, split_atom=True)
        low = float(np.min(u.values[inner]))
        if low < -1e-6:
            raise DomainError(f"negative spectral ripple {low:.2e} in B_{R1} at eps={eps}: refine the grid")
        alphas.append(max(low, 0.0) / denom)
    return PositivityReport(tuple(float(e) for e in epsilons), tuple(alphas))


# ----------------------------------------------------------------------------
# convergence rates


def decay_rate_fit(
    kernel: KernelSpec,
    epsilon: float,
    u0,
    w: WeightSpec,
    times,
    grid: Grid | None = None,
) -> RateFit:
    """Semilog fit of ``||u(t) - F_eps||_w`` against ``t``; ``fit.rate`` estimates the gap.

    The jump-free part of ``u(t)`` is kept in physical space (see
    :func:`~nlfp.spectral.solve`): at ``eps ~ 1`` it carries mass ``e^{-t/eps^2}``
    on a profile contracted by ``e^t``, which the grid cannot resolve in
    frequency space for ``t`` of a few units.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be increasing")
    grid = grid or (u0.grid if isinstance(u0, GridDensity) else Grid.default(kernel.dim))
    F = equilibrium(kernel, epsilon, grid)
    errs = [weighted_norm(solve(u0, kernel, epsilon, t, grid, split_atom=True) - F, w, warn=False) for t in times]
    return fit_semilog(times, errs, floor=EVOLUTION_FLOOR)


def local_limit_rate(kernel: KernelSpec, u0, epsilons, t: float, w: WeightSpec, grid: Grid | None = None) -> RateFit:
    """Log-log fit of ``||u_eps(t) - v(t)||_w`` against ``eps`` (``v`` the local solution)."""
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps > 1) or np.any(eps <= 0):
        raise ValueError("epsilons must lie in (0, 1]")
    grid = grid or (u0.grid if isinstance(u0, GridDensity) else Grid.default(kernel.dim))
    v = local_fp(u0, t, grid)
    d = [weighted_norm(solve(u0, kernel, e, t, grid) - v, w, warn=False) if t > 0 else 0.0 for e in eps]
    return fit_loglog(eps, d)


def equilibria_gap(kernel: KernelSpec, epsilons, w: WeightSpec, grid: Grid | None = None) -> RateFit:
    """Log-log fit of ``||F_eps - G||_w`` against ``eps``."""
    eps = np.asarray(epsilons, dtype=float)
    if eps.size < 3:
        raise ValueError(f"a rate fit needs at least 3 epsilons, got {eps.size}")
    grid = grid or Grid.default(kernel.dim)
    G = standard_gaussian(grid)
    d = [weighted_norm(equilibrium(kernel, e, grid) - G, w, warn=False) for e in eps]
    return fit_loglog(eps, d)


@dataclass(frozen=True)
class PolynomialWindow:
    """``p(x) * 1{|x| <= half_width}`` in one dimension, ``p`` given by ascending coefficients."""

    coeffs: tuple
    half_width: float

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.half_width, np.polynomial.polynomial.polyval(x, self.coeffs), 0.0)

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        d2 = np.polynomial.polynomial.polyder(self.coeffs, 2)
        return np.where(np.abs(x) <= self.half_width, np.polynomial.polynomial.polyval(x, d2), 0.0)


def consistency_field(kernel: KernelSpec, epsilon: float, v, grid: Grid, n_nodes: int = 64) -> GridDensity:
    """Pointwise ``eps^-2 (J_eps * v - v) - Laplacian v``.

    ``v`` exposes ``density`` and ``laplacian``; the drift terms of the two
    operators coincide and are left out.
    """
    pts = grid.points.reshape(-1, grid.dim)

    def fn(x):
        return v.density(x[..., 0] if grid.dim == 1 else x)

    jump = _nonlocal_increment(kernel, epsilon, fn, pts, n_nodes) / epsilon**2
    lap = v.laplacian(pts[:, 0] if grid.dim == 1 else pts)
    return GridDensity(grid, (jump - lap).reshape(grid.shape))


def consistency_residual(kernel: KernelSpec, epsilon: float, v, w: WeightSpec, grid: Grid | None = None) -> float:
    grid = grid or Grid(kernel.dim, 12.0, 1024 if kernel.dim == 1 else 128)
    return weighted_norm(consistency_field(kernel, epsilon, v, grid), w, warn=False)


def fourier_decay_exponent(kernel: KernelSpec, epsilon: float, xi_range=None, n_points: int = 64) -> RateFit:
    """Log-log slope of ``|F_eps^(xi)|`` along the first axis.

    ``log |F^|`` is the real part of the phase integral, evaluated directly so
    no underflow occurs.  The default window ``[20/eps, 200/eps]`` starts past
    the Gaussian-like core.
    """
    lo, hi = xi_range if xi_range is not None else (20.0 / epsilon, 200.0 / epsilon)
    if not 0 < lo < hi:
        raise ValueError("xi_range must satisfy 0 < lo < hi")
    xi = np.geomspace(lo, hi, n_points)
    pts = xi if kernel.dim == 1 else np.stack([xi] + [np.zeros_like(xi)] * (kernel.dim - 1), axis=-1)
    logmod = phase_integral(kernel, pts, np.inf, epsilon=epsilon).real
    return _fit_logmod(xi, logmod)


def _fit_logmod(xi, logmod) -> RateFit:
    lx = np.log(xi)
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, logmod, rcond=None)
    res = float(np.max(np.abs(A @ [slope, icpt] - logmod)))
    with np.errstate(under="ignore"):
        y = np.exp(logmod)
    return RateFit(xi, y, float(slope), float(icpt), res, "loglog", False, np.ones(xi.size, bool))


@dataclass(frozen=True)
class TailReport:
    integral: float
    decay_ratio: float
    finite: bool
    shells: np.ndarray = field(repr=False)
    X: float = math.nan

    @property
    def inconclusive(self) -> bool:
        return not self.finite


def tail_probe(
    kernel: KernelSpec,
    epsilon: float,
    a: float,
    X: float,
    grid: Grid | None = None,
    *,
    density: GridDensity | None = None,
    mollifier: float = 0.05,
) -> TailReport:
    """Truncated ``int_{[-X, X]^d} F_eps(x) exp(a |x| log(1 + |x|)) dx``.

    Contributions are binned in 50 equal shells of ``|x| < X``; the integral
    is reported finite when the last ten shell contributions decrease
    strictly.  ``decay_ratio`` is their mean geometric decay factor per unit
    length of ``|x|``.  ``X`` shrinks, with a warning, to the first radius at
    which the density falls below ``1e-13`` of its maximum; the report
    carries the radius actually used.  ``density`` replaces
    ``F_eps`` (for example by the standard Gaussian).

    The computed equilibrium is ``F_eps * N(0, mollifier^2)``: near ``eps = 1``
    the transform of ``F_eps`` decays only like ``1/|xi|`` and aliasing leaves
    ripples of order ``1e-5`` everywhere in the box, far above the true tail.
    The Gaussian factor removes them while keeping the mass and moving the
    tail by a relative amount of order ``mollifier^2``.
    """
    if a < 0:
        raise ValueError("a must be nonnegative")
    if density is None and not np.isfinite(kernel.support_radius):
        raise DomainError("tail_probe needs a compactly supported kernel")
    grid = grid or (density.grid if density is not None else Grid.default(kernel.dim, max(12.0, X + 2.0)))
    if grid.half_width < X:
        raise DomainError(f"grid half-width {grid.half_width} < X = {X}")
    if density is None:
        xi = grid.frequencies
        r2 = xi * xi if grid.dim == 1 else np.sum(xi * xi, axis=-1)
        Fh = equilibrium_hat(kernel, epsilon, grid).values * np.exp(-0.5 * mollifier**2 * r2)
        F = from_spectral(SpectralField(grid, Fh))
    else:
        F = density
    w = WeightSpec("poisson", a)
    rad = grid.radius
    # beyond the first radius where |F| meets the transform's rounding floor
    # the values are noise that the weight would amplify
    floor = 1e-13 * float(np.max(np.abs(F.values)))
    below = rad[np.abs(F.values) < floor]
    if below.size and below.min() < X:
        X_eff = float(below.min())
        warnings.warn(f"density reaches the rounding floor at |x| = {X_eff:.2f}; probing [-{X_eff:.2f}, {X_eff:.2f}]", stacklevel=2)
        X = X_eff
    inside = np.all(np.abs(grid.points.reshape(*grid.shape, grid.dim)) <= X, axis=-1)
    vals = np.where(inside, np.abs(F.values) * w.on_grid(grid), 0.0) * grid.cell_volume
    integral = float(np.sum(np.where(inside, F.values * w.on_grid(grid), 0.0)) * grid.cell_volume)
    width = X / 50
    idx = np.floor(rad / width).astype(int)
    shells = np.bincount(idx[rad < X].ravel(), weights=vals[rad < X].ravel(), minlength=50)[:50]
    tail = shells[-10:]
    if not np.all(tail > 0):
        warnings.warn("shell contributions vanish in the outer decade; tail decay cannot be judged", stacklevel=2)
        ratio, finite = math.nan, False
    else:
        steps = tail[1:] / tail[:-1]
        # geometric decay factor per unit length of |x|
        ratio = float(np.exp(np.mean(np.log(steps)) / width))
        finite = bool(np.all(steps < 1.0))
    return TailReport(integral, ratio, finite, shells, float(X))
