"""Config-driven experiment runner: ``nlfp <experiment> --config FILE``.

Config files hold ``section.key = value`` lines; ``#`` starts a comment and
lists are comma separated::

    experiment.epsilons = 0.4, 0.2, 0.1, 0.05
    experiment.times = 1, 5
    kernel.name = uniform
    grid.half_width = 12
    grid.points = 4096
    weight.kind = polynomial
    weight.parameter = 2
    initial.name = gaussian
    initial.mean = 2
    initial.variance = 0.25
    mc.particles = 0
    mc.seed = 12345

Every run writes ``manifest.json`` and one CSV per table (plus an SVG per
fitted series unless ``--no-svg``) into the output directory.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    decay_rate_fit,
    equilibria_gap,
    fourier_decay_exponent,
    local_limit_rate,
    lyapunov_fit,
    lyapunov_operator,
    positivity_probe,
    tail_probe,
)
from .clt import (
    CLTDensity,
    be_rate_experiment,
    charfn_bounds,
    default_sigma_rule,
    equal_sigma_rule,
    poisson_lower_bound,
    poisson_partial_sum,
)
from .cumulants import CumulantTable, empirical_cumulants, evolve_cumulant
from .fields import Grid, WeightSpec, coarsen, l1_distance, weighted_norm
from .initial import make_initial
from .jump import empirical_density, simulate
from .kernels import KERNEL_NAMES, make_kernel
from .spectral import equilibrium, solve, standard_gaussian

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "run_experiment", "main", "EXPERIMENTS"]

EXPERIMENTS = ("solve", "equilibrium", "rates", "clt", "cumulants", "lyapunov", "positivity", "tails", "all")
ENV_OUT = "NLFP_OUT"


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


# ----------------------------------------------------------------------------
# configuration

_SCHEMA = {
    "experiment": {"name", "epsilons", "times", "decay_times", "n_list", "r1", "r2", "tail_x", "m_list"},
    "kernel": None,  # name, dim and family parameters
    "grid": {"half_width", "points"},
    "weight": {"kind", "parameter"},
    "initial": None,  # name and initial-data parameters
    "mc": {"particles", "seed"},
    "outputs": {"dir", "formats"},
}


def _scalar(text: str):
    t = text.strip()
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    return t


def _value(text: str):
    parts = [p for p in text.split(",")]
    if len(parts) == 1:
        return _scalar(parts[0])
    return [_scalar(p) for p in parts if p.strip()]


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse ``section.key = value`` lines into ``{section: {key: value}}``."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key.count(".") != 1:
            raise ConfigError(f"{source}:{lineno}: key {key!r} must look like section.key")
        sec, name = key.split(".")
        if sec not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown section {sec!r} in key {key!r}")
        allowed = _SCHEMA[sec]
        if allowed is not None and name not in allowed:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}; expected one of {sorted(allowed)}")
        if val == "":
            out.setdefault(sec, {})[name] = []
            continue
        if name in out.get(sec, {}):
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out.setdefault(sec, {})[name] = _value(val)
    return out


def _as_list(v):
    return list(v) if isinstance(v, list) else [v]


@dataclass
class ExperimentConfig:
    experiment: str = "solve"
    kernel: str = "uniform"
    kernel_params: dict = field(default_factory=dict)
    dim: int = 1
    epsilons: list = field(default_factory=lambda: [1.0, 0.5])
    times: list = field(default_factory=lambda: [1.0])
    decay_times: list = field(default_factory=lambda: [0.5 * i for i in range(13)])
    n_list: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    m_list: list = field(default_factory=lambda: [1, 2, 5, 10, 100, 1000, 10000])
    r1: float = 1.0
    r2: float = 1.0
    tail_x: float = 10.0
    grid_half_width: float = 12.0
    grid_points: int | None = None
    weight_kind: str = "polynomial"
    weight_parameter: float = 2.0
    initial: str = "gaussian"
    initial_params: dict = field(default_factory=lambda: {"mean": 2.0, "variance": 0.25})
    mc_particles: int = 0
    mc_seed: int = 12345
    out_dir: str | None = None
    formats: list = field(default_factory=lambda: ["csv", "svg"])

    @classmethod
    def from_sections(cls, sec: dict, experiment: str | None = None) -> "ExperimentConfig":
        c = cls()
        ex = sec.get("experiment", {})
        c.experiment = experiment or ex.get("name", c.experiment)
        for key in ("epsilons", "times", "decay_times", "n_list", "m_list"):
            if key in ex:
                setattr(c, key, [float(v) if key not in ("n_list", "m_list") else int(v) for v in _as_list(ex[key])])
        for key in ("r1", "r2", "tail_x"):
            if key in ex:
                setattr(c, key, float(ex[key]))
        k = dict(sec.get("kernel", {}))
        c.kernel = str(k.pop("name", c.kernel))
        c.dim = int(k.pop("dim", c.dim))
        c.kernel_params = k
        g = sec.get("grid", {})
        c.grid_half_width = float(g.get("half_width", c.grid_half_width))
        c.grid_points = int(g["points"]) if "points" in g else None
        w = sec.get("weight", {})
        c.weight_kind = str(w.get("kind", c.weight_kind))
        c.weight_parameter = float(w.get("parameter", c.weight_parameter))
        ini = dict(sec.get("initial", {}))
        if ini:
            c.initial = str(ini.pop("name", c.initial))
            c.initial_params = ini
        mc = sec.get("mc", {})
        c.mc_particles = int(mc.get("particles", c.mc_particles))
        c.mc_seed = int(mc.get("seed", c.mc_seed))
        o = sec.get("outputs", {})
        c.out_dir = o.get("dir", c.out_dir)
        if "formats" in o:
            c.formats = [str(v) for v in _as_list(o["formats"])]
        c.validate()
        return c

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment.name: unknown experiment {self.experiment!r}; choose one of {EXPERIMENTS}")
        if not self.epsilons:
            raise ConfigError("experiment.epsilons: the list of epsilons is empty")
        if any(not (0 < e <= 1) for e in self.epsilons):
            raise ConfigError(f"experiment.epsilons: values must lie in (0, 1], got {self.epsilons}")
        if not self.times:
            raise ConfigError("experiment.times: the list of times is empty")
        if any(t < 0 for t in self.times + self.decay_times):
            raise ConfigError("experiment.times: times must be nonnegative")
        if self.kernel not in KERNEL_NAMES:
            raise ConfigError(f"kernel.name: unknown kernel {self.kernel!r}; choose one of {KERNEL_NAMES}")
        if self.dim not in (1, 2):
            raise ConfigError(f"kernel.dim: experiments run in dimension 1 or 2, got {self.dim}")
        n = self.grid_points
        if n is not None and (n < 2 or n & (n - 1)):
            raise ConfigError(f"grid.points: must be a power of two, got {n}")
        if not self.grid_half_width > 0:
            raise ConfigError("grid.half_width: must be positive")
        if self.weight_kind not in ("polynomial", "exponential", "poisson"):
            raise ConfigError(f"weight.kind: unknown weight {self.weight_kind!r}")
        if self.weight_parameter < 0:
            raise ConfigError("weight.parameter: must be nonnegative")
        if self.initial not in ("gaussian", "box", "skewed"):
            raise ConfigError(f"initial.name: unknown initial data {self.initial!r}; choose gaussian, box or skewed")
        if self.mc_particles < 0:
            raise ConfigError("mc.particles: must be nonnegative")
        if any(f not in ("csv", "svg") for f in self.formats):
            raise ConfigError(f"outputs.formats: expected csv and/or svg, got {self.formats}")
        try:
            self.make_kernel()
        except ValueError as exc:
            raise ConfigError(f"kernel: {exc}") from exc
        try:
            self.make_initial()
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"initial: {exc}") from exc

    # builders
    def make_kernel(self):
        return make_kernel(self.kernel, self.dim, self.kernel_params)

    def make_initial(self):
        return make_initial(self.initial, self.dim, self.initial_params)

    def make_grid(self) -> Grid:
        n = self.grid_points
        if n is None:
            # keep the default spacing when the box is widened
            n = Grid.default(self.dim).points_per_axis
            while 2 * self.grid_half_width / n > 24.0 / Grid.default(self.dim).points_per_axis:
                n *= 2
        return Grid(self.dim, self.grid_half_width, n)

    def weight(self) -> WeightSpec:
        return WeightSpec(self.weight_kind, self.weight_parameter)


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return ExperimentConfig.from_sections(parse_config(text, str(p)), experiment)


# ----------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return f"{float(v):.16e}"


@dataclass
class Table:
    name: str
    columns: list
    rows: list
    plot: dict | None = None

    def write_csv(self, path: Path) -> None:
        lines = [",".join(self.columns)]
        lines += [",".join(_fmt(v) for v in row) for row in self.rows]
        path.write_text("\n".join(lines) + "\n")


def write_svg(path: Path, series, *, logx=False, logy=False, title="", xlabel="", ylabel="") -> None:
    """Minimal line plot: a frame, decade or linear ticks and one polyline per series."""
    W, H, L, R, T, B = 480, 360, 70, 20, 30, 50
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

    def tr(v, log):
        v = np.asarray(v, dtype=float)
        return np.log10(v) if log else v

    pts = []
    for _, xs, ys in series:
        x, y = tr(xs, logx), tr(ys, logy)
        ok = np.isfinite(x) & np.isfinite(y)
        pts.append((x[ok], y[ok]))
    allx = np.concatenate([p[0] for p in pts]) if pts else np.array([0.0, 1.0])
    ally = np.concatenate([p[1] for p in pts]) if pts else np.array([0.0, 1.0])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def sx(v):
        return L + (v - x0) / (x1 - x0) * (W - L - R)

    def sy(v):
        return H - B - (v - y0) / (y1 - y0) * (H - T - B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
        f'<rect x="{L}" y="{T}" width="{W - L - R}" height="{H - T - B}" fill="none" stroke="black"/>',
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle">{title}</text>',
        f'<text x="{W / 2:.1f}" y="{H - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="14" y="{H / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {H / 2:.1f})">{ylabel}</text>',
    ]
    for ticks, log, axis in ((np.linspace(x0, x1, 5), logx, "x"), (np.linspace(y0, y1, 5), logy, "y")):
        for v in ticks:
            lab = f"1e{v:.1f}" if log else f"{v:.3g}"
            if axis == "x":
                out.append(f'<text x="{sx(v):.1f}" y="{H - B + 15}" text-anchor="middle">{lab}</text>')
            else:
                out.append(f'<text x="{L - 5}" y="{sy(v) + 4:.1f}" text-anchor="end">{lab}</text>')
    for i, ((label, _, _), (x, y)) in enumerate(zip(series, pts)):
        c = colors[i % len(colors)]
        poly = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{poly}"/>')
        out.append(f'<text x="{L + 8}" y="{T + 14 + 13 * i}" fill="{c}">{label}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")


# ----------------------------------------------------------------------------
# experiments


def _map(fn, items, threads):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _fit_rows(label, fit):
    return [label, fit.slope, fit.intercept, fit.max_residual, fit.degenerate]


_FIT_COLS = ["series", "slope (-)", "intercept (-)", "max_residual (-)", "degenerate (bool)"]


def _exp_solve(c: ExperimentConfig, threads: int):
    k, u0, g = c.make_kernel(), c.make_initial(), c.make_grid()
    cells = [(e, t) for e in c.epsilons for t in c.times]
    sols = _map(lambda et: solve(u0, k, et[0], et[1], g, split_atom=True), cells, threads)
    tables = []
    summary = []
    for (e, t), u in zip(cells, sols):
        k2 = evolve_cumulant(k, e, _initial_cumulants(u0, g, k.dim), t, (2,) + (0,) * (k.dim - 1))
        m1 = u.moment((1,) + (0,) * (k.dim - 1))
        row = [e, t, u.mass(), m1, u.moment((2,) + (0,) * (k.dim - 1)) - m1 * m1, k2]
        if c.mc_particles:
            ens = simulate(k, e, u0, t, c.mc_particles, c.mc_seed, workers=threads)
            coarse = Grid(g.dim, g.half_width, 256 if g.dim == 1 else 64)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                hist = empirical_density(ens, coarse)
            row.append(l1_distance(coarsen(u, g.points_per_axis // coarse.points_per_axis), hist))
        summary.append(row)
    cols = ["epsilon (-)", "time (-)", "mass (-)", "mean_x1 (length)", "variance_x1 (length^2)", "variance_closed_form (length^2)"]
    if c.mc_particles:
        cols.append("l1_to_monte_carlo (-)")
    tables.append(Table("solve_summary", cols, summary))
    if g.dim == 1:
        step = max(1, g.points_per_axis // 1024)
        x = g.axis[::step]
        rows = [[xi] + [u.values[::step][j] for u in sols] for j, xi in enumerate(x)]
        cols = ["x (length)"] + [f"u_eps{e:g}_t{t:g} (1/length)" for e, t in cells]
        series = [(f"eps={e:g} t={t:g}", x, u.values[::step]) for (e, t), u in zip(cells, sols)]
        tables.append(Table("solve_density", cols, rows, {"series": series, "xlabel": "x", "ylabel": "u"}))
    return tables


def _initial_cumulants(u0, g, dim):
    return empirical_cumulants(u0.on_grid(g), 4) if dim == 1 else CumulantTable(dim, 2, {})


def _exp_equilibrium(c: ExperimentConfig, threads: int):
    k, g, w = c.make_kernel(), c.make_grid(), c.weight()
    Fs = _map(lambda e: equilibrium(k, e, g), c.epsilons, threads)
    G = standard_gaussian(g)
    rows = []
    for e, F in zip(c.epsilons, Fs):
        a2 = (2,) + (0,) * (k.dim - 1)
        a4 = (4,) + (0,) * (k.dim - 1)
        m2, m4 = F.moment(a2), F.moment(a4)
        closed = evolve_cumulant(k, e, CumulantTable(k.dim, 4, {}), math.inf, a4)
        rows.append([e, F.mass(), m2, m4 / (m2 * m2) - 3.0, closed, weighted_norm(F - G, w, warn=False)])
    cols = ["epsilon (-)", "mass (-)", "m2_x1 (length^2)", "excess_kurtosis_x1 (-)", "kappa4_closed_form (length^4)", "weighted_l1_to_gaussian (-)"]
    series = [("||F_eps - G||", [r[0] for r in rows], [r[-1] for r in rows])]
    return [Table("equilibrium_summary", cols, rows, {"series": series, "logx": True, "logy": True, "xlabel": "eps", "ylabel": "distance"})]


def _exp_rates(c: ExperimentConfig, threads: int):
    k, u0, g, w = c.make_kernel(), c.make_initial(), c.make_grid(), c.weight()
    eps = sorted(c.epsilons, reverse=True)
    dist_rows, fit_rows, series = [], [], []
    if len(eps) >= 3:
        fits = _map(lambda t: local_limit_rate(k, u0, eps, t, w, g), c.times, threads)
        for t, f in zip(c.times, fits):
            dist_rows += [["local_limit", t, e, d] for e, d in zip(eps, f.ordinates)]
            fit_rows.append(_fit_rows(f"local_limit_t{t:g}", f))
            series.append((f"local t={t:g}", eps, f.ordinates))
        gap = equilibria_gap(k, eps, w, g)
        dist_rows += [["equilibria_gap", math.inf, e, d] for e, d in zip(eps, gap.ordinates)]
        fit_rows.append(_fit_rows("equilibria_gap", gap))
        series.append(("F_eps vs G", eps, gap.ordinates))
    decay = _map(lambda e: decay_rate_fit(k, e, u0, w, c.decay_times, g), eps, threads)
    gap_rows = []
    for e, f in zip(eps, decay):
        gap_rows += [[e, t, d] for t, d in zip(f.abscissae, f.ordinates)]
        fit_rows.append(_fit_rows(f"decay_eps{e:g}", f))
    tables = [
        Table("rates_distances", ["series", "time (-)", "epsilon (-)", "weighted_l1 (-)"], dist_rows,
              {"series": series, "logx": True, "logy": True, "xlabel": "eps", "ylabel": "distance"} if series else None),
        Table("rates_decay", ["epsilon (-)", "time (-)", "weighted_l1_to_equilibrium (-)"], gap_rows,
              {"series": [(f"eps={e:g}", f.abscissae, f.ordinates) for e, f in zip(eps, decay)], "logy": True, "xlabel": "t", "ylabel": "distance"}),
        Table("rates_fits", _FIT_COLS, fit_rows),
    ]
    return tables


def _exp_clt(c: ExperimentConfig, threads: int):
    k = c.make_kernel()
    f = CLTDensity.from_kernel(k)
    rules = (("spread", default_sigma_rule), ("equal", equal_sigma_rule))
    fits = _map(lambda r: be_rate_experiment(f, r[1], c.n_list), rules, threads)
    rows, fit_rows, series = [], [], []
    for (name, _), fit in zip(rules, fits):
        rows += [[name, n, d] for n, d in zip(fit.abscissae, fit.ordinates)]
        fit_rows.append(_fit_rows(f"berry_esseen_{name}", fit))
        series.append((name, fit.abscissae, fit.ordinates))
    prow = [[m, poisson_partial_sum(m), poisson_lower_bound(m)] for m in c.m_list]
    crow = []
    for d in (0.5, 1.0, 2.0):
        ds, kap = charfn_bounds(f, d)
        crow.append([d, ds, kap])
    return [
        Table("clt_sup_distance", ["sigma_rule", "n (-)", "sup_distance (1/length)"], rows,
              {"series": series, "logx": True, "logy": True, "xlabel": "n", "ylabel": "sup |f_n - G|"}),
        Table("clt_fits", _FIT_COLS, fit_rows),
        Table("clt_poisson_partial_sums", ["m (-)", "s_m (-)", "b_m (-)"], prow),
        Table("clt_charfn_bounds", ["delta (1/length)", "delta_star (1/length)", "kappa (-)"], crow),
    ]


def _exp_cumulants(c: ExperimentConfig, threads: int):
    k, u0, g = c.make_kernel(), c.make_initial(), c.make_grid()
    if k.dim != 1:
        raise ConfigError("kernel.dim: the cumulants experiment is one-dimensional")
    kap0 = empirical_cumulants(u0.on_grid(g), 4)
    rows = []
    for e in c.epsilons:
        for t in list(c.times) + [math.inf]:
            u = equilibrium(k, e, g) if math.isinf(t) else solve(u0, k, e, t, g, split_atom=True)
            emp = empirical_cumulants(u, 4)
            for n in (2, 4):
                rows.append([e, t, n, evolve_cumulant(k, e, kap0, t, (n,)), emp[(n,)], math.nan, math.nan])
        if c.mc_particles:
            ens = simulate(k, e, 0.0, max(8.0, 16 * e * e), c.mc_particles, c.mc_seed, workers=threads)
            k4, sd = _kappa4_with_error(ens.positions)
            rows.append([e, math.inf, 4, evolve_cumulant(k, e, kap0, math.inf, (4,)), math.nan, k4, sd])
    cols = ["epsilon (-)", "time (-)", "order (-)", "closed_form (length^n)", "spectral (length^n)", "monte_carlo (length^n)", "monte_carlo_sd (length^n)"]
    return [Table("cumulants", cols, rows)]


def _kappa4_with_error(x, batches: int = 100):
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    mu2, mu4 = np.mean(c**2), np.mean(c**4)
    parts = np.array_split(c, batches)
    vals = [np.mean(p**4) - 3 * np.mean(p**2) ** 2 for p in parts]
    return float(mu4 - 3 * mu2 * mu2), float(np.std(vals, ddof=1) / math.sqrt(batches))


def _exp_lyapunov(c: ExperimentConfig, threads: int):
    k, w = c.make_kernel(), c.weight()
    g = Grid(k.dim, 10.0, 1024 if k.dim == 1 else 128)
    quad = WeightSpec("polynomial", 2.0)

    def cell(e):
        cert = lyapunov_fit(k, e, w, g)
        r2 = lyapunov_operator(k, e, quad, g)
        exact = (2 * k.dim + 2) - 2 * quad.on_grid(g)
        return [e, w.kind, w.parameter, cert.C, cert.lam, cert.margin, float(np.max(np.abs(r2 - exact)))]

    rows = _map(cell, c.epsilons, threads)
    cols = ["epsilon (-)", "weight", "weight_parameter (-)", "C (-)", "lambda (-)", "margin (-)", "k2_identity_error (-)"]
    return [Table("lyapunov", cols, rows)]


def _exp_positivity(c: ExperimentConfig, threads: int):
    k, u0, g = c.make_kernel(), c.make_initial(), c.make_grid()
    rows = []
    for t in c.times:
        rep = positivity_probe(k, c.epsilons, t, c.r1, c.r2, u0, g)
        rows += [[t, e, a, rep.ratio] for e, a in zip(rep.epsilons, rep.alphas)]
    cols = ["time (-)", "epsilon (-)", "alpha (-)", "min_over_max (-)"]
    return [Table("positivity", cols, rows)]


def _exp_tails(c: ExperimentConfig, threads: int):
    k = c.make_kernel()
    g = Grid(k.dim, max(c.grid_half_width, c.tail_x + 2.0), c.make_grid().points_per_axis)
    rows, frows = [], []
    for e in c.epsilons:
        a = 1.0 / (e * k.support_radius) if np.isfinite(k.support_radius) else 0.0
        rep = tail_probe(k, e, a, c.tail_x, g) if a > 0 else None
        if rep is not None:
            rows.append([e, a, c.tail_x, rep.integral, rep.decay_ratio, rep.finite])
        fd = fourier_decay_exponent(k, e)
        frows.append([e, fd.slope, -1.0 / (e * e), fd.max_residual])
    return [
        Table("tails", ["epsilon (-)", "a (1/length)", "X (length)", "weighted_integral (-)", "shell_decay_per_length (-)", "finite (bool)"], rows),
        Table("fourier_decay", ["epsilon (-)", "fitted_exponent (-)", "minus_inverse_eps_squared (-)", "max_residual (-)"], frows),
    ]


_RUNNERS = {
    "solve": _exp_solve,
    "equilibrium": _exp_equilibrium,
    "rates": _exp_rates,
    "clt": _exp_clt,
    "cumulants": _exp_cumulants,
    "lyapunov": _exp_lyapunov,
    "positivity": _exp_positivity,
    "tails": _exp_tails,
}


def _prepare_out(path: Path, overwrite: bool) -> None:
    if path.exists():
        if not path.is_dir():
            raise ConfigError(f"output path {path} exists and is not a directory")
        if any(path.iterdir()) and not overwrite:
            raise ConfigError(f"output directory {path} is not empty; pass --overwrite to replace its contents")
    path.mkdir(parents=True, exist_ok=True)


def run_experiment(
    config: ExperimentConfig,
    out_dir=None,
    *,
    overwrite: bool = False,
    threads: int = 1,
    svg: bool = True,
) -> dict:
    """Run ``config.experiment`` and write its artifacts; returns the manifest."""
    config.validate()
    out = Path(out_dir or config.out_dir or os.environ.get(ENV_OUT) or "nlfp_out")
    _prepare_out(out, overwrite)
    names = [e for e in EXPERIMENTS if e != "all"] if config.experiment == "all" else [config.experiment]
    files = []
    for name in names:
        for table in _RUNNERS[name](config, max(1, int(threads))):
            if "csv" in config.formats:
                p = out / f"{table.name}.csv"
                table.write_csv(p)
                files.append(p.name)
            if svg and "svg" in config.formats and table.plot:
                plot = dict(table.plot)
                series = plot.pop("series")
                p = out / f"{table.name}.svg"
                write_svg(p, series, title=table.name, **plot)
                files.append(p.name)
    manifest = {
        "experiment": config.experiment,
        "config": asdict(config),
        "seeds": {"mc.seed": config.mc_seed},
        "versions": {
            "nlfp": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "files": {f: hashlib.sha256((out / f).read_bytes()).hexdigest() for f in files},
    }
    manifest["config"]["out_dir"] = str(out)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlfp", description="Nonlocal Fokker-Planck experiment runner.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        s.add_argument("--config", required=True, help="path to a section.key = value config file")
        s.add_argument("--out", help=f"output directory (default: outputs.dir, then ${ENV_OUT}, then ./nlfp_out)")
        s.add_argument("--overwrite", action="store_true", help="allow writing into a non-empty output directory")
        s.add_argument("--threads", type=int, default=1, help="worker threads for independent parameter cells")
        s.add_argument("--no-svg", action="store_true", help="skip SVG plots")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, args.command)
        manifest = run_experiment(cfg, args.out, overwrite=args.overwrite, threads=args.threads, svg=not args.no_svg)
    except ConfigError as exc:
        print(f"nlfp: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"nlfp: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest['files'])} files to {manifest['config']['out_dir']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
