import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlfp.fields import (
    BoundaryMassWarning,
    DomainError,
    Grid,
    GridDensity,
    SpectralField,
    WeightSpec,
    coarsen,
    convolve,
    dilate_semigroup,
    from_spectral,
    hat_at,
    hat_scaled,
    l1_distance,
    to_spectral,
    weighted_norm,
)
from nlfp.kernels import KERNEL_NAMES, make_kernel
from nlfp.spectral import standard_gaussian
from properties import GRID, bumps, mixture


def gaussian(grid, var=1.0, mean=0.0):
    x = grid.points
    if grid.dim == 1:
        return GridDensity(grid, np.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2 * math.pi * var))
    r2 = np.sum((x - mean) ** 2, axis=-1)
    return GridDensity(grid, np.exp(-0.5 * r2 / var) / (2 * math.pi * var))


class TestGrid:
    def test_default(self):
        g = Grid.default()
        assert (g.half_width, g.points_per_axis) == (12.0, 4096)
        assert Grid.default(2).points_per_axis == 512
        assert g.h == pytest.approx(24 / 4096)
        assert g.axis[0] == pytest.approx(-12 + g.h / 2)
        assert g.xi_axis[g.points_per_axis // 2] == 0.0

    @pytest.mark.parametrize("args", [(3, 12.0, 64), (1, 12.0, 100), (1, -1.0, 64), (1, 12.0, 1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            Grid(*args)

    def test_shapes_2d(self):
        g = Grid(2, 5.0, 32)
        assert g.points.shape == (32, 32, 2)
        assert g.frequencies.shape == (32, 32, 2)
        assert g.radius.shape == (32, 32)
        assert g.cell_volume == pytest.approx(g.h**2)


class TestWeight:
    @given(kind=st.sampled_from(["polynomial", "exponential", "poisson"]), p=st.floats(0, 4), r=st.floats(0, 50))
    def test_at_least_one(self, kind, p, r):
        assert WeightSpec(kind, p).of_radius(r) >= 1.0

    @pytest.mark.parametrize("kind, p", [("polynomial", 2), ("polynomial", 1.5), ("exponential", 0.7), ("poisson", 0.4)])
    def test_radial_drift_is_r_dphi_dr(self, kind, p):
        w = WeightSpec(kind, p)
        r = np.linspace(0.1, 8, 50)
        d = 1e-6
        fd = r * (w.of_radius(r + d) - w.of_radius(r - d)) / (2 * d)
        np.testing.assert_allclose(w.radial_drift(r), fd, rtol=1e-6)

    def test_formulas(self):
        assert WeightSpec("polynomial", 2)(3.0) == pytest.approx(10.0)
        assert WeightSpec("exponential", 1)(0.0) == pytest.approx(math.e)
        assert WeightSpec("poisson", 1)(1.0) == pytest.approx(2.0)
        assert WeightSpec("polynomial", 2)(np.array([[3.0, 4.0]]))[0] == pytest.approx(26.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            WeightSpec("gaussian", 1)
        with pytest.raises(ValueError):
            WeightSpec("poisson", -1)


class TestWeightedNorm:
    def test_gaussian_mass(self):
        assert weighted_norm(standard_gaussian(Grid.default())) == pytest.approx(1.0, abs=1e-8)

    def test_gaussian_k2(self):
        G = standard_gaussian(Grid.default())
        assert weighted_norm(G, WeightSpec("polynomial", 2)) == pytest.approx(2.0, abs=1e-6)

    def test_zero(self):
        for kind in ("polynomial", "exponential", "poisson"):
            assert weighted_norm(GridDensity.zeros(GRID), WeightSpec(kind, 1)) == 0.0

    def test_boundary_warning(self):
        g = Grid(1, 4.0, 1024)
        with pytest.warns(BoundaryMassWarning):
            weighted_norm(gaussian(g, var=4.0))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            weighted_norm(gaussian(g, var=0.25))

    def test_absolute_value(self):
        u = gaussian(GRID)
        assert l1_distance(u, 3 * u) == pytest.approx(2 * weighted_norm(u))


class TestConvolve:
    @pytest.mark.parametrize("name", KERNEL_NAMES)
    @pytest.mark.parametrize("eps", [1.0, 0.3])
    def test_mass_preserved(self, name, eps):
        u = mixture(GRID, [(1, 1, 0.3), (2, -1, 0.8)])
        assert convolve(make_kernel(name), eps, u).mass() == pytest.approx(u.mass(), abs=1e-10)

    def test_gaussian_variance_adds(self):
        g = Grid(1, 20.0, 8192)
        out = convolve(make_kernel("gaussian"), 1.0, gaussian(g))
        assert np.max(np.abs(out.values - gaussian(g, var=3.0).values)) < 1e-8

    def test_uniform_against_direct_sum(self):
        g = Grid(1, 12.0, 2048)
        u = gaussian(g, var=0.5, mean=1.0)
        k = make_kernel("uniform")
        out = convolve(k, 0.5, u)
        # (J_eps * u)(x) = mean of u over [x - eps a, x + eps a]: closed form via Phi
        from scipy.special import ndtr

        a = 0.5 * math.sqrt(6)
        x = g.axis
        exact = (ndtr((x + a - 1) / math.sqrt(0.5)) - ndtr((x - a - 1) / math.sqrt(0.5))) / (2 * a)
        assert np.max(np.abs(out.values - exact)) < 1e-12

    def test_domain_too_small(self):
        with pytest.raises(DomainError, match="domain too small"):
            convolve(make_kernel("uniform"), 1.0, GridDensity.zeros(Grid(1, 2.0, 64)))

    def test_2d_matches_tensor(self):
        g2 = Grid(2, 10.0, 128)
        g1 = Grid(1, 10.0, 128)
        k1, k2 = make_kernel("triangular"), make_kernel("triangular", 2)
        u1 = gaussian(g1, 0.7)
        u2 = GridDensity(g2, np.multiply.outer(u1.values, u1.values))
        out = convolve(k2, 0.8, u2)
        v = convolve(k1, 0.8, u1).values
        np.testing.assert_allclose(out.values, np.multiply.outer(v, v), atol=1e-13)


class TestDilate:
    def test_identity(self):
        u = gaussian(GRID)
        assert dilate_semigroup(u, 0.0, 0.5) is u

    @pytest.mark.parametrize("t, eps", [(0.1, 1.0), (1.0, 1.0), (0.5, 0.5), (1.0, 2.0)])
    def test_mass_scaling(self, t, eps):
        u = mixture(GRID, [(1, 1, 0.3), (2, -1, 0.8)])
        assert dilate_semigroup(u, t, eps).mass() == pytest.approx(math.exp(-t / eps**2) * u.mass(), abs=1e-6)

    def test_against_formula(self):
        u = gaussian(GRID, var=2.0)
        t, eps = 0.7, 0.8
        out = dilate_semigroup(u, t, eps)
        x = GRID.axis
        exact = math.exp((1 - 1 / eps**2) * t) * np.exp(-0.25 * (math.exp(t) * x) ** 2) / math.sqrt(4 * math.pi)
        assert np.max(np.abs(out.values - exact)) < 1e-7

    def test_2d_mass(self):
        g = Grid(2, 8.0, 256)
        u = gaussian(g)
        assert dilate_semigroup(u, 0.4, 1.0).mass() == pytest.approx(math.exp(-0.4), abs=1e-6)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            dilate_semigroup(gaussian(GRID), -1.0, 1.0)


class TestTransforms:
    @given(comps=bumps)
    def test_round_trip(self, comps):
        u = mixture(GRID, comps)
        back = from_spectral(to_spectral(u))
        assert np.max(np.abs(back.values - u.values)) < 1e-12

    def test_gaussian_transform(self):
        g = Grid.default()
        s = to_spectral(standard_gaussian(g))
        xi = g.xi_axis
        sel = np.abs(xi) <= 0.5 * math.pi / g.h
        assert np.max(np.abs(s.values[sel] - np.exp(-0.5 * xi[sel] ** 2))) < 1e-8
        assert s.zero_value == pytest.approx(1.0)

    def test_shifted_gaussian_phase(self):
        g = Grid.default()
        s = to_spectral(gaussian(g, var=0.5, mean=2.0))
        xi = g.xi_axis
        sel = np.abs(xi) < 20
        ref = np.exp(-2j * xi[sel] - 0.25 * xi[sel] ** 2)
        assert np.max(np.abs(s.values[sel] - ref)) < 1e-8

    @given(comps=bumps)
    def test_zero_frequency_is_mass(self, comps):
        u = 0.7 * mixture(GRID, comps)
        assert to_spectral(u).zero_value.real == pytest.approx(u.mass(), abs=1e-12)

    def test_direct_sums_agree_with_fft(self):
        g = Grid(1, 12.0, 512)
        u = gaussian(g, 0.4, 0.5)
        np.testing.assert_allclose(hat_scaled(u, 1.0), to_spectral(u).values, atol=1e-12)
        np.testing.assert_allclose(hat_at(u, g.xi_axis), to_spectral(u).values, atol=1e-12)
        xi = 0.37 * g.xi_axis
        np.testing.assert_allclose(hat_scaled(u, 0.37), np.exp(-0.5j * xi - 0.2 * xi * xi), atol=1e-12)

    def test_2d_round_trip(self):
        g = Grid(2, 8.0, 64)
        u = gaussian(g, 0.6, 0.3)
        s = to_spectral(u)
        assert isinstance(s, SpectralField)
        assert np.max(np.abs(from_spectral(s).values - u.values)) < 1e-12


class TestStorage:
    def test_values_read_only(self):
        u = gaussian(GRID)
        with pytest.raises(ValueError):
            u.values[0] = 1.0

    def test_shape_and_finiteness_checked(self):
        with pytest.raises(ValueError):
            GridDensity(GRID, np.zeros(10))
        with pytest.raises(ValueError):
            GridDensity(GRID, np.full(GRID.shape, np.nan))

    def test_grid_mismatch(self):
        with pytest.raises(ValueError, match="grid mismatch"):
            gaussian(GRID) - gaussian(Grid(1, 12.0, 1024))

    def test_csv_round_trip(self, tmp_path):
        g = Grid(2, 3.0, 8)
        u = gaussian(g, 0.5)
        u.to_csv(tmp_path / "u.csv")
        v = GridDensity.from_csv(tmp_path / "u.csv")
        assert v.grid == g
        np.testing.assert_array_equal(v.values, u.values)

    def test_cache_round_trip(self, tmp_path):
        u = gaussian(GRID)
        u.save_cache(tmp_path, "G")
        v = GridDensity.load_cache(tmp_path, GRID, "G")
        np.testing.assert_array_equal(v.values, u.values)
        assert GridDensity.load_cache(tmp_path, GRID, "other") is None

    def test_moment(self):
        G = standard_gaussian(Grid.default())
        assert G.moment(2) == pytest.approx(1.0, abs=1e-10)
        assert G.moment(4) == pytest.approx(3.0, abs=1e-9)
        G2 = standard_gaussian(Grid(2, 10.0, 256))
        assert G2.moment((2, 2)) == pytest.approx(1.0, abs=1e-8)

    def test_coarsen(self):
        u = gaussian(GRID)
        c = coarsen(u, 16)
        assert c.grid.points_per_axis == 256
        assert c.mass() == pytest.approx(u.mass())
        with pytest.raises(ValueError):
            coarsen(u, 3)
