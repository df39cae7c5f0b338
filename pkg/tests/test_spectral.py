import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lametoy.spectral import (
    Grid3,
    curl,
    derivative,
    divergence,
    gradient,
    helmholtz_decompose,
    integrate,
    interpolate,
    laplacian,
    lp_norm,
    spectral_curl,
    spectral_divergence,
    fft,
    transform,
)


def random_field(grid, rng, vector=True):
    shape = (3, *grid.shape) if vector else grid.shape
    return rng.standard_normal(shape)


class TestGrid:
    @pytest.mark.parametrize("n", [6, 7, 9, 0])
    def test_rejects_bad_n(self, n):
        with pytest.raises(ValueError, match="even and >= 8"):
            Grid3(n, 1.0)

    @pytest.mark.parametrize("L", [0.0, -1.0, float("nan")])
    def test_rejects_bad_length(self, L):
        with pytest.raises(ValueError, match="box_length"):
            Grid3(8, L)

    def test_derived_quantities(self):
        g = Grid3(16, 8.0)
        assert g.spacing == 0.5
        assert g.axis[0] == -4.0 and g.axis[-1] == 3.5
        assert g.coords.shape == (3, 16, 16, 16)
        # wavenumbers are integer multiples of 2 pi / L
        m = g.k1d / (2 * math.pi / g.box_length)
        assert np.allclose(m, np.round(m))

    def test_dealias_mask_keeps_low_third(self):
        g = Grid3(12, 1.0)
        keep = np.abs(g.mode_index) < 4
        assert g.dealias_mask[keep][:, keep][:, :, keep].all()
        assert not g.dealias_mask[4].any()


class TestTransform:
    def test_zero(self):
        g = Grid3(8, 1.0)
        z = g.zeros(None)
        assert np.all(transform(g, z) == 0)
        assert np.all(transform(g, z, "inverse") == 0)

    def test_cosine_coefficients(self):
        g = Grid3(8, 3.0)
        f = np.cos(2 * math.pi * g.coords[0] / g.box_length)
        fh = transform(g, f)
        idx = np.argwhere(np.abs(fh) > 1e-12)
        assert sorted(map(tuple, idx)) == [(1, 0, 0), (7, 0, 0)]
        assert np.allclose(fh[1, 0, 0], 0.5, atol=1e-14)
        assert np.allclose(fh[7, 0, 0], 0.5, atol=1e-14)

    def test_matches_direct_summation(self, rng):
        g = Grid3(8, 2.5)
        f = random_field(g, rng, vector=False)
        # 1D DFT matrix on the centered coordinate
        e = np.exp(-1j * np.outer(g.k1d, g.axis)) / g.n
        direct = np.einsum("ai,bj,ck,ijk->abc", e, e, e, f)
        assert np.max(np.abs(transform(g, f) - direct)) < 1e-14

    def test_round_trip(self, rng):
        g = Grid3(16, 7.0)
        f = random_field(g, rng)
        back = transform(g, transform(g, f), "inverse")
        assert np.max(np.abs(back - f)) <= 1e-12 * np.max(np.abs(f))

    def test_rejects_non_finite(self):
        g = Grid3(8, 1.0)
        f = g.zeros(None)
        f[1, 2, 3] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            transform(g, f)

    def test_bad_direction(self):
        g = Grid3(8, 1.0)
        with pytest.raises(ValueError, match="direction"):
            transform(g, g.zeros(None), "sideways")

    def test_parseval(self, rng):
        g = Grid3(16, 1.0)
        f = random_field(g, rng, vector=False)
        lhs = np.sum(f**2) / g.n**3
        rhs = np.sum(np.abs(fft(f)) ** 2)
        assert abs(lhs - rhs) <= 1e-12 * lhs


class TestDerivatives:
    def test_constants(self, grid2pi):
        assert np.max(np.abs(gradient(grid2pi, np.full(grid2pi.shape, 3.0)))) < 1e-14
        assert np.max(np.abs(divergence(grid2pi, np.ones((3, *grid2pi.shape))))) < 1e-14

    def test_divergence_oracle(self, grid2pi):
        x = grid2pi.coords
        u = np.stack([np.sin(x[0]), np.zeros_like(x[0]), np.zeros_like(x[0])])
        assert np.max(np.abs(divergence(grid2pi, u) - np.cos(x[0]))) <= 1e-12

    def test_laplacian_oracle(self, grid2pi):
        x = grid2pi.coords
        f = np.sin(2 * x[0]) * np.cos(x[2])
        assert np.max(np.abs(laplacian(grid2pi, f) + 5 * f)) <= 1e-12

    def test_curl_oracle(self, grid2pi):
        x = grid2pi.coords
        z = np.zeros_like(x[0])
        u = np.stack([z, np.sin(x[0]), z])  # curl = (0, 0, cos x1)
        c = curl(grid2pi, u)
        assert np.max(np.abs(c[2] - np.cos(x[0]))) <= 1e-12
        assert np.max(np.abs(c[:2])) <= 1e-12

    def test_curl_grad_and_div_curl_vanish(self, rng):
        g = Grid3(16, 5.0)
        f = random_field(g, rng, vector=False)
        u = random_field(g, rng)
        # relative to the size of a second derivative of the data
        second = np.max(np.abs(f)) * np.max(g.k2)
        assert np.max(np.abs(curl(g, gradient(g, f)))) <= 1e-12 * second
        assert np.max(np.abs(divergence(g, curl(g, u)))) <= 1e-12 * np.max(np.abs(u)) * np.max(g.k2)

    def test_spectral_versions(self, rng):
        g = Grid3(8, 1.0)
        u = random_field(g, rng)
        uh = fft(u)
        assert np.allclose(np.fft.ifftn(spectral_divergence(g, uh) * g.n**3).real, divergence(g, u))
        assert np.allclose(np.fft.ifftn(spectral_curl(g, uh) * g.n**3, axes=(1, 2, 3)).real, curl(g, u))

    def test_mixed_derivative(self, grid2pi):
        x = grid2pi.coords
        f = np.sin(x[0]) * np.sin(2 * x[1])
        d = derivative(grid2pi, f, (1, 1, 0))
        assert np.max(np.abs(d - 2 * np.cos(x[0]) * np.cos(2 * x[1]))) <= 1e-12

    def test_derivative_rejects_bad_alpha(self, grid2pi):
        with pytest.raises(ValueError):
            derivative(grid2pi, grid2pi.zeros(None), (1, -1, 0))

    @settings(max_examples=20, deadline=None)
    @given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**31))
    def test_linearity(self, a, b, seed):
        g = Grid3(8, 2.0)
        rng = np.random.default_rng(seed)
        f, h = random_field(g, rng), random_field(g, rng)
        for op in (divergence, curl):
            lhs = op(g, a * f + b * h)
            rhs = a * op(g, f) + b * op(g, h)
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(lhs))) * 10


class TestHelmholtz:
    def test_pure_gradient(self, grid2pi):
        x = grid2pi.coords
        z = np.zeros_like(x[0])
        u = np.stack([np.sin(x[0]), z, z])
        parts = helmholtz_decompose(grid2pi, u)
        assert np.max(np.abs(parts.gradient - u)) < 1e-13
        assert np.max(np.abs(parts.solenoidal)) < 1e-13
        # potential is -cos x1
        assert np.max(np.abs(parts.potential + np.cos(x[0]))) < 1e-13

    def test_pure_shear(self, grid2pi):
        x = grid2pi.coords
        z = np.zeros_like(x[0])
        u = np.stack([z, np.sin(x[0]), z])
        parts = helmholtz_decompose(grid2pi, u)
        assert np.max(np.abs(parts.solenoidal - u)) < 1e-13
        assert np.max(np.abs(parts.gradient)) < 1e-13

    def test_mean_mode_is_solenoidal(self):
        g = Grid3(8, 1.0)
        u = np.ones((3, *g.shape)) * np.array([1.0, 2.0, 3.0])[:, None, None, None]
        parts = helmholtz_decompose(g, u)
        assert np.allclose(parts.solenoidal, u)
        assert np.max(np.abs(parts.gradient)) == 0

    def test_random_invariants(self, rng):
        g = Grid3(16, 3.0)
        for _ in range(5):
            u = random_field(g, rng)
            spec_max = np.max(np.abs(fft(u)))
            parts = helmholtz_decompose(g, u)
            assert np.max(np.abs(parts.solenoidal + parts.gradient - u)) <= 1e-12 * np.max(np.abs(u))
            assert np.max(np.abs(spectral_divergence(g, fft(parts.solenoidal)))) <= 1e-12 * spec_max
            assert np.max(np.abs(spectral_curl(g, fft(parts.gradient)))) <= 1e-12 * spec_max
            again = helmholtz_decompose(g, parts.solenoidal)
            assert np.max(np.abs(again.gradient)) <= 1e-12 * np.max(np.abs(u))
            assert np.max(np.abs(gradient(g, parts.potential) - parts.gradient)) <= 1e-12 * np.max(np.abs(u)) * 10


class TestNorms:
    def test_constant(self):
        g = Grid3(8, 3.0)
        f = np.full(g.shape, -2.0)
        for p in (1, 2, 3.5):
            assert math.isclose(lp_norm(g, f, p), 2.0 * 3.0 ** (3 / p), rel_tol=1e-13)
        assert lp_norm(g, f, math.inf) == 2.0

    def test_sine(self, grid2pi):
        f = np.sin(grid2pi.coords[0])
        assert math.isclose(lp_norm(grid2pi, f, 2), math.sqrt(4 * math.pi**3), rel_tol=1e-13)
        assert math.isclose(lp_norm(grid2pi, f, math.inf), 1.0, rel_tol=1e-15)

    def test_vector_uses_euclidean_magnitude(self):
        g = Grid3(8, 1.0)
        u = np.zeros((3, *g.shape))
        u[0], u[1] = 3.0, 4.0
        assert math.isclose(lp_norm(g, u, 2), 5.0, rel_tol=1e-14)

    def test_region_and_errors(self):
        g = Grid3(16, 4.0)
        ball = g.ball_mask(1.0)
        f = np.ones(g.shape)
        assert math.isclose(lp_norm(g, f, 1, ball), ball.sum() * g.cell_volume)
        assert math.isclose(integrate(g, f, ball), ball.sum() * g.cell_volume)
        with pytest.raises(ValueError, match="p must be >= 1"):
            lp_norm(g, f, 0.5)


class TestInterpolation:
    def test_reproduces_nodes(self, rng):
        g = Grid3(8, 2.0)
        f = random_field(g, rng)
        assert np.max(np.abs(interpolate(g, f, (g.axis, g.axis, g.axis)) - f)) < 1e-13

    def test_band_limited_off_grid(self, grid2pi):
        x = grid2pi.coords
        f = np.sin(x[0] + 0.3) * np.cos(2 * x[1]) + np.cos(3 * x[2])
        pts = np.linspace(-3.0, 3.0, 7)
        X = np.meshgrid(pts, pts, pts, indexing="ij")
        exact = np.sin(X[0] + 0.3) * np.cos(2 * X[1]) + np.cos(3 * X[2])
        assert np.max(np.abs(interpolate(grid2pi, f, (pts, pts, pts)) - exact)) < 1e-13
