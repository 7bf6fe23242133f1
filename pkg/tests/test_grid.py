"""Spectral core: transforms, derivatives, dealiasing, quadrature."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zkdamp.grid import (
    FieldError,
    GridError,
    GridSpec,
    RealField,
    SpectralField,
    dealias,
    derivative,
    hermitian_defect,
    inverse_transform,
    quadrature,
    quadrature_weighted,
    spectral_l2_sq,
    transform,
)

from conftest import random_band_limited


class TestGridSpec:
    def test_basic_properties(self, grid256):
        assert grid256.dim == 2
        assert grid256.shape == (256, 256)
        dx = grid256.spacing[0]
        assert np.isclose(dx, 32 * np.pi / 256)
        assert np.isclose(grid256.cell_volume, dx * dx)

    def test_scalar_arguments_broadcast(self):
        g = GridSpec(dim=3, half_length=(2.0,), points=(16,))
        assert g.half_length == (2.0, 2.0, 2.0)
        assert g.points == (16, 16, 16)

    @pytest.mark.parametrize("dim", [1, 4, 0])
    def test_bad_dim_rejected(self, dim):
        with pytest.raises(GridError, match="dim"):
            GridSpec(dim=dim, half_length=(1.0,), points=(16,))

    @pytest.mark.parametrize("pts", [7, 6, 17, 0])
    def test_bad_points_rejected(self, pts):
        with pytest.raises(GridError, match="points"):
            GridSpec(dim=2, half_length=(1.0,), points=(pts,))

    def test_negative_half_length_rejected(self):
        with pytest.raises(GridError, match="half_length"):
            GridSpec(dim=2, half_length=(-1.0,), points=(16,))

    def test_coordinates_span_box(self, grid64):
        x = grid64.axis_coordinates(1)
        assert x[0] == -16 * np.pi
        assert np.isclose(x[-1], 16 * np.pi - grid64.spacing[0])

    def test_axis_out_of_range(self, grid64):
        with pytest.raises(GridError, match="axis"):
            grid64.axis_coordinates(3)


class TestTransform:
    def test_zero_field_roundtrip(self, grid64):
        f = RealField(grid64, np.zeros(grid64.shape))
        F = transform(f)
        assert np.all(F.coeffs == 0)
        assert np.all(inverse_transform(F).values == 0)

    def test_single_mode_exact(self, grid64):
        x1 = grid64.meshgrid()[0]
        xi_star = np.pi / grid64.half_length[0]
        f = RealField(grid64, np.cos(xi_star * x1))
        F = transform(f)
        nonzero = np.abs(F.coeffs) > 1e-9 * np.max(np.abs(F.coeffs))
        assert nonzero.sum() == 2  # k = (+-1, 0)
        back = inverse_transform(F)
        np.testing.assert_allclose(back.values, f.values, atol=1e-14)

    def test_random_roundtrip(self, grid64):
        # self-oracle: round-trip measures its own error
        vals = random_band_limited(grid64, seed=3)
        f = RealField(grid64, vals)
        back = inverse_transform(transform(f))
        err = np.linalg.norm(back.values - vals) / np.linalg.norm(vals)
        assert err < 1e-12

    def test_hermitian_symmetry(self, grid64):
        f = RealField(grid64, random_band_limited(grid64, seed=4))
        assert hermitian_defect(transform(f)) < 1e-12

    def test_parseval(self, grid64):
        vals = random_band_limited(grid64, seed=5)
        f = RealField(grid64, vals)
        lhs = quadrature(RealField(grid64, vals**2))
        rhs = spectral_l2_sq(transform(f))
        assert abs(lhs - rhs) / lhs < 1e-12

    def test_nonfinite_rejected(self, grid64):
        vals = np.zeros(grid64.shape)
        vals[3, 5] = np.nan
        with pytest.raises(FieldError, match="non-finite"):
            RealField(grid64, vals)

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_roundtrip_property(self, seed):
        grid = GridSpec(dim=2, half_length=(np.pi,), points=(16,))
        vals = random_band_limited(grid, seed=seed, band=5)
        f = RealField(grid, vals)
        back = inverse_transform(transform(f))
        assert np.max(np.abs(back.values - vals)) < 1e-12 * max(1.0, np.max(np.abs(vals)))


class TestDerivative:
    def test_sine_eigenfunction(self, grid64):
        x1 = grid64.meshgrid()[0]
        xi_star = np.pi / grid64.half_length[0]
        f = RealField(grid64, np.sin(xi_star * x1))
        dF = derivative(transform(f), axis=1, order=1)
        expected = xi_star * np.cos(xi_star * x1)
        np.testing.assert_allclose(inverse_transform(dF).values, expected, atol=1e-13)

    def test_laplacian_eigenfunction(self, grid64):
        x1 = grid64.meshgrid()[0]
        xi_star = np.pi / grid64.half_length[0]
        f = RealField(grid64, np.cos(xi_star * x1))
        d2 = derivative(transform(f), axis=1, order=2)
        expected = -(xi_star**2) * np.cos(xi_star * x1)
        np.testing.assert_allclose(inverse_transform(d2).values, expected, atol=1e-13)

    def test_transverse_axis(self, grid64):
        x2 = grid64.meshgrid()[1]
        xi_star = 2 * np.pi / grid64.half_length[1]
        f = RealField(grid64, np.sin(xi_star * x2))
        dF = derivative(transform(f), axis=2, order=1)
        np.testing.assert_allclose(
            inverse_transform(dF).values, xi_star * np.cos(xi_star * x2), atol=1e-12
        )

    def test_finite_difference_oracle(self, grid256):
        # central differences of the analytic Gaussian converge at O(h^2)
        # to the spectral derivative
        x1, x2 = grid256.meshgrid()
        gauss = lambda a, b: np.exp(-(a**2 + b**2) / 2)
        f = RealField(grid256, gauss(x1, x2))
        spectral = inverse_transform(derivative(transform(f), axis=1, order=1)).values
        errs = []
        for h in (0.2, 0.1, 0.05):
            fd = (gauss(x1 + h, x2) - gauss(x1 - h, x2)) / (2 * h)
            errs.append(np.max(np.abs(fd - spectral)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)

    def test_first_derivative_twice_is_second(self, grid64):
        vals = random_band_limited(grid64, seed=6)
        F = dealias(transform(RealField(grid64, vals)))
        once = derivative(derivative(F, 1, 1), 1, 1)
        twice = derivative(F, 1, 2)
        scale = np.max(np.abs(twice.coeffs)) or 1.0
        assert np.max(np.abs(once.coeffs - twice.coeffs)) / scale < 1e-12

    def test_derivative_integrates_to_zero(self, grid64):
        vals = random_band_limited(grid64, seed=7)
        dF = derivative(transform(RealField(grid64, vals)), 1, 1)
        assert abs(quadrature(inverse_transform(dF))) < 1e-12

    def test_bad_axis_rejected(self, grid64):
        F = transform(RealField(grid64, np.zeros(grid64.shape)))
        with pytest.raises(GridError, match="axis"):
            derivative(F, 3, 1)

    def test_bad_order_rejected(self, grid64):
        F = transform(RealField(grid64, np.zeros(grid64.shape)))
        with pytest.raises(GridError, match="order"):
            derivative(F, 1, 3)

    def test_real_output_with_nyquist_content(self, grid64):
        rng = np.random.default_rng(8)
        vals = rng.standard_normal(grid64.shape)  # full-band, Nyquist included
        dF = derivative(transform(RealField(grid64, vals)), 1, 1)
        raw = np.fft.ifftn(dF.coeffs)
        assert np.max(np.abs(raw.imag)) < 1e-10 * max(1.0, np.max(np.abs(raw.real)))


class TestDealias:
    def test_zero_field(self, grid64):
        F = transform(RealField(grid64, np.zeros(grid64.shape)))
        assert np.all(dealias(F).coeffs == 0)

    def test_mode_above_threshold_zeroed(self, grid64):
        coeffs = np.zeros(grid64.shape, dtype=complex)
        coeffs[31, 0] = 1.0  # |k| = 31 > 64/3
        F = dealias(SpectralField(grid64, coeffs))
        assert F.coeffs[31, 0] == 0

    def test_mode_below_threshold_kept(self, grid64):
        coeffs = np.zeros(grid64.shape, dtype=complex)
        coeffs[10, 0] = 2.5  # 10 <= 64/3
        F = dealias(SpectralField(grid64, coeffs))
        assert F.coeffs[10, 0] == 2.5

    def test_idempotent(self, grid64):
        vals = np.random.default_rng(9).standard_normal(grid64.shape)
        F = dealias(transform(RealField(grid64, vals)))
        F2 = dealias(F)
        np.testing.assert_array_equal(F.coeffs, F2.coeffs)


class TestQuadrature:
    def test_constant_integrates_to_volume(self, grid64):
        vol = (2 * 16 * np.pi) ** 2
        f = RealField(grid64, np.ones(grid64.shape))
        assert quadrature(f) == pytest.approx(vol, rel=1e-14)

    def test_gaussian_closed_form(self, grid256):
        # oracle: int exp(-|x|^2/2) dx = 2 pi in 2D, box tail < 1e-14
        x1, x2 = grid256.meshgrid()
        f = RealField(grid256, np.exp(-(x1**2 + x2**2) / 2))
        assert quadrature(f) == pytest.approx(2 * np.pi, abs=1e-10)

    def test_full_periods_integrate_to_zero(self, grid64):
        x1 = grid64.meshgrid()[0]
        xi_star = np.pi / grid64.half_length[0]
        f = RealField(grid64, np.cos(xi_star * x1))
        assert abs(quadrature(f)) < 1e-12

    def test_weighted_grid_mismatch_rejected(self, grid64, grid128):
        f = RealField(grid64, np.ones(grid64.shape))
        w = RealField(grid128, np.ones(grid128.shape))
        with pytest.raises(GridError, match="same grid"):
            quadrature_weighted(f, w)

    def test_weighted_matches_product(self, grid64):
        rng = np.random.default_rng(10)
        f = RealField(grid64, rng.standard_normal(grid64.shape))
        w = RealField(grid64, rng.standard_normal(grid64.shape))
        direct = quadrature(RealField(grid64, f.values * w.values))
        assert quadrature_weighted(f, w) == pytest.approx(direct, rel=1e-14)


class Test3D:
    def test_roundtrip_and_parseval(self, grid3d):
        vals = random_band_limited(grid3d, seed=11, band=5)
        f = RealField(grid3d, vals)
        back = inverse_transform(transform(f))
        assert np.max(np.abs(back.values - vals)) < 1e-12
        lhs = quadrature(RealField(grid3d, vals**2))
        assert abs(lhs - spectral_l2_sq(transform(f))) / lhs < 1e-12

    def test_derivative_third_axis(self, grid3d):
        x3 = grid3d.meshgrid()[2]
        xi_star = 2 * np.pi / grid3d.half_length[2]
        f = RealField(grid3d, np.sin(xi_star * x3))
        dF = derivative(transform(f), axis=3, order=1)
        np.testing.assert_allclose(
            inverse_transform(dF).values, xi_star * np.cos(xi_star * x3), atol=1e-12
        )
