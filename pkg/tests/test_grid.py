import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paradiff.grid import Grid, GridFunction, get_grid, random_band_limited


@pytest.mark.parametrize("n", [4, 16, 64])
@pytest.mark.parametrize("dim", [1, 2])
def test_fft_roundtrip(n, dim, rng):
    grid = get_grid(dim, n)
    u = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    np.testing.assert_allclose(grid.ifft(grid.fft(u)), u, atol=1e-13)


@pytest.mark.parametrize("n", [3, 6, 2])
def test_rejects_non_power_of_two(n):
    with pytest.raises(ValueError):
        Grid(1, n)


def test_derivative_of_sine_is_cosine():
    grid = get_grid(1, 32)
    np.testing.assert_allclose(grid.derivative(np.sin(3 * grid.x)), 3 * np.cos(3 * grid.x), atol=1e-12)


def test_nyquist_mode_has_zero_derivative():
    grid = get_grid(1, 16)
    u = np.cos(8 * grid.x)
    assert np.max(np.abs(grid.derivative(u))) < 1e-12


def test_l2_norm_of_constant():
    grid = get_grid(2, 8)
    assert grid.l2_norm(np.ones(grid.shape)) == pytest.approx(2 * np.pi)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), real=st.booleans())
def test_parseval(seed, real):
    u = random_band_limited(64, np.random.default_rng(seed), real=real)
    spectral = np.sqrt(np.sum(np.abs(u.spectrum) ** 2) * 2 * np.pi)
    assert u.l2_norm() == pytest.approx(spectral, rel=1e-12)
    assert u.is_real == real


def test_random_functions_are_seeded():
    a = random_band_limited(32, np.random.default_rng(5))
    b = random_band_limited(32, np.random.default_rng(5))
    np.testing.assert_array_equal(a.values, b.values)


def test_gridfunction_arithmetic_checks_grids():
    u = GridFunction.zeros(16)
    with pytest.raises(ValueError):
        u + GridFunction.zeros(32)
    assert (u + 1.0).values.mean() == 1.0
