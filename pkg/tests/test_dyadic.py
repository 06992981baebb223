import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paradiff.dyadic import (
    block_symbol,
    decompose,
    dyadic_block,
    low_pass,
    low_pass_symbol,
    make_cutoff,
    max_block_index,
)
from paradiff.grid import get_grid, random_band_limited


def test_cutoff_plateau_and_support():
    chi = make_cutoff()
    assert chi(0.0) == 1.0 and chi(1.1) == 1.0
    assert chi(1.9) == 0.0 and chi(5.0) == 0.0
    r = np.linspace(1.1, 1.9, 81)
    assert np.all(np.diff(chi(r)) <= 0)


def test_cutoff_is_even():
    chi = make_cutoff()
    r = np.linspace(0, 3, 50)
    np.testing.assert_array_equal(chi(r), chi(-r))


@pytest.mark.parametrize("n", [8, 64, 1024])
def test_blocks_form_partition_of_unity(n):
    grid = get_grid(1, n)
    total = sum(block_symbol(grid, k) for k in range(max_block_index(n) + 1))
    np.testing.assert_allclose(total, 1.0, atol=1e-15)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_block_support_is_annulus(k):
    grid = get_grid(1, 256)
    sym = block_symbol(grid, k)
    xi = grid.abs_wavenumber
    assert np.all(sym[(xi < 1.1 * 2 ** (k - 1)) | (xi > 1.9 * 2**k)] == 0)


def test_low_pass_negative_index_is_zero():
    assert not np.any(low_pass_symbol(get_grid(1, 32), -1))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.sampled_from([16, 128, 512]))
def test_reconstruction(seed, n):
    u = random_band_limited(n, np.random.default_rng(seed))
    dec = decompose(u)
    assert (dec.reconstruct() - u).l2_norm() <= 1e-12 * u.l2_norm()


def test_blocks_are_orthogonal_when_two_apart(rng):
    u = random_band_limited(256, rng)
    dec = decompose(u)
    for j in range(len(dec.blocks)):
        for k in range(j + 2, len(dec.blocks)):
            assert abs(dec.blocks[j].inner(dec.blocks[k])) < 1e-12


def test_block_self_adjoint(rng):
    u, v = random_band_limited(64, rng), random_band_limited(64, rng)
    assert dyadic_block(u, 3).inner(v) == pytest.approx(u.inner(dyadic_block(v, 3)), abs=1e-13)


def test_low_pass_of_smooth_function():
    grid = get_grid(1, 64)
    from paradiff.grid import GridFunction

    u = GridFunction(np.sin(2 * grid.x))
    np.testing.assert_allclose(low_pass(u, 1).values, u.values, atol=1e-14)
    assert np.max(np.abs(low_pass(u, 0).values)) < 1e-14
    v = GridFunction(np.sin(grid.x))
    np.testing.assert_allclose(low_pass(v, 0).values, v.values, atol=1e-14)
