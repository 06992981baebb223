import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paradiff.grid import GridFunction, get_grid, random_band_limited
from paradiff.norms import (
    LogSobolevIndex,
    holder_norm,
    ll_seminorm,
    lipschitz_norm,
    multiplier_norm,
    norm_equivalence_bounds,
    seminorm_report,
    sobolev_norm,
    time_l1,
    time_l2,
    time_sup,
    verify_dyadic_coefficient_bounds,
)


def brute_force_ratio(values, modulus):
    """All-pairs sweep on a periodic 1-D grid, written independently of the library."""
    n = len(values)
    h = 2 * np.pi / n
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = min(j - i, n - (j - i)) * h
            best = max(best, abs(values[i] - values[j]) / modulus(d))
    return best


def tent(n):
    x = get_grid(1, n).x
    return np.minimum(x, 2 * np.pi - x)


@pytest.mark.parametrize("n", [16, 32])
def test_ll_seminorm_matches_brute_force(n):
    a = np.sin(get_grid(1, n).x) + 0.3 * tent(n)
    expected = brute_force_ratio(a, lambda d: d * (1 + abs(np.log(d))))
    assert ll_seminorm(GridFunction(a)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
def test_holder_norm_matches_brute_force(alpha):
    a = np.abs(np.sin(get_grid(1, 32).x)) ** 0.5
    expected = np.max(np.abs(a)) + brute_force_ratio(a, lambda d: d**alpha)
    assert holder_norm(GridFunction(a), alpha) == pytest.approx(expected, rel=1e-12)


def test_constant_has_zero_seminorms():
    rep = seminorm_report(GridFunction(np.full(32, 3.0)))
    assert rep.ll_seminorm == 0.0
    assert rep.l_infinity == 3.0
    assert rep.lipschitz_norm == 3.0


def test_holder_half_finite_three_quarters_grows():
    def ratio(n, alpha):
        a = GridFunction(np.abs(np.sin(get_grid(1, n).x)) ** 0.5)
        return holder_norm(a, alpha) - 1.0

    assert ratio(1024, 0.5) <= ratio(256, 0.5) * 1.01
    assert ratio(1024, 0.75) > 1.3 * ratio(256, 0.75)


def test_lipschitz_of_tent():
    a = GridFunction(tent(64))
    assert lipschitz_norm(a) - np.max(a.values) == pytest.approx(1.0, rel=1e-12)


def test_ll_of_linear_time_samples():
    t = np.linspace(0, 1, 101)
    assert ll_seminorm(2 * t, spacing=t[1], periodic=False) == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("k", [0, 1, 5, 20])
@pytest.mark.parametrize("s", [-1.0, 0.0, 1.5])
def test_multiplier_norm_of_exponential(k, s):
    u = GridFunction(np.exp(1j * k * get_grid(1, 64).x))
    expected = np.sqrt(2 * np.pi) * (1 + k**2) ** (s / 2)
    assert multiplier_norm(u, LogSobolevIndex(s)) == pytest.approx(expected, rel=1e-12)


def test_log_shift_validation():
    with pytest.raises(ValueError):
        LogSobolevIndex(0.0, 0.25)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    s=st.sampled_from([-1.0, -0.5, 0.0, 0.7, 2.0]),
    shift=st.sampled_from([-0.5, 0.0, 0.5]),
)
def test_norm_equivalence(seed, s, shift):
    idx = LogSobolevIndex(s, shift)
    u = random_band_limited(128, np.random.default_rng(seed))
    c1, c2 = norm_equivalence_bounds(128, idx)
    r = sobolev_norm(u, idx) / multiplier_norm(u, idx)
    assert c1 * (1 - 1e-12) <= r <= c2 * (1 + 1e-12)
    assert 0 < c1 <= c2


def test_sobolev_norm_monotone_in_s(rng):
    u = random_band_limited(128, rng)
    values = [sobolev_norm(u, LogSobolevIndex(s)) for s in (-1, 0, 1, 2)]
    assert values == sorted(values)


def test_dyadic_coefficient_table_on_tent():
    table = verify_dyadic_coefficient_bounds(GridFunction(tent(512)))
    ks = slice(2, 9)
    for col in (table.block_ll, table.gradient_ll, table.block_holder, table.remainder_scaled):
        assert np.all(np.isfinite(col[ks]))
        assert np.max(col[ks]) < 2.0
    # without the 2^-k factor the remainder ratio keeps shrinking
    assert table.remainder_unscaled[8] < 0.1 * table.remainder_scaled[8]


def test_time_quadratures():
    t = np.linspace(0, 2, 41)
    assert time_sup(np.array([1.0, -3.0, 2.0])) == 3.0
    assert time_l1(t, np.full_like(t, 2.0)) == pytest.approx(4.0)
    assert time_l2(t, np.full_like(t, 3.0)) == pytest.approx(np.sqrt(18.0))
