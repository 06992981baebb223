"""Sobolev-type norms and moduli of continuity for grid functions.

Two Sobolev norms are provided and deliberately kept apart:

* ``sobolev_norm``: the dyadic-sequence norm, the l^2 norm of
  ``(k+1)**log_shift * 2**(k*s) * ||Delta_k u||``;
* ``multiplier_norm``: ``||(1+|xi|^2)**(s/2) * Log(2+|xi|)**log_shift u||``.

``norm_equivalence_bounds`` gives the exact constants relating them on a grid.

Seminorms (LL, Hoelder, Lipschitz) are measured by sweeping all pairs of
grid points, organised by shift vector and stopped as soon as the remaining
shifts cannot beat the current maximum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid

from .dyadic import _block_table, low_pass, max_block_index
from .grid import Grid, GridFunction, get_grid

__all__ = [
    "LogSobolevIndex",
    "SeminormReport",
    "DyadicBoundTable",
    "sobolev_norm",
    "multiplier_norm",
    "sobolev_weight",
    "norm_equivalence_bounds",
    "ll_modulus",
    "ll_seminorm",
    "ll_ratio_at_separation",
    "holder_norm",
    "lipschitz_norm",
    "seminorm_report",
    "verify_dyadic_coefficient_bounds",
    "time_sup",
    "time_l1",
    "time_l2",
]


@dataclass(frozen=True)
class LogSobolevIndex:
    """Index of ``H^{s + log_shift*log}``; ``log_shift`` is -1/2, 0 or +1/2."""

    s: float
    log_shift: float = 0.0

    def __post_init__(self):
        if self.log_shift not in (-0.5, 0.0, 0.5):
            raise ValueError(f"log_shift must be one of -0.5, 0, 0.5; got {self.log_shift}")

    def shifted(self, ds: float) -> "LogSobolevIndex":
        return LogSobolevIndex(self.s + ds, self.log_shift)

    def __str__(self):
        if self.log_shift == 0:
            return f"H^{self.s:g}"
        sign = "+" if self.log_shift > 0 else "-"
        return f"H^({self.s:g}{sign}1/2log)"


def _block_weights(n: int, idx: LogSobolevIndex) -> np.ndarray:
    k = np.arange(max_block_index(n) + 1, dtype=float)
    return (k + 1.0) ** idx.log_shift * 2.0 ** (k * idx.s)


def sobolev_norm(u: GridFunction, idx: LogSobolevIndex) -> float:
    """Dyadic-sequence Sobolev norm of ``u``."""
    grid = u.grid
    blocks = _block_table(grid.dim, grid.n)
    power = np.abs(u.spectrum) ** 2 * (2 * np.pi) ** grid.dim
    block_energy = np.tensordot(blocks**2, power, axes=grid.dim)
    weights = _block_weights(grid.n, idx)
    return float(np.sqrt(np.sum(weights**2 * block_energy)))


def sobolev_weight(grid: Grid, s: float, log_shift: float = 0.0) -> np.ndarray:
    absk = grid.abs_wavenumber
    w = (1.0 + absk**2) ** (s / 2)
    if log_shift:
        w = w * np.log(2.0 + absk) ** log_shift
    return w


def multiplier_norm(u: GridFunction, idx: LogSobolevIndex) -> float:
    """``||(1+|D|^2)^{s/2} Lambda^{log_shift} u||_{L^2}`` with ``Lambda = Log(2+|D|)``."""
    grid = u.grid
    w = sobolev_weight(grid, idx.s, idx.log_shift)
    return float(np.sqrt(np.sum(np.abs(w * u.spectrum) ** 2) * (2 * np.pi) ** grid.dim))


@lru_cache(maxsize=256)
def norm_equivalence_bounds(n: int, idx: LogSobolevIndex, dim: int = 1) -> tuple[float, float]:
    """Constants ``(c1, c2)`` with ``c1 <= sobolev_norm/multiplier_norm <= c2`` on the grid.

    Both norms are diagonal in frequency, so the extreme ratios of their
    symbols are attained and sharp.
    """
    grid = get_grid(dim, n)
    blocks = _block_table(dim, n)
    weights = _block_weights(n, idx)
    dyadic_symbol = np.tensordot(weights**2, blocks**2, axes=1)
    ratio = np.sqrt(dyadic_symbol) / sobolev_weight(grid, idx.s, idx.log_shift)
    return float(ratio.min()), float(ratio.max())


# -- moduli of continuity ---------------------------------------------------------


def ll_modulus(d):
    d = np.asarray(d, dtype=float)
    return d * (1.0 + np.abs(np.log(d)))


def _normalize_samples(a, spacing, periodic):
    if isinstance(a, GridFunction):
        vals = a.values
        spacing = a.grid.spacing if spacing is None else spacing
    else:
        vals = np.asarray(a)
        if spacing is None:
            if vals.ndim != 1:
                raise ValueError("spacing is required for multi-dimensional samples")
            spacing = 2 * np.pi / vals.shape[0]
    spacing = tuple(np.broadcast_to(np.asarray(spacing, dtype=float), (vals.ndim,)))
    if periodic is None:
        periodic = True
    periodic = tuple(np.broadcast_to(np.asarray(periodic, dtype=bool), (vals.ndim,)))
    return vals, spacing, periodic


@lru_cache(maxsize=64)
def _shift_table(shape, spacing, periodic):
    ranges = []
    for n, per in zip(shape, periodic):
        ranges.append(range(-(n // 2), n // 2 + 1) if per else range(-(n - 1), n))
    shifts = np.array(list(itertools.product(*ranges)), dtype=int).reshape(-1, len(shape))
    # keep one representative of each +/- pair
    first = np.zeros(len(shifts), dtype=int)
    for col in range(shifts.shape[1] - 1, -1, -1):
        nz = shifts[:, col] != 0
        first[nz] = np.sign(shifts[nz, col])
    shifts = shifts[first > 0]
    dist = np.sqrt(np.sum((shifts * np.asarray(spacing)) ** 2, axis=1))
    order = np.argsort(dist, kind="stable")
    return shifts[order], dist[order]


def _pair_differences(vals, shift, periodic):
    a, b = vals, vals
    for axis, (m, per) in enumerate(zip(shift, periodic)):
        if m == 0:
            continue
        if per:
            b = np.roll(b, m, axis=axis)
        else:
            n = vals.shape[axis]
            idx_a = [slice(None)] * vals.ndim
            idx_b = [slice(None)] * vals.ndim
            if m > 0:
                idx_a[axis], idx_b[axis] = slice(m, n), slice(0, n - m)
            else:
                idx_a[axis], idx_b[axis] = slice(0, n + m), slice(-m, n)
            a, b = a[tuple(idx_a)], b[tuple(idx_b)]
    return np.abs(a - b)


def _modulus_sweep(vals, spacing, periodic, modulus, min_separation, max_separation=np.inf):
    if vals.size < 2:
        return 0.0
    oscillation = float(np.max(np.abs(vals - vals.flat[0])) * 2)
    if oscillation == 0.0:
        return 0.0
    shifts, dist = _shift_table(vals.shape, spacing, periodic)
    best = 0.0
    for shift, d in zip(shifts, dist):
        if d < min_separation * (1 - 1e-12):
            continue
        if d > max_separation * (1 + 1e-12):
            break
        w = float(modulus(d))
        if oscillation / w <= best:
            break
        diff = _pair_differences(vals, shift, periodic)
        if diff.size:
            best = max(best, float(diff.max()) / w)
    return best


def ll_seminorm(a, min_separation: float | None = None, *, spacing=None, periodic=None) -> float:
    """Best Log-Lipschitz constant over all grid pairs at distance ``>= min_separation``.

    ``a`` is a :class:`GridFunction` or an array of samples; for arrays give
    ``spacing`` (scalar or per axis) and ``periodic`` flags.  Distances are
    Euclidean, periodic along periodic axes.
    """
    vals, spacing, periodic = _normalize_samples(a, spacing, periodic)
    h = min(spacing)
    if min_separation is None:
        min_separation = h
    if min_separation < h * (1 - 1e-12):
        raise ValueError(f"min_separation {min_separation} is below the grid spacing {h}")
    return _modulus_sweep(vals, spacing, periodic, ll_modulus, min_separation)


def ll_ratio_at_separation(a, separation: float, *, spacing=None, periodic=None) -> float:
    """LL ratio restricted to pairs at exactly one distance (the small-scale behaviour)."""
    vals, spacing, periodic = _normalize_samples(a, spacing, periodic)
    return _modulus_sweep(vals, spacing, periodic, ll_modulus, separation, separation)


def holder_norm(a, alpha: float, *, spacing=None, periodic=None) -> float:
    """``||a||_{L^inf}`` plus the largest Hoelder ratio of exponent ``alpha`` over grid pairs."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    vals, spacing, periodic = _normalize_samples(a, spacing, periodic)
    sup = float(np.max(np.abs(vals)))
    return sup + _modulus_sweep(vals, spacing, periodic, lambda d: d**alpha, min(spacing))


def lipschitz_norm(a, *, spacing=None, periodic=None) -> float:
    return holder_norm(a, 1.0, spacing=spacing, periodic=periodic)


@dataclass(frozen=True)
class SeminormReport:
    l_infinity: float
    ll_seminorm: float
    holder_alpha: float
    holder_norm: float
    lipschitz_norm: float

    def as_dict(self) -> dict:
        return {
            "l_infinity": self.l_infinity,
            "ll_seminorm": self.ll_seminorm,
            "holder_alpha": self.holder_alpha,
            "holder_norm": self.holder_norm,
            "lipschitz_norm": self.lipschitz_norm,
        }


def seminorm_report(a, alpha: float = 0.75, *, spacing=None, periodic=None) -> SeminormReport:
    vals, spacing, periodic = _normalize_samples(a, spacing, periodic)
    return SeminormReport(
        l_infinity=float(np.max(np.abs(vals))),
        ll_seminorm=ll_seminorm(vals, spacing=spacing, periodic=periodic),
        holder_alpha=alpha,
        holder_norm=holder_norm(vals, alpha, spacing=spacing, periodic=periodic),
        lipschitz_norm=lipschitz_norm(vals, spacing=spacing, periodic=periodic),
    )


# -- dyadic coefficient bounds ---------------------------------------------------


@dataclass(frozen=True)
class DyadicBoundTable:
    """Per-block ratios of measured quantities to the majorants of the dyadic LL/Hoelder bounds.

    ``remainder_unscaled`` divides ``||a - S_k a||`` by ``(k+1)||a||_LL``;
    ``remainder_scaled`` by ``(k+1) 2^{-k} ||a||_LL``.  NaN marks blocks where
    the majorant vanishes.
    """

    k: np.ndarray
    block_ll: np.ndarray
    gradient_ll: np.ndarray
    block_holder: np.ndarray
    remainder_unscaled: np.ndarray
    remainder_scaled: np.ndarray
    ll: float
    holder: float
    alpha: float

    def rows(self):
        cols = (self.block_ll, self.gradient_ll, self.block_holder, self.remainder_unscaled, self.remainder_scaled)
        for i, k in enumerate(self.k):
            yield (int(k),) + tuple(float(c[i]) for c in cols)


def _safe_ratio(num, den):
    if den == 0:
        return 0.0 if num == 0 else np.inf
    return num / den


def verify_dyadic_coefficient_bounds(a: GridFunction, alpha: float = 0.5) -> DyadicBoundTable:
    grid = a.grid
    ll = ll_seminorm(a)
    hol = holder_norm(a, alpha)
    kmax = max_block_index(grid.n)
    ks = np.arange(kmax + 1)
    sums = [low_pass(a, int(k)).values for k in ks]
    cols = {name: np.full(len(ks), np.nan) for name in ("bll", "grad", "hol", "rp", "rs")}
    for k in ks:
        block = sums[k] - (sums[k - 1] if k else 0.0)
        block_sup = float(np.max(np.abs(block)))
        grad = np.sqrt(sum(np.abs(grid.derivative(sums[k], j)) ** 2 for j in range(grid.dim)))
        rem_sup = float(np.max(np.abs(a.values - sums[k])))
        if k >= 1:
            cols["bll"][k] = _safe_ratio(block_sup, k * 2.0**-k * ll)
        cols["grad"][k] = _safe_ratio(float(grad.max()), (k + 1) * ll)
        cols["hol"][k] = _safe_ratio(block_sup, 2.0 ** (-alpha * k) * hol)
        cols["rp"][k] = _safe_ratio(rem_sup, (k + 1) * ll)
        cols["rs"][k] = _safe_ratio(rem_sup, (k + 1) * 2.0**-k * ll)
    return DyadicBoundTable(ks, cols["bll"], cols["grad"], cols["hol"], cols["rp"], cols["rs"], ll, hol, alpha)


# -- norms of time-dependent quantities ------------------------------------------


def time_sup(values) -> float:
    """``sup |values|`` over stored samples."""
    values = np.abs(np.asarray(values, dtype=float))
    return float(values.max()) if values.size else 0.0


def time_l1(times, values) -> float:
    """Trapezoidal ``int |values| dt`` over stored samples."""
    return float(trapezoid(np.abs(np.asarray(values, dtype=float)), np.asarray(times, dtype=float)))


def time_l2(times, values) -> float:
    """Trapezoidal ``(int values^2 dt)^{1/2}`` over stored samples."""
    v = np.asarray(values, dtype=float)
    return float(np.sqrt(trapezoid(v**2, np.asarray(times, dtype=float))))
