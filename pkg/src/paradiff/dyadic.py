"""Littlewood-Paley analysis on the periodic grid.

The cutoff is the C-infinity transition

    chi(r) = f((1.9 - r)/0.8) / (f((1.9 - r)/0.8) + f((r - 1.1)/0.8)),
    f(t) = exp(-1/t) for t > 0, else 0,

which equals 1 on [0, 1.1] and 0 on [1.9, inf).  ``S_k`` multiplies the
spectrum by ``chi(|xi| / 2**k)`` and ``Delta_k = S_k - S_{k-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid, GridFunction, get_grid

__all__ = [
    "CutoffProfile",
    "DyadicDecomposition",
    "make_cutoff",
    "max_block_index",
    "low_pass",
    "dyadic_block",
    "decompose",
    "low_pass_symbol",
    "block_symbol",
]

PLATEAU = 1.1
SUPPORT = 1.9


def _smooth_step(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


@dataclass(frozen=True)
class CutoffProfile:
    lower_plateau: float = PLATEAU
    upper_support: float = SUPPORT

    def evaluate(self, r):
        """Cutoff value at frequency magnitude ``r`` (sign is ignored)."""
        r = np.abs(np.asarray(r, dtype=float))
        width = self.upper_support - self.lower_plateau
        up = _smooth_step((self.upper_support - r) / width)
        down = _smooth_step((r - self.lower_plateau) / width)
        out = up / (up + down)
        return out if out.ndim else float(out)

    __call__ = evaluate


_CUTOFF = CutoffProfile()


def make_cutoff() -> CutoffProfile:
    return _CUTOFF


def max_block_index(n: int) -> int:
    """``K = log2(N) + 1``; blocks beyond it vanish on the grid."""
    return int(np.log2(n)) + 1


@lru_cache(maxsize=None)
def _low_pass_table(dim: int, n: int) -> np.ndarray:
    grid = get_grid(dim, n)
    kmax = max_block_index(n)
    table = np.stack([_CUTOFF.evaluate(grid.abs_wavenumber / 2.0**k) for k in range(kmax + 1)])
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def _block_table(dim: int, n: int) -> np.ndarray:
    low = _low_pass_table(dim, n)
    blocks = np.concatenate([low[:1], np.diff(low, axis=0)])
    blocks.setflags(write=False)
    return blocks


def low_pass_symbol(grid: Grid, k: int) -> np.ndarray:
    if k < 0:
        return np.zeros(grid.shape)
    table = _low_pass_table(grid.dim, grid.n)
    return table[min(k, len(table) - 1)]


def block_symbol(grid: Grid, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError(f"block index must be >= 0, got {k}")
    table = _block_table(grid.dim, grid.n)
    if k >= len(table):
        return np.zeros(grid.shape)
    return table[k]


def low_pass(u: GridFunction, k: int) -> GridFunction:
    """``S_k u``; the result is real whenever ``u`` is."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return u.with_values(u.grid.multiplier(u.values, low_pass_symbol(u.grid, k)))


def dyadic_block(u: GridFunction, k: int) -> GridFunction:
    """``Delta_k u``, computed as ``S_k u - S_{k-1} u``."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0:
        return low_pass(u, 0)
    return low_pass(u, k) - low_pass(u, k - 1)


@dataclass(frozen=True, eq=False)
class DyadicDecomposition:
    source: GridFunction
    blocks: tuple[GridFunction, ...]
    partial_sums: tuple[GridFunction, ...]

    @property
    def max_index(self) -> int:
        return len(self.blocks) - 1

    def reconstruct(self) -> GridFunction:
        return self.source.with_values(sum(b.values for b in self.blocks))

    def block_norms(self) -> np.ndarray:
        return np.array([b.l2_norm() for b in self.blocks])


def decompose(u: GridFunction) -> DyadicDecomposition:
    kmax = max_block_index(u.points_per_axis)
    sums = tuple(low_pass(u, k) for k in range(kmax + 1))
    blocks = (sums[0],) + tuple(sums[k] - sums[k - 1] for k in range(1, kmax + 1))
    return DyadicDecomposition(u, blocks, sums)
