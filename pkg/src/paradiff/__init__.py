"""Spectral paradifferential calculus on periodic grids and a hyperbolic experiment harness."""

from .dyadic import (
    CutoffProfile,
    DyadicDecomposition,
    block_symbol,
    decompose,
    dyadic_block,
    low_pass,
    low_pass_symbol,
    make_cutoff,
    max_block_index,
)
from .grid import Grid, GridFunction, get_grid, random_band_limited
from .norms import (
    LogSobolevIndex,
    SeminormReport,
    holder_norm,
    lipschitz_norm,
    ll_seminorm,
    multiplier_norm,
    norm_equivalence_bounds,
    seminorm_report,
    sobolev_norm,
    verify_dyadic_coefficient_bounds,
)

__version__ = "0.1.0"
