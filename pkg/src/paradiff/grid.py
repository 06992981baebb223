"""Uniform periodic grids on [0, 2pi)^n and functions sampled on them.

All spectral data use numpy's FFT ordering.  The stored ``spectrum`` holds
Fourier *coefficients*, i.e. ``fft(values) / N**dim``, so that

    u(x) = sum_xi spectrum[xi] * exp(i xi . x)

holds at every grid point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "get_grid",
    "random_band_limited",
]


@dataclass(frozen=True)
class Grid:
    """Geometry of an ``N``-point-per-axis periodic grid in ``dim`` dimensions."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 4 or self.n & (self.n - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 4, got {self.n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.n

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @cached_property
    def x(self):
        """Coordinates: a 1-D array for ``dim == 1``, else a tuple of meshgrid arrays."""
        x1 = np.arange(self.n) * self.spacing
        if self.dim == 1:
            return x1
        return tuple(np.meshgrid(x1, x1, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer frequencies along each axis, broadcast to the grid shape."""
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)
        if self.dim == 1:
            return (k1,)
        return tuple(np.meshgrid(k1, k1, indexing="ij"))

    @cached_property
    def abs_wavenumber(self) -> np.ndarray:
        return np.sqrt(sum(k**2 for k in self.wavenumbers))

    @cached_property
    def derivative_symbols(self) -> tuple[np.ndarray, ...]:
        """Symbols ``i xi_j`` with the Nyquist mode removed, so reality is preserved."""
        out = []
        for k in self.wavenumbers:
            kk = k.copy()
            kk[np.abs(kk) == self.n // 2] = 0.0
            out.append(1j * kk)
        return tuple(out)

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values, axes=self.axes) / self.n**self.dim

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(coeffs * self.n**self.dim, axes=self.axes)

    def multiplier(self, values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        """Apply a Fourier multiplier to samples over the trailing ``dim`` axes."""
        out = self.ifft(self.fft(values) * symbol)
        if not np.iscomplexobj(values) and np.isrealobj(symbol):
            return out.real
        return out

    def derivative(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        out = self.ifft(self.fft(values) * self.derivative_symbols[axis])
        return out if np.iscomplexobj(values) else out.real

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        """L^2 inner product over the torus, conjugate-linear in ``v``."""
        return complex(np.sum(u * np.conj(v)) * self.spacing**self.dim)

    def l2_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(u) ** 2) * self.spacing**self.dim))


@lru_cache(maxsize=None)
def get_grid(dim: int, n: int) -> Grid:
    return Grid(dim, n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A complex (or real) function sampled on a periodic grid.

    ``values`` has shape ``(N,) * dim``.  The spectrum is computed lazily and
    cached; since the object is immutable the cache never goes stale.
    """

    values: np.ndarray
    dim: int = 1

    def __post_init__(self):
        vals = np.asarray(self.values)
        if not (np.issubdtype(vals.dtype, np.floating) or np.iscomplexobj(vals)):
            vals = vals.astype(float)
        if vals.ndim != self.dim or len(set(vals.shape)) != 1:
            raise ValueError(f"values of shape {vals.shape} do not form a {self.dim}-D square grid")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        get_grid(self.dim, vals.shape[0])

    @classmethod
    def from_spectrum(cls, spectrum: np.ndarray, dim: int = 1, real: bool = False) -> "GridFunction":
        spectrum = np.asarray(spectrum, dtype=complex)
        grid = get_grid(dim, spectrum.shape[0])
        vals = grid.ifft(spectrum)
        return cls(vals.real if real else vals, dim)

    @classmethod
    def from_function(cls, func, n: int, dim: int = 1) -> "GridFunction":
        grid = get_grid(dim, n)
        return cls(np.broadcast_to(func(grid.x), grid.shape), dim)

    @classmethod
    def zeros(cls, n: int, dim: int = 1) -> "GridFunction":
        return cls(np.zeros((n,) * dim), dim)

    @property
    def grid(self) -> Grid:
        return get_grid(self.dim, self.values.shape[0])

    @property
    def points_per_axis(self) -> int:
        return self.values.shape[0]

    @cached_property
    def spectrum(self) -> np.ndarray:
        spec = self.grid.fft(self.values)
        spec.setflags(write=False)
        return spec

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def l2_norm(self) -> float:
        return self.grid.l2_norm(self.values)

    def inner(self, other: "GridFunction") -> complex:
        self._check(other)
        return self.grid.inner(self.values, other.values)

    def derivative(self, axis: int = 0) -> "GridFunction":
        return GridFunction(self.grid.derivative(self.values, axis), self.dim)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(values, self.dim)

    def _check(self, other: "GridFunction"):
        if self.dim != other.dim or self.points_per_axis != other.points_per_axis:
            raise ValueError(
                f"grid mismatch: {self.dim}-D/{self.points_per_axis} vs "
                f"{other.dim}-D/{other.points_per_axis}"
            )

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.values + self._coerce(other), self.dim)

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.values - self._coerce(other), self.dim)

    def __rsub__(self, other):
        return GridFunction(self._coerce(other) - self.values, self.dim)

    def __mul__(self, other):
        return GridFunction(self.values * self._coerce(other), self.dim)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.values / self._coerce(other), self.dim)

    def __neg__(self):
        return GridFunction(-self.values, self.dim)

    def __repr__(self):
        kind = "real" if self.is_real else "complex"
        return f"GridFunction({kind}, dim={self.dim}, N={self.points_per_axis})"


def random_band_limited(
    n: int,
    rng: np.random.Generator,
    dim: int = 1,
    real: bool = False,
    exponent: float = -1.0,
    max_frequency: float | None = None,
) -> GridFunction:
    """Seeded random function with Gaussian spectrum and envelope ``|xi|**exponent``.

    The Nyquist modes are left empty; ``max_frequency`` further restricts the
    band (``|xi| <= max_frequency``).
    """
    grid = get_grid(dim, n)
    absk = grid.abs_wavenumber
    envelope = np.maximum(absk, 1.0) ** exponent
    mask = np.ones(grid.shape, dtype=bool)
    for k in grid.wavenumbers:
        mask &= np.abs(k) < n // 2
    if max_frequency is not None:
        mask &= absk <= max_frequency
    spec = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) / np.sqrt(2)
    spec = spec * envelope * mask
    vals = grid.ifft(spec)
    if real:
        vals = vals.real
    return GridFunction(vals, dim)
