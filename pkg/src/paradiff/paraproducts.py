"""Bony paraproducts, modified and time-mollified paraproducts, and their defects.

Symbols may be scalar (shape of the grid) or matrix valued (``(m, m) + grid``);
in the matrix case the operand ``u`` carries a leading component axis.
All products are pointwise products of grid samples.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dyadic import block_symbol, low_pass_symbol, max_block_index
from .grid import Grid, GridFunction, get_grid, random_band_limited
from .norms import (
    LogSobolevIndex,
    ll_seminorm,
    multiplier_norm,
    sobolev_norm,
    sobolev_weight,
)

__all__ = [
    "Paraproduct",
    "ModifiedParaproduct",
    "MollifiedParaproduct",
    "OperatorNormEstimate",
    "DefectOperator",
    "PositivityViolation",
    "DEFECT_KINDS",
    "apply_paraproduct",
    "apply_remainder",
    "paraproduct_adjoint",
    "apply_modified",
    "modified_adjoint",
    "apply_mollified",
    "mollified_adjoint",
    "mollified_time_commutator",
    "choose_nu",
    "positivity_gap",
    "assemble_matrix",
    "symmetric_part_min_eigenvalue",
    "defect_operator",
    "estimate_operator_norm",
    "bump",
    "bump_derivative",
]


# -- array kernels ---------------------------------------------------------------


def _product(a: np.ndarray, u: np.ndarray) -> np.ndarray:
    if a.ndim == u.ndim:
        return a * u
    return np.einsum("ij...,j...->i...", a, u)


def _hermitian(a: np.ndarray, dim: int) -> np.ndarray:
    if a.ndim == dim:
        return np.conj(a)
    return np.conj(np.swapaxes(a, 0, 1))


def _finish(out, *inputs):
    if all(np.isrealobj(x) for x in inputs):
        return np.real(out)
    return out


def _low(grid: Grid, hat: np.ndarray, k: int) -> np.ndarray:
    return grid.ifft(hat * low_pass_symbol(grid, k))


def _block(grid: Grid, hat: np.ndarray, k: int) -> np.ndarray:
    return grid.ifft(hat * block_symbol(grid, k))


def _paraproduct_values(grid: Grid, a, u, cut: int):
    ahat, uhat = grid.fft(a), grid.fft(u)
    out = np.zeros(u.shape, dtype=complex)
    for k in range(cut, max_block_index(grid.n) + 1):
        out += _product(_low(grid, ahat, k - cut), _block(grid, uhat, k))
    return _finish(out, a, u)


def _paraproduct_adjoint_values(grid: Grid, a, u, cut: int):
    ahat = grid.fft(_hermitian(a, grid.dim))
    out = np.zeros(u.shape, dtype=complex)
    for k in range(cut, max_block_index(grid.n) + 1):
        prod = _product(_low(grid, ahat, k - cut), u)
        out += _block(grid, grid.fft(prod), k)
    return _finish(out, a, u)


def _modified_values(grid: Grid, a, u, nu: int):
    ahat, uhat = grid.fft(a), grid.fft(u)
    out = np.zeros(u.shape, dtype=complex)
    for k in range(max_block_index(grid.n) + 1):
        out += _product(_low(grid, ahat, max(nu, k - 3)), _block(grid, uhat, k))
    return _finish(out, a, u)


def _modified_adjoint_values(grid: Grid, a, u, nu: int):
    ahat = grid.fft(_hermitian(a, grid.dim))
    out = np.zeros(u.shape, dtype=complex)
    for k in range(max_block_index(grid.n) + 1):
        prod = _product(_low(grid, ahat, max(nu, k - 3)), u)
        out += _block(grid, grid.fft(prod), k)
    return _finish(out, a, u)


def _as_values(u) -> np.ndarray:
    return u.values if isinstance(u, GridFunction) else np.asarray(u)


def _grid_of(symbol: np.ndarray, dim: int) -> Grid:
    return get_grid(dim, symbol.shape[-1])


def _check_operand(symbol: np.ndarray, dim: int, u: np.ndarray):
    if u.shape[-dim:] != symbol.shape[-dim:]:
        raise ValueError(f"grid mismatch: symbol grid {symbol.shape[-dim:]} vs operand {u.shape[-dim:]}")


def _wrap(like, values, dim):
    if isinstance(like, GridFunction):
        return GridFunction(values, dim)
    return values


# -- paraproducts ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Paraproduct:
    """``T^N_a u = sum_{k>=N} S_{k-N} a Delta_k u``."""

    symbol_a: np.ndarray
    cut_n: int = 3
    dim: int = 1

    def __post_init__(self):
        if self.cut_n < 3:
            raise ValueError(f"cut_n must be >= 3, got {self.cut_n}")
        object.__setattr__(self, "symbol_a", _as_values(self.symbol_a))

    @property
    def grid(self) -> Grid:
        return _grid_of(self.symbol_a, self.dim)


def apply_paraproduct(p: Paraproduct, u):
    vals = _as_values(u)
    _check_operand(p.symbol_a, p.dim, vals)
    return _wrap(u, _paraproduct_values(p.grid, p.symbol_a, vals, p.cut_n), p.dim)


def apply_remainder(p: Paraproduct, u):
    """``R_a u = a u - T_a u``."""
    vals = _as_values(u)
    _check_operand(p.symbol_a, p.dim, vals)
    prod = _product(p.symbol_a, vals)
    return _wrap(u, prod - _paraproduct_values(p.grid, p.symbol_a, vals, p.cut_n), p.dim)


def paraproduct_adjoint(p: Paraproduct, u):
    """``(T_a)^* u = sum_k Delta_k (S_{k-N} a^* u)``."""
    vals = _as_values(u)
    _check_operand(p.symbol_a, p.dim, vals)
    return _wrap(u, _paraproduct_adjoint_values(p.grid, p.symbol_a, vals, p.cut_n), p.dim)


@dataclass(frozen=True, eq=False)
class ModifiedParaproduct:
    """``P^nu_a u = sum_k S_{max(nu, k-3)} a Delta_k u``; low frequencies see ``S_nu a``."""

    symbol_a: np.ndarray
    nu: int
    dim: int = 1

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        object.__setattr__(self, "symbol_a", _as_values(self.symbol_a))

    @property
    def grid(self) -> Grid:
        return _grid_of(self.symbol_a, self.dim)


def apply_modified(p: ModifiedParaproduct, u):
    vals = _as_values(u)
    _check_operand(p.symbol_a, p.dim, vals)
    return _wrap(u, _modified_values(p.grid, p.symbol_a, vals, p.nu), p.dim)


def modified_adjoint(p: ModifiedParaproduct, u):
    vals = _as_values(u)
    _check_operand(p.symbol_a, p.dim, vals)
    return _wrap(u, _modified_adjoint_values(p.grid, p.symbol_a, vals, p.nu), p.dim)


# -- time mollification ----------------------------------------------------------


def bump(t):
    """Unnormalised bump ``exp(-1/(1-t^2))`` on (-1, 1)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def bump_derivative(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti**2)) * (-2.0 * ti / (1.0 - ti**2) ** 2)
    return out


@dataclass(frozen=True, eq=False)
class MollifiedParaproduct:
    """Time-mollified modified paraproduct.

    ``symbol`` maps a time in ``[0, t_max]`` to the coefficient samples on the
    grid.  Outside ``[0, t_max]`` the coefficient is extended by its boundary
    values.  ``a_k = j_k *_t a`` is evaluated by Gauss-Legendre quadrature in
    the rescaled variable, with weights renormalised to unit mass so that
    time-independent coefficients are reproduced exactly.
    """

    symbol: Callable[[float], np.ndarray]
    t_max: float
    nu: int
    dim: int = 1
    quad_order: int = 64
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        nodes, weights = np.polynomial.legendre.leggauss(self.quad_order)
        mass = weights * bump(nodes)
        norm = mass.sum()
        object.__setattr__(self, "_nodes", nodes)
        object.__setattr__(self, "_w0", mass / norm)
        object.__setattr__(self, "_w1", weights * bump_derivative(nodes) / norm)

    def coefficient(self, t: float) -> np.ndarray:
        return np.asarray(self.symbol(float(np.clip(t, 0.0, self.t_max))))

    @property
    def grid(self) -> Grid:
        return _grid_of(self.coefficient(0.0), self.dim)

    def _check_time(self, t):
        if not (0.0 <= t <= self.t_max):
            raise ValueError(f"t = {t} outside [0, {self.t_max}]")

    def _samples(self, k: int, t: float):
        key = ("samples", k, float(t))
        if key not in self._cache:
            h = 2.0**-k
            self._cache[key] = np.stack([self.coefficient(t - h * tau) for tau in self._nodes])
        return self._cache[key]

    def regularized(self, k: int, t: float) -> np.ndarray:
        """``a_k(t) = (j_k *_t a)(t)``."""
        return np.tensordot(self._w0, self._samples(k, t), axes=1)

    def regularized_dt(self, k: int, t: float) -> np.ndarray:
        """``d/dt a_k(t) = (j_k' *_t a)(t)``, by differentiating the kernel."""
        return 2.0**k * np.tensordot(self._w1, self._samples(k, t), axes=1)

    def at(self, t: float) -> ModifiedParaproduct:
        """The unmollified operator ``P^nu_{a(t)}``."""
        return ModifiedParaproduct(self.coefficient(t), self.nu, self.dim)

    def _terms(self, t, derivative=False):
        reg = self.regularized_dt if derivative else self.regularized
        kmax = max_block_index(self.grid.n)
        low = (reg(self.nu, t), self.nu, "low")
        highs = [(reg(k, t), k, "high") for k in range(self.nu, kmax - 2)]
        return [low] + highs


def _mollified_values(p: MollifiedParaproduct, t, u, derivative=False):
    grid = p.grid
    uhat = grid.fft(u)
    out = np.zeros(u.shape, dtype=complex)
    inputs = [u]
    for ak, k, kind in p._terms(t, derivative):
        inputs.append(ak)
        sa = _low(grid, grid.fft(ak), k)
        if kind == "low":
            out += _product(sa, _low(grid, uhat, p.nu + 2))
        else:
            out += _product(sa, _block(grid, uhat, k + 3))
    return _finish(out, *inputs)


def _mollified_adjoint_values(p: MollifiedParaproduct, t, u):
    grid = p.grid
    out = np.zeros(u.shape, dtype=complex)
    inputs = [u]
    for ak, k, kind in p._terms(t):
        inputs.append(ak)
        sa = _low(grid, grid.fft(_hermitian(ak, p.dim)), k)
        prod_hat = grid.fft(_product(sa, u))
        if kind == "low":
            out += _low(grid, prod_hat, p.nu + 2)
        else:
            out += _block(grid, prod_hat, k + 3)
    return _finish(out, *inputs)


def apply_mollified(p: MollifiedParaproduct, t: float, u):
    """``S_nu a_nu S_{nu+2} u + sum_{k>=nu} S_k a_k Delta_{k+3} u``."""
    p._check_time(t)
    vals = _as_values(u)
    return _wrap(u, _mollified_values(p, t, vals), p.dim)


def mollified_adjoint(p: MollifiedParaproduct, t: float, u):
    p._check_time(t)
    vals = _as_values(u)
    return _wrap(u, _mollified_adjoint_values(p, t, vals), p.dim)


def mollified_time_commutator(p: MollifiedParaproduct, t: float, u):
    """``[d/dt, P~^nu_a](t)``: the mollified paraproduct with ``a_k`` replaced by ``d/dt a_k``."""
    p._check_time(t)
    vals = _as_values(u)
    return _wrap(u, _mollified_values(p, t, vals, derivative=True), p.dim)


# -- positivity ------------------------------------------------------------------


class PositivityViolation(ArithmeticError):
    """Raised when ``Re <P u, u> < delta/2 ||u||^2`` for some trial ``u``."""

    def __init__(self, gap: float, delta: float, witness: np.ndarray):
        super().__init__(f"positivity gap {gap:.6g} below delta/2 = {delta / 2:.6g}")
        self.gap = gap
        self.delta = delta
        self.witness = witness


def choose_nu(delta: float, ll_norm: float, c0: float) -> int:
    """Smallest ``nu >= 1`` with ``nu 2^{-nu} <= c0 delta / ll_norm``."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if ll_norm <= 0:
        return 1
    bound = c0 * delta / ll_norm
    nu = 1
    while nu * 2.0**-nu > bound:
        nu += 1
    return nu


def _symbol_minimum(a: np.ndarray, dim: int) -> float:
    if a.ndim == dim:
        return float(np.min(np.real(a)))
    mats = np.moveaxis(a.reshape(a.shape[:2] + (-1,)), -1, 0)
    return float(np.min(np.linalg.eigvalsh(0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2))))))


def symbol_ll_norm(a: np.ndarray, dim: int) -> float:
    """LL seminorm of a scalar symbol, or the largest entrywise one for matrices."""
    if a.ndim == dim:
        return ll_seminorm(np.real(a))
    m = a.shape[0]
    return max(ll_seminorm(np.real(a[i, j])) for i in range(m) for j in range(m))


def _operator_for(p, t):
    if isinstance(p, MollifiedParaproduct):
        if t is None:
            raise ValueError("a mollified paraproduct needs a time t")
        return p.coefficient(t), lambda u: _mollified_values(p, t, u)
    return p.symbol_a, lambda u: _modified_values(p.grid, p.symbol_a, u, p.nu)


def positivity_gap(p, trials: int = 500, seed: int = 0, *, t: float | None = None, strict: bool = True) -> float:
    """Smallest ``Re <P u, u> / ||u||^2`` over seeded random complex trial functions.

    With ``strict`` a gap below ``delta/2`` (``delta`` the minimum of the
    symbol, or of its smallest eigenvalue) raises :class:`PositivityViolation`.
    """
    symbol, apply = _operator_for(p, t)
    dim = p.dim
    grid = _grid_of(symbol, dim)
    delta = _symbol_minimum(symbol, dim)
    vector = symbol.ndim > dim
    gap, witness = np.inf, None
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        if vector:
            u = np.stack([random_band_limited(grid.n, rng, dim).values for _ in range(symbol.shape[0])])
        else:
            u = random_band_limited(grid.n, rng, dim).values
        pu = apply(u)
        ratio = np.real(np.sum(pu * np.conj(u))) / np.sum(np.abs(u) ** 2)
        if ratio < gap:
            gap, witness = float(ratio), u
    if strict and gap < delta / 2:
        raise PositivityViolation(gap, delta, witness)
    return gap


def assemble_matrix(p, *, t: float | None = None) -> np.ndarray:
    """Dense matrix of ``P`` acting on grid samples (components stacked for matrix symbols)."""
    symbol, apply = _operator_for(p, t)
    dim = p.dim
    grid = _grid_of(symbol, dim)
    shape = grid.shape if symbol.ndim == dim else (symbol.shape[0],) + grid.shape
    size = int(np.prod(shape))
    cols = []
    for j in range(size):
        e = np.zeros(size)
        e[j] = 1.0
        cols.append(np.asarray(apply(e.reshape(shape))).reshape(size))
    return np.stack(cols, axis=1)


def symmetric_part_min_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of ``(M + M^*)/2``; grid inner products use uniform weights."""
    herm = 0.5 * (matrix + matrix.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


# -- operator norm estimation ----------------------------------------------------


@dataclass(frozen=True)
class OperatorNormEstimate:
    source_index: LogSobolevIndex
    target_index: LogSobolevIndex
    trials: int
    measured_norm: float
    trial_seed: int
    ratios: tuple = field(default=(), repr=False, compare=False)


def _norm_function(kind: str) -> Callable:
    if kind == "multiplier":
        return multiplier_norm
    if kind == "dyadic":
        return sobolev_norm
    raise ValueError(f"unknown norm kind {kind!r}")


def estimate_operator_norm(
    op: Callable[[GridFunction], GridFunction],
    source: LogSobolevIndex,
    target: LogSobolevIndex,
    trials: int = 100,
    seed: int = 0,
    *,
    n: int = 256,
    dim: int = 1,
    norm: str = "multiplier",
    real: bool = False,
    source_norm: Callable[[GridFunction], float] | None = None,
    workers: int = 1,
) -> OperatorNormEstimate:
    """Largest ratio ``||op u||_target / ||u||_source`` over seeded random trial functions.

    Trial ``i`` is drawn from ``default_rng([seed, i])``, so the estimate is
    reproducible, independent of ``workers`` and nondecreasing in ``trials``.
    ``source_norm`` replaces the source norm by a custom majorant.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    target_norm = _norm_function(norm)
    src_norm = source_norm or (lambda u: _norm_function(norm)(u, source))

    def ratio(i: int) -> float:
        u = random_band_limited(n, np.random.default_rng([seed, i]), dim, real=real)
        den = src_norm(u)
        num = target_norm(op(u), target)
        return num / den if den > 0 else 0.0

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ratios = tuple(pool.map(ratio, range(trials)))
    else:
        ratios = tuple(ratio(i) for i in range(trials))
    return OperatorNormEstimate(source, target, trials, float(max(ratios)), seed, ratios)


# -- defect operators ------------------------------------------------------------

DEFECT_KINDS = (
    "commutator_qpsi",
    "adjoint_defect",
    "composition_defect",
    "modified_adjoint_defect",
    "mollified_family",
    "lambda_half_commutators",
    "paraproduct_cut_difference",
)

_PSI_ORDER = {"identity": 0, "dx": 1, "bessel": 1}


@dataclass(frozen=True, eq=False)
class DefectOperator:
    """A linear operator on grid functions with the spaces and majorant of its bound.

    The bound being tested reads ``||op u||_target <= C * scale * majorant(u)``
    where ``majorant`` defaults to the source norm.
    """

    kind: str
    apply: Callable[[np.ndarray], np.ndarray]
    source: LogSobolevIndex
    target: LogSobolevIndex
    scale: float
    dim: int = 1
    nu: int | None = None
    label: str = ""

    def __call__(self, u):
        return _wrap(u, self.apply(_as_values(u)), self.dim)

    def majorant(self, u: GridFunction, norm: str = "multiplier") -> float:
        base = _norm_function(norm)(u, self.source)
        if self.nu is not None:
            base = base + self.nu * u.l2_norm()
        return base

    def estimate(self, trials: int = 100, seed: int = 0, *, norm: str = "multiplier", real: bool = False, n: int | None = None):
        """Measured constant ``C`` (operator norm divided by ``scale``)."""
        if n is None:
            raise ValueError("grid size n is required")
        est = estimate_operator_norm(
            self,
            self.source,
            self.target,
            trials,
            seed,
            n=n,
            dim=self.dim,
            norm=norm,
            real=real,
            source_norm=lambda u: self.majorant(u, norm),
        )
        return est.measured_norm / self.scale if self.scale > 0 else est.measured_norm


def _derivative(grid: Grid, u: np.ndarray, j: int) -> np.ndarray:
    return grid.derivative(u, j)


def _qpsi_symbol(grid: Grid, s: float, psi: str, j: int) -> np.ndarray:
    q = np.sqrt(1.0 + grid.abs_wavenumber**2)
    if psi == "identity":
        sym = np.ones(grid.shape)
    elif psi == "dx":
        sym = grid.derivative_symbols[j]
    elif psi == "bessel":
        sym = q
    else:
        raise ValueError(f"unknown psi {psi!r}; expected one of {sorted(_PSI_ORDER)}")
    return q ** (-s) * sym


def _sup(a) -> float:
    return float(np.max(np.abs(a)))


def defect_operator(
    kind: str,
    a=None,
    b=None,
    s: float | None = None,
    j: int = 0,
    *,
    psi: str = "identity",
    side: str = "right",
    nu: int | None = None,
    mollified: MollifiedParaproduct | None = None,
    t: float | None = None,
    member: int | str | None = None,
    cuts: tuple[int, int] = (3, 4),
    dim: int = 1,
    ll_a: float | None = None,
    ll_b: float | None = None,
) -> DefectOperator:
    """Build one of the defect operators whose mapping bounds express loss estimates.

    ``side`` selects ``op d_j`` ("right") or ``d_j op`` ("left") where both
    occur.  ``member`` picks ``R_1 .. R_5`` for the mollified family and
    "left"/"right" for the ``Lambda^{1/2}`` commutators.  LL seminorms may be
    supplied through ``ll_a``/``ll_b`` (required for space-time symbols).
    """
    if kind not in DEFECT_KINDS:
        raise ValueError(f"unknown defect kind {kind!r}")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if kind in ("mollified_family", "lambda_half_commutators"):
        if mollified is None or t is None:
            raise ValueError(f"{kind} needs a MollifiedParaproduct and a time t")
        mollified._check_time(t)
        dim = mollified.dim
        a = mollified.coefficient(t)
    else:
        if a is None:
            raise ValueError(f"{kind} needs a coefficient a")
        a = _as_values(a)
    grid = get_grid(dim, a.shape[-1])
    if ll_a is None and kind not in ("mollified_family", "lambda_half_commutators"):
        ll_a = ll_seminorm(np.real(a)) if dim == 1 else ll_seminorm(np.real(a), spacing=grid.spacing)
    if ll_a is None:
        raise ValueError(f"{kind} needs the space-time LL seminorm via ll_a")
    d = lambda u: _derivative(grid, u, j)  # noqa: E731
    half_log_plus = LogSobolevIndex(0.0, 0.5)
    half_log_minus = LogSobolevIndex(0.0, -0.5)

    def sided(core):
        if side == "right":
            return lambda u: core(d(u))
        return lambda u: d(core(u))

    if kind == "commutator_qpsi":
        if s is None or not 0.0 <= s <= 1.0:
            raise ValueError("commutator_qpsi needs s in [0, 1]")
        sym = _qpsi_symbol(grid, s, psi, j)
        cut = cuts[0]

        def apply(u):
            tu = _paraproduct_values(grid, a, u, cut)
            return grid.multiplier(tu, sym) - _paraproduct_values(grid, a, grid.multiplier(u, sym), cut)

        m = _PSI_ORDER[psi]
        return DefectOperator(
            kind, apply, LogSobolevIndex(-s, 0.5), LogSobolevIndex(1.0 - m, -0.5), ll_a, dim, label=f"psi={psi},s={s:g}"
        )

    if kind == "adjoint_defect":
        cut = cuts[0]
        core = lambda u: _paraproduct_values(grid, a, u, cut) - _paraproduct_adjoint_values(grid, a, u, cut)  # noqa: E731
        return DefectOperator(kind, sided(core), half_log_plus, half_log_minus, ll_a, dim, label=side)

    if kind == "composition_defect":
        if b is None:
            raise ValueError("composition_defect needs a second coefficient b")
        b = _as_values(b)
        if ll_b is None:
            ll_b = ll_seminorm(np.real(b)) if dim == 1 else ll_seminorm(np.real(b), spacing=grid.spacing)
        cut = cuts[0]
        ab = a * b

        def apply(u):
            du = d(u)
            tb = _paraproduct_values(grid, b, du, cut)
            return _paraproduct_values(grid, a, tb, cut) - _paraproduct_values(grid, ab, du, cut)

        scale = ll_a * _sup(b) + ll_b * _sup(a)
        return DefectOperator(kind, apply, half_log_plus, half_log_minus, scale, dim)

    if kind == "modified_adjoint_defect":
        if nu is None:
            raise ValueError("modified_adjoint_defect needs nu")
        core = lambda u: _modified_values(grid, a, u, nu) - _modified_adjoint_values(grid, a, u, nu)  # noqa: E731
        return DefectOperator(kind, sided(core), half_log_plus, half_log_minus, ll_a, dim, nu=nu, label=side)

    if kind == "mollified_family":
        p = mollified
        nu = p.nu
        r = int(member) if member is not None else 1
        plain = lambda u: _modified_values(grid, a, u, nu)  # noqa: E731
        moll = lambda u: _mollified_values(p, t, u)  # noqa: E731
        moll_adj = lambda u: _mollified_adjoint_values(p, t, u)  # noqa: E731
        if r == 1:
            apply = lambda u: plain(d(u)) - moll(d(u))  # noqa: E731
        elif r == 2:
            apply = lambda u: d(plain(u) - moll(u))  # noqa: E731
        elif r == 3:
            apply = lambda u: moll_adj(d(u)) - moll(d(u))  # noqa: E731
        elif r == 4:
            apply = lambda u: d(moll_adj(u) - moll(u))  # noqa: E731
        elif r == 5:
            apply = lambda u: _mollified_values(p, t, u, derivative=True)  # noqa: E731
        else:
            raise ValueError(f"mollified_family member must be 1..5, got {member!r}")
        return DefectOperator(kind, apply, half_log_plus, half_log_minus, ll_a, dim, nu=nu, label=f"R{r}")

    if kind == "lambda_half_commutators":
        p = mollified
        nu = p.nu
        lam_half = np.sqrt(np.log(2.0 + grid.abs_wavenumber))
        L = lambda u: grid.multiplier(u, lam_half)  # noqa: E731
        moll = lambda u: _mollified_values(p, t, u)  # noqa: E731
        which = member or "left"
        if which == "left":
            apply = lambda u: L(moll(L(u)) - L(moll(u)))  # noqa: E731
        elif which == "right":
            apply = lambda u: moll(L(L(u))) - L(moll(L(u)))  # noqa: E731
        else:
            raise ValueError(f"lambda_half_commutators member must be 'left' or 'right', got {member!r}")
        scale = nu**2 * 2.0**-nu * ll_a + nu * _sup(a)
        l2 = LogSobolevIndex(0.0)
        return DefectOperator(kind, apply, l2, l2, scale, dim, label=which)

    # paraproduct_cut_difference
    n1, n2 = cuts
    if not 3 <= n1 <= n2:
        raise ValueError(f"cuts must satisfy 3 <= N <= N', got {cuts}")
    s = 0.0 if s is None else s
    apply = lambda u: _paraproduct_values(grid, a, u, n1) - _paraproduct_values(grid, a, u, n2)  # noqa: E731
    return DefectOperator(
        kind,
        apply,
        LogSobolevIndex(s, 0.5),
        LogSobolevIndex(s + 1.0, -0.5),
        _sup(a) + ll_a,
        dim,
        label=f"N={n1},N'={n2},s={s:g}",
    )


def sobolev_multiplier(grid: Grid, idx: LogSobolevIndex) -> np.ndarray:
    """Symbol of the multiplier norm weight, exposed for building test operators."""
    return sobolev_weight(grid, idx.s, idx.log_shift)
