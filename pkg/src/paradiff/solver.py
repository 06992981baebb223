"""Pseudospectral method-of-lines solver for second-order hyperbolic operators.

The operator

    L u = d_t(a0 d_t u) + sum_j (d_t(a_j d_j u) + d_j(a_j d_t u)) - sum_jk d_j(a_jk d_k u)
          + b0 d_t u + d_t(c0 u) + sum_j (b_j d_j u + d_j(c_j u)) + d u

is integrated as the first-order system in ``(u, v)`` with ``v = X u + c0 u``,
``X = a0 d_t + sum_j a_j d_j``:

    d_t u = -Yt u - ct0 u + v / a0
    d_t v = -Yt* v - bt0 v + Lt2 u - Lt1 u - dt u + f

where ``Yt u = sum_j at_j d_j u``, ``Yt* v = sum_j d_j(at_j v)``,
``Lt2 u = sum_jk d_j(at_jk d_k u)`` and ``Lt1 u = sum_j (bt_j d_j u + d_j(ct_j u))``.
Products are formed on the grid and derivatives are spectral.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import Grid, GridFunction, get_grid
from .norms import LogSobolevIndex, SeminormReport, holder_norm, ll_seminorm, multiplier_norm

__all__ = [
    "NotHyperbolic",
    "CFLViolation",
    "SolverBlowup",
    "CoefficientField",
    "HyperbolicOperator",
    "TildeCoefficients",
    "StateUV",
    "Trajectory",
    "OperatorConstants",
    "EnergyData",
    "EnergyTrace",
    "FiniteSpeedResult",
    "scalar_operator",
    "check_hyperbolicity",
    "derive_tilde",
    "max_speed",
    "apply_operator_direct",
    "apply_operator_factorized",
    "manufactured_source",
    "rhs",
    "initial_state",
    "integrate",
    "measure_field",
    "measure_constants",
    "lambda_formula",
    "select_lambda",
    "lifespan",
    "energy_report",
    "time_derivative",
    "extract_traces",
    "finite_speed_check",
    "save_trajectory",
    "load_trajectory",
]

TRAJECTORY_FORMAT = 1


class NotHyperbolic(ValueError):
    """Hyperbolicity fails; ``witness`` holds ``(t, grid index, value)``."""

    def __init__(self, message: str, witness: tuple):
        super().__init__(message)
        self.witness = witness


class CFLViolation(ValueError):
    pass


class SolverBlowup(FloatingPointError):
    def __init__(self, t: float, step: int):
        super().__init__(f"non-finite state at t = {t:.6g} (step {step})")
        self.t = t
        self.step = step


# -- coefficients ----------------------------------------------------------------


def _zero(t, x):
    return 0.0


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """A real coefficient given in closed form as ``func(t, x)``.

    ``x`` is the grid coordinate array (a tuple of arrays in 2-D).
    ``time_derivative`` is optional; without it ``d/dt`` is a centred difference.
    """

    func: Callable
    time_derivative: Callable | None = None
    label: str = ""
    is_constant: bool = False

    @classmethod
    def constant(cls, value: float) -> "CoefficientField":
        value = float(value)
        return cls(lambda t, x: value, _zero, label=f"{value:g}", is_constant=True)

    @classmethod
    def coerce(cls, value) -> "CoefficientField":
        if isinstance(value, CoefficientField):
            return value
        if callable(value):
            return cls(value)
        return cls.constant(value)

    def sample(self, grid: Grid, t: float) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.func(t, grid.x), dtype=float), grid.shape)

    def sample_dt(self, grid: Grid, t: float, h: float = 1e-5) -> np.ndarray:
        if self.time_derivative is not None:
            return np.broadcast_to(np.asarray(self.time_derivative(t, grid.x), dtype=float), grid.shape)
        return (self.sample(grid, t + h) - self.sample(grid, t - h)) / (2 * h)


def _field_tuple(values, n, name):
    if values is None:
        return tuple(CoefficientField.constant(0.0) for _ in range(n))
    values = tuple(CoefficientField.coerce(v) for v in values)
    if len(values) != n:
        raise ValueError(f"{name} needs {n} entries, got {len(values)}")
    return values


@dataclass(frozen=True, eq=False)
class HyperbolicOperator:
    """Coefficients of ``L`` on ``[0, t_max] x torus``; ``a_jk`` is stored as a nested tuple."""

    dim: int
    a0: CoefficientField
    a: tuple
    ajk: tuple
    b0: CoefficientField = None
    c0: CoefficientField = None
    b: tuple = None
    c: tuple = None
    d: CoefficientField = None
    alpha: float = 0.75
    t_max: float = 1.0
    label: str = ""

    def __post_init__(self):
        n = self.dim
        if n not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {n}")
        if not 0.5 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (1/2, 1), got {self.alpha}")
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("a0", CoefficientField.coerce(self.a0))
        set_("a", _field_tuple(self.a, n, "a"))
        rows = tuple(_field_tuple(row, n, "ajk row") for row in self.ajk)
        if len(rows) != n:
            raise ValueError(f"ajk needs {n} rows")
        set_("ajk", rows)
        for k in ("b0", "c0", "d"):
            set_(k, CoefficientField.coerce(0.0 if getattr(self, k) is None else getattr(self, k)))
        set_("b", _field_tuple(self.b, n, "b"))
        set_("c", _field_tuple(self.c, n, "c"))

    def principal_fields(self):
        fields = [self.a0, *self.a]
        for j in range(self.dim):
            fields.extend(self.ajk[j][j:])
        return fields

    def lower_order_fields(self):
        return [self.b0, self.c0, *self.b, *self.c]


def scalar_operator(a11, a0=1.0, a1=0.0, b0=0.0, c0=0.0, b1=0.0, c1=0.0, d=0.0, *, t_max=1.0, alpha=0.75, label=""):
    """One-dimensional operator from scalars, callables ``f(t, x)`` or fields."""
    return HyperbolicOperator(1, a0, (a1,), ((a11,),), b0, c0, (b1,), (c1,), d, alpha, t_max, label)


@dataclass(frozen=True, eq=False)
class TildeCoefficients:
    """Tilde coefficients of the factorised operator, sampled at time ``t``."""

    t: float
    a0: np.ndarray
    a: np.ndarray  # (n, *grid) original a_j, kept for X
    c0: np.ndarray
    a_tilde_jk: np.ndarray  # (n, n, *grid)
    a_tilde_j: np.ndarray  # (n, *grid)
    b_tilde_0: np.ndarray
    b_tilde_j: np.ndarray
    c_tilde_j: np.ndarray
    c_tilde_0: np.ndarray
    d_tilde: np.ndarray


def derive_tilde(op: HyperbolicOperator, grid: Grid, t: float = 0.0) -> TildeCoefficients:
    """Pointwise tilde coefficients; ``d~ = d - b0 c0 / a0`` is the zero-order term that makes the factorized form exact."""
    n = op.dim
    a0 = op.a0.sample(grid, t)
    if np.min(a0) <= 0:
        raise NotHyperbolic("a0 must be positive", (t, int(np.argmin(a0)), float(np.min(a0))))
    a = np.stack([f.sample(grid, t) for f in op.a])
    ajk = np.stack([np.stack([op.ajk[j][k].sample(grid, t) for k in range(n)]) for j in range(n)])
    b0, c0, d = op.b0.sample(grid, t), op.c0.sample(grid, t), op.d.sample(grid, t)
    b = np.stack([f.sample(grid, t) for f in op.b])
    c = np.stack([f.sample(grid, t) for f in op.c])
    at_j = a / a0
    at_jk = ajk + a[:, None] * a[None, :] / a0
    bt0 = b0 / a0
    ct0 = c0 / a0
    return TildeCoefficients(
        t=t,
        a0=a0,
        a=a,
        c0=c0,
        a_tilde_jk=at_jk,
        a_tilde_j=at_j,
        b_tilde_0=bt0,
        b_tilde_j=b - bt0 * a,
        c_tilde_j=c - at_j * c0,
        c_tilde_0=ct0,
        d_tilde=d - b0 * ct0,
    )


def _default_times(op: HyperbolicOperator, count: int = 17) -> np.ndarray:
    return np.linspace(0.0, op.t_max, count)


def check_hyperbolicity(op: HyperbolicOperator, grid: Grid, times=None) -> tuple[float, float]:
    """``(delta0, delta1)``: grid minima of ``a0`` and of the smallest eigenvalue of ``(a~_jk)``."""
    times = _default_times(op) if times is None else np.atleast_1d(times)
    n = op.dim
    delta0, delta1 = np.inf, np.inf
    for t in times:
        for j in range(n):
            for k in range(j + 1, n):
                if not np.allclose(op.ajk[j][k].sample(grid, t), op.ajk[k][j].sample(grid, t), rtol=0, atol=1e-14):
                    raise NotHyperbolic(f"a_jk is not symmetric at t = {t}", (float(t), (j, k), np.nan))
        a0 = op.a0.sample(grid, t)
        i0 = int(np.argmin(a0))
        if a0.flat[i0] <= 0:
            raise NotHyperbolic(f"a0 = {a0.flat[i0]:.6g} <= 0 at t = {t:.6g}", (float(t), i0, float(a0.flat[i0])))
        tilde = derive_tilde(op, grid, t)
        mats = np.moveaxis(tilde.a_tilde_jk.reshape(n, n, -1), -1, 0)
        eig = np.linalg.eigvalsh(mats)[:, 0]
        i1 = int(np.argmin(eig))
        if eig[i1] <= 0:
            raise NotHyperbolic(
                f"quadratic form not positive: eigenvalue {eig[i1]:.6g} at t = {t:.6g}", (float(t), i1, float(eig[i1]))
            )
        delta0 = min(delta0, float(a0.flat[i0]))
        delta1 = min(delta1, float(eig[i1]))
    return delta0, delta1


def max_speed(op: HyperbolicOperator, grid: Grid, times=None, directions: int = 64) -> float:
    """Largest characteristic speed ``|a~.xi| + sqrt(a~_jk xi_j xi_k / a0)`` over unit ``xi``."""
    times = _default_times(op) if times is None else np.atleast_1d(times)
    if op.dim == 1:
        xis = np.array([[1.0]])
    else:
        ang = np.linspace(0.0, np.pi, directions, endpoint=False)
        xis = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    speed = 0.0
    for t in times:
        tilde = derive_tilde(op, grid, t)
        for xi in xis:
            adv = np.abs(np.tensordot(xi, tilde.a_tilde_j, axes=1))
            quad = np.einsum("j,k,jk...->...", xi, xi, tilde.a_tilde_jk)
            speed = max(speed, float(np.max(adv + np.sqrt(quad / tilde.a0))))
    return speed


# -- spatial operators -----------------------------------------------------------


def _grad(grid: Grid, u: np.ndarray) -> list[np.ndarray]:
    return [grid.derivative(u, j) for j in range(grid.dim)]


def _div(grid: Grid, comps) -> np.ndarray:
    return sum(grid.derivative(c, j) for j, c in enumerate(comps))


def _y_tilde(grid, tilde, u, du=None):
    du = _grad(grid, u) if du is None else du
    return sum(tilde.a_tilde_j[j] * du[j] for j in range(grid.dim))


def _y_tilde_star(grid, tilde, v):
    return _div(grid, [tilde.a_tilde_j[j] * v for j in range(grid.dim)])


def _l2_tilde(grid, tilde, du):
    n = grid.dim
    return _div(grid, [sum(tilde.a_tilde_jk[j, k] * du[k] for k in range(n)) for j in range(n)])


def _l1_tilde(grid, tilde, u, du):
    n = grid.dim
    adv = sum(tilde.b_tilde_j[j] * du[j] for j in range(n))
    return adv + _div(grid, [tilde.c_tilde_j[j] * u for j in range(n)])


def apply_operator_direct(op: HyperbolicOperator, grid: Grid, t: float, u, ut, utt) -> np.ndarray:
    """``L u`` from the original divergence form, given ``u``, ``d_t u``, ``d_t^2 u`` at time ``t``."""
    n = op.dim
    a0, a0t = op.a0.sample(grid, t), op.a0.sample_dt(grid, t)
    du, dut = _grad(grid, u), _grad(grid, ut)
    out = a0t * ut + a0 * utt
    for j in range(n):
        aj, ajt = op.a[j].sample(grid, t), op.a[j].sample_dt(grid, t)
        out = out + ajt * du[j] + aj * dut[j] + grid.derivative(aj * ut, j)
        flux = sum(op.ajk[j][k].sample(grid, t) * du[k] for k in range(n))
        out = out - grid.derivative(flux, j)
    c0, c0t = op.c0.sample(grid, t), op.c0.sample_dt(grid, t)
    out = out + op.b0.sample(grid, t) * ut + c0t * u + c0 * ut
    for j in range(n):
        out = out + op.b[j].sample(grid, t) * du[j] + grid.derivative(op.c[j].sample(grid, t) * u, j)
    return out + op.d.sample(grid, t) * u


def apply_operator_factorized(op: HyperbolicOperator, grid: Grid, t: float, u, ut, utt) -> np.ndarray:
    """``L u = (Y* + b~0)(X + c0) u - L~2 u + L~1 u + d~ u`` with ``Y* v = d_t v + Y~* v``."""
    n = op.dim
    tilde = derive_tilde(op, grid, t)
    du, dut = _grad(grid, u), _grad(grid, ut)
    v = tilde.a0 * ut + sum(tilde.a[j] * du[j] for j in range(n)) + tilde.c0 * u
    vt = op.a0.sample_dt(grid, t) * ut + tilde.a0 * utt + op.c0.sample_dt(grid, t) * u + tilde.c0 * ut
    for j in range(n):
        vt = vt + op.a[j].sample_dt(grid, t) * du[j] + tilde.a[j] * dut[j]
    out = vt + _y_tilde_star(grid, tilde, v) + tilde.b_tilde_0 * v
    return out - _l2_tilde(grid, tilde, du) + _l1_tilde(grid, tilde, u, du) + tilde.d_tilde * u


def manufactured_source(op: HyperbolicOperator, grid: Grid, exact: Callable) -> Callable:
    """Source ``f = L u*`` for ``exact(t) -> (u, d_t u, d_t^2 u)``, as a callable ``f(t, x)``."""

    def f(t, x):
        return apply_operator_direct(op, grid, t, *exact(t))

    return f


# -- time integration ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateUV:
    t: float
    u: GridFunction
    v: GridFunction


@dataclass(eq=False)
class Trajectory:
    """Stored snapshots of an integration plus what is needed to reproduce it."""

    states: list
    dt: float
    stride: int
    dim: int
    n: int
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def grid(self) -> Grid:
        return get_grid(self.dim, self.n)

    def u_array(self) -> np.ndarray:
        return np.stack([s.u.values for s in self.states])

    def v_array(self) -> np.ndarray:
        return np.stack([s.v.values for s in self.states])


def _eval_source(source, grid, t):
    if source is None:
        return 0.0
    return np.asarray(source(t, grid.x))


def rhs(op: HyperbolicOperator, grid: Grid, t: float, u: np.ndarray, v: np.ndarray, f=0.0, tilde=None):
    """Right-hand side ``(d_t u, d_t v)`` of the first-order system at time ``t``."""
    tilde = derive_tilde(op, grid, t) if tilde is None else tilde
    du = _grad(grid, u)
    dudt = -_y_tilde(grid, tilde, u, du) - tilde.c_tilde_0 * u + v / tilde.a0
    dvdt = (
        -_y_tilde_star(grid, tilde, v)
        - tilde.b_tilde_0 * v
        + _l2_tilde(grid, tilde, du)
        - _l1_tilde(grid, tilde, u, du)
        - tilde.d_tilde * u
        + f
    )
    return dudt, dvdt


def initial_state(op: HyperbolicOperator, u0: GridFunction, u1: GridFunction) -> StateUV:
    """``v(0) = u1 + c0(0) u0``, since ``u1 = X u|_{t=0}`` already contains the ``a_j`` terms."""
    grid = u0.grid
    c0 = op.c0.sample(grid, 0.0)
    return StateUV(0.0, u0, GridFunction(u1.values + c0 * u0.values, u0.dim))


def integrate(
    op: HyperbolicOperator,
    u0: GridFunction,
    u1: GridFunction,
    dt: float,
    T: float,
    f1=None,
    f2=None,
    *,
    stride: int = 1,
    cfl: float = 0.5,
    check_cfl: bool = True,
    meta: dict | None = None,
) -> Trajectory:
    """Classical RK4 from ``(u0, u1 = X u(0))`` up to ``T``.

    Sources are callables ``f(t, x)``.  The step is shrunk slightly so that
    ``T`` is hit exactly.  Snapshots are kept every ``stride`` steps and at ``T``.
    """
    u0._check(u1)
    grid = u0.grid
    if T < 0 or dt <= 0:
        raise ValueError("need dt > 0 and T >= 0")
    steps = int(np.ceil(T / dt - 1e-9))
    h = T / steps if steps else dt
    if check_cfl and steps:
        speed = max_speed(op, grid, np.linspace(0.0, T, 9))
        limit = cfl * grid.spacing / speed if speed > 0 else np.inf
        if h > limit * (1 + 1e-12):
            raise CFLViolation(f"dt = {h:.4g} exceeds the CFL limit {limit:.4g} (speed {speed:.4g}, cfl {cfl})")
    state = initial_state(op, u0, u1)
    u, v = np.array(state.u.values), np.array(state.v.values)
    if np.iscomplexobj(u) or np.iscomplexobj(v):
        u, v = u.astype(complex), v.astype(complex)
    states = [state]

    def stage(t, uu, vv):
        f = _eval_source(f1, grid, t) + _eval_source(f2, grid, t)
        return rhs(op, grid, t, uu, vv, f)

    for step in range(1, steps + 1):
        t = (step - 1) * h
        k1u, k1v = stage(t, u, v)
        k2u, k2v = stage(t + h / 2, u + h / 2 * k1u, v + h / 2 * k1v)
        k3u, k3v = stage(t + h / 2, u + h / 2 * k2u, v + h / 2 * k2v)
        k4u, k4v = stage(t + h, u + h * k3u, v + h * k3v)
        u = u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise SolverBlowup(step * h, step)
        if step % stride == 0 or step == steps:
            states.append(StateUV(step * h, GridFunction(u, grid.dim), GridFunction(v, grid.dim)))
    info = {"dt": h, "stride": stride, "T": T, "steps": steps}
    info.update(meta or {})
    return Trajectory(states, h, stride, grid.dim, grid.n, info)


# -- constants and lambda --------------------------------------------------------


def measure_field(field_: CoefficientField, grid: Grid, t_max: float, alpha: float = 0.75, n_times: int = 129, x_stride: int = 8):
    """Space-time seminorms of a coefficient from samples on ``[0, t_max] x grid``.

    Pairs along time, along space and (on an ``x_stride`` subgrid) in oblique
    directions are all swept; the report takes the largest ratio of each kind.
    """
    times = np.linspace(0.0, t_max, n_times)
    samples = np.stack([field_.sample(grid, t) for t in times])
    ht = times[1] - times[0] if n_times > 1 else 1.0
    far = 1e9
    per = (False,) + (True,) * grid.dim
    spacings = [
        (ht,) + (far,) * grid.dim,
        (far,) + (grid.spacing,) * grid.dim,
    ]
    views = [samples, samples]
    sub = samples[(slice(None),) + (slice(None, None, x_stride),) * grid.dim]
    views.append(sub)
    spacings.append((ht,) + (grid.spacing * x_stride,) * grid.dim)
    ll = max(ll_seminorm(vv, spacing=sp, periodic=per) for vv, sp in zip(views, spacings))
    hol = max(holder_norm(vv, alpha, spacing=sp, periodic=per) for vv, sp in zip(views, spacings))
    lip = max(holder_norm(vv, 1.0, spacing=sp, periodic=per) for vv, sp in zip(views, spacings))
    return SeminormReport(float(np.max(np.abs(samples))), ll, alpha, hol, lip)


@dataclass(frozen=True)
class OperatorConstants:
    a_linf: float
    a_ll: float
    b: float
    delta0: float
    delta1: float

    def as_dict(self) -> dict:
        return {"A_Linf": self.a_linf, "A_LL": self.a_ll, "B": self.b, "delta0": self.delta0, "delta1": self.delta1}


def measure_constants(op: HyperbolicOperator, grid: Grid, n_times: int = 129) -> OperatorConstants:
    """Measured ``A_Linf``, ``A_LL``, ``B`` and hyperbolicity constants on ``[0, t_max]``."""
    delta0, delta1 = check_hyperbolicity(op, grid, np.linspace(0.0, op.t_max, n_times))
    principal = [measure_field(f, grid, op.t_max, op.alpha, n_times) for f in op.principal_fields()]
    lower = [measure_field(f, grid, op.t_max, op.alpha, n_times) for f in op.lower_order_fields()]
    d_sup = float(max(np.max(np.abs(op.d.sample(grid, t))) for t in np.linspace(0.0, op.t_max, n_times)))
    return OperatorConstants(
        a_linf=max(r.l_infinity for r in principal),
        a_ll=max(r.ll_seminorm for r in principal),
        b=max([r.holder_norm for r in lower] + [d_sup]),
        delta0=delta0,
        delta1=delta1,
    )


def lambda_formula(a_ll: float, a_linf: float, delta0: float, delta1: float, k0: float, tol: float = 1e-12) -> float:
    """``max(2 K0 A_LL A_Linf / (delta0 delta1), 2 K0 A_LL A_Linf / delta0^2)``, zero when ``A_LL`` vanishes."""
    if a_ll <= tol * max(a_linf, 1.0):
        return 0.0
    base = 2.0 * k0 * a_ll * a_linf
    return max(base / (delta0 * delta1), base / delta0**2)


def select_lambda(op: HyperbolicOperator, k0_table, grid: Grid, constants: OperatorConstants | None = None) -> float:
    """Loss rate predicted from measured constants; ``k0_table`` maps ``A_Linf/delta0`` to ``K0``."""
    c = constants or measure_constants(op, grid)
    k0 = k0_table.k0(c.a_linf / c.delta0) if hasattr(k0_table, "k0") else float(k0_table(c.a_linf / c.delta0))
    return lambda_formula(c.a_ll, c.a_linf, c.delta0, c.delta1, k0)


def lifespan(t0: float, theta: float, theta1: float, lam: float) -> float:
    """``T = min(T0, (theta1 - theta)/lambda)``."""
    if lam <= 0:
        return t0
    return min(t0, (theta1 - theta) / lam)


# -- energy ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnergyData:
    u0: GridFunction
    u1: GridFunction
    f1: Callable | None = None
    f2: Callable | None = None


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    """Weighted norms along a trajectory and both sides of the energy inequality.

    ``ratio[i]`` is LHS/RHS up to ``times[i]``; ``k_emp`` is its maximum, or
    NaN (with ``degenerate`` set) when both sides vanish.
    """

    theta: float
    theta1: float
    lam: float
    gamma: float
    T: float
    times: np.ndarray
    s: np.ndarray
    columns: dict
    lhs: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray
    k_emp: float
    degenerate: bool

    COLUMN_ORDER = ("u", "ut", "v", "u_log", "ut_log", "v_log", "f1", "f2")

    def rows(self):
        for i, t in enumerate(self.times):
            yield (float(t), float(self.s[i])) + tuple(float(self.columns[c][i]) for c in self.COLUMN_ORDER) + (
                float(self.lhs[i]),
                float(self.rhs[i]),
                float(self.ratio[i]),
            )

    @classmethod
    def header(cls):
        return ("t", "s") + cls.COLUMN_ORDER + ("lhs", "rhs", "ratio")


def time_derivative(op: HyperbolicOperator, state: StateUV) -> GridFunction:
    """``d_t u = -Y~ u - c~0 u + v/a0``, read off the system rather than differenced."""
    grid = state.u.grid
    tilde = derive_tilde(op, grid, state.t)
    u = state.u.values
    ut = -_y_tilde(grid, tilde, u) - tilde.c_tilde_0 * u + state.v.values / tilde.a0
    return GridFunction(ut, grid.dim)


def _norm(values, grid, s, shift):
    return multiplier_norm(GridFunction(values, grid.dim), LogSobolevIndex(s, shift))


def energy_report(
    traj: Trajectory,
    op: HyperbolicOperator,
    data: EnergyData,
    theta: float,
    theta1: float,
    lam: float,
    gamma: float = 0.0,
) -> EnergyTrace:
    """Both sides of the energy inequality with weight ``exp(-2 gamma t)``, using snapshots up to ``T``."""
    alpha = op.alpha
    if not (1 - alpha < theta < theta1 < alpha):
        raise ValueError(f"need 1 - alpha < theta < theta1 < alpha, got {theta}, {theta1} with alpha = {alpha}")
    T = lifespan(op.t_max, theta, theta1, lam)
    grid = traj.grid
    states = [st for st in traj.states if st.t <= T * (1 + 1e-12)]
    if not states or states[0].t != 0.0:
        raise ValueError("trajectory must start at t = 0")
    if states[-1].t < T * (1 - 1e-9):
        raise ValueError(f"trajectory ends at {states[-1].t:.6g} before T = {T:.6g}")
    times = np.array([st.t for st in states])
    s = theta + lam * times
    cols = {c: np.zeros(len(states)) for c in EnergyTrace.COLUMN_ORDER}
    for i, st in enumerate(states):
        ut = time_derivative(op, st).values
        si = s[i]
        cols["u"][i] = _norm(st.u.values, grid, 1 - si, 0.0)
        cols["ut"][i] = _norm(ut, grid, -si, 0.0)
        cols["v"][i] = _norm(st.v.values, grid, -si, 0.0)
        cols["u_log"][i] = _norm(st.u.values, grid, 1 - si, 0.5)
        cols["ut_log"][i] = _norm(ut, grid, -si, 0.5)
        cols["v_log"][i] = _norm(st.v.values, grid, -si, 0.5)
        if data.f1 is not None:
            cols["f1"][i] = _norm(_eval_source(data.f1, grid, st.t) * np.ones(grid.shape), grid, -si, 0.0)
        if data.f2 is not None:
            cols["f2"][i] = _norm(_eval_source(data.f2, grid, st.t) * np.ones(grid.shape), grid, -si, -0.5)
    w = np.exp(-2 * gamma * times)
    integral = lambda y: cumulative_trapezoid(y, times, initial=0.0) if len(times) > 1 else np.zeros_like(y)  # noqa: E731
    lhs = (
        np.maximum.accumulate(w * cols["u"] ** 2)
        + np.maximum.accumulate(w * cols["ut"] ** 2)
        + integral(w * (cols["u_log"] ** 2 + cols["ut_log"] ** 2))
    )
    data_term = multiplier_norm(data.u0, LogSobolevIndex(1 - theta)) ** 2 + multiplier_norm(data.u1, LogSobolevIndex(-theta)) ** 2
    rhs_ = data_term + integral(np.sqrt(w) * cols["f1"]) ** 2 + integral(w * cols["f2"] ** 2)
    scale = max(float(np.max(rhs_)), float(np.max(lhs)), 1e-300)
    zero = (rhs_ <= 1e-28 * scale) & (lhs <= 1e-28 * scale)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(zero, np.nan, lhs / np.where(rhs_ > 0, rhs_, np.nan))
    degenerate = bool(np.all(zero)) or float(np.max(lhs)) == 0.0 and float(np.max(rhs_)) == 0.0
    k_emp = float("nan") if degenerate else float(np.nanmax(ratio))
    return EnergyTrace(theta, theta1, lam, gamma, T, times, s, cols, lhs, rhs_, ratio, k_emp, degenerate)


def extract_traces(traj: Trajectory, op: HyperbolicOperator) -> tuple[GridFunction, GridFunction]:
    """``(u(0), X u(0))`` with ``d_t u`` taken from the system relation."""
    st = traj.states[0]
    if st.t != 0.0:
        raise ValueError("no snapshot at t = 0")
    grid = st.u.grid
    ut = time_derivative(op, st).values
    a0 = op.a0.sample(grid, 0.0)
    du = _grad(grid, st.u.values)
    xu = a0 * ut + sum(op.a[j].sample(grid, 0.0) * du[j] for j in range(grid.dim))
    return st.u, GridFunction(xu, grid.dim)


# -- finite speed ----------------------------------------------------------------


@dataclass(frozen=True)
class FiniteSpeedResult:
    passed: bool
    speed: float
    excess_cells: float
    times: tuple
    radii: tuple

    def __bool__(self):
        return self.passed


def _circle_distance_to_interval(x, lo, hi):
    period = 2 * np.pi
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    d = np.abs((x - centre + np.pi) % period - np.pi)
    return np.maximum(d - half, 0.0)


def finite_speed_check(
    traj: Trajectory,
    op: HyperbolicOperator,
    support0: tuple[float, float],
    tolerance_cells: int = 4,
    threshold: float = 1e-8,
) -> FiniteSpeedResult:
    """Check that ``{|u| > threshold max|u|}`` stays within ``support0`` widened by ``c_max t`` plus a few cells."""
    if traj.dim != 1:
        raise NotImplementedError("finite speed check is one-dimensional")
    grid = traj.grid
    speed = max_speed(op, grid, np.linspace(0.0, op.t_max, 17))
    lo, hi = support0
    dist = _circle_distance_to_interval(grid.x, lo, hi)
    worst = -np.inf
    times, radii = [], []
    for st in traj.states:
        mag = np.abs(st.u.values)
        top = float(mag.max())
        if top == 0.0:
            times.append(st.t)
            radii.append(0.0)
            continue
        radius = float(dist[mag > threshold * top].max())
        times.append(st.t)
        radii.append(radius)
        worst = max(worst, (radius - speed * st.t) / grid.spacing)
    worst = float(worst) if np.isfinite(worst) else 0.0
    return FiniteSpeedResult(worst <= tolerance_cells, speed, worst, tuple(times), tuple(radii))


# -- persistence -----------------------------------------------------------------


def save_trajectory(traj: Trajectory, directory: str | Path) -> Path:
    """Write ``times.f64``, ``u.c128``, ``v.c128`` (little-endian, C order) and ``meta.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    traj.times.astype("<f8").tofile(directory / "times.f64")
    traj.u_array().astype("<c16").tofile(directory / "u.c128")
    traj.v_array().astype("<c16").tofile(directory / "v.c128")
    meta = {
        "format_version": TRAJECTORY_FORMAT,
        "dim": traj.dim,
        "points_per_axis": traj.n,
        "dt": traj.dt,
        "stride": traj.stride,
        "snapshots": len(traj.states),
        "real": bool(all(st.u.is_real and st.v.is_real for st in traj.states)),
        "info": traj.meta,
    }
    with open(directory / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return directory


def load_trajectory(directory: str | Path) -> Trajectory:
    directory = Path(directory)
    with open(directory / "meta.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != TRAJECTORY_FORMAT:
        raise ValueError(f"unsupported trajectory format {meta.get('format_version')!r}")
    dim, n, count = meta["dim"], meta["points_per_axis"], meta["snapshots"]
    shape = (count,) + (n,) * dim
    times = np.fromfile(directory / "times.f64", dtype="<f8")
    u = np.fromfile(directory / "u.c128", dtype="<c16").reshape(shape)
    v = np.fromfile(directory / "v.c128", dtype="<c16").reshape(shape)
    if meta["real"]:
        u, v = u.real, v.real
    states = [StateUV(float(t), GridFunction(u[i], dim), GridFunction(v[i], dim)) for i, t in enumerate(times)]
    return Trajectory(states, meta["dt"], meta["stride"], dim, n, meta["info"])
