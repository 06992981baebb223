"""Verification suite: every measured contract of the library as a list of checks.

Each check is one of

* ``calibrated``: passes when ``measured <= 1.25 * C*`` with ``C*`` read from
  the calibration file;
* ``max`` / ``min``: a fixed upper or lower bound.

``calibrate`` first fixes the tuning settings (``c0`` for the choice of
``nu``, the ``K0`` table and ``gamma0``), then records every calibrated
constant from one run of all groups.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..calibration import TOLERANCE, Calibration, CalibrationMissing
from ..dyadic import decompose, max_block_index
from ..grid import GridFunction, get_grid, random_band_limited
from ..norms import (
    LogSobolevIndex,
    ll_ratio_at_separation,
    ll_seminorm,
    multiplier_norm,
    norm_equivalence_bounds,
    sobolev_norm,
    verify_dyadic_coefficient_bounds,
)
from ..paraproducts import (
    ModifiedParaproduct,
    MollifiedParaproduct,
    Paraproduct,
    PositivityViolation,
    apply_modified,
    apply_mollified,
    apply_paraproduct,
    apply_remainder,
    assemble_matrix,
    choose_nu,
    defect_operator,
    estimate_operator_norm,
    positivity_gap,
    symmetric_part_min_eigenvalue,
)
from ..solver import (
    CoefficientField,
    EnergyData,
    apply_operator_direct,
    apply_operator_factorized,
    check_hyperbolicity,
    energy_report,
    extract_traces,
    finite_speed_check,
    integrate,
    lifespan,
    manufactured_source,
    measure_constants,
    measure_field,
    scalar_operator,
    select_lambda,
    time_derivative,
    HyperbolicOperator,
)
from .families import build_family, ll_omega
from .loss_rate import loss_rate_experiment

__all__ = [
    "GROUPS",
    "SuiteConfig",
    "Measurement",
    "Check",
    "SuiteReport",
    "run_measurements",
    "verify_suite",
    "calibrate",
]

GROUPS = ("dyadic", "paraproduct", "positivity", "mollified", "solver", "energy", "speed", "loss", "families")

LIPSCHITZ_FAMILIES = ("constant", "smooth_sine", "tent_t")
LL_FAMILIES = ("ll_cusp", "cgs_oscillatory", "sub_ll")
CGS_AMPLITUDES = (0.25, 0.5, 1.0)
ENERGY_SUITE = ("constant", "smooth_sine", "tent_t", "ll_cusp", "cgs_oscillatory", "sub_ll")
GAMMA_CANDIDATES = tuple(2.0**j for j in range(0, 8))


@dataclass
class SuiteConfig:
    n: int = 256
    seed: int = 0
    trials: int = 100
    positivity_trials: int = 500
    T: float = 1.0
    dt: float = 2e-3
    energy_n: int = 128
    loss_n: int = 512
    loss_frequencies: tuple = (16, 32, 64, 128)
    theta: float = 0.4
    theta1: float = 0.6

    @classmethod
    def from_mapping(cls, data: dict) -> "SuiteConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "loss_frequencies" in data:
            data["loss_frequencies"] = tuple(int(k) for k in data["loss_frequencies"])
        return cls(**data)


@dataclass(frozen=True)
class Measurement:
    id: str
    measured: float
    mode: str = "calibrated"
    bound: float | None = None


@dataclass(frozen=True)
class Check:
    id: str
    measured: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return {"id": self.id, "measured": _clean(self.measured), "threshold": _clean(self.threshold), "pass": self.passed}


@dataclass
class SuiteReport:
    groups: tuple
    config: SuiteConfig
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["loss_frequencies"] = list(cfg["loss_frequencies"])
        return {
            "config": cfg,
            "groups": list(self.groups),
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def _clean(x):
    x = float(x)
    if np.isnan(x):
        return None
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# -- shared coefficients ---------------------------------------------------------


def tent_x(n: int) -> np.ndarray:
    """Distance to the nearest multiple of 2 pi."""
    x = get_grid(1, n).x
    return np.minimum(x, 2 * np.pi - x)


def cusp_x(n: int) -> np.ndarray:
    x = get_grid(1, n).x
    return ll_omega(np.minimum(np.abs(x - np.pi), 1.0))


def tent_t(t):
    return np.maximum(0.0, 1.0 - np.abs(2.0 * t - 1.0))


class _Context:
    """Per-run state: config, settings, caches of expensive shared results."""

    def __init__(self, config: SuiteConfig, calibration: Calibration):
        self.config = config
        self.calibration = calibration
        self.cache = {}

    def rng(self, *tag):
        return np.random.default_rng([self.config.seed, *tag])

    def memo(self, key, fn):
        if key not in self.cache:
            self.cache[key] = fn()
        return self.cache[key]

    def loss_fit(self, fid, params):
        cfg = self.config
        key = ("loss", fid, tuple(sorted(params.items())))
        return self.memo(
            key,
            lambda: loss_rate_experiment(
                build_family(fid, params), cfg.loss_frequencies, T=cfg.T, n=cfg.loss_n, dt=cfg.dt
            ),
        )

    def family_constants(self, fid, params, n):
        fam = build_family(fid, params)
        key = ("constants", fid, tuple(sorted(params.items())), n)
        return self.memo(key, lambda: measure_constants(fam.operator(self.config.T), get_grid(1, n), fam.time_samples))


# -- dyadic ----------------------------------------------------------------------


def _group_dyadic(ctx: _Context):
    out = []
    recon, leak = 0.0, 0.0
    for n in (64, 256, 1024):
        grid = get_grid(1, n)
        absk = grid.abs_wavenumber
        for i in range(100):
            u = random_band_limited(n, ctx.rng(1, n, i))
            dec = decompose(u)
            recon = max(recon, (u - dec.reconstruct()).l2_norm() / u.l2_norm())
            scale = np.max(np.abs(u.spectrum))
            for k, block in enumerate(dec.blocks):
                lo = 0.0 if k == 0 else 1.1 * 2.0 ** (k - 1)
                outside = (absk < lo * (1 - 1e-12)) | (absk > 1.9 * 2.0**k * (1 + 1e-12))
                if outside.any():
                    leak = max(leak, float(np.max(np.abs(block.spectrum[outside]))) / scale)
    out.append(Measurement("dyadic.reconstruction", recon, "max", 1e-10))
    out.append(Measurement("dyadic.localization", leak, "max", 1e-13))

    table = verify_dyadic_coefficient_bounds(GridFunction(tent_x(1024)), alpha=0.5)
    ks = slice(2, 9)
    out.append(Measurement("dyadic.block_ll", float(np.nanmax(table.block_ll[ks]))))
    out.append(Measurement("dyadic.gradient_ll", float(np.nanmax(table.gradient_ll[ks]))))
    out.append(Measurement("dyadic.block_holder", float(np.nanmax(table.block_holder[ks]))))
    out.append(Measurement("dyadic.remainder_scaled", float(np.nanmax(table.remainder_scaled[ks]))))
    out.append(Measurement("dyadic.remainder_unscaled", float(np.nanmax(table.remainder_unscaled[ks]))))

    worst = 0.0
    for s in (-1.0, -0.5, 0.0, 0.5, 1.0, 2.0):
        for shift in (-0.5, 0.0, 0.5):
            idx = LogSobolevIndex(s, shift)
            c1, c2 = norm_equivalence_bounds(256, idx)
            for i in range(100):
                u = random_band_limited(256, ctx.rng(2, i))
                r = sobolev_norm(u, idx) / multiplier_norm(u, idx)
                worst = max(worst, r / c2, c1 / r)
    out.append(Measurement("norms.equivalence", worst, "max", 1.0 + 1e-9))
    return out


# -- paraproducts ----------------------------------------------------------------


def _group_paraproduct(ctx: _Context):
    cfg = ctx.config
    n, trials = cfg.n, cfg.trials
    out = []
    split = 0.0
    for i in range(100):
        a = random_band_limited(n, ctx.rng(3, i, 0)).values
        u = random_band_limited(n, ctx.rng(3, i, 1))
        p = Paraproduct(a)
        total = apply_paraproduct(p, u).values + apply_remainder(p, u).values
        split = max(split, float(np.linalg.norm(total - a * u.values) / np.linalg.norm(a * u.values)))
    out.append(Measurement("paraproduct.splitting", split, "max", 1e-10))

    a = 1.0 + tent_x(n)
    a_inf = float(np.max(np.abs(a)))
    p = Paraproduct(a)
    for s in (-2.0, -1.0, 0.0, 1.0, 2.0):
        worst = 0.0
        for shift in (-0.5, 0.0, 0.5):
            idx = LogSobolevIndex(s, shift)
            est = estimate_operator_norm(lambda u: apply_paraproduct(p, u), idx, idx, trials, cfg.seed, n=n)
            worst = max(worst, est.measured_norm / a_inf)
        out.append(Measurement(f"paraproduct.bounded.s{s:g}", worst))

    def remainder_constant(coef, s):
        pr = Paraproduct(coef)
        est = estimate_operator_norm(
            lambda u: apply_remainder(pr, u),
            LogSobolevIndex(-s, 0.5),
            LogSobolevIndex(1 - s, -0.5),
            trials,
            cfg.seed,
            n=n,
        )
        return est.measured_norm / ll_seminorm(coef)

    base = tent_x(n)
    for s in (0.3, 0.5, 0.7):
        out.append(Measurement(f"paraproduct.remainder.s{s:g}", remainder_constant(base, s)))
    c_ref = remainder_constant(base, 0.5)
    spread = max(abs(remainder_constant(c * base, 0.5) - c_ref) / c_ref for c in (0.5, 2.0))
    out.append(Measurement("paraproduct.remainder_homogeneity", spread, "max", 1e-9))

    ll_a = ll_seminorm(a)
    for s in (-0.5, 0.0, 0.5):
        src_log, src = LogSobolevIndex(s, 0.5), LogSobolevIndex(s)
        est = estimate_operator_norm(
            lambda u: u * a,
            src_log,
            src_log,
            trials,
            cfg.seed,
            n=n,
            source_norm=lambda u: a_inf * multiplier_norm(u, src_log) + ll_a * multiplier_norm(u, src),
        )
        out.append(Measurement(f"paraproduct.product.s{s:g}", est.measured_norm))

    op = defect_operator("paraproduct_cut_difference", a, s=0.0, cuts=(3, 4))
    out.append(Measurement("paraproduct.cut_difference", op.estimate(trials, cfg.seed, n=n)))

    l2 = LogSobolevIndex(0.0)
    grid = get_grid(1, n)
    worst = 0.0
    for nu in range(1, 7):
        m = ModifiedParaproduct(a, nu)
        pt = Paraproduct(a)

        def diff(v):
            v = GridFunction(v)
            return apply_modified(m, v).values - apply_paraproduct(pt, v).values

        ratios = []
        for i in range(trials):
            u = random_band_limited(n, ctx.rng(4, nu, i))
            lhs = grid.l2_norm(diff(grid.derivative(u.values))) + grid.l2_norm(grid.derivative(diff(u.values)))
            ratios.append(lhs / (2.0**nu * a_inf * u.l2_norm()))
        worst = max(worst, max(ratios))
    out.append(Measurement("paraproduct.modified_low", worst))

    big = 1024
    ab = tent_x(big)
    ll_b = ll_seminorm(ab)
    worst = 0.0
    for nu in range(2, 11):
        m = ModifiedParaproduct(ab, nu)
        est = estimate_operator_norm(lambda u: u * ab - apply_modified(m, u), l2, l2, 20, cfg.seed, n=big)
        worst = max(worst, est.measured_norm / (nu * 2.0**-nu * ll_b))
    out.append(Measurement("paraproduct.modified_gap", worst))

    b = 1.0 + cusp_x(n)
    for psi in ("identity", "dx", "bessel"):
        worst = max(
            defect_operator("commutator_qpsi", a, s=s, psi=psi).estimate(trials, cfg.seed, n=n) for s in (0.0, 0.5, 1.0)
        )
        out.append(Measurement(f"defect.commutator.{psi}", worst))
    for side in ("right", "left"):
        out.append(Measurement(f"defect.adjoint.{side}", defect_operator("adjoint_defect", a, side=side).estimate(trials, cfg.seed, n=n)))
        out.append(
            Measurement(
                f"defect.modified_adjoint.{side}",
                defect_operator("modified_adjoint_defect", a, nu=3, side=side).estimate(trials, cfg.seed, n=n),
            )
        )
    out.append(Measurement("defect.composition", defect_operator("composition_defect", a, b=b).estimate(trials, cfg.seed, n=n)))

    out.append(Measurement("defect.constant_zero", _constant_defect_output(n, ctx), "max", 1e-12))
    return out


def constant_defect_outputs(n: int, seed: int = 0, trials: int = 10) -> dict:
    """Largest relative output of each defect operator built from constant coefficients."""
    c = np.full(n, 2.0)
    moll = MollifiedParaproduct(lambda t: c, 1.0, 3)
    ops = {
        "commutator_qpsi": [defect_operator("commutator_qpsi", c, s=s, psi=psi) for s in (0.0, 0.5, 1.0) for psi in ("identity", "dx", "bessel")],
        "adjoint_defect": [defect_operator("adjoint_defect", c, side=sd) for sd in ("left", "right")],
        "composition_defect": [defect_operator("composition_defect", c, b=np.full(n, 1.5))],
        "modified_adjoint_defect": [defect_operator("modified_adjoint_defect", c, nu=3, side=sd) for sd in ("left", "right")],
        "mollified_family": [
            defect_operator("mollified_family", mollified=moll, t=0.5, member=r, ll_a=0.0) for r in range(1, 6)
        ],
        "lambda_half_commutators": [
            defect_operator("lambda_half_commutators", mollified=moll, t=0.5, member=m, ll_a=0.0) for m in ("left", "right")
        ],
    }
    result = {}
    for kind, group in ops.items():
        worst = 0.0
        for i in range(trials):
            u = random_band_limited(n, np.random.default_rng([seed, 5, i]))
            scale = float(np.max(np.abs(u.values)))
            for op in group:
                worst = max(worst, float(np.max(np.abs(op(u).values))) / scale)
        result[kind] = worst
    return result


def _constant_defect_output(n, ctx):
    outputs = constant_defect_outputs(n, ctx.config.seed)
    # the composition defect of constants is -ab S_2 (I - S_2) d_x, not zero; it is reported by the acceptance tests
    outputs.pop("composition_defect")
    return max(outputs.values())


# -- positivity ------------------------------------------------------------------


def positivity_suite(n: int):
    """Scalar coefficients used to calibrate ``c0``: ``(name, samples, delta)``."""
    x = get_grid(1, n).x
    return [
        ("two_plus_sin", 2.0 + np.sin(x), 1.0),
        ("tent", 0.25 + tent_x(n) / np.pi, 0.25),
        ("cusp", 0.2 + 2.0 * cusp_x(n), 0.2),
        ("sharp_sine", 1.1 + np.sin(5 * x), 0.1),
        ("abs_sine", 0.1 + 3.0 * np.abs(np.sin(x)), 0.1),
    ]


def positivity_holds(c0: float, seed: int, trials: int = 200) -> bool:
    for name, a, delta in positivity_suite(256):
        nu = choose_nu(delta, ll_seminorm(a), c0)
        try:
            positivity_gap(ModifiedParaproduct(a, nu), trials, seed)
        except PositivityViolation:
            return False
    for name, a, delta in positivity_suite(64):
        nu = choose_nu(delta, ll_seminorm(a), c0)
        if symmetric_part_min_eigenvalue(assemble_matrix(ModifiedParaproduct(a, nu))) < delta / 2:
            return False
    return True


def calibrate_c0(seed: int, max_j: int = 8) -> float:
    """Largest ``c0 = 2^-j`` for which the positivity contract holds on the whole suite."""
    for j in range(max_j + 1):
        c0 = 2.0**-j
        if positivity_holds(c0, seed):
            return c0
    raise RuntimeError("no c0 in the sweep gives positivity")


def matrix_symbol(n: int) -> np.ndarray:
    x = get_grid(1, n).x
    return np.array([[2.0 + np.sin(x), 0.5 * np.cos(x)], [0.5 * np.cos(x), 2.0 + np.cos(x)]])


def _matrix_min_eig(a):
    mats = np.moveaxis(a, -1, 0)
    return float(np.min(np.linalg.eigvalsh(mats)))


def _group_positivity(ctx: _Context):
    cfg = ctx.config
    c0 = ctx.calibration.setting("c0")
    out = []
    a = 2.0 + np.sin(get_grid(1, 256).x)
    nu = choose_nu(1.0, ll_seminorm(a), c0)
    gap = positivity_gap(ModifiedParaproduct(a, nu), cfg.positivity_trials, cfg.seed, strict=False)
    out.append(Measurement("positivity.gap", gap, "min", 0.5))
    a64 = 2.0 + np.sin(get_grid(1, 64).x)
    eig = symmetric_part_min_eigenvalue(assemble_matrix(ModifiedParaproduct(a64, nu)))
    out.append(Measurement("positivity.matrix_eigenvalue", eig, "min", 0.5))

    am = matrix_symbol(256)
    lam = _matrix_min_eig(am)
    llm = max(ll_seminorm(am[i, j]) for i in range(2) for j in range(2))
    num = choose_nu(lam, llm, c0)
    gap = positivity_gap(ModifiedParaproduct(am, num), cfg.positivity_trials // 5, cfg.seed, strict=False)
    out.append(Measurement("positivity.system_gap", gap / lam, "min", 0.5))
    am32 = matrix_symbol(32)
    eig = symmetric_part_min_eigenvalue(assemble_matrix(ModifiedParaproduct(am32, num)))
    out.append(Measurement("positivity.system_eigenvalue", eig / _matrix_min_eig(am32), "min", 0.5))
    return out


# -- mollified -------------------------------------------------------------------


def mollified_field():
    """``a(t, x) = tent(t) (2 + cos x)`` on ``[0, 1]``."""
    return CoefficientField(lambda t, x: tent_t(t) * (2.0 + np.cos(x)), label="tent(t)(2+cos x)")


def _group_mollified(ctx: _Context):
    cfg = ctx.config
    n, trials = cfg.n, cfg.trials
    grid = get_grid(1, n)
    fld = mollified_field()
    ll_a = ctx.memo(("moll_ll", n), lambda: measure_field(fld, grid, 1.0).ll_seminorm)
    sup_a = 3.0
    out = []
    members = {r: 0.0 for r in range(1, 6)}
    half = {"left": 0.0, "right": 0.0}
    nu = 3
    p = MollifiedParaproduct(lambda t: fld.sample(grid, t), 1.0, nu)
    for t in (0.3, 0.5):
        for r in members:
            op = defect_operator("mollified_family", mollified=p, t=t, member=r, ll_a=ll_a)
            members[r] = max(members[r], op.estimate(trials, cfg.seed, n=n))
        for m in half:
            op = defect_operator("lambda_half_commutators", mollified=p, t=t, member=m, ll_a=ll_a)
            half[m] = max(half[m], op.estimate(trials, cfg.seed, n=n))
    for r, v in members.items():
        out.append(Measurement(f"mollified.R{r}", v))
    for m, v in half.items():
        out.append(Measurement(f"mollified.lambda_half.{m}", v))

    l2 = LogSobolevIndex(0.0)
    worst = 0.0
    for nu_ in range(2, 9):
        q = MollifiedParaproduct(lambda t: fld.sample(grid, t), 1.0, nu_)
        for t in (0.3, 0.5):
            at = fld.sample(grid, t)
            est = estimate_operator_norm(lambda u: u * at - apply_mollified(q, t, u), l2, l2, 20, cfg.seed, n=n)
            worst = max(worst, est.measured_norm / (nu_ * 2.0**-nu_ * ll_a))
    out.append(Measurement("mollified.gap", worst))

    appa, appdta = 0.0, 0.0
    times = np.linspace(0.05, 0.95, 19)
    for k in range(0, 9):
        for t in times:
            diff = np.max(np.abs(fld.sample(grid, t) - p.regularized(k, t)))
            appa = max(appa, diff / ((k + 1) * 2.0**-k * ll_a))
            appdta = max(appdta, np.max(np.abs(p.regularized_dt(k, t))) / ((k + 1) * ll_a))
    # the quadrature sum is only piecewise smooth in t for a kinked coefficient, so compare on a smooth one
    smooth = MollifiedParaproduct(lambda t: (1.0 + 0.5 * np.sin(3.0 * t)) * (2.0 + np.cos(grid.x)), 1.0, nu)
    consistency, h = 0.0, 1e-5
    for k in range(0, 9):
        for t in times[(times > 2.0**-k) & (times < 1.0 - 2.0**-k)]:
            dak = smooth.regularized_dt(k, t)
            fd = (smooth.regularized(k, t + h) - smooth.regularized(k, t - h)) / (2 * h)
            consistency = max(consistency, np.max(np.abs(fd - dak)) / np.max(np.abs(dak) + 1.0))
    out.append(Measurement("mollified.approximation", float(appa)))
    out.append(Measurement("mollified.time_derivative", float(appdta)))
    out.append(Measurement("mollified.derivative_consistency", float(consistency), "max", 1e-5))

    a_static = 2.0 + np.sin(grid.x)
    q = MollifiedParaproduct(lambda t: a_static, 1.0, 3)
    worst = 0.0
    for i in range(10):
        u = random_band_limited(n, ctx.rng(6, i))
        ref = apply_modified(ModifiedParaproduct(a_static, 3), u).values
        worst = max(worst, np.max(np.abs(apply_mollified(q, 0.5, u).values - ref)) / np.max(np.abs(ref)))
    out.append(Measurement("mollified.static_exact", float(worst), "max", 1e-12))
    return out


# -- solver ----------------------------------------------------------------------


def plane_wave_error(n=64, dt=1e-3, T=1.0):
    grid = get_grid(1, n)
    x = grid.x
    u0 = GridFunction(np.exp(1j * x))
    traj = integrate(scalar_operator(1.0), u0, GridFunction(-1j * u0.values), dt, T, stride=int(round(T / dt)))
    return grid.l2_norm(traj.states[-1].u.values - np.exp(1j * (x - T))) / grid.l2_norm(u0.values)


def manufactured_problem(n=64):
    """``a11 = 2 + 0.5 sin(x) tent(t)`` with exact solution ``sin(x - t) cos(t)``."""
    grid = get_grid(1, n)
    x = grid.x
    op = scalar_operator(lambda t, x: 2.0 + 0.5 * np.sin(x) * tent_t(t))

    def exact(t):
        u = np.sin(x - t) * np.cos(t)
        ut = -np.cos(x - t) * np.cos(t) - np.sin(x - t) * np.sin(t)
        utt = -2.0 * np.sin(x - t) * np.cos(t) + 2.0 * np.cos(x - t) * np.sin(t)
        return u, ut, utt

    return op, exact, grid


def manufactured_order(dts=(0.05, 0.025, 0.0125), n=32, T=1.0):
    """Observed temporal orders; step sizes divide the kink time 0.5 of the coefficient."""
    op, exact, grid = manufactured_problem(n)
    f = manufactured_source(op, grid, exact)
    u0, ut0, _ = exact(0.0)
    errs = []
    for dt in dts:
        traj = integrate(op, GridFunction(u0), GridFunction(ut0), dt, T, f2=f, stride=10**9)
        errs.append(grid.l2_norm(traj.states[-1].u.values - exact(T)[0]))
    errs = np.array(errs)
    return np.log(errs[:-1] / errs[1:]) / np.log(np.array(dts[:-1]) / np.array(dts[1:])), errs


def smooth_random_operator(seed: int, n: int = 64):
    rng = np.random.default_rng([seed, 7])
    ph = rng.uniform(0, 2 * np.pi, 12)

    def smooth(c, amp=0.3):
        return lambda t, x: c + amp * np.sin(x + ph[int(c * 7) % 12]) * np.cos(t + ph[(int(c * 7) + 1) % 12])

    return HyperbolicOperator(
        1,
        smooth(2.0),
        (smooth(0.4),),
        ((smooth(3.0),),),
        smooth(0.5),
        smooth(0.3),
        (smooth(0.2),),
        (smooth(0.6),),
        smooth(0.1),
    )


def dual_assembly_error(seed: int, n: int = 64, trials: int = 5):
    grid = get_grid(1, n)
    op = smooth_random_operator(seed, n)
    check_hyperbolicity(op, grid)
    worst = 0.0
    for i in range(trials):
        rng = np.random.default_rng([seed, 8, i])
        u, ut, utt = (random_band_limited(n, rng, real=True, exponent=-3.0).values for _ in range(3))
        t = float(rng.uniform(0, 1))
        d = apply_operator_direct(op, grid, t, u, ut, utt)
        fz = apply_operator_factorized(op, grid, t, u, ut, utt)
        worst = max(worst, float(np.linalg.norm(d - fz) / np.linalg.norm(d)))
    return worst


def trace_roundtrip_error(seed: int, n: int = 64):
    grid = get_grid(1, n)
    op = smooth_random_operator(seed, n)
    rng = np.random.default_rng([seed, 9])
    u0 = random_band_limited(n, rng, real=True, exponent=-2.0)
    u1 = random_band_limited(n, rng, real=True, exponent=-2.0)
    traj = integrate(op, u0, u1, 1e-3, 0.01)
    e0, e1 = extract_traces(traj, op)
    return max((e0 - u0).l2_norm() / u0.l2_norm(), (e1 - u1).l2_norm() / u1.l2_norm())


def wave_energy_drift(n: int = 64, dt: float = 1e-3, T: float = 1.0, seed: int = 0):
    grid = get_grid(1, n)
    rng = np.random.default_rng([seed, 10])
    u0 = random_band_limited(n, rng, real=True, exponent=-2.0)
    u1 = random_band_limited(n, rng, real=True, exponent=-2.0)
    op = scalar_operator(1.0)
    traj = integrate(op, u0, u1, dt, T, stride=100)

    def energy(st):
        ut = time_derivative(op, st).values
        ux = grid.derivative(st.u.values)
        return grid.l2_norm(ut) ** 2 + grid.l2_norm(ux) ** 2

    e0 = energy(traj.states[0])
    return max(abs(energy(st) - e0) / e0 for st in traj.states)


def _group_solver(ctx: _Context):
    seed = ctx.config.seed
    orders, _ = manufactured_order()
    zero = integrate(scalar_operator(lambda t, x: 1.5 + 0.5 * np.sin(x)), GridFunction.zeros(64), GridFunction.zeros(64), 1e-3, 1.0, stride=50)
    return [
        Measurement("solver.plane_wave_error", plane_wave_error(), "max", 1e-6),
        Measurement("solver.manufactured_order", float(np.min(orders)), "min", 3.5),
        Measurement("solver.dual_assembly", dual_assembly_error(seed), "max", 1e-8),
        Measurement("solver.trace_roundtrip", trace_roundtrip_error(seed), "max", 1e-8),
        Measurement("solver.wave_energy_drift", wave_energy_drift(seed=seed), "max", 1e-6),
        Measurement("solver.zero_data", max(st.u.l2_norm() for st in zero.states), "max", 1e-10),
    ]


# -- energy ----------------------------------------------------------------------


def energy_problem(fid: str, n: int, seed: int):
    fam = build_family(fid)
    rng = np.random.default_rng([seed, 11])
    u0 = random_band_limited(n, rng, real=True, exponent=-2.0)
    u1 = random_band_limited(n, rng, real=True, exponent=-1.5)
    f2 = lambda t, x: 0.1 * np.sin(2 * x) * np.cos(3 * t)  # noqa: E731
    return fam, EnergyData(u0, u1, None, f2)


def _energy_runs(ctx: _Context):
    """Trajectories and predicted rates for the energy suite, cached per run."""

    def compute():
        cfg = ctx.config
        runs = {}
        grid = get_grid(1, cfg.energy_n)
        for fid in ENERGY_SUITE:
            fam, data = energy_problem(fid, cfg.energy_n, cfg.seed)
            op = fam.operator(cfg.T)
            consts = ctx.family_constants(fid, {}, cfg.energy_n)
            lam = select_lambda(op, ctx.calibration, grid, consts)
            T = lifespan(cfg.T, cfg.theta, cfg.theta1, lam)
            traj = integrate(op, data.u0, data.u1, cfg.dt, T, f2=data.f2, stride=10)
            runs[fid] = (op, data, lam, traj)
        return runs

    return ctx.memo("energy_runs", compute)


def energy_constants(ctx: _Context, gamma: float) -> dict:
    cfg = ctx.config
    out = {}
    for fid, (op, data, lam, traj) in _energy_runs(ctx).items():
        out[fid] = energy_report(traj, op, data, cfg.theta, cfg.theta1, lam, gamma)
    return out


def calibrate_gamma0(ctx: _Context, tolerance: float = 0.1) -> float:
    """Smallest power of two after which doubling gamma changes every ``K_emp`` by less than ``tolerance``."""
    values = {g: {k: r.k_emp for k, r in energy_constants(ctx, g).items()} for g in GAMMA_CANDIDATES}
    for g, g2 in zip(GAMMA_CANDIDATES, GAMMA_CANDIDATES[1:]):
        change = max(abs(values[g2][k] - values[g][k]) / values[g][k] for k in values[g])
        if change < tolerance:
            return g
    return GAMMA_CANDIDATES[-1]


def _group_energy(ctx: _Context):
    cfg = ctx.config
    gamma0 = ctx.calibration.setting("gamma0")
    out = []
    reports = energy_constants(ctx, gamma0)
    s_ok = 0.0
    for fid, rep in reports.items():
        out.append(Measurement(f"energy.K_emp.{fid}", rep.k_emp))
        out.append(Measurement(f"energy.lambda.{fid}", rep.lam, "min", 0.0))
        excursion = max(cfg.theta - rep.s.min(), rep.s.max() - cfg.theta1, 0.0)
        s_ok = max(s_ok, excursion)
    out.append(Measurement("energy.K_emp.suite", max(r.k_emp for r in reports.values())))
    out.append(Measurement("energy.s_range", s_ok, "max", 1e-12))
    zero = integrate(build_family("ll_cusp").operator(cfg.T), GridFunction.zeros(cfg.energy_n), GridFunction.zeros(cfg.energy_n), cfg.dt, cfg.T, stride=50)
    out.append(Measurement("energy.zero_data", max(st.u.l2_norm() for st in zero.states), "max", 1e-10))
    return out


# -- finite speed ----------------------------------------------------------------


def bump_problem(n: int = 256, width: float = 0.15):
    x = get_grid(1, n).x
    u0 = GridFunction(np.exp(-((x - np.pi) ** 2) / (2 * width**2)))
    radius = 7.4 * width
    return u0, (np.pi - radius, np.pi + radius)


def _group_speed(ctx: _Context):
    out = []
    u0, support = bump_problem()
    zero = GridFunction.zeros(u0.points_per_axis)
    cases = {
        "constant": scalar_operator(1.0),
        "variable": scalar_operator(lambda t, x: 2.0 + np.sin(x)),
    }
    for name, op in cases.items():
        traj = integrate(op, u0, zero, 2e-3, 1.0, stride=25)
        res = finite_speed_check(traj, op, support, tolerance_cells=4)
        out.append(Measurement(f"speed.{name}.excess_cells", res.excess_cells, "max", 4.0))
    return out


# -- loss of derivatives ---------------------------------------------------------


def k0_calibration_points(ctx: _Context) -> dict:
    """``A_Linf / delta0 -> K0`` making the predicted rate match the cgs measurements."""
    table = {}
    for amp in CGS_AMPLITUDES:
        fit = ctx.loss_fit("cgs_oscillatory", {"A": amp})
        c = ctx.family_constants("cgs_oscillatory", {"A": amp}, 32)
        base = 2.0 * c.a_ll * c.a_linf / min(c.delta0 * c.delta1, c.delta0**2)
        k0 = max(fit.lambda_emp, 0.0) / base
        # round up in the third significant digit so the stored value keeps the inequality
        k0 = float(np.ceil(k0 * 10 ** (2 - np.floor(np.log10(k0)))) / 10 ** (2 - np.floor(np.log10(k0)))) if k0 > 0 else 0.0
        table[round(c.a_linf / c.delta0, 12)] = k0
    return table


def _group_loss(ctx: _Context):
    out = []
    for fid in LIPSCHITZ_FAMILIES:
        fit = ctx.loss_fit(fid, {})
        out.append(Measurement(f"loss.lipschitz.{fid}", abs(fit.lambda_emp), "max", 0.05))
        out.append(Measurement(f"loss.residual.{fid}", fit.fit_residual, "max", 0.05))
    rates = []
    for amp in CGS_AMPLITUDES:
        fit = ctx.loss_fit("cgs_oscillatory", {"A": amp})
        rates.append(fit.lambda_emp)
        out.append(Measurement(f"loss.cgs.A{amp:g}", fit.lambda_emp, "min", 1e-3))
        out.append(Measurement(f"loss.residual.cgs.A{amp:g}", fit.fit_residual, "max", 0.05))
    out.append(Measurement("loss.cgs.monotone", float(np.min(np.diff(rates))), "min", 1e-3))
    cases = [("ll_cusp", {}), ("sub_ll", {})] + [("cgs_oscillatory", {"A": amp}) for amp in CGS_AMPLITUDES]
    grid = get_grid(1, 32)
    for fid, params in cases:
        fit = ctx.loss_fit(fid, params)
        fam = build_family(fid, params)
        lam = select_lambda(fam.operator(ctx.config.T), ctx.calibration, grid, ctx.family_constants(fid, params, 32))
        tag = fid + "".join(f".{k}{v:g}" for k, v in sorted(params.items()))
        out.append(Measurement(f"loss.bound.{tag}", fit.lambda_emp - lam, "max", 0.0))
    return out


# -- family classes --------------------------------------------------------------


def _group_families(ctx: _Context):
    out = []
    grid = get_grid(1, 16)
    T = ctx.config.T

    def report(fid, samples, params=None):
        fam = build_family(fid, params)
        return measure_field(fam.coefficient, grid, T, n_times=samples)

    out.append(Measurement("families.constant.ll", report("constant", 129).ll_seminorm, "max", 0.0))
    for fid in LIPSCHITZ_FAMILIES[1:]:
        growth = report(fid, 1025).lipschitz_norm / report(fid, 257).lipschitz_norm
        out.append(Measurement(f"families.{fid}.lipschitz_growth", growth, "max", 1.05))
    amp = build_family("ll_cusp").params.get("A", 0.5)
    cusp_fine, cusp_coarse = report("ll_cusp", 1025), report("ll_cusp", 257)
    out.append(Measurement("families.ll_cusp.ll_ratio", cusp_fine.ll_seminorm / amp, "min", 0.99))
    out.append(Measurement("families.ll_cusp.lipschitz_growth", cusp_fine.lipschitz_norm / cusp_coarse.lipschitz_norm, "min", 1.1))
    fam = build_family("sub_ll")
    ratios = []
    for samples in (257, 1025, 4097):
        times = np.linspace(0.0, T, samples)
        vals = np.array([float(fam.coefficient.sample(grid, t)[0]) for t in times])
        ratios.append(ll_ratio_at_separation(vals, times[1], spacing=times[1], periodic=False))
    out.append(Measurement("families.sub_ll.decay", float(np.max(np.diff(ratios))), "max", 0.0))
    return out


_GROUP_FUNCS = {
    "dyadic": _group_dyadic,
    "paraproduct": _group_paraproduct,
    "positivity": _group_positivity,
    "mollified": _group_mollified,
    "solver": _group_solver,
    "energy": _group_energy,
    "speed": _group_speed,
    "loss": _group_loss,
    "families": _group_families,
}


def run_measurements(groups, config: SuiteConfig, calibration: Calibration, ctx: _Context | None = None):
    ctx = ctx or _Context(config, calibration)
    out = []
    for g in groups:
        if g not in _GROUP_FUNCS:
            raise ValueError(f"unknown group {g!r}; known: {GROUPS}")
        out.extend(_GROUP_FUNCS[g](ctx))
    return out


def _to_check(m: Measurement, calibration: Calibration) -> Check:
    if m.mode == "calibrated":
        threshold, passed = calibration.check(m.id, m.measured)
        return Check(m.id, float(m.measured), float(threshold), bool(passed and np.isfinite(m.measured)))
    if m.mode == "max":
        return Check(m.id, float(m.measured), float(m.bound), bool(m.measured <= m.bound))
    if m.mode == "min":
        return Check(m.id, float(m.measured), float(m.bound), bool(m.measured >= m.bound))
    raise ValueError(f"unknown check mode {m.mode!r}")


def verify_suite(groups=GROUPS, config: SuiteConfig | None = None, calibration: Calibration | None = None) -> SuiteReport:
    """Run the selected groups and compare against ``calibration``."""
    if calibration is None:
        raise CalibrationMissing("verify needs a calibration; run calibrate first")
    config = config or SuiteConfig()
    groups = tuple(groups)
    measurements = run_measurements(groups, config, calibration)
    return SuiteReport(groups, config, [_to_check(m, calibration) for m in measurements])


def calibrate(config: SuiteConfig | None = None, groups=GROUPS) -> tuple[Calibration, SuiteReport]:
    """Fix the settings, record every calibrated constant, and return the passing report."""
    config = config or SuiteConfig()
    cal = Calibration()
    cal.settings["tolerance"] = TOLERANCE
    ctx = _Context(config, cal)
    cal.settings["c0"] = calibrate_c0(config.seed)
    cal.k0_table.update(k0_calibration_points(ctx))
    cal.settings["gamma0"] = calibrate_gamma0(ctx)
    measurements = run_measurements(groups, config, cal, ctx)
    for m in measurements:
        if m.mode == "calibrated":
            cal.constants[m.id] = float(m.measured)
    return cal, SuiteReport(tuple(groups), config, [_to_check(m, cal) for m in measurements])
