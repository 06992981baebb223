"""Command line interface: ``paradiff verify|calibrate|loss-rate|solve|report``.

Every option can also come from a TOML file given with ``--config``; flags
on the command line win.  Output goes to ``--out``, else ``$PARADIFF_OUT``,
else ``./paradiff-out``.
"""

from __future__ import annotations

import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from ..calibration import DEFAULT_PATH, CalibrationMissing, load_calibration, save_calibration
from ..grid import get_grid, random_band_limited
from ..solver import (
    EnergyData,
    NotHyperbolic,
    CFLViolation,
    energy_report,
    integrate,
    lifespan,
    load_trajectory,
    measure_constants,
    save_trajectory,
    select_lambda,
)
from .families import FAMILIES, build_family
from .loss_rate import loss_rate_experiment
from .report import ReportError, emit_report, write_json
from .suite import GROUPS, SuiteConfig, calibrate, verify_suite

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUT_ENV = "PARADIFF_OUT"


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "paradiff-out"))


def parse_params(items) -> dict:
    """``("A=0.5", "t_star=0.4")`` to ``{"A": 0.5, "t_star": 0.4}``."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected key=value, got {item!r}", param_hint="--params")
        try:
            out[key.strip()] = int(value) if value.strip().lstrip("-").isdigit() else float(value)
        except ValueError:
            raise click.BadParameter(f"value of {key} is not a number: {value!r}", param_hint="--params") from None
    return out


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}") from None


def _pick(flag, config, key, default):
    if flag is not None:
        return flag
    return config.get(key, default)


def _out_dir(flag, config) -> Path:
    return Path(_pick(flag, config, "out", None) or default_out())


def _suite_config(config, grid, seed, T, dt) -> SuiteConfig:
    data = dict(config.get("suite", {}))
    for key, value in (("n", grid), ("seed", seed), ("T", T), ("dt", dt)):
        if value is not None:
            data[key] = value
    try:
        return SuiteConfig.from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None


def _family(config, family, params):
    fid = _pick(family, config, "family", "constant")
    merged = dict(config.get("params", {}))
    merged.update(parse_params(params))
    try:
        return build_family(fid, merged)
    except (KeyError, ValueError) as exc:
        raise click.ClickException(str(exc).strip("'\"")) from None


def _print_checks(report):
    for c in report.checks:
        mark = "PASS" if c.passed else "FAIL"
        click.echo(f"{mark}  {c.id:48s} measured={c.measured:.6g} threshold={c.threshold:.6g}")


common = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="TOML file of option values."),
    click.option("--out", type=click.Path(file_okay=False), default=None, help=f"Output directory (default ${OUT_ENV})."),
    click.option("--seed", type=int, default=None),
    click.option("--grid", type=int, default=None, help="Grid points N (power of two)."),
    click.option("--dt", type=float, default=None),
    click.option("--T", "T", type=float, default=None, help="Final time."),
]


def with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Paradifferential calculus and low-regularity wave experiments."""


@main.command()
@with_common
@click.option("--groups", default=None, help=f"Comma-separated subset of {','.join(GROUPS)}.")
@click.option("--calibration", "cal_path", type=click.Path(dir_okay=False), default=None)
@click.option("--calibrate", "do_calibrate", is_flag=True, help="Write a fresh calibration first.")
def verify(config_path, out, seed, grid, dt, T, groups, cal_path, do_calibrate):
    """Run the verification suite and write verify.json."""
    config = load_config(config_path)
    cfg = _suite_config(config, grid, seed, T, dt)
    names = tuple(g.strip() for g in _pick(groups, config, "groups", ",".join(GROUPS)).split(",") if g.strip())
    unknown = set(names) - set(GROUPS)
    if unknown:
        raise click.BadParameter(f"unknown groups {sorted(unknown)}", param_hint="--groups")
    path = Path(_pick(cal_path, config, "calibration", DEFAULT_PATH))
    if do_calibrate:
        cal, _ = calibrate(cfg)
        save_calibration(cal, path)
    try:
        cal = load_calibration(path)
    except CalibrationMissing as exc:
        click.echo(f"error: {exc}; run 'paradiff calibrate' or pass --calibrate", err=True)
        sys.exit(2)
    start = time.perf_counter()
    report = verify_suite(names, cfg, cal)
    _print_checks(report)
    out_dir = _out_dir(out, config)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "verify.json").write_text(report.to_json(), encoding="utf-8")
    click.echo(f"{len(report.checks) - len(report.failures())}/{len(report.checks)} checks passed in {time.perf_counter() - start:.1f} s")
    sys.exit(0 if report.passed else 1)


@main.command("calibrate")
@with_common
@click.option("--calibration", "cal_path", type=click.Path(dir_okay=False), default=None, help="Where to write the calibration.")
def calibrate_cmd(config_path, out, seed, grid, dt, T, cal_path):
    """Measure every constant and write the calibration file."""
    config = load_config(config_path)
    cfg = _suite_config(config, grid, seed, T, dt)
    cal, report = calibrate(cfg)
    path = save_calibration(cal, Path(_pick(cal_path, config, "calibration", DEFAULT_PATH)))
    out_dir = _out_dir(out, config)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "calibrate.json").write_text(report.to_json(), encoding="utf-8")
    click.echo(f"wrote {path} ({len(cal.constants)} constants)")
    sys.exit(0 if report.passed else 1)


@main.command("loss-rate")
@with_common
@click.option("--family", default=None, type=click.Choice(sorted(FAMILIES)))
@click.option("--params", multiple=True, help="Family parameter as key=value; repeatable.")
@click.option("--k0", default=None, help="Comma-separated frequencies.")
@click.option("--s", "s", type=float, default=None)
@click.option("--M", "M", type=float, default=None)
@click.option("--snapshots", type=int, default=None)
@click.option("--workers", type=int, default=None)
def loss_rate(config_path, out, seed, grid, dt, T, family, params, k0, s, M, snapshots, workers):
    """Measure the loss of derivatives for one family."""
    config = load_config(config_path)
    fam = _family(config, family, params)
    k0_list = _pick(k0, config, "k0", "16,32,64,128")
    if isinstance(k0_list, str):
        k0_list = [int(k) for k in k0_list.split(",")]
    try:
        fit = loss_rate_experiment(
            fam,
            k0_list,
            _pick(s, config, "s", 0.0),
            _pick(M, config, "M", 10.0),
            _pick(T, config, "T", 1.0),
            n=_pick(grid, config, "grid", 512),
            dt=_pick(dt, config, "dt", 2e-3),
            snapshots=_pick(snapshots, config, "snapshots", 21),
            workers=_pick(workers, config, "workers", 1),
        )
    except (ValueError, CFLViolation) as exc:
        raise click.ClickException(str(exc)) from None
    consts = measure_constants(fam.operator(fit.times[-1]), get_grid(1, 32), fam.time_samples)
    try:
        lam = select_lambda(fam.operator(), load_calibration(), get_grid(1, 32), consts)
    except CalibrationMissing:
        lam = None
    try:
        paths = emit_report(fit, _out_dir(out, config), f"loss_{fam.id}", {"lambda_theoretical": lam})
    except ReportError as exc:
        raise click.ClickException(str(exc)) from None
    flag = " (inconclusive fit)" if fit.inconclusive else ""
    click.echo(f"lambda_emp = {fit.lambda_emp:.4f}, residual {fit.fit_residual:.4f}{flag}")
    if lam is not None:
        click.echo(f"lambda_theoretical = {lam:.4f}")
    for p in paths:
        click.echo(f"wrote {p}")


def solve_data(n: int, seed: int, source: float) -> EnergyData:
    rng = np.random.default_rng([seed, 11])
    u0 = random_band_limited(n, rng, real=True, exponent=-2.0)
    u1 = random_band_limited(n, rng, real=True, exponent=-1.5)
    f2 = (lambda t, x: source * np.sin(2 * x) * np.cos(3 * t)) if source else None
    return EnergyData(u0, u1, None, f2)


def _energy_for(traj, fam, info):
    data = solve_data(traj.n, info["seed"], info["source"])
    return energy_report(traj, fam.operator(info["T0"]), data, info["theta"], info["theta1"], info["lambda"], info["gamma"])


@main.command()
@with_common
@click.option("--family", default=None, type=click.Choice(sorted(FAMILIES)))
@click.option("--params", multiple=True, help="Family parameter as key=value; repeatable.")
@click.option("--theta", type=float, default=None)
@click.option("--theta1", type=float, default=None)
@click.option("--gamma", type=float, default=None, help="Energy weight (default: calibrated gamma0).")
@click.option("--source", type=float, default=None, help="Amplitude of a smooth source placed in f2.")
def solve(config_path, out, seed, grid, dt, T, family, params, theta, theta1, gamma, source):
    """Solve from seeded random data, save the trajectory and its energy report."""
    config = load_config(config_path)
    fam = _family(config, family, params)
    n = _pick(grid, config, "grid", 128)
    T0 = _pick(T, config, "T", 1.0)
    theta = _pick(theta, config, "theta", 0.4)
    theta1 = _pick(theta1, config, "theta1", 0.6)
    try:
        cal = load_calibration()
        lam = select_lambda(fam.operator(T0), cal, get_grid(1, n), measure_constants(fam.operator(T0), get_grid(1, n), fam.time_samples))
        gamma = _pick(gamma, config, "gamma", cal.setting("gamma0"))
    except CalibrationMissing as exc:
        raise click.ClickException(f"{exc}; run 'paradiff calibrate' first") from None
    info = {
        "family": fam.id,
        "params": dict(sorted(fam.params.items())),
        "seed": _pick(seed, config, "seed", 0),
        "source": _pick(source, config, "source", 0.1),
        "theta": theta,
        "theta1": theta1,
        "lambda": lam,
        "gamma": gamma,
        "T0": T0,
    }
    data = solve_data(n, info["seed"], info["source"])
    T_run = lifespan(T0, theta, theta1, lam)
    try:
        traj = integrate(fam.operator(T0), data.u0, data.u1, _pick(dt, config, "dt", 2e-3), T_run, f2=data.f2, stride=10, meta=info)
    except (CFLViolation, NotHyperbolic) as exc:
        raise click.ClickException(str(exc)) from None
    out_dir = _out_dir(out, config)
    save_trajectory(traj, out_dir / f"solve_{fam.id}")
    trace = _energy_for(traj, fam, info)
    paths = emit_report(trace, out_dir, f"solve_{fam.id}")
    click.echo(f"T = {T_run:.4f}, lambda = {lam:.4f}, gamma = {gamma:g}, K_emp = {trace.k_emp:.4f}")
    for p in paths:
        click.echo(f"wrote {p}")


@main.command()
@click.argument("trajectory", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--gamma", type=float, default=None, help="Override the stored energy weight.")
def report(trajectory, out, gamma):
    """Recompute the energy report of a trajectory saved by 'solve'."""
    try:
        traj = load_trajectory(trajectory)
    except (OSError, ValueError, KeyError) as exc:
        raise click.ClickException(f"cannot load {trajectory}: {exc}") from None
    info = dict(traj.meta)
    if gamma is not None:
        info["gamma"] = gamma
    fam = build_family(info["family"], info["params"])
    trace = _energy_for(traj, fam, info)
    out_dir = Path(out) if out else default_out()
    name = Path(trajectory).name
    paths = emit_report(trace, out_dir, name)
    write_json(out_dir / f"{name}_meta.json", info)
    click.echo(f"K_emp = {trace.k_emp:.4f}")
    for p in paths:
        click.echo(f"wrote {p}")


if __name__ == "__main__":
    main()
