"""Report emission: CSV time series, JSON summaries and gnuplot scripts.

CSV files follow RFC 4180 (comma separated, CRLF line ends, minimal quoting)
and floats are written with ``repr`` so that re-reading them gives back the
same binary values.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..solver import EnergyTrace
from .loss_rate import LossRateFit

__all__ = [
    "ENERGY_COLUMNS",
    "LOSS_COLUMNS",
    "ReportError",
    "emit_report",
    "write_csv",
    "read_csv",
    "write_json",
    "energy_columns",
]

ENERGY_COLUMNS = ("t", "s") + EnergyTrace.COLUMN_ORDER + ("lhs", "rhs", "ratio")
LOSS_COLUMNS = ("t", "k0", "sigma_star")


class ReportError(OSError):
    pass


def energy_columns() -> tuple:
    return ENERGY_COLUMNS


def _cell(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(x) for x in row])
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path: Path):
    """Header and rows; integer-looking cells become ints, others floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [tuple(int(c) if c.lstrip("-").isdigit() else float(c) for c in row) for row in reader]
    return tuple(header), rows


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return None if np.isnan(obj) else float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def write_json(path: Path, data) -> Path:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(data, indent=2, sort_keys=True, default=_json_default, allow_nan=False) + "\n")
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _energy_plot(csv_name: str, title: str) -> str:
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 't'\n"
        f"set title '{title}'\n"
        "set multiplot layout 2,1\n"
        f"plot '{csv_name}' using 1:11 with lines title 'LHS', '' using 1:12 with lines title 'RHS'\n"
        f"plot '{csv_name}' using 1:13 with lines title 'LHS/RHS'\n"
        "unset multiplot\n"
    )


def _loss_plot(csv_name: str, frequencies, title: str) -> str:
    curves = ", ".join(
        f"'{csv_name}' using 1:($2=={k} ? $3 : 1/0) with linespoints title 'k0={k}'" for k in frequencies
    )
    return (
        "set datafile separator ','\n"
        "set xlabel 't'\n"
        "set ylabel 'sigma*'\n"
        f"set title '{title}'\n"
        f"plot {curves}\n"
    )


def _energy_summary(trace: EnergyTrace) -> dict:
    return {
        "theta": trace.theta,
        "theta1": trace.theta1,
        "lambda": trace.lam,
        "gamma": trace.gamma,
        "T": trace.T,
        "K_emp": None if trace.degenerate else float(trace.k_emp),
        "degenerate": bool(trace.degenerate),
        "snapshots": int(len(trace.times)),
    }


def emit_report(results, out_dir, name: str = "run", extra: dict | None = None) -> list[Path]:
    """Write the files for ``results`` into ``out_dir`` and return their paths.

    ``results`` is an :class:`EnergyTrace`, a :class:`LossRateFit`, or
    ``None``/empty, which yields header-only CSVs for both kinds.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create {out}: {exc.strerror or exc}") from exc
    written = []
    if results is None or (isinstance(results, (list, tuple)) and not results):
        written.append(write_csv(out / f"{name}_energy.csv", ENERGY_COLUMNS, []))
        written.append(write_csv(out / f"{name}_loss.csv", LOSS_COLUMNS, []))
        return written
    if isinstance(results, EnergyTrace):
        csv_path = write_csv(out / f"{name}_energy.csv", ENERGY_COLUMNS, results.rows())
        summary = _energy_summary(results)
        plot = _energy_plot(csv_path.name, f"energy inequality, {name}")
    elif isinstance(results, LossRateFit):
        csv_path = write_csv(out / f"{name}_loss.csv", LOSS_COLUMNS, results.rows())
        summary = results.as_dict()
        plot = _loss_plot(csv_path.name, results.frequencies, f"sigma*(t), {results.family_id}")
    else:
        raise TypeError(f"cannot report {type(results).__name__}")
    if extra:
        summary = {**summary, **extra}
    written.append(csv_path)
    written.append(write_json(out / f"{name}_summary.json", summary))
    plot_path = out / f"{name}.gp"
    try:
        plot_path.write_text(plot, encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot write {plot_path}: {exc.strerror or exc}") from exc
    written.append(plot_path)
    return written
