"""Measured-constant regression store.

Constants live in a plain ini file versioned with the package::

    [constants]
    paraproduct.linf = 1.03
    ...
    [k0_table]
    1.0 = 0.12
    [settings]
    c0 = 0.5

A later run passes a check when ``measured <= TOLERANCE * recorded``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TOLERANCE",
    "DEFAULT_PATH",
    "Calibration",
    "CalibrationMissing",
    "load_calibration",
    "save_calibration",
]

TOLERANCE = 1.25
DEFAULT_PATH = Path(__file__).resolve().parent / "data" / "calibration.ini"


class CalibrationMissing(LookupError):
    pass


@dataclass
class Calibration:
    constants: dict[str, float] = field(default_factory=dict)
    k0_table: dict[float, float] = field(default_factory=dict)
    settings: dict[str, float] = field(default_factory=dict)

    def constant(self, key: str) -> float:
        try:
            return self.constants[key]
        except KeyError:
            raise CalibrationMissing(f"no calibrated constant {key!r}") from None

    def setting(self, key: str) -> float:
        try:
            return self.settings[key]
        except KeyError:
            raise CalibrationMissing(f"no calibrated setting {key!r}") from None

    def threshold(self, key: str) -> float:
        return TOLERANCE * self.constant(key)

    def check(self, key: str, measured: float) -> tuple[float, bool]:
        limit = self.threshold(key)
        return limit, bool(measured <= limit)

    def k0(self, ratio: float) -> float:
        """K_0 at ``A_Linf / delta_0``: piecewise-linear through the table, made nondecreasing."""
        if not self.k0_table:
            raise CalibrationMissing("empty K0 table")
        xs = np.array(sorted(self.k0_table))
        ys = np.maximum.accumulate(np.array([self.k0_table[x] for x in xs]))
        return float(np.interp(ratio, xs, ys))

    def scaled(self, factor: float) -> "Calibration":
        """Copy with every constant multiplied by ``factor`` (used to perturb thresholds)."""
        return Calibration({k: v * factor for k, v in self.constants.items()}, dict(self.k0_table), dict(self.settings))


def _fmt(x: float) -> str:
    return repr(float(x))


def save_calibration(cal: Calibration, path: str | Path = DEFAULT_PATH) -> Path:
    path = Path(path)
    bad = [k for k in list(cal.constants) + list(cal.settings) if "=" in k or ":" in k]
    if bad:
        raise ValueError(f"keys may not contain '=' or ':': {bad}")
    path.parent.mkdir(parents=True, exist_ok=True)
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["constants"] = {k: _fmt(cal.constants[k]) for k in sorted(cal.constants)}
    parser["k0_table"] = {_fmt(x): _fmt(cal.k0_table[x]) for x in sorted(cal.k0_table)}
    parser["settings"] = {k: _fmt(cal.settings[k]) for k in sorted(cal.settings)}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
    return path


def load_calibration(path: str | Path | None = None) -> Calibration:
    path = Path(path) if path is not None else DEFAULT_PATH
    if not path.is_file():
        raise CalibrationMissing(f"calibration file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read(path, encoding="utf-8")
    section = lambda name: dict(parser[name]) if parser.has_section(name) else {}  # noqa: E731
    return Calibration(
        {k: float(v) for k, v in section("constants").items()},
        {float(k): float(v) for k, v in section("k0_table").items()},
        {k: float(v) for k, v in section("settings").items()},
    )
