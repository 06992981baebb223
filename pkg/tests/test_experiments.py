import json

import numpy as np
import pytest

from paradiff.calibration import Calibration, CalibrationMissing, load_calibration, save_calibration
from paradiff.experiments.families import FAMILIES, build_family, ll_omega, sub_ll_omega
from paradiff.experiments.loss_rate import energy_sigma, loss_rate_experiment, sigma_star
from paradiff.experiments.report import ENERGY_COLUMNS, LOSS_COLUMNS, emit_report, read_csv
from paradiff.experiments.suite import SuiteConfig, verify_suite
from paradiff.grid import GridFunction, get_grid
from paradiff.norms import ll_seminorm
from paradiff.solver import EnergyData, energy_report, integrate, measure_field, scalar_operator

FAST_GROUPS = ("dyadic", "positivity", "speed")


@pytest.mark.parametrize("fid", sorted(FAMILIES))
def test_families_are_hyperbolic(fid):
    fam = build_family(fid)
    grid = get_grid(1, 16)
    lows = [fam.coefficient.sample(grid, t).min() for t in np.linspace(0, 1, 257)]
    assert min(lows) >= fam.lower_bound - 1e-12 > 0


def test_unknown_family():
    with pytest.raises(KeyError):
        build_family("nope")


@pytest.mark.parametrize("fid,params", [("smooth_sine", {"A": 0.95}), ("cgs_oscillatory", {"A": 2.0}), ("sub_ll", {"beta": 1.5})])
def test_family_rejects_bad_parameters(fid, params):
    with pytest.raises(ValueError):
        build_family(fid, params)


def test_family_rejects_unknown_parameter():
    with pytest.raises(ValueError):
        build_family("constant", {"zz": 1})


def test_constant_family_has_zero_ll():
    rep = measure_field(build_family("constant").coefficient, get_grid(1, 16), 1.0)
    assert rep.ll_seminorm == 0.0


def test_ll_cusp_seminorm_lower_bound():
    fam = build_family("ll_cusp", {"A": 1.0})
    rep = measure_field(fam.coefficient, get_grid(1, 8), 1.0, n_times=1025)
    assert rep.ll_seminorm >= 1.0 * (1 - 1e-3)


def test_sub_ll_ratio_decays():
    r = np.array([1e-2, 1e-4, 1e-8])
    assert np.all(np.diff(sub_ll_omega(r, 0.5) / ll_omega(r)) < 0)


def test_cgs_ll_grows_with_amplitude():
    grid = get_grid(1, 8)
    lls = [measure_field(build_family("cgs_oscillatory", {"A": a}).coefficient, grid, 1.0, n_times=2049).ll_seminorm for a in (0.25, 0.5)]
    assert lls[1] == pytest.approx(2 * lls[0], rel=1e-9)


def test_sigma_star_bisection():
    grid = get_grid(1, 32)
    u = GridFunction(np.exp(4j * grid.x))
    q2 = 1.0 + grid.abs_wavenumber**2
    parts = (q2, (2 * np.pi) * np.abs(u.spectrum) ** 2, np.zeros(32))
    # E_sigma = sqrt(2 pi) 17^(sigma/2); bound 10 E_0 gives sigma = 2 log 10 / log 17
    sig = sigma_star(parts, 10 * energy_sigma(parts, 0.0), -10, 10)
    assert abs(sig - 2 * np.log(10) / np.log(17)) <= 0.01


def test_loss_rate_constant_coefficient():
    fit = loss_rate_experiment(build_family("constant"), (4, 8, 16, 32), n=128, T=0.5)
    assert abs(fit.lambda_emp) < 0.02
    assert not fit.inconclusive
    assert len(fit.times) >= 5


@pytest.mark.parametrize("kwargs", [{"k0_list": (4, 8)}, {"M": 1.0}, {"k0_list": (8, 16, 32, 64)}])
def test_loss_rate_validation(kwargs):
    with pytest.raises(ValueError):
        loss_rate_experiment(build_family("constant"), **{"n": 128, **kwargs})


def test_empty_report_is_header_only(tmp_path):
    paths = emit_report(None, tmp_path)
    for p, cols in zip(paths, (ENERGY_COLUMNS, LOSS_COLUMNS)):
        assert p.read_bytes() == (",".join(cols) + "\r\n").encode()


def test_loss_report_roundtrip(tmp_path):
    fit = loss_rate_experiment(build_family("tent_t"), (4, 8, 16, 32), n=128, T=0.5)
    paths = emit_report(fit, tmp_path, "loss")
    header, rows = read_csv(paths[0])
    assert header == LOSS_COLUMNS
    assert rows == list(fit.rows())
    script = paths[2].read_text()
    assert paths[0].name in script
    summary = json.loads(paths[1].read_text())
    assert summary["lambda_emp"] == fit.lambda_emp


def test_energy_report_roundtrip(tmp_path, rng):
    op = scalar_operator(lambda t, x: 1.5 + 0.3 * np.sin(x))
    grid = get_grid(1, 32)
    u0 = GridFunction(np.sin(grid.x))
    traj = integrate(op, u0, u0, 1e-2, 1.0, stride=5)
    trace = energy_report(traj, op, EnergyData(u0, u0), 0.4, 0.6, 0.1, gamma=2.0)
    paths = emit_report(trace, tmp_path, "e")
    header, rows = read_csv(paths[0])
    assert header == ENERGY_COLUMNS
    assert rows == list(trace.rows())


def test_report_is_deterministic(tmp_path):
    fit = loss_rate_experiment(build_family("constant"), (4, 8, 16, 32), n=128, T=0.2)
    a = [p.read_bytes() for p in emit_report(fit, tmp_path / "a")]
    b = [p.read_bytes() for p in emit_report(fit, tmp_path / "b")]
    assert a == b


def test_report_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_report(None, blocker / "sub")


def test_verify_needs_calibration():
    with pytest.raises(CalibrationMissing):
        verify_suite(FAST_GROUPS, SuiteConfig(), None)


def test_shipped_calibration_passes_fast_groups():
    report = verify_suite(FAST_GROUPS, SuiteConfig(), load_calibration())
    assert report.passed, [c for c in report.failures()]


def test_halved_calibration_fails():
    cal = load_calibration().scaled(0.5)
    report = verify_suite(("dyadic",), SuiteConfig(), cal)
    assert not report.passed
    assert all(c.threshold > 0 for c in report.checks)


def test_calibration_file_roundtrip(tmp_path):
    cal = Calibration({"x.y": 1.5}, {1.0: 0.1, 2.0: 0.05}, {"c0": 0.5})
    back = load_calibration(save_calibration(cal, tmp_path / "c.ini"))
    assert back == cal
    # the table is made nondecreasing before interpolation
    assert back.k0(1.5) == pytest.approx(0.1)
    assert back.threshold("x.y") == pytest.approx(1.875)


def test_calibration_rejects_delimiters(tmp_path):
    with pytest.raises(ValueError):
        save_calibration(Calibration({"a=b": 1.0}), tmp_path / "c.ini")


def test_suite_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        SuiteConfig.from_mapping({"bogus": 1})


def test_report_json_stable(tmp_path):
    cal = load_calibration()
    a = verify_suite(("positivity",), SuiteConfig(), cal).to_json()
    b = verify_suite(("positivity",), SuiteConfig(), cal).to_json()
    assert a == b
    data = json.loads(a)
    assert set(data["checks"][0]) == {"id", "measured", "threshold", "pass"}
