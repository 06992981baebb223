import json

import pytest
from click.testing import CliRunner

from paradiff.calibration import load_calibration, save_calibration
from paradiff.experiments.cli import main, parse_params


@pytest.fixture
def runner():
    return CliRunner()


def test_parse_params():
    assert parse_params(["A=0.5", "m_max=6"]) == {"A": 0.5, "m_max": 6}


@pytest.mark.parametrize("bad", ["A", "=1", "A=x"])
def test_parse_params_errors(bad):
    import click

    with pytest.raises(click.BadParameter):
        parse_params([bad])


def test_verify_subset(runner, tmp_path):
    res = runner.invoke(main, ["verify", "--groups", "dyadic", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    data = json.loads((tmp_path / "verify.json").read_text())
    assert data["passed"] and data["groups"] == ["dyadic"]


def test_verify_missing_calibration(runner, tmp_path):
    res = runner.invoke(main, ["verify", "--groups", "dyadic", "--calibration", str(tmp_path / "none.ini"), "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_verify_halved_calibration_exits_nonzero(runner, tmp_path):
    path = save_calibration(load_calibration().scaled(0.5), tmp_path / "half.ini")
    res = runner.invoke(main, ["verify", "--groups", "dyadic", "--calibration", str(path), "--out", str(tmp_path)])
    assert res.exit_code == 1
    assert "FAIL" in res.output


def test_verify_unknown_group(runner):
    res = runner.invoke(main, ["verify", "--groups", "nope"])
    assert res.exit_code != 0


def test_loss_rate_command(runner, tmp_path):
    res = runner.invoke(
        main,
        ["loss-rate", "--family", "smooth_sine", "--params", "A=0.2", "--grid", "128", "--k0", "4,8,16,32", "--T", "0.5", "--out", str(tmp_path)],
    )
    assert res.exit_code == 0, res.output
    assert (tmp_path / "loss_smooth_sine_loss.csv").read_text().startswith("t,k0,sigma_star")
    summary = json.loads((tmp_path / "loss_smooth_sine_summary.json").read_text())
    assert summary["params"] == {"A": 0.2}


def test_loss_rate_bad_params(runner, tmp_path):
    res = runner.invoke(main, ["loss-rate", "--family", "smooth_sine", "--params", "A=5", "--out", str(tmp_path)])
    assert res.exit_code != 0
    assert "lower bound" in res.output


def test_config_file_and_env_out(runner, tmp_path, monkeypatch):
    cfg = tmp_path / "run.toml"
    cfg.write_text('family = "constant"\ngrid = 128\nk0 = "4,8,16,32"\nT = 0.25\n')
    monkeypatch.setenv("PARADIFF_OUT", str(tmp_path / "env"))
    res = runner.invoke(main, ["loss-rate", "--config", str(cfg)])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "env" / "loss_constant_loss.csv").exists()


def test_solve_then_report(runner, tmp_path):
    res = runner.invoke(main, ["solve", "--family", "ll_cusp", "--grid", "64", "--T", "0.5", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    first = (tmp_path / "solve_ll_cusp_energy.csv").read_bytes()
    res = runner.invoke(main, ["report", str(tmp_path / "solve_ll_cusp"), "--out", str(tmp_path / "again")])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "again" / "solve_ll_cusp_energy.csv").read_bytes() == first
