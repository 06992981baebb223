"""Acceptance criteria 1-10, one pass/fail line each in the terminal summary."""

import numpy as np
import pytest

from conftest import record_criterion
from paradiff.calibration import load_calibration
from paradiff.dyadic import decompose
from paradiff.experiments.suite import GROUPS, SuiteConfig, constant_defect_outputs, verify_suite
from paradiff.grid import GridFunction, get_grid, random_band_limited
from paradiff.norms import ll_seminorm
from paradiff.paraproducts import (
    ModifiedParaproduct,
    Paraproduct,
    apply_paraproduct,
    apply_remainder,
    assemble_matrix,
    choose_nu,
    positivity_gap,
    symmetric_part_min_eigenvalue,
)
from paradiff.solver import integrate, manufactured_source, scalar_operator


@pytest.fixture(scope="module")
def full_report():
    return verify_suite(GROUPS, SuiteConfig(), load_calibration())


def _checks(report, *prefixes):
    found = [c for c in report.checks if c.id.startswith(prefixes)]
    assert found, f"no checks under {prefixes}"
    return found


def _judge(number, checks):
    failed = [c.id for c in checks if not c.passed]
    record_criterion(number, not failed, f"{len(checks) - len(failed)}/{len(checks)} checks" + (f", failing {failed}" if failed else ""))
    assert not failed


@pytest.mark.parametrize("n", [64, 256, 1024])
def test_criterion_01_reconstruction_and_localization(n):
    grid = get_grid(1, n)
    worst_rec, worst_leak = 0.0, 0.0
    for i in range(100):
        u = random_band_limited(n, np.random.default_rng([100, n, i]))
        dec = decompose(u)
        worst_rec = max(worst_rec, (u - dec.reconstruct()).l2_norm() / u.l2_norm())
        for k, block in enumerate(dec.blocks):
            inner = 0.0 if k == 0 else 1.1 * 2.0 ** (k - 1)
            outside = (grid.abs_wavenumber < inner) | (grid.abs_wavenumber > 1.9 * 2.0**k)
            worst_leak = max(worst_leak, float(np.max(np.abs(block.spectrum[outside]), initial=0.0)))
    ok = worst_rec <= 1e-10 and worst_leak <= 1e-14
    record_criterion(1, ok, f"N={n}: reconstruction {worst_rec:.1e}, leakage {worst_leak:.1e}")
    assert ok


def test_criterion_02_exact_splitting():
    n = 256
    worst = 0.0
    for i in range(100):
        rng = np.random.default_rng([200, i])
        a = random_band_limited(n, rng).values
        u = random_band_limited(n, rng)
        p = Paraproduct(a)
        err = (apply_paraproduct(p, u) + apply_remainder(p, u) - u * a).l2_norm()
        worst = max(worst, err / (u * a).l2_norm())
    record_criterion(2, worst <= 1e-10, f"max relative error {worst:.1e}")
    assert worst <= 1e-10


def test_criterion_03_paraproduct_and_remainder_bounds(full_report):
    _judge(3, _checks(full_report, "paraproduct.bounded.", "paraproduct.remainder."))


def test_criterion_04_positivity():
    c0 = load_calibration().setting("c0")
    a = 2 + np.sin(get_grid(1, 256).x)
    nu = choose_nu(1.0, ll_seminorm(a), c0)
    gap = positivity_gap(ModifiedParaproduct(a, nu), 500, 0, strict=False)
    a64 = 2 + np.sin(get_grid(1, 64).x)
    eig = symmetric_part_min_eigenvalue(assemble_matrix(ModifiedParaproduct(a64, nu)))
    ok = gap >= 0.5 and eig >= 0.5
    record_criterion(4, ok, f"nu={nu}, randomized gap {gap:.3f}, matrix eigenvalue {eig:.3f}")
    assert ok


def test_criterion_05_defect_norms_within_calibration(full_report):
    _judge(5, _checks(full_report, "defect.", "mollified.R", "mollified.lambda_half."))


@pytest.mark.parametrize(
    "kind",
    [
        "commutator_qpsi",
        "adjoint_defect",
        "composition_defect",
        "modified_adjoint_defect",
        "mollified_family",
        "lambda_half_commutators",
    ],
)
def test_criterion_05_defects_vanish_for_constant_coefficients(kind):
    value = constant_defect_outputs(256)[kind]
    ok = value <= 1e-12
    record_criterion(5, ok, f"constant coefficients: {kind} output {value:.2e}")
    assert ok, f"{kind} is {value:.3e} for constant coefficients"


def test_criterion_06_solver_accuracy():
    grid = get_grid(1, 64)
    x = grid.x
    u0 = GridFunction(np.exp(1j * x))
    traj = integrate(scalar_operator(1.0), u0, GridFunction(-1j * u0.values), 1e-3, 1.0, stride=1000)
    wave_err = grid.l2_norm(traj.states[-1].u.values - np.exp(1j * (x - 1.0)))

    g32 = get_grid(1, 32)
    y = g32.x
    op = scalar_operator(lambda t, x: 2.0 + 0.5 * np.sin(x) * np.sin(t))

    def exact(t):
        return (
            np.sin(y - t) * np.cos(t),
            -np.cos(y - t) * np.cos(t) - np.sin(y - t) * np.sin(t),
            -2 * np.sin(y - t) * np.cos(t) + 2 * np.cos(y - t) * np.sin(t),
        )

    f = manufactured_source(op, g32, exact)
    errs = []
    for dt in (0.04, 0.02, 0.01):
        tr = integrate(op, GridFunction(exact(0)[0]), GridFunction(exact(0)[1]), dt, 1.0, f2=f, stride=10**6)
        errs.append(g32.l2_norm(tr.states[-1].u.values - exact(1.0)[0]))
    order = float(np.min(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))
    ok = wave_err <= 1e-6 and order >= 3.5
    record_criterion(6, ok, f"plane wave error {wave_err:.1e}, temporal order {order:.2f}")
    assert ok


def test_criterion_07_energy_estimate(full_report):
    _judge(7, _checks(full_report, "energy."))


def test_criterion_08_loss_of_derivatives(full_report):
    _judge(8, _checks(full_report, "loss."))


def test_criterion_09_finite_speed(full_report):
    _judge(9, _checks(full_report, "speed."))


def test_criterion_10_determinism(full_report):
    again = verify_suite(GROUPS, SuiteConfig(), load_calibration())
    same = again.to_json() == full_report.to_json()
    record_criterion(10, same, "two verify runs byte-identical" if same else "verify JSON differs between runs")
    assert same
