import numpy as np
import pytest

from paradiff.grid import GridFunction, get_grid, random_band_limited
from paradiff.solver import (
    CFLViolation,
    CoefficientField,
    EnergyData,
    HyperbolicOperator,
    NotHyperbolic,
    apply_operator_direct,
    apply_operator_factorized,
    check_hyperbolicity,
    derive_tilde,
    energy_report,
    extract_traces,
    finite_speed_check,
    integrate,
    lambda_formula,
    lifespan,
    load_trajectory,
    manufactured_source,
    max_speed,
    measure_constants,
    save_trajectory,
    scalar_operator,
    select_lambda,
)


def test_plane_wave_matches_dalembert():
    grid = get_grid(1, 64)
    u0 = GridFunction(np.exp(2j * grid.x))
    traj = integrate(scalar_operator(1.0), u0, GridFunction(-2j * u0.values), 1e-3, 1.0, stride=1000)
    exact = np.exp(2j * (grid.x - 1.0))
    assert grid.l2_norm(traj.states[-1].u.values - exact) < 1e-6


def test_standing_wave_with_speed():
    grid = get_grid(1, 32)
    c2 = 2.25
    traj = integrate(scalar_operator(c2), GridFunction(np.cos(3 * grid.x)), GridFunction.zeros(32), 1e-3, 0.5, stride=500)
    exact = np.cos(3 * grid.x) * np.cos(3 * 1.5 * 0.5)
    np.testing.assert_allclose(traj.states[-1].u.values, exact, atol=1e-9)


def test_final_time_hit_exactly():
    traj = integrate(scalar_operator(1.0), GridFunction.zeros(16), GridFunction.zeros(16), 0.03, 0.1)
    assert traj.times[-1] == pytest.approx(0.1, abs=1e-15)


def test_cfl_violation():
    with pytest.raises(CFLViolation):
        integrate(scalar_operator(4.0), GridFunction.zeros(64), GridFunction.zeros(64), 0.1, 1.0)


def test_not_hyperbolic():
    grid = get_grid(1, 16)
    with pytest.raises(NotHyperbolic) as info:
        check_hyperbolicity(scalar_operator(lambda t, x: np.cos(x)), grid)
    assert info.value.witness[2] <= 0


def test_hyperbolicity_constants():
    grid = get_grid(1, 32)
    op = scalar_operator(lambda t, x: 2.0 + np.sin(x), a0=2.0)
    delta0, delta1 = check_hyperbolicity(op, grid)
    assert delta0 == 2.0
    assert delta1 == pytest.approx(1.0, abs=1e-2)


def test_tilde_coefficients():
    grid = get_grid(1, 8)
    op = scalar_operator(1.0, a0=2.0, a1=1.0, b0=4.0, c0=3.0, d=5.0)
    td = derive_tilde(op, grid)
    assert np.allclose(td.a_tilde_jk, 1.5)
    assert np.allclose(td.a_tilde_j, 0.5)
    assert np.allclose(td.d_tilde, 5.0 - 4.0 * 3.0 / 2.0)


def test_max_speed_with_advection():
    op = scalar_operator(1.0, a0=1.0, a1=0.5)
    # roots of xi^2 - 2*0.5*xi*tau... the factorized speed is |a~| + sqrt(a~_11/a0)
    assert max_speed(op, get_grid(1, 8)) == pytest.approx(0.5 + np.sqrt(1.25))


def _smooth_operator():
    f = lambda c, k: (lambda t, x: c + 0.2 * np.sin(k * x + t))  # noqa: E731
    return HyperbolicOperator(1, f(2.0, 1), (f(0.3, 2),), ((f(3.0, 1),),), f(0.5, 3), f(0.2, 1), (f(0.1, 2),), (f(0.4, 1),), f(0.3, 2))


def test_factorized_form_equals_direct(rng):
    op = _smooth_operator()
    grid = get_grid(1, 64)
    u, ut, utt = (random_band_limited(64, rng, real=True, exponent=-3).values for _ in range(3))
    direct = apply_operator_direct(op, grid, 0.3, u, ut, utt)
    fact = apply_operator_factorized(op, grid, 0.3, u, ut, utt)
    assert np.linalg.norm(direct - fact) < 1e-12 * np.linalg.norm(direct)


def test_trace_extraction_roundtrip(rng):
    op = _smooth_operator()
    u0 = random_band_limited(32, rng, real=True, exponent=-2)
    u1 = random_band_limited(32, rng, real=True, exponent=-2)
    traj = integrate(op, u0, u1, 1e-3, 0.01)
    e0, e1 = extract_traces(traj, op)
    assert (e0 - u0).l2_norm() < 1e-12 and (e1 - u1).l2_norm() < 1e-12


@pytest.mark.parametrize("coef", ["smooth", "kinked"])
def test_manufactured_solution_fourth_order(coef):
    grid = get_grid(1, 32)
    x = grid.x
    if coef == "smooth":
        op = scalar_operator(lambda t, x: 2.0 + 0.5 * np.sin(x) * np.sin(t))
    else:
        op = scalar_operator(lambda t, x: 2.0 + 0.5 * np.sin(x) * np.maximum(0, 1 - abs(2 * t - 1)))

    def exact(t):
        u = np.sin(x - t) * np.cos(t)
        ut = -np.cos(x - t) * np.cos(t) - np.sin(x - t) * np.sin(t)
        utt = -2 * np.sin(x - t) * np.cos(t) + 2 * np.cos(x - t) * np.sin(t)
        return u, ut, utt

    f = manufactured_source(op, grid, exact)
    errs = []
    # step sizes divide t = 0.5 so the kink lands on a step boundary
    for dt in (0.05, 0.025, 0.0125):
        traj = integrate(op, GridFunction(exact(0)[0]), GridFunction(exact(0)[1]), dt, 1.0, f2=f, stride=10**6)
        errs.append(grid.l2_norm(traj.states[-1].u.values - exact(1.0)[0]))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 3.5)


def test_zero_data_stays_zero():
    op = scalar_operator(lambda t, x: 1.5 + 0.5 * np.sin(x + t))
    traj = integrate(op, GridFunction.zeros(32), GridFunction.zeros(32), 2e-3, 1.0, stride=50)
    assert max(st.u.l2_norm() for st in traj.states) <= 1e-10


def test_energy_report_zero_data_is_degenerate():
    op = scalar_operator(1.0)
    z = GridFunction.zeros(32)
    traj = integrate(op, z, z, 1e-2, 1.0)
    rep = energy_report(traj, op, EnergyData(z, z), 0.4, 0.6, 0.0)
    assert rep.degenerate and np.isnan(rep.k_emp)


def test_energy_report_constant_wave(rng):
    op = scalar_operator(1.0)
    u0 = random_band_limited(64, rng, real=True, exponent=-2)
    u1 = random_band_limited(64, rng, real=True, exponent=-2)
    traj = integrate(op, u0, u1, 2e-3, 1.0, stride=10)
    rep = energy_report(traj, op, EnergyData(u0, u1), 0.4, 0.6, 0.0, gamma=1.0)
    assert rep.ratio[0] >= 1.0 - 1e-12
    assert 1.0 <= rep.k_emp < 3.0
    assert np.all(np.diff(rep.lhs) >= -1e-12)


def test_energy_report_rejects_bad_theta():
    op = scalar_operator(1.0, alpha=0.75)
    z = GridFunction.zeros(16)
    traj = integrate(op, z, z, 1e-2, 1.0)
    with pytest.raises(ValueError):
        energy_report(traj, op, EnergyData(z, z), 0.1, 0.6, 0.0)


def test_lambda_formula():
    assert lambda_formula(0.0, 2.0, 1.0, 1.0, 5.0) == 0.0
    assert lambda_formula(1.0, 2.0, 1.0, 0.5, 1.0) == pytest.approx(8.0)
    assert lambda_formula(1.0, 2.0, 0.5, 1.0, 1.0) == pytest.approx(16.0)
    assert lifespan(1.0, 0.4, 0.6, 0.0) == 1.0
    assert lifespan(1.0, 0.4, 0.6, 0.4) == pytest.approx(0.5)


def test_select_lambda_zero_for_constant():
    op = scalar_operator(1.0)
    assert select_lambda(op, lambda r: 1.0, get_grid(1, 16)) == 0.0


def test_measured_constants_of_time_kink():
    op = scalar_operator(lambda t, x: 1 + 0.5 * abs(t - 0.5) + 0 * x)
    c = measure_constants(op, get_grid(1, 16))
    assert c.a_linf == pytest.approx(1.25)
    # best pair is (0.5, 1): |da| = 0.25 at distance 0.5
    assert c.a_ll == pytest.approx(0.25 / (0.5 * (1 + np.log(2))), rel=1e-9)


def test_finite_speed():
    grid = get_grid(1, 256)
    u0 = GridFunction(np.exp(-((grid.x - np.pi) ** 2) / (2 * 0.15**2)))
    op = scalar_operator(lambda t, x: 2.0 + np.sin(x))
    traj = integrate(op, u0, GridFunction.zeros(256), 2e-3, 1.0, stride=50)
    res = finite_speed_check(traj, op, (np.pi - 7.4 * 0.15, np.pi + 7.4 * 0.15))
    assert res
    assert res.speed == pytest.approx(np.sqrt(3.0), rel=1e-3)


def test_finite_speed_detects_violation():
    grid = get_grid(1, 256)
    u0 = GridFunction(np.exp(-((grid.x - np.pi) ** 2) / (2 * 0.15**2)))
    traj = integrate(scalar_operator(4.0), u0, GridFunction.zeros(256), 2e-3, 0.5, stride=50, check_cfl=False)
    # claiming a slower operator must fail
    assert not finite_speed_check(traj, scalar_operator(1.0, t_max=0.5), (np.pi - 1.11, np.pi + 1.11))


def test_trajectory_persistence(tmp_path, rng):
    op = _smooth_operator()
    u0 = random_band_limited(16, rng)
    traj = integrate(op, u0, u0, 1e-2, 0.1, meta={"label": "x"})
    save_trajectory(traj, tmp_path / "run")
    back = load_trajectory(tmp_path / "run")
    np.testing.assert_array_equal(back.u_array(), traj.u_array())
    np.testing.assert_array_equal(back.times, traj.times)
    assert back.meta["label"] == "x" and back.meta["T"] == 0.1


def test_coefficient_field_fd_derivative():
    f = CoefficientField(lambda t, x: np.sin(t) + 0 * x)
    assert f.sample_dt(get_grid(1, 8), 0.3)[0] == pytest.approx(np.cos(0.3), rel=1e-8)
