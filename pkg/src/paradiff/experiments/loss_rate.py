"""Measurement of the loss of derivatives for single-frequency data.

For each frequency ``k0`` the solver runs from right-moving data
``u0 = exp(i k0 x)``.  At every snapshot, ``sigma*(t)`` is the largest
``sigma`` with ``E_sigma(u(t)) <= M E_s(u(0))``, where
``E_sigma(u) = (||u||_{H^sigma}^2 + ||d_t u||_{H^{sigma-1}}^2)^{1/2}``.
A line ``sigma*_k(t) = c_k - lambda t`` is fitted jointly over all
frequencies (one intercept per frequency, a shared slope).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..grid import GridFunction, get_grid
from ..solver import integrate, time_derivative
from .families import CoefficientFamily

__all__ = ["LossRateFit", "loss_rate_experiment", "sigma_star", "energy_sigma"]

BISECTION_TOL = 0.01
RESIDUAL_LIMIT = 0.05


@dataclass(frozen=True)
class LossRateFit:
    family_id: str
    params: dict
    frequencies: tuple
    times: np.ndarray
    blowup_times: dict  # k0 -> sigma*(t) series
    lambda_emp: float
    fit_residual: float
    inconclusive: bool
    s: float
    M: float

    def rows(self):
        for k in self.frequencies:
            for t, sig in zip(self.times, self.blowup_times[k]):
                yield float(t), int(k), float(sig)

    def as_dict(self) -> dict:
        return {
            "family": self.family_id,
            "params": dict(sorted(self.params.items())),
            "frequencies": [int(k) for k in self.frequencies],
            "lambda_emp": self.lambda_emp,
            "fit_residual": self.fit_residual,
            "inconclusive": self.inconclusive,
            "s": self.s,
            "M": self.M,
        }


def _spectral_energy(u: GridFunction, ut: GridFunction):
    """Per-frequency ``(weight^2 base, |u^|^2, |u_t^|^2)`` so ``E_sigma`` is cheap to re-evaluate."""
    grid = u.grid
    q2 = 1.0 + grid.abs_wavenumber**2
    cell = (2 * np.pi) ** grid.dim
    return q2, cell * np.abs(u.spectrum) ** 2, cell * np.abs(ut.spectrum) ** 2


def energy_sigma(parts, sigma: float) -> float:
    q2, uu, vv = parts
    return float(np.sqrt(np.sum(q2**sigma * uu + q2 ** (sigma - 1) * vv)))


def sigma_star(parts, bound: float, lo: float, hi: float, tol: float = BISECTION_TOL) -> float:
    """Largest ``sigma`` in ``[lo, hi]`` with ``E_sigma <= bound`` (``E_sigma`` is nondecreasing)."""
    if energy_sigma(parts, lo) > bound:
        return lo
    if energy_sigma(parts, hi) <= bound:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if energy_sigma(parts, mid) <= bound:
            lo = mid
        else:
            hi = mid
    return lo


def _pooled_fit(times, series):
    """Shared slope with per-series intercepts; returns ``(slope, rms residual)``."""
    t = np.asarray(times)
    centred_t = [t - t.mean() for _ in series]
    centred_y = [np.asarray(y) - np.mean(y) for y in series]
    num = sum(np.dot(ct, cy) for ct, cy in zip(centred_t, centred_y))
    den = sum(np.dot(ct, ct) for ct in centred_t)
    slope = num / den
    resid = np.concatenate([cy - slope * ct for ct, cy in zip(centred_t, centred_y)])
    return float(slope), float(np.sqrt(np.mean(resid**2)))


def _run_frequency(family, op, n, k0, dt, T, snapshots, s, M, span):
    grid = get_grid(1, n)
    x = grid.x
    speed = np.sqrt(family.coefficient.sample(grid, 0.0))
    u0 = GridFunction(np.exp(1j * k0 * x))
    u1 = GridFunction(-1j * k0 * speed * u0.values)
    steps = int(np.ceil(T / dt - 1e-9))
    stride = max(1, steps // (snapshots - 1))
    traj = integrate(op, u0, u1, dt, T, stride=stride, meta={"k0": int(k0)})
    first = traj.states[0]
    bound = M * energy_sigma(_spectral_energy(first.u, time_derivative(op, first)), s)
    sig = [
        sigma_star(_spectral_energy(st.u, time_derivative(op, st)), bound, s - span, s + span)
        for st in traj.states
    ]
    return traj.times, np.array(sig)


def loss_rate_experiment(
    family: CoefficientFamily,
    k0_list=(16, 32, 64, 128),
    s: float = 0.0,
    M: float = 10.0,
    T: float = 1.0,
    *,
    n: int = 512,
    dt: float = 2e-3,
    snapshots: int = 21,
    workers: int = 1,
) -> LossRateFit:
    k0_list = tuple(int(k) for k in k0_list)
    if M <= 1:
        raise ValueError("M must exceed 1")
    if max(k0_list) >= n // 2:
        raise ValueError(f"frequencies must stay below the Nyquist mode {n // 2}")
    if np.log2(max(k0_list) / min(k0_list)) < 3 - 1e-12:
        raise ValueError("frequencies must span at least three octaves")
    if snapshots < 5:
        raise ValueError("need at least 5 snapshots for the fit")
    op = family.operator(t_max=T)
    span = 10.0

    def cell(k0):
        return _run_frequency(family, op, n, k0, dt, T, snapshots, s, M, span)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(cell, k0_list))
    else:
        results = [cell(k) for k in k0_list]
    times = results[0][0]
    series = {k: r[1] for k, r in zip(k0_list, results)}
    slope, resid = _pooled_fit(times, [series[k] for k in k0_list])
    return LossRateFit(
        family.id,
        dict(family.params),
        k0_list,
        times,
        series,
        -slope,
        resid,
        resid > RESIDUAL_LIMIT,
        s,
        M,
    )
