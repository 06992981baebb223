"""Registry of closed-form coefficient families for the wave-speed coefficient ``a11``.

Every family produces a one-dimensional operator with ``a0 = 1``, ``a1 = 0``
and no lower-order terms, so ``a11`` is the squared wave speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..solver import CoefficientField, HyperbolicOperator, scalar_operator

__all__ = [
    "CoefficientFamily",
    "FAMILIES",
    "build_family",
    "ll_omega",
    "sub_ll_omega",
]


def ll_omega(r):
    """``r (1 + |log r|)`` with the value 0 at ``r = 0``."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(r > 0, r * (1.0 + np.abs(np.log(np.where(r > 0, r, 1.0)))), 0.0)


def sub_ll_omega(r, beta):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(r > 0, r * (1.0 + np.abs(np.log(np.where(r > 0, r, 1.0)))) ** beta, 0.0)


@dataclass(frozen=True, eq=False)
class CoefficientFamily:
    """A named coefficient with its declared regularity class.

    ``time_samples`` is the number of time samples needed to resolve the
    coefficient when its seminorms are measured.
    """

    id: str
    params: dict
    coefficient: CoefficientField
    declared_class: str
    time_samples: int = 129
    lower_bound: float = 0.0
    description: str = ""
    amplitude_key: str | None = "A"
    extra: dict = field(default_factory=dict)

    def operator(self, t_max: float = 1.0, alpha: float = 0.75) -> HyperbolicOperator:
        return scalar_operator(self.coefficient, t_max=t_max, alpha=alpha, label=self.id)

    @property
    def time_only(self) -> bool:
        return self.extra.get("time_only", False)

    @property
    def is_lipschitz(self) -> bool:
        return self.declared_class == "Lipschitz"

    @property
    def is_log_lipschitz(self) -> bool:
        return self.declared_class == "LogLipschitz"


def _constant(c=1.0):
    return (
        CoefficientField.constant(c),
        "Lipschitz",
        {"lower_bound": c, "description": f"a11 = {c:g}", "time_only": True},
    )


def _smooth_sine(A=0.25):
    f = lambda t, x: 1.0 + A * np.sin(x) * np.cos(t)  # noqa: E731
    ft = lambda t, x: -A * np.sin(x) * np.sin(t)  # noqa: E731
    return (
        CoefficientField(f, ft, label="smooth_sine"),
        "Lipschitz",
        {"lower_bound": 1.0 - abs(A), "description": "a11 = 1 + A sin(x) cos(t)"},
    )


def _tent_t(A=0.5, t_star=0.5, width=0.25):
    f = lambda t, x: 1.0 + A * np.maximum(0.0, 1.0 - np.abs(t - t_star) / width) + 0.0 * x  # noqa: E731
    return (
        CoefficientField(f, label="tent_t"),
        "Lipschitz",
        {"lower_bound": 1.0 + min(A, 0.0), "description": "a11 = 1 + A max(0, 1 - |t - t*|/w)", "time_only": True},
    )


def _ll_cusp(A=0.5, t_star=0.5):
    f = lambda t, x: 1.0 + A * ll_omega(np.minimum(np.abs(t - t_star), 1.0)) + 0.0 * x  # noqa: E731
    return (
        CoefficientField(f, label="ll_cusp"),
        "LogLipschitz",
        {
            "lower_bound": 1.0 + min(A, 0.0),
            "description": "a11 = 1 + A w(min(|t - t*|, 1)), w(r) = r (1 + |log r|)",
            "time_only": True,
        },
    )


def _cgs_oscillatory(A=0.5, m_min=4, m_max=7):
    ms = np.arange(int(m_min), int(m_max) + 1)
    weights = ms * 2.0**-ms
    freqs = 2.0 ** (ms + 1)

    def f(t, x):
        return 1.0 + A * float(np.sum(weights * np.sin(freqs * t))) + 0.0 * x

    def ft(t, x):
        return A * float(np.sum(weights * freqs * np.cos(freqs * t))) + 0.0 * x

    spread = float(np.sum(weights))
    return (
        CoefficientField(f, ft, label="cgs_oscillatory"),
        "LogLipschitz",
        {
            "lower_bound": 1.0 - abs(A) * spread,
            "description": "a11 = 1 + A sum_m m 2^-m sin(2^(m+1) t), m_min <= m <= m_max",
            "time_only": True,
            "time_samples": int(2 ** (m_max + 4)) + 1,
            "resonant_frequencies": [int(2**m) for m in ms],
        },
    )


def _sub_ll(A=0.5, beta=0.5, t_star=0.5):
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    f = lambda t, x: 1.0 + A * sub_ll_omega(np.minimum(np.abs(t - t_star), 1.0), beta) + 0.0 * x  # noqa: E731
    return (
        CoefficientField(f, label="sub_ll"),
        f"SubLL({beta:g})",
        {
            "lower_bound": 1.0 + min(A, 0.0),
            "description": "a11 = 1 + A w(min(|t - t*|, 1)), w(r) = r (1 + |log r|)^beta",
            "time_only": True,
        },
    )


FAMILIES: dict[str, Callable] = {
    "constant": _constant,
    "smooth_sine": _smooth_sine,
    "tent_t": _tent_t,
    "ll_cusp": _ll_cusp,
    "cgs_oscillatory": _cgs_oscillatory,
    "sub_ll": _sub_ll,
}

_AMPLITUDE = {"constant": None}


def build_family(id: str, params: dict | None = None, *, delta_min: float = 0.1) -> CoefficientFamily:
    """Instantiate a registered family; coefficients must stay above ``delta_min``."""
    if id not in FAMILIES:
        raise KeyError(f"unknown family {id!r}; known: {sorted(FAMILIES)}")
    params = dict(params or {})
    try:
        coefficient, declared, info = FAMILIES[id](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {id}: {exc}") from None
    lower = info.pop("lower_bound")
    if lower < delta_min:
        raise ValueError(f"{id} with {params} has lower bound {lower:.4g} < {delta_min}")
    samples = info.pop("time_samples", 129)
    description = info.pop("description")
    return CoefficientFamily(
        id,
        params,
        coefficient,
        declared,
        samples,
        lower,
        description,
        _AMPLITUDE.get(id, "A"),
        info,
    )
