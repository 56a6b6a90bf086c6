"""Transformer hot-spot temperature, aging acceleration and lifetime.

The hot-spot model is the linearized top-oil-rise form:

    K_t        = L_t / rated
    rise_ss_t  = dO_FL * ((1 + R K_t^2) / (1 + R)) ** q
    rise_t     = rise_{t-1} + (dt / T0) * (rise_ss_t - rise_{t-1})
    theta_HS_t = ambient_t + rise_t + dHS_FL * K_t ** (2 r)

and aging is ``A_t = exp(a * theta_HS_t + b)``. The kernels accept 2-D load
arrays (one candidate load sequence per row) so that a best-response scan can
evaluate every start time in one call.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from .errors import CalibrationError, DimensionError, DomainError
from .model import LoadProfile

STEADY = "steady"


@dataclass(frozen=True)
class TransformerParams:
    rated_power_kw: float = 90.0
    thermal_time_constant_hours: float = 2.5
    loss_ratio: float = 5.5
    full_load_top_oil_rise_c: float = 55.0
    full_load_hotspot_rise_c: float = 23.0
    exponent_q: float = 1.0
    exponent_r: float = 1.0
    # Listed with the model constants but not used by the linearized form.
    gamma: float = 0.83
    aging_coeff_a: float = 0.12
    aging_coeff_b: float = -11.0
    initial_hotspot_c: float = 98.0
    hotspot_cap_c: float = 300.0

    def __post_init__(self):
        positive = ("rated_power_kw", "thermal_time_constant_hours", "loss_ratio",
                    "full_load_top_oil_rise_c", "full_load_hotspot_rise_c",
                    "exponent_q", "exponent_r", "aging_coeff_a")
        for name in positive:
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not self.aging_coeff_b < 0:
            raise DomainError("aging_coeff_b must be negative")

    @property
    def nominal_hotspot_c(self) -> float:
        """Hot-spot temperature at which the aging factor equals one."""
        return -self.aging_coeff_b / self.aging_coeff_a

    def low_inertia(self) -> "TransformerParams":
        from dataclasses import replace
        return replace(self, thermal_time_constant_hours=0.5)


@dataclass(frozen=True, eq=False)
class ThermalTrace:
    hotspot_c: np.ndarray
    top_oil_rise_c: np.ndarray
    aging: np.ndarray

    def __len__(self) -> int:
        return self.hotspot_c.shape[-1]

    @property
    def final_top_oil_rise(self) -> float:
        """State to seed the next chained run."""
        return float(self.top_oil_rise_c[-1])

    def to_rows(self) -> list[tuple[int, float, float, float]]:
        return [(t + 1, float(h), float(o), float(a))
                for t, (h, o, a) in enumerate(zip(self.hotspot_c, self.top_oil_rise_c, self.aging))]


def steady_top_oil_rise(k, params: TransformerParams):
    return params.full_load_top_oil_rise_c * (
        (1.0 + params.loss_ratio * np.square(k)) / (1.0 + params.loss_ratio)
    ) ** params.exponent_q


def hotspot_rise(k, params: TransformerParams):
    return params.full_load_hotspot_rise_c * np.power(k, 2.0 * params.exponent_r)


def _initial_rise(state, k_first, ambient_first, params):
    if state is None:
        # the initial hot-spot temperature is read as a rated-load state, so
        # the pre-slot top-oil rise does not depend on the first slot's load
        return params.initial_hotspot_c - ambient_first - params.full_load_hotspot_rise_c
    if isinstance(state, str):
        if state != STEADY:
            raise DomainError(f"unknown initial state {state!r}")
        return steady_top_oil_rise(k_first, params)
    return np.asarray(state, dtype=float)


def hotspot_arrays(load, ambient, params: TransformerParams, slot_hours: float,
                   inertia: bool = True, initial_top_oil_rise=None):
    """Vectorized kernel: returns ``(hotspot, top_oil_rise)`` shaped like ``load``.

    ``load`` is ``(T,)`` or ``(N, T)``; ``ambient`` is ``(T,)``.
    """
    load = np.asarray(load, dtype=float)
    ambient = np.asarray(ambient, dtype=float)
    if load.shape[-1] != ambient.shape[-1]:
        raise DimensionError(f"load has {load.shape[-1]} slots, ambient has {ambient.shape[-1]}")
    if np.any(load < 0):
        raise DomainError("transformer load must be nonnegative")
    k = load / params.rated_power_kw
    rise_ss = steady_top_oil_rise(k, params)
    if inertia:
        rho = slot_hours / params.thermal_time_constant_hours
        if rho > 1.0:
            raise DomainError("thermal time constant shorter than one slot")
        init = _initial_rise(initial_top_oil_rise, k[..., 0], ambient[0], params)
        zi = ((1.0 - rho) * np.asarray(init, dtype=float))[..., np.newaxis]
        if load.ndim == 2:
            zi = np.broadcast_to(zi, (load.shape[0], 1)).copy()
        rise, _ = lfilter([rho], [1.0, rho - 1.0], rise_ss, axis=-1, zi=zi)
    else:
        rise = rise_ss
    theta = ambient + rise + hotspot_rise(k, params)
    return theta, rise


def aging_from_hotspot(theta, params: TransformerParams):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta > params.hotspot_cap_c):
        warnings.warn(
            f"hot-spot temperature above {params.hotspot_cap_c} degC; aging factor saturating",
            RuntimeWarning, stacklevel=2,
        )
    with np.errstate(over="ignore"):
        return np.exp(params.aging_coeff_a * theta + params.aging_coeff_b)


def _trace(load: LoadProfile, ambient: LoadProfile, params, inertia, initial_top_oil_rise):
    if load.grid.slot_count != ambient.grid.slot_count:
        raise DimensionError("load and ambient profiles have different lengths")
    theta, rise = hotspot_arrays(load.values, ambient.values, params,
                                 load.grid.slot_duration_hours, inertia, initial_top_oil_rise)
    return ThermalTrace(theta, rise, aging_from_hotspot(theta, params))


def hotspot_with_inertia(load: LoadProfile, ambient: LoadProfile, params: TransformerParams,
                         initial_top_oil_rise=None) -> ThermalTrace:
    """Hot-spot trace with first-order top-oil lag.

    ``initial_top_oil_rise`` is the state before slot 1: ``None`` derives it
    from ``params.initial_hotspot_c`` as a rated-load hot-spot temperature, ``"steady"`` starts at the steady rise of slot 1, a
    float is used as given (e.g. the final state of a previous day).
    """
    return _trace(load, ambient, params, True, initial_top_oil_rise)


def hotspot_memoryless(load: LoadProfile, ambient: LoadProfile, params: TransformerParams) -> ThermalTrace:
    return _trace(load, ambient, params, False, None)


def aging_factor(trace: ThermalTrace, params: TransformerParams) -> np.ndarray:
    return aging_from_hotspot(trace.hotspot_c, params)


def lifetime_years(aging: Sequence[float]) -> float:
    """``40 * N / sum(A)``: 40 years when the average aging factor is one."""
    aging = np.asarray(aging, dtype=float)
    if aging.size == 0:
        raise DomainError("lifetime needs a non-empty aging sequence")
    if np.any(aging <= 0):
        raise DomainError("aging factors must be positive")
    return 40.0 * aging.size / float(np.sum(aging))


def calibrate_exogenous_scale(exo_year: LoadProfile, ambient_year: LoadProfile,
                              params: TransformerParams, initial_top_oil_rise=None,
                              kappa_max: float = 1e3, rtol: float = 1e-12) -> float:
    """Scale factor on the exogenous demand giving mean aging 1 (40-year life).

    Mean aging grows monotonically with the scale, so the root is bracketed
    by expanding the upper end and then refined with Brent's method.
    """
    if exo_year.grid.slot_count != ambient_year.grid.slot_count:
        raise DimensionError("exogenous and ambient profiles have different lengths")
    if not np.any(exo_year.values > 0):
        raise CalibrationError("exogenous profile is identically zero")
    dt = exo_year.grid.slot_duration_hours

    def excess(kappa):
        theta, _ = hotspot_arrays(exo_year.values * kappa, ambient_year.values, params, dt,
                                  True, initial_top_oil_rise)
        with warnings.catch_warnings():
            # bracketing may probe absurdly hot trial scales
            warnings.simplefilter("ignore", RuntimeWarning)
            return math.log(float(np.mean(aging_from_hotspot(theta, params))))

    lo = 0.0
    if excess(lo) >= 0:
        raise CalibrationError("aging already above nominal with zero exogenous demand")
    hi = 1.0
    while excess(hi) < 0:
        lo, hi = hi, hi * 2.0
        if hi > kappa_max:
            raise CalibrationError(f"no scale in (0, {kappa_max}] reaches nominal aging")
    return brentq(excess, lo, hi, xtol=1e-14, rtol=rtol)


def flat_scale_closed_form(level_kw: float, ambient_c: float, params: TransformerParams) -> float:
    """Analytic calibration for a flat load and flat ambient (q = r = 1, steady state)."""
    if params.exponent_q != 1.0 or params.exponent_r != 1.0:
        raise DomainError("closed form requires q = r = 1")
    R = params.loss_ratio
    head = params.nominal_hotspot_c - ambient_c - params.full_load_top_oil_rise_c / (1.0 + R)
    slope = params.full_load_top_oil_rise_c * R / (1.0 + R) + params.full_load_hotspot_rise_c
    k = math.sqrt(head / slope)
    return k * params.rated_power_kw / level_kw
