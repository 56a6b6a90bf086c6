"""Synthetic demand, ambient temperature and price data; forecast noise.

Days are 48 half-hour slots starting at midnight. The charging window runs
from 17:00 on day ``j`` to 08:00 on day ``j + 1`` (30 slots), which is
``WINDOW_START`` onward in a 48-slot block that starts at 17:00.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .model import LoadProfile, TimeGrid

SLOTS_PER_DAY = 48
WINDOW_SLOTS = 30
WINDOW_START = 34  # 0-based slot of 17:00
DAYS_PER_YEAR = 366


def _bump(hours, center, width):
    d = (hours - center + 12.0) % 24.0 - 12.0  # wrap around midnight
    return np.exp(-0.5 * (d / width) ** 2)


def daily_demand_shape(day_of_year: int | np.ndarray, slots: int = SLOTS_PER_DAY) -> np.ndarray:
    """Double-peak household demand (morning and evening) in arbitrary units.

    Winter days are heavier than summer days. Shape ``(days, slots)`` for an
    array of days, ``(slots,)`` for a single day.
    """
    day = np.atleast_1d(np.asarray(day_of_year, dtype=float))
    hours = (np.arange(slots) + 0.5) * 24.0 / slots
    shape = (0.45
             + 0.35 * _bump(hours, 8.0, 1.5)
             + 0.15 * _bump(hours, 13.0, 2.0)
             + 0.75 * _bump(hours, 19.5, 1.8)
             - 0.15 * _bump(hours, 4.0, 2.0))
    season = 1.0 + 0.35 * np.cos(2 * np.pi * (day - 15.0) / DAYS_PER_YEAR)
    out = season[:, np.newaxis] * shape[np.newaxis, :]
    return out[0] if np.ndim(day_of_year) == 0 else out


def ambient_temperature(day_of_year: int | np.ndarray, rng: np.random.Generator | None = None,
                        slots: int = SLOTS_PER_DAY, noise_sd: float = 1.0) -> np.ndarray:
    """Seasonal plus daily sinusoid in degC, optionally with Gaussian noise."""
    day = np.atleast_1d(np.asarray(day_of_year, dtype=float))
    hours = (np.arange(slots) + 0.5) * 24.0 / slots
    seasonal = 12.0 - 7.5 * np.cos(2 * np.pi * (day - 15.0) / DAYS_PER_YEAR)
    daily = 4.0 * np.cos(2 * np.pi * (hours - 15.0) / 24.0)
    out = seasonal[:, np.newaxis] + daily[np.newaxis, :]
    if rng is not None and noise_sd > 0:
        out = out + rng.normal(0.0, noise_sd, size=out.shape)
    return out[0] if np.ndim(day_of_year) == 0 else out


def on_off_peak_prices(slots: int = SLOTS_PER_DAY, peak: float = 0.1572, off_peak: float = 0.1096,
                       off_start_hour: float = 22.0, off_end_hour: float = 6.0) -> np.ndarray:
    """Two-level tariff per slot of a midnight-based day, in currency/kWh."""
    hours = np.arange(slots) * 24.0 / slots
    off = (hours >= off_start_hour) | (hours < off_end_hour)
    return np.where(off, off_peak, peak)


def evening_blocks(days: np.ndarray) -> np.ndarray:
    """Re-cut consecutive midnight days ``(D + 1, 48)`` into 17:00 blocks ``(D, 48)``."""
    days = np.asarray(days, dtype=float)
    if days.ndim != 2 or days.shape[1] != SLOTS_PER_DAY or days.shape[0] < 2:
        raise DimensionError("need at least two consecutive 48-slot days")
    flat = days.reshape(-1)
    n = days.shape[0] - 1
    return np.stack([flat[j * SLOTS_PER_DAY + WINDOW_START: j * SLOTS_PER_DAY + WINDOW_START + SLOTS_PER_DAY]
                     for j in range(n)])


def sample_days(count: int, year_days: int = DAYS_PER_YEAR) -> np.ndarray:
    """``count`` days spread evenly across the year."""
    if count < 1:
        raise DomainError("need at least one day")
    return np.floor(np.arange(count) * year_days / count).astype(int)


@dataclass(frozen=True, eq=False)
class SyntheticYear:
    """Evening-based 48-slot blocks for a set of days.

    ``exo`` is in kW after scaling; ``exo_day`` holds the midnight-based
    day profile used for the FSNR noise level; ``prices`` covers one block.
    """

    days: np.ndarray
    exo: np.ndarray  # (D, 48)
    ambient: np.ndarray  # (D, 48)
    exo_day: np.ndarray  # (D, 48)
    prices: np.ndarray  # (48,)

    @property
    def slot_hours(self) -> float:
        return 24.0 / SLOTS_PER_DAY

    def scaled(self, kappa: float) -> "SyntheticYear":
        return SyntheticYear(self.days, self.exo * kappa, self.ambient, self.exo_day * kappa, self.prices)

    def window(self, j: int):
        """(exo, ambient) of the 30 charging slots of block ``j``."""
        return self.exo[j, :WINDOW_SLOTS], self.ambient[j, :WINDOW_SLOTS]

    def window_prices(self) -> np.ndarray:
        return self.prices[:WINDOW_SLOTS]


def synthetic_year(day_count: int = 30, seed: int = 0, peak_kw: float = 1.0) -> SyntheticYear:
    """Unscaled synthetic data on ``day_count`` days spread over a year."""
    rng = np.random.default_rng(seed)
    days = sample_days(day_count)
    exo, amb, whole = [], [], []
    for d in days:
        pair = np.array([d, d + 1])
        demand = daily_demand_shape(pair) * peak_kw
        demand = np.maximum(demand * (1.0 + 0.05 * rng.normal(size=demand.shape)), 0.0)
        temp = ambient_temperature(pair, rng)
        exo.append(evening_blocks(demand)[0])
        amb.append(evening_blocks(temp)[0])
        whole.append(demand[0])
    prices = np.roll(on_off_peak_prices(), -WINDOW_START)
    return SyntheticYear(days, np.array(exo), np.array(amb), np.array(whole), prices)


# -- forecast noise ---------------------------------------------------------

def sigma_from_fsnr(day_profile, fsnr_db: float) -> float:
    """Noise standard deviation giving ``fsnr_db`` against a full-day profile.

    ``sigma^2 = mean_t(L_t^2) / 10^(FSNR / 10)``; infinite FSNR means no noise.
    """
    values = np.asarray(getattr(day_profile, "values", day_profile), dtype=float)
    if values.size == 0:
        raise DimensionError("empty day profile")
    if np.isposinf(fsnr_db):
        return 0.0
    if np.isnan(fsnr_db) or np.isneginf(fsnr_db):
        raise DomainError("FSNR must be a number or +inf")
    return float(np.sqrt(np.mean(np.square(values)) / 10.0 ** (fsnr_db / 10.0)))


@dataclass(frozen=True)
class ForecastNoiseModel:
    """Additive Gaussian forecast error set by a forecasting SNR in dB.

    ``per_slot_iid=False`` draws one offset per day instead of one per slot.
    """

    fsnr_db: float = float("inf")
    per_slot_iid: bool = True
    rng_seed: int = 0

    def sigma_day(self, day_profile) -> float:
        return sigma_from_fsnr(day_profile, self.fsnr_db)

    @property
    def noiseless(self) -> bool:
        return np.isposinf(self.fsnr_db)


def apply_forecast_noise(exo: LoadProfile, model: ForecastNoiseModel, day_profile=None,
                         rng: np.random.Generator | None = None) -> LoadProfile:
    """Noisy forecast of ``exo``, clipped at zero.

    The noise level comes from ``day_profile`` (the 48-slot day) when given,
    otherwise from ``exo`` itself. ``rng`` overrides the model's seed.
    """
    ref = exo if day_profile is None else day_profile
    sigma = model.sigma_day(ref)
    if sigma == 0.0:
        return exo
    rng = rng if rng is not None else np.random.default_rng(model.rng_seed)
    noisy = add_noise(exo.values, sigma, model.per_slot_iid, rng)
    return exo.with_values(noisy)


def add_noise(values: np.ndarray, sigma: float, per_slot_iid: bool, rng: np.random.Generator) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if sigma == 0.0:
        return values.copy()
    if per_slot_iid:
        z = rng.normal(0.0, sigma, size=values.shape)
    else:
        z = rng.normal(0.0, sigma, size=values.shape[:-1] + (1,))
    return np.maximum(values + z, 0.0)


def window_grid() -> TimeGrid:
    return TimeGrid(WINDOW_SLOTS, 0.5)
