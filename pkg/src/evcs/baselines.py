"""Reference charging policies: plug-and-charge and two continuous-power schemes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import DimensionError, FeasibilityError
from .model import FleetSpec, LoadProfile, Schedule


def plug_and_charge(fleet: FleetSpec) -> Schedule:
    return tuple(ev.arrival for ev in fleet.evs)


class ValleyFill(NamedTuple):
    x: np.ndarray
    level: float


def valley_fill_exact(exo, energy: float, power_scale: float = 1.0, upper=1.0) -> ValleyFill:
    """Water-filling allocation of ``energy`` units over the slots of ``exo``.

    Returns ``x`` with ``x_t = clip((L* - exo_t) / p, 0, upper_t)`` and
    ``sum(x) == energy``; ``L*`` is the water level. ``upper`` may be a
    scalar or a per-slot array (zero outside an availability window).
    """
    exo = np.asarray(getattr(exo, "values", exo), dtype=float)
    p = float(power_scale)
    if p <= 0:
        raise FeasibilityError("power scale must be positive")
    ub = np.broadcast_to(np.asarray(upper, dtype=float), exo.shape)
    if np.any(ub < 0):
        raise FeasibilityError("upper bounds must be nonnegative")
    cap = float(np.sum(ub))
    if energy < 0 or energy > cap * (1 + 1e-12):
        raise FeasibilityError(f"energy {energy} outside [0, {cap}]")
    if energy == 0:
        return ValleyFill(np.zeros_like(exo), float(np.min(exo)))

    def filled(level):
        return np.clip((level - exo) / p, 0.0, ub)

    lo = float(np.min(exo[ub > 0]))
    hi = float(np.max(exo + p * ub))
    if energy >= cap:
        return ValleyFill(ub.copy(), hi)
    level = brentq(lambda L: float(np.sum(filled(L))) - energy, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    # Re-solve the linear piece containing the root exactly.
    x = filled(level)
    interior = (x > 0) & (x < ub)
    if np.any(interior):
        at_top = (~interior) & (x >= ub) & (ub > 0)
        level = (p * (energy - float(np.sum(ub[at_top]))) + float(np.sum(exo[interior]))) / int(np.sum(interior))
        x = filled(level)
    return ValleyFill(x, float(level))


@dataclass(eq=False)
class ContinuousProfileSet:
    """Per-EV power profiles ``(I, T)`` in kW produced by a continuous scheme."""

    profiles: np.ndarray
    slot_hours: float
    converged: bool = True
    iterations: int = 0

    @property
    def aggregate(self) -> np.ndarray:
        return self.profiles.sum(axis=0)

    def energy_kwh(self) -> np.ndarray:
        return self.profiles.sum(axis=1) * self.slot_hours

    def to_rows(self) -> list[list[float]]:
        return [[t + 1, *map(float, self.profiles[:, t])] for t in range(self.profiles.shape[1])]


def _window_bounds(fleet: FleetSpec, slot_count: int, p_max: float) -> np.ndarray:
    ub = np.zeros((len(fleet), slot_count))
    for k, ev in enumerate(fleet.evs):
        if ev.departure > slot_count:
            raise DimensionError(f"EV {ev.id} departs after slot {slot_count}")
        ub[k, ev.arrival - 1: ev.departure] = p_max
    return ub


def _energies(fleet: FleetSpec, ub: np.ndarray) -> np.ndarray:
    energy = fleet.durations * fleet.charging_power
    if np.any(energy > ub.sum(axis=1) * (1 + 1e-12)):
        raise FeasibilityError("an EV cannot meet its energy need under the power cap")
    return energy.astype(float)


def project_capped_simplex(y: np.ndarray, ub: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean projection onto ``{0 <= x <= ub, sum(x) = total}``.

    The projection is ``clip(y + lam, 0, ub)``; ``lam`` is found exactly by
    evaluating the piecewise-linear row sum at all breakpoints.
    """
    y = np.atleast_2d(y)
    ub = np.atleast_2d(ub)
    total = np.atleast_1d(total).astype(float)
    bps = np.sort(np.concatenate([-y, ub - y], axis=1), axis=1)  # (I, 2T)
    sums = np.clip(y[:, np.newaxis, :] + bps[:, :, np.newaxis], 0.0, ub[:, np.newaxis, :]).sum(axis=2)
    k = np.array([np.searchsorted(row, tot, side="left") for row, tot in zip(sums, total)])
    k = np.clip(k, 1, bps.shape[1] - 1)
    rows = np.arange(y.shape[0])
    b0, b1 = bps[rows, k - 1], bps[rows, k]
    g0, g1 = sums[rows, k - 1], sums[rows, k]
    slope = np.where(g1 > g0, (b1 - b0) / np.where(g1 > g0, g1 - g0, 1.0), 0.0)
    lam = b0 + (total - g0) * slope
    return np.clip(y + lam[:, np.newaxis], 0.0, ub)


def gan_style_schedule(fleet: FleetSpec, exo: LoadProfile, penalty_weight: float = 0.5,
                       max_iters: int = 2000, tol: float = 1e-6,
                       p_max: float | None = None) -> ContinuousProfileSet:
    """Synchronous proximal-gradient charging (the ``GanStyle`` policy).

    Every EV receives the same marginal-loss signal computed from the
    broadcast aggregate load ``D_t``, normalized as ``D_t / (2 I)`` (the loss
    derivative ``2 R D_t`` divided by ``4 R I``), and takes a proximal step
    ``argmin sum(signal * x) + (w / 2) * ||x - x_prev||^2`` over its feasible
    profiles. At ``w = 0.5`` the aggregate update is deadbeat in the
    unconstrained regime. Fixed points are valley-filling aggregates.
    """
    if penalty_weight <= 0:
        raise ValueError("penalty_weight must be positive")
    T = exo.grid.slot_count
    cap = fleet.charging_power if p_max is None else p_max
    ub = _window_bounds(fleet, T, cap)
    energy = _energies(fleet, ub)
    x = ub * (energy / ub.sum(axis=1))[:, np.newaxis]
    scale = 1.0 / (2.0 * len(fleet))
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        demand = exo.values + x.sum(axis=0)
        signal = scale * demand
        x_new = project_capped_simplex(x - signal / penalty_weight, ub, energy)
        change = float(np.max(np.abs(x_new - x)))
        x = x_new
        if change <= tol:
            converged = True
            break
    return ContinuousProfileSet(x, exo.grid.slot_duration_hours, converged, it)


def shinwari_style_schedule(fleet: FleetSpec, exo: LoadProfile,
                            p_max: float | None = None) -> ContinuousProfileSet:
    """Spread each EV's energy over its window in proportion to the depth
    ``max(exo) - exo_t`` below the demand peak.

    Slots pushed above the power cap are clipped and the overflow shared
    uniformly among the window's uncapped slots. A flat profile (zero depth
    everywhere) falls back to a uniform spread.
    """
    T = exo.grid.slot_count
    cap = fleet.charging_power if p_max is None else p_max
    ub = _window_bounds(fleet, T, cap)
    energy = _energies(fleet, ub)
    depth = float(np.max(exo.values)) - exo.values
    x = np.zeros_like(ub)
    for k in range(len(fleet)):
        window = ub[k] > 0
        weights = np.where(window, depth, 0.0)
        if weights.sum() <= 0:
            weights = window.astype(float)
        row = energy[k] * weights / weights.sum()
        if energy[k] >= cap * int(np.sum(window)) * (1 - 1e-12):
            x[k] = np.where(window, cap, 0.0)  # must charge flat out
            continue
        for _ in range(T):
            over = row > cap * (1 + 1e-12)
            if not np.any(over):
                break
            excess = float(np.sum(row[over] - cap))
            row[over] = cap
            free = window & (row < cap)
            if not np.any(free):
                raise FeasibilityError(f"EV {k + 1}: energy does not fit under the power cap")
            row[free] += excess / int(np.sum(free))
        x[k] = np.minimum(row, cap)
    return ContinuousProfileSet(x, exo.grid.slot_duration_hours, True, 0)
