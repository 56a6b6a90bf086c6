"""Distribution-network cost, individual EV cost, payoffs and potentials.

Player indices ``i`` are 0-based positions in the schedule tuple; slot
indices (starts, windows) stay 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, DomainError, ModeError
from .model import FleetSpec, LoadProfile, Schedule, action_set
from .thermal import TransformerParams, aging_from_hotspot, hotspot_arrays


class TabulatedPricing:
    """Strictly increasing piecewise-linear pricing function ``f``.

    Linear extrapolation past both ends keeps it strictly increasing on the
    whole real line.
    """

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ConfigError("pricing table needs matching x/y arrays of length >= 2")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ConfigError("pricing table must be strictly increasing")
        self.xs, self.ys = xs, ys
        self._lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        self._hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.interp(x, self.xs, self.ys)
        y = np.where(x < self.xs[0], self.ys[0] + self._lo_slope * (x - self.xs[0]), y)
        y = np.where(x > self.xs[-1], self.ys[-1] + self._hi_slope * (x - self.xs[-1]), y)
        return y if y.ndim else float(y)

    def __repr__(self) -> str:
        return f"TabulatedPricing({self.xs.tolist()}, {self.ys.tolist()})"


@dataclass(frozen=True, eq=False)
class CostConfig:
    """Everything that shapes the payoffs besides the fleet and the data.

    ``common_window=None`` means each EV is charged over its own charging
    slots; a tuple of 1-based slots puts every EV on that shared window.
    ``prices=None`` makes the individual cost zero; otherwise it is a ``(T,)``
    price profile shared by all EVs or an ``(I, T)`` matrix.
    """

    alpha: float = 1.0
    beta: float = 1.0
    r_transfo_ohm: float = 0.03
    r_line_ohm: float = 0.03
    common_window: tuple[int, ...] | None = None
    memoryless: bool = False
    prices: np.ndarray | None = None
    pricing: Callable | Sequence[Callable | None] | None = None
    include_dn: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError("alpha must lie in [0, 1]")
        if self.beta < 0:
            raise DomainError("beta must be nonnegative")
        if self.r_transfo_ohm < 0 or self.r_line_ohm < 0:
            raise DomainError("resistances must be nonnegative")
        if self.common_window is not None:
            object.__setattr__(self, "common_window", tuple(sorted({int(t) for t in self.common_window})))
        if self.prices is not None:
            p = np.array(self.prices, dtype=float)
            p.setflags(write=False)
            object.__setattr__(self, "prices", p)

    @property
    def r_total(self) -> float:
        return self.r_transfo_ohm + self.r_line_ohm

    @property
    def own_window(self) -> bool:
        return self.common_window is None

    def replace(self, **changes) -> "CostConfig":
        from dataclasses import replace
        return replace(self, **changes)


def joule_losses(total_load_kw, r_total: float = 0.06):
    """Loss proxy ``(R_transfo + R_line) * L^2`` (resistance times squared power)."""
    return r_total * np.square(total_load_kw)


@dataclass(frozen=True, eq=False)
class ChargingGame:
    """A fully specified charging game: fleet, data, transformer and costs."""

    fleet: FleetSpec
    exo: LoadProfile
    ambient: LoadProfile
    params: TransformerParams = field(default_factory=TransformerParams)
    config: CostConfig = field(default_factory=CostConfig)
    initial_top_oil_rise: float | str | None = None

    def __post_init__(self):
        T = self.exo.grid.slot_count
        if self.ambient.grid.slot_count != T:
            raise DimensionError("exogenous and ambient profiles differ in length")
        self.fleet.check_grid(self.exo.grid)
        cfg = self.config
        if cfg.common_window is not None:
            if not cfg.common_window or min(cfg.common_window) < 1 or max(cfg.common_window) > T:
                raise DomainError(f"common window must be a non-empty subset of 1..{T}")
        if cfg.prices is not None:
            p = cfg.prices
            if p.ndim == 1:
                p = np.broadcast_to(p, (len(self.fleet), p.size))
            if p.shape != (len(self.fleet), T):
                raise DimensionError(f"price matrix shape {cfg.prices.shape} does not fit I={len(self.fleet)}, T={T}")
            object.__setattr__(self, "_prices", p)
        else:
            object.__setattr__(self, "_prices", None)
        pricing = cfg.pricing
        if pricing is None or callable(pricing):
            fns = (pricing,) * len(self.fleet)
        else:
            fns = tuple(pricing)
            if len(fns) != len(self.fleet):
                raise ConfigError("one pricing function per EV is required")
        object.__setattr__(self, "_pricing", fns)
        mask = np.zeros(T, dtype=bool)
        if cfg.common_window is not None:
            mask[np.asarray(cfg.common_window) - 1] = True
        object.__setattr__(self, "_window_mask", mask)
        object.__setattr__(self, "_actions", tuple(tuple(action_set(ev)) for ev in self.fleet.evs))
        # one-hot charging windows and individual costs per action, built lazily
        object.__setattr__(self, "_scan_cache", {})

    def _scan_tables(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        cache = self._scan_cache
        if i not in cache:
            ev = self.fleet.evs[i]
            starts = self._actions[i]
            w = np.zeros((len(starts), self.slot_count))
            for row, st in enumerate(starts):
                w[row, st - 1: st - 1 + ev.duration] = 1.0
            indiv = np.array([self.ev_cost(i, st) for st in starts])
            cache[i] = (w, indiv)
        return cache[i]

    # -- basic quantities -------------------------------------------------

    @property
    def slot_count(self) -> int:
        return self.exo.grid.slot_count

    @property
    def action_sets(self) -> tuple[tuple[int, ...], ...]:
        return self._actions

    @property
    def has_potential(self) -> bool:
        cfg = self.config
        return cfg.common_window is not None or cfg.memoryless or cfg.alpha == 0.0

    def replace(self, **changes) -> "ChargingGame":
        from dataclasses import replace
        return replace(self, **changes)

    def occupancy(self, s: Sequence[int]) -> np.ndarray:
        s = self.fleet.validate_schedule(s)
        n = np.zeros(self.slot_count, dtype=int)
        for ev, si in zip(self.fleet.evs, s):
            n[si - 1: si - 1 + ev.duration] += 1
        return n

    def load(self, s: Sequence[int]) -> np.ndarray:
        return self.exo.values + self.fleet.charging_power * self.occupancy(s)

    def slot_costs(self, loads) -> np.ndarray:
        """Per-slot network cost ``alpha * A_t + (1 - alpha) * J(L_t)``; rows are scenarios."""
        loads = np.asarray(loads, dtype=float)
        cfg = self.config
        if not cfg.include_dn:
            return np.zeros_like(loads)
        losses = joule_losses(loads, cfg.r_total)
        if cfg.alpha == 0.0:
            return losses
        theta, _ = hotspot_arrays(loads, self.ambient.values, self.params,
                                  self.exo.grid.slot_duration_hours,
                                  inertia=not cfg.memoryless,
                                  initial_top_oil_rise=self.initial_top_oil_rise)
        aging = aging_from_hotspot(theta, self.params)
        if cfg.alpha == 1.0:
            return aging
        return cfg.alpha * aging + (1.0 - cfg.alpha) * losses

    def _window_sum(self, costs: np.ndarray, i: int, start: int) -> float:
        if self.config.common_window is not None:
            return float(np.sum(costs[self._window_mask]))
        c = self.fleet.evs[i].duration
        return float(np.sum(costs[start - 1: start - 1 + c]))

    def ev_cost(self, i: int, start: int) -> float:
        """Individual cost ``beta * sum of prices over the charging slots``."""
        if self._prices is None:
            return 0.0
        c = self.fleet.evs[i].duration
        return self.config.beta * float(np.sum(self._prices[i, start - 1: start - 1 + c]))

    def _apply_pricing(self, i: int, cost):
        f = self._pricing[i]
        return cost if f is None else f(cost)

    # -- per-player quantities -------------------------------------------

    def dn_cost(self, i: int, s: Sequence[int]) -> float:
        s = self.fleet.validate_schedule(s)
        return self._window_sum(self.slot_costs(self.load(s)), i, s[i])

    def total_cost(self, i: int, s: Sequence[int]) -> float:
        s = self.fleet.validate_schedule(s)
        return self.dn_cost(i, s) + self.ev_cost(i, s[i])

    def payoff(self, i: int, s: Sequence[int]) -> float:
        return -float(self._apply_pricing(i, self.total_cost(i, s)))

    def payoffs(self, s: Sequence[int]) -> np.ndarray:
        """All players' payoffs from a single thermal evaluation."""
        s = self.fleet.validate_schedule(s)
        costs = self.slot_costs(self.load(s))
        out = np.empty(len(s))
        for i, si in enumerate(s):
            out[i] = -float(self._apply_pricing(i, self._window_sum(costs, i, si) + self.ev_cost(i, si)))
        return out

    def sum_payoff(self, s: Sequence[int]) -> float:
        return float(np.sum(self.payoffs(s)))

    def candidate_costs(self, i: int, s: Sequence[int]) -> tuple[tuple[int, ...], np.ndarray]:
        """Cost ``g_DN + g_EV`` of every start in player ``i``'s action set, others fixed."""
        s = self.fleet.validate_schedule(s)
        ev = self.fleet.evs[i]
        starts = self._actions[i]
        windows, indiv = self._scan_tables(i)
        n = self.occupancy(s)
        n[s[i] - 1: s[i] - 1 + ev.duration] -= 1
        base = self.exo.values + self.fleet.charging_power * n
        costs = self.slot_costs(base[np.newaxis, :] + self.fleet.charging_power * windows)
        if self.config.common_window is not None:
            dn = costs[:, self._window_mask].sum(axis=1)
        else:
            dn = (costs * windows).sum(axis=1)
        return starts, dn + indiv

    def candidate_payoffs(self, i: int, s: Sequence[int]) -> tuple[tuple[int, ...], np.ndarray]:
        starts, costs = self.candidate_costs(i, s)
        f = self._pricing[i]
        if f is None:
            return starts, -costs
        return starts, -np.asarray([f(c) for c in costs], dtype=float)

    # -- potentials --------------------------------------------------------

    def potential(self, s: Sequence[int]) -> float:
        if self.config.common_window is not None:
            return potential_common_window(self, s)
        return potential_own_window_memoryless(self, s)

    def individual_cost_sum(self, s: Schedule) -> float:
        return sum(self.ev_cost(i, si) for i, si in enumerate(s))


def potential_common_window(game: ChargingGame, s: Sequence[int]) -> float:
    """Potential for the shared-window game: minus the window cost minus all individual costs."""
    if game.config.common_window is None:
        raise ModeError("common-window potential needs a common window")
    s = game.fleet.validate_schedule(s)
    costs = game.slot_costs(game.load(s))
    return -float(np.sum(costs[game._window_mask])) - game.individual_cost_sum(s)


def potential_own_window_memoryless(game: ChargingGame, s: Sequence[int]) -> float:
    """Rosenthal-type potential for own-window costs without thermal memory.

    Sums the per-slot cost at every occupancy level ``v = 0..n_t``. Valid
    when the hot-spot model is memoryless, or when ``alpha == 0`` (losses
    carry no memory whatever the thermal model).
    """
    cfg = game.config
    if cfg.common_window is not None:
        raise ModeError("own-window potential called on a common-window game")
    if not cfg.memoryless and cfg.alpha != 0.0:
        raise ModeError("own-window potential requires a memoryless transformer or alpha = 0")
    s = game.fleet.validate_schedule(s)
    n = game.occupancy(s)
    levels = np.arange(int(n.max()) + 1)
    # rows: occupancy level v, columns: slots
    loads = game.exo.values[np.newaxis, :] + game.fleet.charging_power * levels[:, np.newaxis]
    if cfg.include_dn:
        losses = joule_losses(loads, cfg.r_total)
        if cfg.alpha > 0.0:
            theta, _ = hotspot_arrays(loads, game.ambient.values, game.params,
                                      game.exo.grid.slot_duration_hours, inertia=False)
            per_level = cfg.alpha * aging_from_hotspot(theta, game.params) + (1.0 - cfg.alpha) * losses
        else:
            per_level = losses
    else:
        per_level = np.zeros_like(loads)
    used = levels[:, np.newaxis] <= n[np.newaxis, :]
    return -float(np.sum(per_level[used])) - game.individual_cost_sum(s)
