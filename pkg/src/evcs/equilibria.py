"""Exhaustive Nash-equilibrium search, price of decentralization, non-atomic limit."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .baselines import ValleyFill, valley_fill_exact
from .brd import TIE_RTOL
from .costs import ChargingGame, CostConfig, joule_losses
from .errors import FeasibilityError, PreconditionError, SearchRefusedError, SignConventionError
from .model import FleetSpec, LoadProfile, Schedule, TimeGrid
from .thermal import TransformerParams, aging_from_hotspot, hotspot_arrays

DEFAULT_BUDGET = 10**8
_BLOCK = 1 << 15


def is_nash(game: ChargingGame, s: Sequence[int], rtol: float = TIE_RTOL) -> bool:
    """True when no player gains more than the tie tolerance by moving alone."""
    s = game.fleet.validate_schedule(s)
    for i in range(len(s)):
        starts, payoffs = game.candidate_payoffs(i, s)
        current = payoffs[starts.index(s[i])]
        best = float(np.max(payoffs))
        if best > current + rtol * max(1.0, abs(best)):
            return False
    return True


@dataclass
class NeReport:
    equilibria: list[Schedule]
    optima: list[Schedule]
    best_sum_payoff: float
    worst_ne_sum_payoff: float
    pod: float
    search_space_size: int

    def summary(self) -> dict:
        return {
            "equilibria": [list(s) for s in self.equilibria],
            "optima": [list(s) for s in self.optima],
            "best_sum_payoff": self.best_sum_payoff,
            "worst_ne_sum_payoff": self.worst_ne_sum_payoff,
            "pod": self.pod,
            "search_space_size": self.search_space_size,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def payoff_table(game: ChargingGame, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Payoffs of every joint schedule, shape ``(|S_1|, ..., |S_I|, I)``.

    Profiles are evaluated in blocks of consecutive flat indices, so the
    first EV's start partitions the work.
    """
    sizes = [len(a) for a in game.action_sets]
    total = math.prod(sizes)
    if total > budget:
        raise SearchRefusedError(f"{total} joint schedules exceed the budget of {budget}")
    T = game.slot_count
    P = game.fleet.charging_power
    I = len(sizes)
    # one-hot charging windows per player and action, and individual costs
    windows, indiv = [], []
    for i, (ev, acts) in enumerate(zip(game.fleet.evs, game.action_sets)):
        w = np.zeros((len(acts), T))
        for k, st in enumerate(acts):
            w[k, st - 1: st - 1 + ev.duration] = 1.0
        windows.append(w)
        indiv.append(np.array([game.ev_cost(i, st) for st in acts]))
    common = game.config.common_window is not None
    mask = game._window_mask.astype(float)

    table = np.empty((total, I))
    for lo in range(0, total, _BLOCK):
        flat = np.arange(lo, min(total, lo + _BLOCK))
        idx = np.unravel_index(flat, sizes)
        occ = np.zeros((flat.size, T))
        for i in range(I):
            occ += windows[i][idx[i]]
        costs = game.slot_costs(game.exo.values + P * occ)
        # window sums over sorted terms, so schedules that load the same
        # multiset of slot costs get bit-identical totals
        common_cost = np.sort(costs * mask, axis=1).sum(axis=1) if common else None
        for i in range(I):
            dn = common_cost if common else np.sort(costs * windows[i][idx[i]], axis=1).sum(axis=1)
            c = dn + indiv[i][idx[i]]
            f = game._pricing[i]
            table[flat, i] = -(c if f is None else np.asarray(f(c), dtype=float))
    return table.reshape(*sizes, I)


def enumerate_equilibria(game: ChargingGame, budget: int = DEFAULT_BUDGET,
                         rtol: float = TIE_RTOL) -> NeReport:
    """Scan all joint schedules: every pure NE, the sum-payoff optimum and the PoD.

    ``PoD = 1 - max_s w(s) / min_{s in NE} w(s)`` with ``w`` the sum of
    payoffs, which must be strictly negative everywhere.
    """
    table = payoff_table(game, budget)
    I = table.shape[-1]
    sizes = table.shape[:-1]
    ne = np.ones(sizes, dtype=bool)
    for i in range(I):
        u = table[..., i]
        best = np.max(u, axis=i, keepdims=True)
        ne &= u >= best - rtol * np.maximum(1.0, np.abs(best))
    # sorting first makes permuted schedules sum to bit-identical totals
    w = np.sort(table, axis=-1).sum(axis=-1)
    if np.any(w >= 0):
        raise SignConventionError("sum-payoff must be strictly negative for the PoD ratio")
    if not np.any(ne):
        raise FeasibilityError("no pure Nash equilibrium found")
    best_w = float(np.max(w))
    worst_ne = float(np.min(w[ne]))
    optimal = w >= best_w - rtol * abs(best_w)

    def to_schedules(flags):
        return [tuple(int(game.action_sets[i][k]) for i, k in enumerate(idx))
                for idx in zip(*np.nonzero(flags))]

    return NeReport(
        equilibria=to_schedules(ne),
        optima=to_schedules(optimal),
        best_sum_payoff=best_w,
        worst_ne_sum_payoff=worst_ne,
        pod=1.0 - best_w / worst_ne,
        search_space_size=int(w.size),
    )


# -- non-atomic limit -------------------------------------------------------

def nonatomic_valley_fill(exo, p: float, C: int, T: int | None = None) -> ValleyFill:
    """Fleet fractions ``x_t`` charging per slot in the infinite-fleet limit.

    Valley filling of ``C`` slot-units over ``exo`` with ``0 <= x_t <= 1``.
    """
    values = np.asarray(getattr(exo, "values", exo), dtype=float)
    if T is not None and values.size != T:
        raise FeasibilityError(f"profile has {values.size} slots, expected {T}")
    if C > values.size:
        raise FeasibilityError("charging duration exceeds the horizon")
    return valley_fill_exact(values, float(C), p, 1.0)


def check_pod_hypotheses(exo, C: int, alpha: float, memoryless: bool) -> None:
    values = np.asarray(getattr(exo, "values", exo), dtype=float)
    T = values.size
    if C > T:
        raise PreconditionError("charging duration exceeds the horizon")
    if np.any(np.diff(values[:C]) > 0):
        raise PreconditionError("exogenous demand must be non-increasing on slots 1..C")
    if np.any(np.diff(values[T - C:]) < 0):
        raise PreconditionError("exogenous demand must be non-decreasing on slots T-C+1..T")
    if not (memoryless or alpha == 0.0):
        raise PreconditionError("needs a memoryless transformer or alpha = 0")


def _start_matrix(T: int, C: int) -> np.ndarray:
    m = np.zeros((T, T - C + 1))
    for s in range(T - C + 1):
        m[s: s + C, s] = 1.0
    return m


@dataclass
class PodCheck:
    rows: list[tuple[int, float]]
    nonatomic_pod: float
    nonatomic_x: np.ndarray
    trend_ok: bool
    hypotheses: dict = field(default_factory=dict)


def pod_nonatomic_check(exo, p: float, C: int, fleet_sizes: Sequence[int],
                        alpha: float = 0.0, memoryless: bool = True,
                        ambient: LoadProfile | None = None,
                        params: TransformerParams | None = None,
                        threshold: float = 0.05, budget: int = DEFAULT_BUDGET) -> PodCheck:
    """PoD of finite symmetric games approaching the non-atomic limit.

    Each finite game has ``I`` EVs of power ``p / I`` sharing the whole
    horizon as cost window and no individual cost. The non-atomic PoD
    compares the valley-filling equilibrium with the sum-payoff optimum over
    start-time distributions, found independently by SLSQP.
    """
    exo = exo if isinstance(exo, LoadProfile) else LoadProfile.from_values(exo)
    T = exo.grid.slot_count
    check_pod_hypotheses(exo, C, alpha, memoryless)
    params = params or TransformerParams()
    ambient = ambient or LoadProfile.constant(20.0, exo.grid, "degC")
    cfg = CostConfig(alpha=alpha, memoryless=memoryless, common_window=tuple(range(1, T + 1)))

    rows = []
    for I in fleet_sizes:
        fleet = FleetSpec.symmetric(I, 1, T, C, p / I)
        game = ChargingGame(fleet, exo, ambient, params, cfg)
        rows.append((I, enumerate_equilibria(game, budget).pod))

    def slot_cost(load):
        losses = joule_losses(load, cfg.r_total)
        if alpha == 0.0:
            return losses
        theta, _ = hotspot_arrays(load, ambient.values, params, exo.grid.slot_duration_hours, inertia=False)
        return alpha * aging_from_hotspot(theta, params) + (1 - alpha) * losses

    def welfare(x):
        return -float(np.sum(slot_cost(exo.values + p * x)))

    vf = nonatomic_valley_fill(exo, p, C)
    M = _start_matrix(T, C)
    y0 = np.full(M.shape[1], 1.0 / M.shape[1])
    res = minimize(lambda y: -welfare(M @ y), y0, method="SLSQP",
                   bounds=[(0.0, 1.0)] * M.shape[1],
                   constraints=[{"type": "eq", "fun": lambda y: np.sum(y) - 1.0}],
                   options={"ftol": 1e-14, "maxiter": 500})
    best = max(welfare(M @ res.x), welfare(vf.x))
    na_pod = 1.0 - best / welfare(vf.x)

    pods = [pod for _, pod in rows]
    monotone = all(b <= a + 1e-12 for a, b in zip(pods, pods[1:]))
    trend_ok = monotone or (bool(pods) and pods[-1] <= threshold)
    return PodCheck(rows, na_pod, vf.x, trend_ok)


def multi_ne_game(alpha: float = 1.0, memoryless: bool = True) -> ChargingGame:
    """Three EVs, five slots, ``exo = (1, 2, 3, 2, 1)``: several pure equilibria."""
    grid = TimeGrid(5, 0.5)
    exo = LoadProfile(grid, np.array([1.0, 2.0, 3.0, 2.0, 1.0]))
    ambient = LoadProfile.constant(20.0, grid, "degC")
    fleet = FleetSpec.symmetric(3, 1, 5, 2, 1.0)
    return ChargingGame(fleet, exo, ambient, TransformerParams().low_inertia(),
                        CostConfig(alpha=alpha, memoryless=memoryless))
