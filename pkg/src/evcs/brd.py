"""Sequential best-response dynamics over charging start times."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .costs import ChargingGame
from .errors import DimensionError, FeasibilityError
from .model import Schedule

# Payoff gaps below this (relative to the payoff magnitude) count as ties.
TIE_RTOL = 1e-10


class UpdateOrder(str, enum.Enum):
    ROUND_ROBIN = "round_robin"
    START_ASCENDING = "start_ascending"


class InitialSchedule(str, enum.Enum):
    ARRIVAL = "arrival"
    RANDOM = "random"
    GIVEN = "given"


@dataclass(frozen=True)
class BrdConfig:
    tolerance_delta: float = 0.0
    max_rounds: int = 100
    update_order: UpdateOrder = UpdateOrder.ROUND_ROBIN
    rng_seed: int = 0
    initial: InitialSchedule = InitialSchedule.ARRIVAL
    given: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.tolerance_delta < 0:
            raise ValueError("tolerance_delta must be >= 0")
        object.__setattr__(self, "update_order", UpdateOrder(self.update_order))
        object.__setattr__(self, "initial", InitialSchedule(self.initial))
        if self.initial is InitialSchedule.GIVEN and self.given is None:
            raise ValueError("initial='given' needs a schedule")


@dataclass
class BrdResult:
    schedule: Schedule
    rounds_used: int
    converged: bool
    last_change_round: int
    initial_schedule: Schedule
    potential_trajectory: list[float] | None
    payoff_trajectories: np.ndarray  # (updates + 1, I), row 0 is the initial schedule
    update_log: list[tuple[int, int, int]] = field(default_factory=list)  # (round, ev id, start)

    @property
    def inner_iterations_to_settle(self) -> int:
        """Inner updates performed up to the last round that changed the schedule."""
        return self.last_change_round * len(self.schedule)

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "rounds_used": self.rounds_used,
            "last_change_round": self.last_change_round,
            "schedule": list(self.schedule),
            "initial_schedule": list(self.initial_schedule),
        }

    def to_rows(self) -> list[tuple]:
        """Rows ``(round, ev, start, payoff, potential)``, one per inner update."""
        rows = []
        for k, (rnd, ev_id, start) in enumerate(self.update_log, start=1):
            pot = None if self.potential_trajectory is None else self.potential_trajectory[k]
            rows.append((rnd, ev_id, start, float(self.payoff_trajectories[k, ev_id - 1]), pot))
        return rows

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def schedule_change_norm(prev: Sequence[int], nxt: Sequence[int]) -> float:
    """Max absolute start-time change between two schedules."""
    if len(prev) != len(nxt):
        raise DimensionError("schedules have different lengths")
    if len(prev) == 0:
        return 0.0
    return float(np.max(np.abs(np.asarray(prev) - np.asarray(nxt))))


def _maximizers(values: np.ndarray) -> np.ndarray:
    best = np.max(values)
    tol = TIE_RTOL * max(1.0, abs(best))
    return np.flatnonzero(values >= best - tol)


def best_response(game: ChargingGame, i: int, s: Sequence[int], rng: np.random.Generator,
                  stay_if_optimal: bool = False) -> int:
    """A payoff-maximizing start for player ``i`` given the others' starts.

    Ties are broken uniformly at random with ``rng``. With
    ``stay_if_optimal`` the current start is kept whenever it is itself a
    maximizer, so the player only moves on a strict improvement.
    """
    starts, payoffs = game.candidate_payoffs(i, s)
    if not starts:
        raise FeasibilityError(f"EV {i + 1} has an empty action set")
    if len(starts) == 1:
        return starts[0]
    winners = _maximizers(payoffs)
    if stay_if_optimal:
        cur = starts.index(s[i])
        if cur in winners:
            return s[i]
    if winners.size == 1:
        return starts[int(winners[0])]
    return starts[int(winners[rng.integers(winners.size)])]


def _initial_schedule(game: ChargingGame, cfg: BrdConfig, rng: np.random.Generator) -> Schedule:
    if cfg.initial is InitialSchedule.ARRIVAL:
        return tuple(ev.arrival for ev in game.fleet.evs)
    if cfg.initial is InitialSchedule.RANDOM:
        return tuple(int(acts[rng.integers(len(acts))]) for acts in game.action_sets)
    return game.fleet.validate_schedule(cfg.given)


def run_brd(game: ChargingGame, cfg: BrdConfig = BrdConfig(),
            record_trajectories: bool = True) -> BrdResult:
    """Round-robin best responses until a full round leaves the schedule unchanged.

    Each player sees the latest starts of everybody else. Players only leave
    their current start on a strict improvement; among several strictly
    better maximizers one is drawn at random. When the game admits a
    potential its value is recorded after every inner update; with
    ``record_trajectories=False`` neither payoffs nor potentials are kept,
    which is much cheaper inside Monte-Carlo loops.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    s = list(_initial_schedule(game, cfg, rng))
    initial = tuple(s)
    track_potential = record_trajectories and game.has_potential
    potentials = [game.potential(s)] if track_potential else None
    payoff_rows = [game.payoffs(s)] if record_trajectories else []
    log: list[tuple[int, int, int]] = []

    converged = False
    last_change = 0
    m = 0
    prev = tuple(s)
    while m < cfg.max_rounds:
        m += 1
        if cfg.update_order is UpdateOrder.START_ASCENDING:
            order = sorted(range(len(s)), key=lambda k: (prev[k], k))
        else:
            order = range(len(s))
        for i in order:
            s[i] = best_response(game, i, s, rng, stay_if_optimal=True)
            log.append((m, i + 1, s[i]))
            if record_trajectories:
                payoff_rows.append(game.payoffs(s))
            if track_potential:
                potentials.append(game.potential(s))
        current = tuple(s)
        if current != prev:
            last_change = m
        if schedule_change_norm(prev, current) <= cfg.tolerance_delta:
            converged = True
            break
        prev = current

    return BrdResult(
        schedule=tuple(s),
        rounds_used=m,
        converged=converged,
        last_change_round=last_change,
        initial_schedule=initial,
        potential_trajectory=potentials,
        payoff_trajectories=np.vstack(payoff_rows) if payoff_rows else np.empty((0, len(s))),
        update_log=log,
    )
