"""Domain types and occupancy/load arithmetic.

All slot indices exposed by this module are 1-based (slots ``1..T``); arrays
holding per-slot values are ordinary 0-based numpy arrays of length ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError, FeasibilityError

Schedule = tuple[int, ...]

DEFAULT_SLOTS = 30
DEFAULT_SLOT_HOURS = 0.5


@dataclass(frozen=True)
class TimeGrid:
    slot_count: int = DEFAULT_SLOTS
    slot_duration_hours: float = DEFAULT_SLOT_HOURS

    def __post_init__(self):
        if int(self.slot_count) != self.slot_count or self.slot_count < 1:
            raise DomainError(f"slot_count must be a positive integer, got {self.slot_count}")
        if not self.slot_duration_hours > 0:
            raise DomainError("slot_duration_hours must be positive")

    @property
    def slots(self) -> range:
        return range(1, self.slot_count + 1)


@dataclass(frozen=True, eq=False)
class LoadProfile:
    """A per-slot sequence on a :class:`TimeGrid`.

    ``units`` is a free tag ("kW", "degC", "price", ...). Demand profiles
    (``units == "kW"``) must be nonnegative.
    """

    grid: TimeGrid
    values: np.ndarray
    units: str = "kW"

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1 or arr.shape[0] != self.grid.slot_count:
            raise DimensionError(
                f"profile has {arr.size} values, grid has {self.grid.slot_count} slots"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("profile values must be finite")
        if self.units == "kW" and np.any(arr < 0):
            raise DomainError("demand profile values must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(cls, values: Iterable[float], units: str = "kW",
                    slot_duration_hours: float = DEFAULT_SLOT_HOURS) -> "LoadProfile":
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
        return cls(TimeGrid(arr.size, slot_duration_hours), arr, units)

    @classmethod
    def constant(cls, value: float, grid: TimeGrid, units: str = "kW") -> "LoadProfile":
        return cls(grid, np.full(grid.slot_count, float(value)), units)

    def __len__(self) -> int:
        return self.grid.slot_count

    def __eq__(self, other) -> bool:
        if not isinstance(other, LoadProfile):
            return NotImplemented
        return (self.grid == other.grid and self.units == other.units
                and np.array_equal(self.values, other.values))

    def scaled(self, factor: float) -> "LoadProfile":
        return LoadProfile(self.grid, self.values * factor, self.units)

    def with_values(self, values) -> "LoadProfile":
        return LoadProfile(self.grid, values, self.units)


@dataclass(frozen=True)
class EvSpec:
    """Mobility data of one EV: plug-in slot, leave slot and charge duration (slots)."""

    id: int
    arrival: int
    departure: int
    duration: int

    def __post_init__(self):
        for name in ("arrival", "departure", "duration"):
            v = getattr(self, name)
            if int(v) != v:
                raise DomainError(f"EV {self.id}: {name} must be an integer")
        if self.duration < 1:
            raise DomainError(f"EV {self.id}: duration must be >= 1")
        if self.arrival < 1 or self.departure < self.arrival:
            raise DomainError(f"EV {self.id}: need 1 <= arrival <= departure")
        if self.departure - self.arrival + 1 < self.duration:
            raise FeasibilityError(
                f"EV {self.id}: window [{self.arrival}, {self.departure}] shorter than "
                f"duration {self.duration}"
            )

    @property
    def last_start(self) -> int:
        return self.departure - self.duration + 1


@dataclass(frozen=True)
class FleetSpec:
    evs: tuple[EvSpec, ...]
    charging_power: float = 3.0

    def __post_init__(self):
        evs = tuple(self.evs)
        object.__setattr__(self, "evs", evs)
        if not evs:
            raise DomainError("fleet must contain at least one EV")
        if not self.charging_power > 0:
            raise DomainError("charging_power must be positive")
        ids = [ev.id for ev in evs]
        if ids != list(range(1, len(evs) + 1)):
            raise DomainError(f"EV ids must be 1..I in order, got {ids}")

    @classmethod
    def symmetric(cls, count: int, arrival: int, departure: int, duration: int,
                  charging_power: float = 3.0) -> "FleetSpec":
        return cls(tuple(EvSpec(i + 1, arrival, departure, duration) for i in range(count)),
                   charging_power)

    @classmethod
    def from_tuples(cls, rows: Sequence[tuple[int, int, int]], charging_power: float = 3.0) -> "FleetSpec":
        return cls(tuple(EvSpec(i + 1, a, d, c) for i, (a, d, c) in enumerate(rows)), charging_power)

    def __len__(self) -> int:
        return len(self.evs)

    @property
    def size(self) -> int:
        return len(self.evs)

    @property
    def arrivals(self) -> np.ndarray:
        return np.array([ev.arrival for ev in self.evs])

    @property
    def durations(self) -> np.ndarray:
        return np.array([ev.duration for ev in self.evs])

    def check_grid(self, grid: TimeGrid) -> None:
        for ev in self.evs:
            if ev.departure > grid.slot_count:
                raise DimensionError(
                    f"EV {ev.id} departs at slot {ev.departure} beyond T={grid.slot_count}"
                )

    def validate_schedule(self, starts: Sequence[int]) -> Schedule:
        s = tuple(int(v) for v in starts)
        if len(s) != len(self.evs):
            raise DimensionError(f"schedule has {len(s)} entries for {len(self.evs)} EVs")
        for ev, si in zip(self.evs, s):
            if not ev.arrival <= si <= ev.last_start:
                raise FeasibilityError(
                    f"EV {ev.id}: start {si} outside [{ev.arrival}, {ev.last_start}]"
                )
        return s

    def with_power(self, charging_power: float, durations: Sequence[int] | None = None) -> "FleetSpec":
        if durations is None:
            return FleetSpec(self.evs, charging_power)
        evs = tuple(EvSpec(ev.id, ev.arrival, ev.departure, int(c)) for ev, c in zip(self.evs, durations))
        return FleetSpec(evs, charging_power)


def action_set(ev: EvSpec) -> list[int]:
    """Feasible start slots ``a, a+1, ..., d - C + 1`` of one EV."""
    if ev.departure - ev.arrival + 1 < ev.duration:
        raise FeasibilityError(f"EV {ev.id} has an empty action set")
    return list(range(ev.arrival, ev.last_start + 1))


def occupancy(fleet: FleetSpec, s: Sequence[int], slot_count: int) -> np.ndarray:
    """Number of EVs charging in each slot (``n_t``)."""
    s = fleet.validate_schedule(s)
    n = np.zeros(slot_count, dtype=int)
    for ev, si in zip(fleet.evs, s):
        if si + ev.duration - 1 > slot_count:
            raise DimensionError(f"EV {ev.id} charges beyond slot {slot_count}")
        n[si - 1: si - 1 + ev.duration] += 1
    return n


def start_counts(fleet: FleetSpec, s: Sequence[int], slot_count: int) -> np.ndarray:
    """Number of EVs starting in each slot."""
    s = fleet.validate_schedule(s)
    return np.bincount(np.asarray(s) - 1, minlength=slot_count)[:slot_count]


def total_load(exo: LoadProfile, fleet: FleetSpec, s: Sequence[int]) -> LoadProfile:
    fleet.check_grid(exo.grid)
    n = occupancy(fleet, s, exo.grid.slot_count)
    return LoadProfile(exo.grid, exo.values + fleet.charging_power * n, exo.units)


def ev_load_matrix(fleet: FleetSpec, s: Sequence[int], slot_count: int) -> np.ndarray:
    """Per-EV rectangular power profiles, shape ``(I, T)`` in kW."""
    s = fleet.validate_schedule(s)
    x = np.zeros((len(fleet), slot_count))
    for k, (ev, si) in enumerate(zip(fleet.evs, s)):
        x[k, si - 1: si - 1 + ev.duration] = fleet.charging_power
    return x


@dataclass(frozen=True)
class MobilityModel:
    """Gaussian arrival/departure/duration statistics (slot units)."""

    arrival_mean: float = 4.0
    arrival_sd: float = 1.5
    departure_mean: float = 29.0
    departure_sd: float = 0.75
    duration_mean: float = 5.99
    duration_sd: float = 1.14
    max_redraws: int = 100


def scenario_s_fleet(count: int, slot_count: int = DEFAULT_SLOTS, duration: int = 16,
                     charging_power: float = 3.0) -> FleetSpec:
    """Worst-case symmetric fleet: everyone plugs at slot 1 and leaves at ``T``."""
    return FleetSpec.symmetric(count, 1, slot_count, duration, charging_power)


def draw_scenario_t_fleet(count: int, rng: np.random.Generator,
                          slot_count: int = DEFAULT_SLOTS, charging_power: float = 3.0,
                          mobility: MobilityModel = MobilityModel()) -> FleetSpec:
    """Draw a fleet from rounded Gaussian mobility statistics.

    Draws are rounded to the nearest integer and clamped to ``[1, T]``;
    a draw whose window cannot hold its duration is redrawn.
    """
    evs = []
    for i in range(count):
        for _ in range(mobility.max_redraws + 1):
            a = int(np.clip(np.rint(rng.normal(mobility.arrival_mean, mobility.arrival_sd)), 1, slot_count))
            d = int(np.clip(np.rint(rng.normal(mobility.departure_mean, mobility.departure_sd)), 1, slot_count))
            c = int(max(1, np.rint(rng.normal(mobility.duration_mean, mobility.duration_sd))))
            if a <= d and d - a + 1 >= c:
                evs.append(EvSpec(i + 1, a, d, c))
                break
        else:
            raise FeasibilityError(
                f"no feasible mobility draw for EV {i + 1} after {mobility.max_redraws} redraws"
            )
    return FleetSpec(tuple(evs), charging_power)
