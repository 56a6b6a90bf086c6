"""CSV / JSON readers and writers and the key=value config format.

Input-type files (profiles, fleets, schedules) are written with the
shortest exact float repr so they round-trip. Result files (traces,
trajectories, reports) print floats with 9 significant digits.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .model import EvSpec, FleetSpec, LoadProfile, Schedule, TimeGrid

SIG_DIGITS = 9


def fmt(x) -> str:
    """Stable text for one cell: integers as is, floats with 9 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.{SIG_DIGITS}g}"
    return str(x)


def round_floats(obj):
    """Recursively round floats to 9 significant digits for JSON output."""
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.{SIG_DIGITS}g}")
    return obj


def dumps_json(obj) -> str:
    return json.dumps(round_floats(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj))
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _read_rows(path, expected: Sequence[str]):
    """Yield ``(line_number, fields)`` after checking the header."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path=str(path)) from exc
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty file", 1, str(path))
    header = [h.strip().lower() for h in lines[0].split(",")]
    if header != list(expected):
        raise ParseError(f"expected header {','.join(expected)!r}, got {lines[0]!r}", 1, str(path))
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(expected):
            raise ParseError(f"expected {len(expected)} fields, got {len(fields)}", lineno, str(path))
        out.append((lineno, fields))
    if not out:
        raise ParseError("no data rows", 1, str(path))
    return out


def _int(text: str, lineno: int, path, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not an integer", lineno, str(path)) from None


def _float(text: str, lineno: int, path, what: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", lineno, str(path)) from None
    if not math.isfinite(x):
        raise ParseError(f"{what} {text!r} is not finite", lineno, str(path))
    return x


# -- profiles --------------------------------------------------------------

def load_profile_csv(path, units: str = "kW", slot_hours: float = 0.5) -> LoadProfile:
    """Read ``slot,value`` rows; slots must run 1..T without gaps or repeats."""
    rows = _read_rows(path, ("slot", "value"))
    seen: dict[int, int] = {}
    values = {}
    for lineno, (s, v) in rows:
        slot = _int(s, lineno, path, "slot")
        if slot in seen:
            raise ParseError(f"duplicate slot {slot} (first on line {seen[slot]})", lineno, str(path))
        x = _float(v, lineno, path, "value")
        if units == "kW" and x < 0:
            raise ParseError(f"negative demand value {v}", lineno, str(path))
        seen[slot] = lineno
        values[slot] = x
    T = len(values)
    missing = sorted(set(range(1, T + 1)) - set(values))
    if missing:
        bad = max(values)
        raise ParseError(f"slots must be 1..{T}; missing slot {missing[0]}", seen[bad], str(path))
    return LoadProfile(TimeGrid(T, slot_hours), np.array([values[t] for t in range(1, T + 1)]), units)


def write_profile_csv(path, profile: LoadProfile) -> Path:
    rows = [(t, repr(float(v))) for t, v in enumerate(profile.values, start=1)]
    return write_csv(path, ("slot", "value"), rows)


def write_profile_matrix_csv(path, matrix: np.ndarray, labels: Sequence[str] | None = None) -> Path:
    """Per-slot columns, e.g. per-EV power profiles ``(I, T)``."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    labels = labels or [f"ev{k + 1}" for k in range(matrix.shape[0])]
    rows = [[t + 1, *matrix[:, t]] for t in range(matrix.shape[1])]
    return write_csv(path, ("slot", *labels), rows)


# -- fleets and schedules ----------------------------------------------------

def load_fleet_csv(path, charging_power: float = 3.0) -> FleetSpec:
    rows = _read_rows(path, ("id", "arrival", "departure", "duration"))
    evs = []
    for lineno, fields in rows:
        i, a, d, c = (_int(f, lineno, path, name) for f, name in
                      zip(fields, ("id", "arrival", "departure", "duration")))
        try:
            evs.append(EvSpec(i, a, d, c))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    evs.sort(key=lambda ev: ev.id)
    try:
        return FleetSpec(tuple(evs), charging_power)
    except ValueError as exc:
        raise ParseError(str(exc), path=str(path)) from None


def write_fleet_csv(path, fleet: FleetSpec) -> Path:
    rows = [(ev.id, ev.arrival, ev.departure, ev.duration) for ev in fleet.evs]
    return write_csv(path, ("id", "arrival", "departure", "duration"), rows)


def write_schedule_csv(path, schedule: Sequence[int]) -> Path:
    return write_csv(path, ("ev", "start"), [(k + 1, int(s)) for k, s in enumerate(schedule)])


def load_schedule_csv(path) -> Schedule:
    rows = _read_rows(path, ("ev", "start"))
    starts = {}
    for lineno, (e, s) in rows:
        ev = _int(e, lineno, path, "ev")
        if ev in starts:
            raise ParseError(f"duplicate ev {ev}", lineno, str(path))
        starts[ev] = _int(s, lineno, path, "start")
    if sorted(starts) != list(range(1, len(starts) + 1)):
        raise ParseError(f"ev ids must be 1..{len(starts)}", path=str(path))
    return tuple(starts[k] for k in range(1, len(starts) + 1))


# -- results -----------------------------------------------------------------

def write_thermal_csv(path, trace) -> Path:
    return write_csv(path, ("slot", "hotspot_c", "top_oil_rise_c", "aging"), trace.to_rows())


def write_brd_rows_csv(path, result) -> Path:
    return write_csv(path, ("round", "ev", "start", "payoff", "potential"), result.to_rows())


def write_report_csv(path, report) -> Path:
    header, rows = report.to_rows()
    return write_csv(path, header, rows)


# -- config --------------------------------------------------------------------

def parse_config_text(text: str, path: str | None = None) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {raw.strip()!r}", lineno, path)
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno, path)
        out[key.replace("-", "_").lower()] = value
    return out


def load_config(path) -> dict[str, str]:
    path = Path(path)
    try:
        return parse_config_text(path.read_text(), str(path))
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror}", path=str(path)) from exc
