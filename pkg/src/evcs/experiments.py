"""Desk-scale studies: convergence, lifetime vs fleet size, optimal power,
aging/loss frontier and monetary cost.

Every study schedules on a forecast of the exogenous demand and evaluates on
the true demand. Each day is a 48-slot block starting at 17:00 whose first
30 slots form the charging window; the transformer state is chained from
block to block. Replicate ``r`` draws all its randomness from
``SeedSequence([seed, r])``, so serial and parallel runs agree.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .baselines import gan_style_schedule, plug_and_charge, shinwari_style_schedule
from .brd import BrdConfig, run_brd
from .costs import ChargingGame, CostConfig, joule_losses
from .data import (WINDOW_SLOTS, SyntheticYear, add_noise, sigma_from_fsnr, synthetic_year,
                   window_grid)
from .errors import ConfigError, FeasibilityError
from .model import FleetSpec, LoadProfile, draw_scenario_t_fleet, ev_load_matrix, scenario_s_fleet
from .thermal import (TransformerParams, aging_from_hotspot, calibrate_exogenous_scale,
                      hotspot_arrays, lifetime_years)

POLICIES = ("BRD", "PaC", "GanStyle", "ShinwariStyle", "NoEV")
CI_LEVEL = 0.68


@dataclass
class ExperimentReport:
    """Metrics aligned with ``sweep_values``; ``ci`` holds (low, high) pairs."""

    scenario: str
    sweep_name: str
    sweep_values: list
    metrics: dict[str, list] = field(default_factory=dict)
    ci: dict[str, list] = field(default_factory=dict)
    replicates: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.sweep_values)
        for name, vals in {**self.metrics, **self.ci}.items():
            if len(vals) != n:
                raise ValueError(f"metric {name!r} has {len(vals)} values for {n} sweep points")

    def column(self, name: str) -> list:
        return self.metrics[name]

    def to_rows(self) -> tuple[list[str], list[list]]:
        names = sorted(self.metrics)
        ci_names = sorted(self.ci)
        header = [self.sweep_name, *names]
        for c in ci_names:
            header += [f"{c}_lo", f"{c}_hi"]
        rows = []
        for k, v in enumerate(self.sweep_values):
            row = [v, *(self.metrics[n][k] for n in names)]
            for c in ci_names:
                row += list(self.ci[c][k])
            rows.append(row)
        return header, rows

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "sweep_name": self.sweep_name,
            "sweep_values": self.sweep_values,
            "metrics": self.metrics,
            "ci": {k: [list(p) for p in v] for k, v in self.ci.items()},
            "replicates": self.replicates,
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def quantile_ci(samples, level: float = CI_LEVEL) -> tuple[float, float]:
    """Central empirical quantile interval."""
    samples = np.asarray(samples, dtype=float)
    lo = (1.0 - level) / 2.0
    return float(np.quantile(samples, lo)), float(np.quantile(samples, 1.0 - lo))


def replicate_rng(seed: int, rep: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, rep, stream]))


def _map(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- desk setup ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DeskSetup:
    """Calibrated synthetic days plus transformer parameters."""

    year: SyntheticYear
    kappa: float
    params: TransformerParams

    @classmethod
    def build(cls, day_count: int = 30, data_seed: int = 0,
              params: TransformerParams | None = None) -> "DeskSetup":
        params = params or TransformerParams()
        raw = synthetic_year(day_count, data_seed)
        grid_year = LoadProfile.from_values(raw.exo.reshape(-1), slot_duration_hours=raw.slot_hours)
        amb_year = LoadProfile.from_values(raw.ambient.reshape(-1), units="degC", slot_duration_hours=raw.slot_hours)
        kappa = calibrate_exogenous_scale(grid_year, amb_year, params)
        return cls(raw.scaled(kappa), kappa, params)

    @property
    def day_count(self) -> int:
        return self.year.exo.shape[0]

    def with_params(self, params: TransformerParams) -> "DeskSetup":
        return DeskSetup(self.year, self.kappa, params)


def _policy_ev_load(policy: str, fleet: FleetSpec, forecast: np.ndarray, ambient: np.ndarray,
                    params: TransformerParams, cost: CostConfig, state, brd_seed: int,
                    brd_cfg: BrdConfig, gan_weight: float) -> tuple[np.ndarray, dict]:
    """EV load over the charging window for one day, decided on ``forecast``."""
    grid = window_grid()
    info: dict = {}
    if policy == "NoEV":
        return np.zeros(WINDOW_SLOTS), info
    if policy == "PaC":
        return ev_load_matrix(fleet, plug_and_charge(fleet), WINDOW_SLOTS).sum(axis=0), info
    exo = LoadProfile(grid, forecast)
    if policy == "BRD":
        game = ChargingGame(fleet, exo, LoadProfile(grid, ambient, "degC"), params, cost,
                            initial_top_oil_rise=state)
        cfg = BrdConfig(brd_cfg.tolerance_delta, brd_cfg.max_rounds, brd_cfg.update_order,
                        brd_seed, brd_cfg.initial, brd_cfg.given)
        res = run_brd(game, cfg, record_trajectories=False)
        info = {"converged": res.converged, "schedule": res.schedule}
        return ev_load_matrix(fleet, res.schedule, WINDOW_SLOTS).sum(axis=0), info
    if policy == "GanStyle":
        prof = gan_style_schedule(fleet, exo, penalty_weight=gan_weight)
        info = {"converged": prof.converged}
        return prof.aggregate, info
    if policy == "ShinwariStyle":
        return shinwari_style_schedule(fleet, exo).aggregate, info
    raise ConfigError(f"unknown policy {policy!r}; expected one of {POLICIES}")


@dataclass
class DayRun:
    lifetime_years: float
    normalized_losses: float
    aging_sum: float
    losses_sum: float
    converged_fraction: float
    peak_hotspot_c: float


def simulate_policy(setup: DeskSetup, policy: str, fleets: Sequence[FleetSpec],
                    forecasts: np.ndarray, cost: CostConfig | None = None,
                    brd_cfg: BrdConfig = BrdConfig(max_rounds=100), brd_seed: int = 0,
                    gan_weight: float = 0.5, inertia: bool = True) -> DayRun:
    """Run one policy over all days: schedule on ``forecasts``, evaluate on the truth."""
    params = setup.params
    cost = cost or CostConfig(alpha=1.0)
    year = setup.year
    dt = year.slot_hours
    state = None
    aging_total = losses_total = losses_exo = 0.0
    peak = -np.inf
    conv = []
    for j in range(setup.day_count):
        amb_block = year.ambient[j]
        ev, info = _policy_ev_load(policy, fleets[j], forecasts[j], amb_block[:WINDOW_SLOTS], params,
                                   cost, state, brd_seed + j, brd_cfg, gan_weight)
        if "converged" in info:
            conv.append(info["converged"])
        load = year.exo[j].copy()
        load[:WINDOW_SLOTS] += ev
        theta, rise = hotspot_arrays(load, amb_block, params, dt, inertia=inertia,
                                     initial_top_oil_rise=state)
        state = float(rise[-1]) if inertia else None
        aging_total += float(np.sum(aging_from_hotspot(theta, params)))
        losses_total += float(np.sum(joule_losses(load, cost.r_total)))
        losses_exo += float(np.sum(joule_losses(year.exo[j], cost.r_total)))
        peak = max(peak, float(np.max(theta)))
    n = setup.day_count * year.exo.shape[1]
    return DayRun(
        lifetime_years=40.0 * n / aging_total,
        normalized_losses=losses_total / losses_exo,
        aging_sum=aging_total,
        losses_sum=losses_total,
        converged_fraction=float(np.mean(conv)) if conv else 1.0,
        peak_hotspot_c=peak,
    )


def draw_forecasts(setup: DeskSetup, fsnr_db: float, rng: np.random.Generator,
                   per_slot_iid: bool = True) -> np.ndarray:
    """Noisy forecasts of every charging window, noise level set per day."""
    year = setup.year
    out = np.empty((setup.day_count, WINDOW_SLOTS))
    for j in range(setup.day_count):
        sigma = sigma_from_fsnr(year.exo_day[j], fsnr_db)
        out[j] = add_noise(year.exo[j, :WINDOW_SLOTS], sigma, per_slot_iid, rng)
    return out


def draw_fleets(setup: DeskSetup, count: int, scenario: str, rng: np.random.Generator,
                charging_power: float = 3.0) -> list[FleetSpec]:
    if scenario == "s":
        return [scenario_s_fleet(count, WINDOW_SLOTS, 16, charging_power)] * setup.day_count
    if scenario == "t":
        return [draw_scenario_t_fleet(count, rng, WINDOW_SLOTS, charging_power) for _ in range(setup.day_count)]
    raise ConfigError(f"unknown mobility scenario {scenario!r}")


# -- lifetime vs fleet size -------------------------------------------------------

@dataclass(frozen=True)
class _LifetimeJob:
    setup: DeskSetup
    policies: tuple
    count: int
    fsnr_db: float
    per_slot_iid: bool
    scenario: str
    alpha: float
    seed: int
    rep: int
    charging_power: float
    max_rounds: int


def _lifetime_replicate(job: _LifetimeJob) -> dict:
    fleets = draw_fleets(job.setup, job.count, job.scenario, replicate_rng(job.seed, job.rep, 1),
                         job.charging_power)
    forecasts = draw_forecasts(job.setup, job.fsnr_db, replicate_rng(job.seed, job.rep, 2), job.per_slot_iid)
    brd_seed = int(replicate_rng(job.seed, job.rep, 3).integers(2**31))
    out = {}
    for pol in job.policies:
        out[pol] = simulate_policy(job.setup, pol, fleets, forecasts, CostConfig(alpha=job.alpha),
                                   BrdConfig(max_rounds=job.max_rounds), brd_seed)
    return out


def lifetime_vs_fleet(policies: Sequence[str], fleet_sizes: Sequence[int], fsnr_db: float = float("inf"),
                      days: int = 30, replicates: int = 20, seed: int = 0, scenario: str = "t",
                      alpha: float = 1.0, per_slot_iid: bool = True, charging_power: float = 3.0,
                      setup: DeskSetup | None = None, max_rounds: int = 100, jobs: int = 1) -> ExperimentReport:
    """Median lifetime and normalized losses per (policy, fleet size).

    Policies share the same fleets and forecasts within a replicate.
    """
    for p in policies:
        if p not in POLICIES:
            raise ConfigError(f"unknown policy {p!r}; expected one of {POLICIES}")
    setup = setup or DeskSetup.build(days)
    metrics = {f"{p}_{m}": [] for p in policies for m in ("lifetime_years", "normalized_losses")}
    ci = {f"{p}_lifetime_years": [] for p in policies}
    raw = {}
    for count in fleet_sizes:
        job_list = [_LifetimeJob(setup, tuple(policies), count, fsnr_db, per_slot_iid, scenario, alpha,
                                 seed, r, charging_power, max_rounds) for r in range(replicates)]
        results = _map(_lifetime_replicate, job_list, jobs)
        for p in policies:
            life = [res[p].lifetime_years for res in results]
            loss = [res[p].normalized_losses for res in results]
            metrics[f"{p}_lifetime_years"].append(float(np.median(life)))
            metrics[f"{p}_normalized_losses"].append(float(np.median(loss)))
            ci[f"{p}_lifetime_years"].append(quantile_ci(life))
            raw.setdefault(p, []).append(life)
    return ExperimentReport(
        scenario=f"scenario_{scenario}_fsnr_{fsnr_db}",
        sweep_name="fleet_size",
        sweep_values=list(fleet_sizes),
        metrics=metrics,
        ci=ci,
        replicates=replicates,
        extras={"kappa": setup.kappa, "days": setup.day_count, "alpha": alpha},
    )


def normalized_losses_table(fleet_sizes: Sequence[int] = (5, 10, 20), days: int = 30,
                            replicates: int = 10, seed: int = 0, setup: DeskSetup | None = None,
                            jobs: int = 1) -> ExperimentReport:
    """Losses with EVs over losses without, perfect forecast, mobility scenario (t)."""
    return lifetime_vs_fleet(("PaC", "BRD", "GanStyle", "ShinwariStyle"), fleet_sizes, float("inf"),
                             days, replicates, seed, "t", setup=setup, jobs=jobs)


# -- convergence probability ------------------------------------------------------

def convergence_probability_sweep(fleet_sizes: Sequence[int], replicates: int = 50, sigma_kw: float = 26.0,
                                  alpha: float = 1.0, inertia: bool = True, common_window: bool = False,
                                  max_rounds: int = 100, seed: int = 0, noise_source: str = "gaussian",
                                  setup: DeskSetup | None = None, duration: int = 16) -> ExperimentReport:
    """Fraction of BRD runs reaching a fixed point within ``max_rounds``.

    ``noise_source="gaussian"`` draws each exogenous window from a Gaussian
    vector centred on the mean synthetic window with covariance
    ``sigma_kw^2 I``; ``"days"`` cycles through the synthetic days.
    """
    setup = setup or DeskSetup.build()
    params = setup.params
    grid = window_grid()
    mean_exo = setup.year.exo[:, :WINDOW_SLOTS].mean(axis=0)
    mean_amb = setup.year.ambient[:, :WINDOW_SLOTS].mean(axis=0)
    cfg = CostConfig(alpha=alpha, memoryless=not inertia,
                     common_window=tuple(range(1, WINDOW_SLOTS + 1)) if common_window else None)
    prob, rounds = [], []
    for count in fleet_sizes:
        fleet = scenario_s_fleet(count, WINDOW_SLOTS, duration)
        ok, used = [], []
        for r in range(replicates):
            rng = replicate_rng(seed, r, count)
            if noise_source == "gaussian":
                exo = np.maximum(mean_exo + rng.normal(0.0, sigma_kw, WINDOW_SLOTS), 0.0)
                amb = mean_amb
            elif noise_source == "days":
                j = r % setup.day_count
                exo, amb = setup.year.exo[j, :WINDOW_SLOTS], setup.year.ambient[j, :WINDOW_SLOTS]
            else:
                raise ConfigError(f"unknown noise source {noise_source!r}")
            game = ChargingGame(fleet, LoadProfile(grid, exo), LoadProfile(grid, amb, "degC"), params, cfg)
            res = run_brd(game, BrdConfig(max_rounds=max_rounds, rng_seed=int(rng.integers(2**31))),
                          record_trajectories=False)
            ok.append(res.converged)
            used.append(res.rounds_used)
        prob.append(float(np.mean(ok)))
        rounds.append(float(np.mean(used)))
    return ExperimentReport("scenario_s_convergence", "fleet_size", list(fleet_sizes),
                            {"convergence_probability": prob, "mean_rounds": rounds}, {}, replicates,
                            {"sigma_kw": sigma_kw, "alpha": alpha, "inertia": inertia})


# -- optimal charging power ---------------------------------------------------------

DEFAULT_POWER_GRID = (2.2, 3.0, 3.7, 4.6, 6.0, 8.0, 12.0, 24.0)


def slots_needed(energy_kwh: float, power_kw: float, slot_hours: float = 0.5) -> int:
    return int(math.ceil(energy_kwh / (power_kw * slot_hours) - 1e-9))


def optimal_power_search(power_grid: Sequence[float] = DEFAULT_POWER_GRID,
                         fsnr_values: Sequence[float] = (float("inf"),),
                         fleet_sizes: Sequence[int] = (10,), energy_kwh: float = 24.0, days: int = 30,
                         replicates: int = 10, seed: int = 0, alpha: float = 1.0,
                         setup: DeskSetup | None = None, max_rounds: int = 100,
                         jobs: int = 1) -> ExperimentReport:
    """Lifetime-maximizing power per (fleet size, FSNR), mobility scenario (s).

    Each power gets the duration ``ceil(energy / (p * dt))``; powers whose
    duration does not fit the window are flagged infeasible. All powers of a
    replicate share the same forecasts.
    """
    setup = setup or DeskSetup.build(days)
    sweep, best, feasible_flags, table = [], [], [], {}
    for count in fleet_sizes:
        for fsnr in fsnr_values:
            lifetimes = {}
            for p in power_grid:
                c = slots_needed(energy_kwh, p)
                if c > WINDOW_SLOTS:
                    lifetimes[p] = None
                    continue
                jobs_list = [(setup, count, p, c, fsnr, seed, r, alpha, max_rounds) for r in range(replicates)]
                vals = _map(_power_replicate, jobs_list, jobs)
                lifetimes[p] = float(np.median(vals))
            ok = {p: v for p, v in lifetimes.items() if v is not None}
            if not ok:
                raise FeasibilityError("no feasible power in the grid")
            sweep.append(f"I={count},fsnr={fsnr}")
            best.append(max(ok, key=lambda p: (ok[p], -p)))
            feasible_flags.append([p for p, v in lifetimes.items() if v is None])
            table[sweep[-1]] = {str(p): v for p, v in lifetimes.items()}
    return ExperimentReport("scenario_s_power", "configuration", sweep,
                            {"optimal_power_kw": best, "infeasible_powers": feasible_flags}, {},
                            replicates, {"lifetimes": table, "power_grid": list(power_grid)})


def _power_replicate(args) -> float:
    setup, count, p, c, fsnr, seed, rep, alpha, max_rounds = args
    fleet = scenario_s_fleet(count, WINDOW_SLOTS, c, p)
    forecasts = draw_forecasts(setup, fsnr, replicate_rng(seed, rep, 2))
    brd_seed = int(replicate_rng(seed, rep, 3).integers(2**31))
    run = simulate_policy(setup, "BRD", [fleet] * setup.day_count, forecasts, CostConfig(alpha=alpha),
                          BrdConfig(max_rounds=max_rounds), brd_seed)
    return run.lifetime_years


# -- aging / losses frontier ------------------------------------------------------

def pareto_frontier(alpha_grid: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
                    time_constants: Sequence[float] = (0.5, 2.5), fleet_size: int = 30,
                    day: int = 0, setup: DeskSetup | None = None, seed: int = 0) -> ExperimentReport:
    """Normalized aging and losses of the BRD outcome on one day, per alpha and inertia."""
    setup = setup or DeskSetup.build()
    sweep, aging, losses = [], [], []
    one_day = DeskSetup(SyntheticYear(setup.year.days[day:day + 1], setup.year.exo[day:day + 1],
                                      setup.year.ambient[day:day + 1], setup.year.exo_day[day:day + 1],
                                      setup.year.prices), setup.kappa, setup.params)
    fleet = [scenario_s_fleet(fleet_size)]
    truth = one_day.year.exo[:, :WINDOW_SLOTS]
    for t0 in time_constants:
        params = TransformerParams(thermal_time_constant_hours=t0)
        local = one_day.with_params(params)
        base = simulate_policy(local, "NoEV", fleet, truth)
        for a in alpha_grid:
            run = simulate_policy(local, "BRD", fleet, truth, CostConfig(alpha=a), brd_seed=seed)
            sweep.append(f"T0={t0},alpha={a}")
            aging.append(run.aging_sum / base.aging_sum)
            losses.append(run.losses_sum / base.losses_sum)
    return ExperimentReport("scenario_s_frontier", "configuration", sweep,
                            {"normalized_aging": aging, "normalized_losses": losses}, {}, 1,
                            {"fleet_size": fleet_size, "day": int(setup.year.days[day])})


# -- monetary cost ----------------------------------------------------------------

OBJECTIVES = ("MoneyOnly", "AgingOnly", "LossesOnly")


def objective_config(objective: str, prices) -> CostConfig:
    if objective == "MoneyOnly":
        if prices is None:
            raise ConfigError("MoneyOnly needs a price profile")
        return CostConfig(alpha=1.0, include_dn=False, prices=np.asarray(prices, dtype=float))
    if objective == "AgingOnly":
        return CostConfig(alpha=1.0)
    if objective == "LossesOnly":
        return CostConfig(alpha=0.0)
    raise ConfigError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")


def monetary_cost(fleet: FleetSpec, schedule, prices, slot_hours: float = 0.5) -> float:
    """Average per-EV bill: price times energy over the charged slots."""
    x = ev_load_matrix(fleet, schedule, len(prices))
    return float(np.sum(x * np.asarray(prices)[np.newaxis, :]) * slot_hours / len(fleet))


def monetary_cost_comparison(price_profile=None, objectives: Sequence[str] = OBJECTIVES,
                             fleet_sizes: Sequence[int] = (1, 5, 10), days: int = 30, seed: int = 0,
                             scenario: str = "t", setup: DeskSetup | None = None) -> ExperimentReport:
    """Per-EV monetary cost of the BRD outcome under each objective, averaged over days."""
    setup = setup or DeskSetup.build(days)
    prices = setup.year.window_prices() if price_profile is None else np.asarray(price_profile, dtype=float)
    if prices is None or len(prices) != WINDOW_SLOTS:
        raise ConfigError(f"price profile must have {WINDOW_SLOTS} slots")
    grid = window_grid()
    metrics = {o: [] for o in objectives}
    for count in fleet_sizes:
        fleets = draw_fleets(setup, count, scenario, replicate_rng(seed, 0, 1))
        for o in objectives:
            cfg = objective_config(o, prices)
            bills = []
            for j in range(setup.day_count):
                exo, amb = setup.year.window(j)
                game = ChargingGame(fleets[j], LoadProfile(grid, exo), LoadProfile(grid, amb, "degC"),
                                    setup.params, cfg)
                res = run_brd(game, BrdConfig(rng_seed=seed + j), record_trajectories=False)
                bills.append(monetary_cost(fleets[j], res.schedule, prices))
            metrics[o].append(float(np.mean(bills)))
    extras = {}
    if "MoneyOnly" in metrics and "AgingOnly" in metrics:
        extras["aging_over_money"] = [a / m for a, m in zip(metrics["AgingOnly"], metrics["MoneyOnly"])]
    return ExperimentReport(f"scenario_{scenario}_money", "fleet_size", list(fleet_sizes), metrics, {}, 1, extras)
