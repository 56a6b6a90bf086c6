"""Rectangular-profile EV charging as a game: best-response scheduling,
transformer hot-spot aging, valley-filling baselines and desk-scale studies."""

from .baselines import (ContinuousProfileSet, gan_style_schedule, plug_and_charge,
                        shinwari_style_schedule, valley_fill_exact)
from .brd import BrdConfig, BrdResult, best_response, run_brd, schedule_change_norm
from .costs import ChargingGame, CostConfig, TabulatedPricing, joule_losses
from .equilibria import NeReport, enumerate_equilibria, is_nash, nonatomic_valley_fill, pod_nonatomic_check
from .model import EvSpec, FleetSpec, LoadProfile, TimeGrid
from .thermal import (ThermalTrace, TransformerParams, aging_factor, calibrate_exogenous_scale,
                      hotspot_memoryless, hotspot_with_inertia, lifetime_years)

__version__ = "0.1.0"

__all__ = [
    "BrdConfig", "BrdResult", "ChargingGame", "ContinuousProfileSet", "CostConfig", "EvSpec",
    "FleetSpec", "LoadProfile", "NeReport", "TabulatedPricing", "ThermalTrace", "TimeGrid",
    "TransformerParams", "aging_factor", "best_response", "calibrate_exogenous_scale",
    "enumerate_equilibria", "gan_style_schedule", "hotspot_memoryless", "hotspot_with_inertia",
    "is_nash", "joule_losses", "lifetime_years", "nonatomic_valley_fill", "plug_and_charge",
    "pod_nonatomic_check", "run_brd", "schedule_change_norm", "shinwari_style_schedule",
    "valley_fill_exact",
]
