import numpy as np
import pytest

from evcs.experiments import (DeskSetup, ExperimentReport, convergence_probability_sweep, draw_fleets,
                              lifetime_vs_fleet, monetary_cost, monetary_cost_comparison,
                              normalized_losses_table, objective_config, optimal_power_search,
                              pareto_frontier, quantile_ci, replicate_rng, simulate_policy, slots_needed)
from evcs.errors import ConfigError
from evcs.model import FleetSpec


@pytest.fixture(scope="module")
def setup():
    return DeskSetup.build(day_count=4, data_seed=3)


def test_no_ev_lifetime_is_nominal(setup):
    truth = setup.year.exo[:, :30]
    run = simulate_policy(setup, "NoEV", [FleetSpec.symmetric(1, 1, 30, 1)] * 4, truth)
    assert run.lifetime_years == pytest.approx(40.0, rel=1e-9)
    assert run.normalized_losses == pytest.approx(1.0)


def test_report_alignment_checked():
    with pytest.raises(ValueError):
        ExperimentReport("x", "n", [1, 2], {"m": [1.0]})
    rep = ExperimentReport("x", "n", [1, 2], {"m": [1.0, 2.0]}, {"m": [(0, 1), (1, 3)]})
    header, rows = rep.to_rows()
    assert header == ["n", "m", "m_lo", "m_hi"] and rows[1] == [2, 2.0, 1, 3]


def test_quantile_ci_and_streams():
    lo, hi = quantile_ci(np.arange(101))
    assert lo == pytest.approx(16.0) and hi == pytest.approx(84.0)
    a = replicate_rng(1, 2, 3).random(3)
    np.testing.assert_array_equal(a, replicate_rng(1, 2, 3).random(3))
    assert not np.array_equal(a, replicate_rng(1, 2, 4).random(3))


def test_lifetime_sweep_deterministic_and_parallel_equal(setup):
    kw = dict(policies=("BRD", "PaC", "NoEV"), fleet_sizes=(2,), fsnr_db=10.0, replicates=2,
              seed=4, setup=setup)
    a = lifetime_vs_fleet(**kw)
    b = lifetime_vs_fleet(**kw)
    c = lifetime_vs_fleet(**kw, jobs=2)
    assert a.metrics == b.metrics == c.metrics
    assert a.column("NoEV_lifetime_years")[0] == pytest.approx(40.0, rel=1e-9)
    assert a.column("PaC_lifetime_years")[0] <= a.column("BRD_lifetime_years")[0]


def test_losses_table_scheduled_policies_beat_plug_and_charge(setup):
    rep = normalized_losses_table((3,), replicates=1, setup=setup)
    assert rep.column("PaC_normalized_losses")[0] >= rep.column("BRD_normalized_losses")[0]
    assert all(rep.column(k)[0] >= 1.0 for k in rep.metrics)


def test_single_ev_always_converges(setup):
    rep = convergence_probability_sweep((1,), replicates=5, setup=setup)
    assert rep.column("convergence_probability") == [1.0]


def test_potential_game_always_converges(setup):
    rep = convergence_probability_sweep((4,), replicates=3, alpha=0.0, setup=setup)
    assert rep.column("convergence_probability") == [1.0]


def test_power_search_flags_infeasible(setup):
    assert slots_needed(24, 3.0) == 16 and slots_needed(24, 2.2) == 22 and slots_needed(24, 24) == 2
    rep = optimal_power_search((0.5, 3.0, 24.0), fleet_sizes=(2,), replicates=1, setup=setup)
    assert rep.column("infeasible_powers") == [[0.5]]
    assert rep.column("optimal_power_kw")[0] in (3.0, 24.0)


def test_frontier_losses_minimal_at_zero_alpha(setup):
    rep = pareto_frontier((0.0, 1.0), time_constants=(2.5,), fleet_size=10, setup=setup)
    losses = rep.column("normalized_losses")
    aging = rep.column("normalized_aging")
    assert losses[0] <= losses[1] * 1.01
    assert aging[1] <= aging[0] * 1.01


def test_flat_prices_give_equal_bills(setup):
    rep = monetary_cost_comparison(np.full(30, 0.15), fleet_sizes=(3,), setup=setup)
    vals = [rep.column(o)[0] for o in ("MoneyOnly", "AgingOnly", "LossesOnly")]
    assert np.ptp(vals) < 1e-12


def test_money_objective_is_cheapest_for_one_ev(setup):
    rep = monetary_cost_comparison(fleet_sizes=(1,), setup=setup)
    money = rep.column("MoneyOnly")[0]
    assert money <= rep.column("AgingOnly")[0] + 1e-6
    assert money <= rep.column("LossesOnly")[0] + 1e-6


def test_objective_config_errors():
    with pytest.raises(ConfigError):
        objective_config("MoneyOnly", None)
    with pytest.raises(ConfigError):
        objective_config("Nothing", np.ones(30))


def test_monetary_cost_example():
    fleet = FleetSpec.from_tuples([(1, 4, 2)], 4.0)
    assert monetary_cost(fleet, (2,), [1, 2, 3, 4.0]) == pytest.approx((2 + 3) * 4.0 * 0.5)


def test_fleet_draws(setup):
    fleets = draw_fleets(setup, 3, "s", replicate_rng(0, 0, 1))
    assert len(fleets) == 4 and all(len(f) == 3 for f in fleets)
    with pytest.raises((ConfigError, ValueError)):
        draw_fleets(setup, 3, "q", replicate_rng(0, 0, 1))
