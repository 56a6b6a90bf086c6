import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from evcs.brd import BrdConfig, best_response, run_brd, schedule_change_norm
from evcs.costs import ChargingGame, CostConfig
from evcs.equilibria import is_nash
from evcs.errors import DimensionError
from evcs.model import FleetSpec, LoadProfile
from evcs.thermal import TransformerParams

LOW = TransformerParams().low_inertia()


def make_game(exo, fleet, cfg=None, params=LOW):
    exo = LoadProfile.from_values(exo)
    amb = LoadProfile.constant(20.0, exo.grid, "degC")
    return ChargingGame(fleet, exo, amb, params, cfg or CostConfig())


def test_change_norm_examples():
    assert schedule_change_norm((1, 5, 3), (1, 5, 3)) == 0.0
    assert schedule_change_norm((1, 5, 3), (2, 5, 1)) == 2.0
    assert schedule_change_norm((), ()) == 0.0
    with pytest.raises(DimensionError):
        schedule_change_norm((1,), (1, 2))


def test_single_action_returns_it():
    fleet = FleetSpec.from_tuples([(3, 5, 3)])
    g = make_game([1.0] * 6, fleet)
    assert best_response(g, 0, (3,), np.random.default_rng(0)) == 3


def test_valley_picked_by_losses():
    fleet = FleetSpec.from_tuples([(1, 4, 2)])
    g = make_game([3.0, 1.0, 1.0, 3.0], fleet, CostConfig(alpha=0.0))
    assert best_response(g, 0, (1,), np.random.default_rng(0)) == 2


def test_ties_broken_uniformly():
    fleet = FleetSpec.from_tuples([(1, 6, 1)])
    g = make_game([5.0] * 6, fleet, CostConfig(alpha=0.0))
    rng = np.random.default_rng(7)
    picks = [best_response(g, 0, (1,), rng) for _ in range(6000)]
    counts = np.bincount(picks, minlength=7)[1:]
    assert chisquare(counts).pvalue > 1e-3


def test_stay_if_optimal_keeps_current_tie():
    fleet = FleetSpec.from_tuples([(1, 6, 1)])
    g = make_game([5.0] * 6, fleet, CostConfig(alpha=0.0))
    rng = np.random.default_rng(0)
    assert all(best_response(g, 0, (4,), rng, stay_if_optimal=True) == 4 for _ in range(50))


def test_single_player_converges_in_two_rounds():
    fleet = FleetSpec.from_tuples([(1, 5, 2)])
    g = make_game([4.0, 3.0, 1.0, 0.5, 2.0], fleet, CostConfig(alpha=0.0))
    res = run_brd(g)
    assert res.converged and res.schedule == (3,)
    assert res.rounds_used == 2 and res.last_change_round == 1


def test_flat_start_all_at_arrival_settles_in_first_round():
    # ten EVs, one leaving late: the first round already reaches a fixed point
    rows = [(1, 16, 8)] * 9 + [(1, 24, 8)]
    fleet = FleetSpec.from_tuples(rows, 3.0)
    exo = np.r_[np.full(8, 40.0), np.full(8, 20.0), np.full(8, 10.0)]
    g = make_game(exo, fleet, CostConfig(alpha=0.0))
    res = run_brd(g)
    assert res.converged
    assert res.last_change_round <= 2
    assert res.rounds_used == res.last_change_round + 1
    assert is_nash(g, res.schedule)


def test_result_rows_and_json():
    fleet = FleetSpec.symmetric(3, 1, 6, 2, 3.0)
    g = make_game([9, 5, 2, 2, 5, 9.0], fleet, CostConfig(alpha=0.0, common_window=tuple(range(1, 7))))
    res = run_brd(g)
    rows = res.to_rows()
    assert len(rows) == res.rounds_used * 3
    assert all(r[4] is not None for r in rows)
    assert res.payoff_trajectories.shape == (len(rows) + 1, 3)
    assert '"converged": true' in res.to_json()
    assert res.inner_iterations_to_settle == res.last_change_round * 3


def test_potential_never_decreases_along_updates():
    fleet = FleetSpec.symmetric(4, 1, 8, 3, 6.0)
    g = make_game([30, 25, 10, 5, 5, 10, 25, 30.0], fleet, CostConfig(alpha=0.5, memoryless=True))
    res = run_brd(g, BrdConfig(initial="random", rng_seed=3))
    pot = np.array(res.potential_trajectory)
    assert np.all(np.diff(pot) >= -1e-9 * np.abs(pot[:-1]).max())


def test_determinism_and_light_mode():
    fleet = FleetSpec.symmetric(5, 1, 10, 3, 5.0)
    g = make_game(np.linspace(30, 5, 10), fleet, CostConfig(alpha=1.0))
    cfg = BrdConfig(initial="random", rng_seed=11)
    a, b = run_brd(g, cfg), run_brd(g, cfg)
    assert a.schedule == b.schedule and a.update_log == b.update_log
    np.testing.assert_array_equal(a.payoff_trajectories, b.payoff_trajectories)
    light = run_brd(g, cfg, record_trajectories=False)
    assert light.schedule == a.schedule
    assert light.potential_trajectory is None and light.payoff_trajectories.shape == (0, 5)


def test_round_cap_reports_nonconvergence():
    fleet = FleetSpec.symmetric(4, 1, 8, 3, 6.0)
    g = make_game([30, 25, 10, 5, 5, 10, 25, 30.0], fleet, CostConfig(alpha=0.0))
    res = run_brd(g, BrdConfig(max_rounds=1))
    assert res.rounds_used == 1
    assert res.converged == (res.schedule == res.initial_schedule)


def test_config_validation():
    with pytest.raises(ValueError):
        BrdConfig(max_rounds=0)
    with pytest.raises(ValueError):
        BrdConfig(tolerance_delta=-1)
    with pytest.raises(ValueError):
        BrdConfig(initial="given")
    with pytest.raises(ValueError):
        BrdConfig(update_order="sideways")


def test_start_ascending_order_also_converges():
    fleet = FleetSpec.symmetric(4, 1, 8, 3, 6.0)
    g = make_game([30, 25, 10, 5, 5, 10, 25, 30.0], fleet, CostConfig(alpha=0.0))
    res = run_brd(g, BrdConfig(update_order="start_ascending", initial="random", rng_seed=2))
    assert res.converged and is_nash(g, res.schedule)


@st.composite
def potential_games(draw):
    T = draw(st.integers(3, 8))
    rows = []
    for _ in range(draw(st.integers(1, 5))):
        c = draw(st.integers(1, T))
        a = draw(st.integers(1, T - c + 1))
        d = draw(st.integers(a + c - 1, T))
        rows.append((a, d, c))
    exo = draw(st.lists(st.floats(0, 60), min_size=T, max_size=T))
    common = draw(st.booleans())
    alpha = draw(st.floats(0, 1))
    cfg = (CostConfig(alpha=alpha, common_window=tuple(range(1, T + 1))) if common
           else CostConfig(alpha=alpha, memoryless=True))
    return make_game(exo, FleetSpec.from_tuples(rows, 8.0), cfg, TransformerParams())


@settings(max_examples=40)
@given(potential_games(), st.integers(0, 2**16))
def test_brd_reaches_a_nash_equilibrium_in_potential_games(game, seed):
    res = run_brd(game, BrdConfig(initial="random", rng_seed=seed))
    assert res.converged
    assert is_nash(game, res.schedule)
