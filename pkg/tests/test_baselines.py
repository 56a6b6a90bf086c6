import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evcs.baselines import (gan_style_schedule, plug_and_charge, project_capped_simplex,
                            shinwari_style_schedule, valley_fill_exact)
from evcs.brd import run_brd
from evcs.costs import ChargingGame, CostConfig
from evcs.errors import FeasibilityError
from evcs.model import FleetSpec, LoadProfile, total_load
from evcs.thermal import TransformerParams


def test_plug_and_charge_starts_at_arrival():
    fleet = FleetSpec.from_tuples([(1, 5, 2), (3, 6, 1), (2, 6, 4)])
    assert plug_and_charge(fleet) == (1, 3, 2)


def test_valley_fill_examples():
    vf = valley_fill_exact([3.0, 1.0, 2.0], 1.0, upper=5.0)
    np.testing.assert_allclose(vf.x, [0, 1, 0], atol=1e-12)
    assert vf.level == pytest.approx(2.0)
    vf = valley_fill_exact([3.0, 1.0, 2.0], 4.0, upper=5.0)
    np.testing.assert_allclose(vf.x, [1 / 3, 7 / 3, 4 / 3], atol=1e-12)
    vf = valley_fill_exact([3.0, 1.0, 2.0], 4.0, upper=2.0)
    np.testing.assert_allclose(vf.x, [0.5, 2.0, 1.5], atol=1e-12)
    vf = valley_fill_exact([2.0, 2.0], 3.0, power_scale=2.0, upper=10.0)
    np.testing.assert_allclose(vf.x, [1.5, 1.5])
    assert vf.level == pytest.approx(5.0)


def test_valley_fill_bounds_and_errors():
    np.testing.assert_array_equal(valley_fill_exact([1, 2.0], 0.0).x, [0, 0])
    np.testing.assert_array_equal(valley_fill_exact([1, 2.0], 2.0).x, [1, 1])
    with pytest.raises(FeasibilityError):
        valley_fill_exact([1, 2.0], 2.5)
    with pytest.raises(FeasibilityError):
        valley_fill_exact([1, 2.0], 1.0, power_scale=0.0)


def test_valley_fill_matches_grid_search(rng):
    grid = np.round(np.arange(0, 1.0001, 0.01), 10)
    for _ in range(5):
        exo = rng.uniform(0, 3, 3)
        energy = float(rng.uniform(0.2, 2.5))
        vf = valley_fill_exact(exo, energy, upper=1.0)
        best = np.inf
        for a, b in itertools.product(grid, grid):
            c = energy - a - b
            if 0 <= c <= 1:
                best = min(best, float(np.sum((exo + [a, b, c]) ** 2)))
        assert np.sum((exo + vf.x) ** 2) <= best + 1e-12


@given(st.lists(st.floats(0, 100), min_size=1, max_size=12), st.floats(0, 1), st.floats(0.1, 5))
def test_valley_fill_structure(exo, frac, p):
    exo = np.array(exo)
    energy = frac * exo.size
    vf = valley_fill_exact(exo, energy, power_scale=p)
    assert np.sum(vf.x) == pytest.approx(energy, abs=1e-9)
    load = exo + p * vf.x
    interior = (vf.x > 1e-9) & (vf.x < 1 - 1e-9)
    assert np.all(np.abs(load[interior] - vf.level) <= 1e-7 * max(1.0, vf.level))
    assert np.all(exo[vf.x <= 1e-12] >= vf.level - 1e-7 * max(1.0, vf.level))


def _project_by_bisection(y, ub, total):
    lo, hi = -np.max(y) - 1, np.max(ub - y) + 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.clip(y + mid, 0, ub).sum() < total:
            lo = mid
        else:
            hi = mid
    return np.clip(y + 0.5 * (lo + hi), 0, ub)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=10), st.floats(0, 1), st.data())
def test_projection_matches_bisection(y, frac, data):
    y = np.array(y)
    ub = np.array(data.draw(st.lists(st.floats(0, 4), min_size=y.size, max_size=y.size)))
    total = frac * ub.sum()
    got = project_capped_simplex(y, ub, np.array([total]))[0]
    np.testing.assert_allclose(got, _project_by_bisection(y, ub, total), atol=1e-8)
    assert got.sum() == pytest.approx(total, abs=1e-8)


def test_gan_single_ev_reaches_valley_fill():
    fleet = FleetSpec.from_tuples([(1, 8, 3)], 10.0)
    exo = LoadProfile.from_values([30, 22, 12, 5, 8, 15, 25, 33.0])
    out = gan_style_schedule(fleet, exo, p_max=40.0)
    vf = valley_fill_exact(exo, 30.0, upper=40.0)
    assert out.converged
    np.testing.assert_allclose(out.profiles[0], vf.x, atol=1e-4)


def test_gan_aggregate_is_valley_fill(rng):
    fleet = FleetSpec.symmetric(6, 1, 10, 4, 3.0)
    exo = LoadProfile.from_values(rng.uniform(5, 40, 10))
    out = gan_style_schedule(fleet, exo, max_iters=5000, tol=1e-9)
    vf = valley_fill_exact(exo, 6 * 4 * 3.0, upper=6 * 3.0)
    np.testing.assert_allclose(out.aggregate, vf.x, atol=1e-3)
    np.testing.assert_allclose(out.energy_kwh(), 4 * 3.0 * 0.5, rtol=1e-9)


def test_gan_flat_load_charges_uniformly():
    fleet = FleetSpec.symmetric(3, 1, 6, 2, 3.0)
    out = gan_style_schedule(fleet, LoadProfile.from_values([10.0] * 6))
    np.testing.assert_allclose(out.profiles, 1.0, atol=1e-9)


def test_gan_rejects_bad_weight_and_tight_cap():
    fleet = FleetSpec.symmetric(1, 1, 4, 2, 3.0)
    exo = LoadProfile.from_values([1.0] * 4)
    with pytest.raises(ValueError):
        gan_style_schedule(fleet, exo, penalty_weight=0.0)
    with pytest.raises(FeasibilityError):
        gan_style_schedule(fleet, exo, p_max=1.0)


def test_shinwari_depth_proportional():
    fleet = FleetSpec.from_tuples([(1, 5, 1)], 6.0)
    exo = LoadProfile.from_values([1, 2, 3, 2, 1.0])
    out = shinwari_style_schedule(fleet, exo, p_max=10.0)
    np.testing.assert_allclose(out.profiles[0], [2, 1, 0, 1, 2])


def test_shinwari_cap_redistribution():
    fleet = FleetSpec.from_tuples([(1, 5, 2)], 3.0)
    exo = LoadProfile.from_values([0, 3, 3, 3, 3.0])
    out = shinwari_style_schedule(fleet, exo)
    np.testing.assert_allclose(out.profiles[0], [3, 0.75, 0.75, 0.75, 0.75])
    flat = shinwari_style_schedule(fleet, LoadProfile.from_values([2.0] * 5))
    np.testing.assert_allclose(flat.profiles[0], 6 / 5)


def test_continuous_policies_conserve_energy(rng):
    rows = [(1, 12, 4), (3, 10, 2), (5, 12, 6), (1, 6, 6)]
    fleet = FleetSpec.from_tuples(rows, 3.7)
    exo = LoadProfile.from_values(rng.uniform(0, 50, 12))
    for out in (gan_style_schedule(fleet, exo), shinwari_style_schedule(fleet, exo)):
        np.testing.assert_allclose(out.profiles.sum(axis=1), fleet.durations * 3.7, rtol=1e-9)
        assert np.all(out.profiles >= -1e-12) and np.all(out.profiles <= 3.7 + 1e-9)
        for k, (a, d, _) in enumerate(rows):
            assert np.all(out.profiles[k, :a - 1] == 0) and np.all(out.profiles[k, d:] == 0)
        assert len(out.to_rows()) == 12


def test_plug_and_charge_peak_not_below_brd():
    fleet = FleetSpec.symmetric(8, 1, 16, 4, 7.0)
    exo = LoadProfile.from_values(np.r_[np.full(4, 60.0), np.linspace(50, 10, 12)])
    amb = LoadProfile.constant(20.0, exo.grid, "degC")
    g = ChargingGame(fleet, exo, amb, TransformerParams(), CostConfig(alpha=1.0))
    brd = total_load(exo, fleet, run_brd(g).schedule).values
    pac = total_load(exo, fleet, plug_and_charge(fleet)).values
    assert pac.max() >= brd.max()
