import dataclasses

import numpy as np
import pytest

from vesshare.aggregator import SharingModel, search_lnp_price
from vesshare.benchmark import RETAIL_MARKUP, retailer_prices, solve_benchmark
from vesshare.errors import DomainError
from vesshare.model import Scenario, ScenarioSet

LOAD = np.array([[2.0, 0.0]])
NOREN = np.zeros((1, 2))
P1 = np.array([1.0])


def _grid_oracle_cost(loads, tariff, tech, grid, cx, cp, x_grid, p_grid):
    """2-D grid over (x, p) with the inner dispatch solved analytically for
    the 2-slot no-renewable fixture: discharge d in slot 1, charge d in
    slot 2 (lossless), d <= min(x, p, load)."""
    best = np.inf
    for x in x_grid:
        for p in p_grid:
            d = min(x, p, loads[0, 0] / 2)
            draw = np.array([loads[0, 0] - d, d])
            bill = tariff.pi_b * draw.sum() + tariff.pi_p * draw.max()
            cost = bill + tech.c_s * 2 * d + tech.kappa * (cx * x + cp * p)
            best = min(best, cost)
    return best


def test_benchmark_buys_when_cheap(tariff, tech, grid2):
    res = solve_benchmark(LOAD, NOREN, P1, tariff, tech, grid2,
                          capacity_price=0.1, rating_price=0.05, user="u")
    assert res.capacity == pytest.approx(1.0, abs=1e-8)
    assert res.rating == pytest.approx(1.0, abs=1e-8)
    assert res.expected_cost < 0.86
    # 0.46 bill + 0.002 cycling + 0.15 capital
    assert res.expected_cost == pytest.approx(0.612, abs=1e-9)
    oracle = _grid_oracle_cost(LOAD, tariff, tech, grid2, 0.1, 0.05,
                               np.linspace(0, 1.5, 151), np.linspace(0, 1.5, 151))
    assert res.expected_cost == pytest.approx(oracle, abs=1e-6)


def test_benchmark_skips_expensive_storage(tariff, tech, grid2):
    res = solve_benchmark(LOAD, NOREN, P1, tariff, tech, grid2,
                          capacity_price=1e5, rating_price=1e5)
    assert res.capacity == pytest.approx(0.0, abs=1e-9)
    assert res.rating == pytest.approx(0.0, abs=1e-9)
    assert res.expected_cost == pytest.approx(0.86, abs=1e-9)


def test_benchmark_cost_decomposition(tariff, tech, grid2):
    ren = np.array([[0.0, 1.0]])
    res = solve_benchmark(LOAD, ren, P1, tariff, tech, grid2,
                          capacity_price=0.1, rating_price=0.05)
    total = res.capital_cost + res.energy_cost + res.cycling_cost - res.feed_in_revenue
    assert res.expected_cost == pytest.approx(total, abs=1e-7)


def test_benchmark_rejects_negative_prices(tariff, tech, grid2):
    with pytest.raises(DomainError):
        solve_benchmark(LOAD, NOREN, P1, tariff, tech, grid2, -1.0, 0.0)


def test_benchmark_respects_energy_window(tariff, grid2, tech):
    narrow = dataclasses.replace(tech, gamma_min=0.9, gamma_max=1.0)
    res = solve_benchmark(LOAD, NOREN, P1, tariff, narrow, grid2,
                          capacity_price=0.01, rating_price=0.01)
    # usable swing is 0.1x: shaving d kW needs 10d kWh of capacity
    assert res.capacity == pytest.approx(10.0, abs=1e-6)
    for ru, ch, dis, e, peak in res.decisions:
        assert np.all(e >= narrow.gamma_min * res.capacity - 1e-9)
        assert np.all(e <= narrow.gamma_max * res.capacity + 1e-9)


def test_mirrored_scenarios_fixed_capacity_dominated(tariff, tech, grid2):
    # one fixed battery must cover both scenarios; the flexible per-day
    # purchase at a matching daily price is never worse
    loads = np.array([[2.0, 0.0], [0.0, 2.0]])
    rens = np.zeros((2, 2))
    rho = np.array([0.5, 0.5])
    res = solve_benchmark(loads, rens, rho, tariff, tech, grid2,
                          capacity_price=0.1, rating_price=0.0)
    scen = [
        Scenario(id="a", probability=0.5, loads={"U": loads[0]}, renewables={}),
        Scenario(id="b", probability=0.5, loads={"U": loads[1]}, renewables={}),
    ]
    model = SharingModel(ScenarioSet(scenarios=tuple(scen), grid=grid2, users=("U",)), tariff, tech)
    q = tech.kappa * 0.1  # implied per-day capacity price
    flex_cost = 0.0
    for s in range(2):
        prof = model.profile("U", s)
        k = prof.interval_of(q)
        flex_cost += 0.5 * (q * prof.capacities[k] + prof.dispatch[k].v)
    assert flex_cost <= res.expected_cost + 1e-9


def test_retailer_preset():
    from vesshare.model import StorageTech

    tech = StorageTech(c_x=160.0, c_p=55.0)
    cx, cp = retailer_prices(tech)
    assert cx == pytest.approx(441.6)
    assert cp == pytest.approx(151.8)
    assert 14 * cx + 5 * cp == pytest.approx(7000, rel=0.02)
    assert RETAIL_MARKUP == pytest.approx(2.76)


def test_flexibility_dominance_at_lnp(tariff, tech, grid2, tiny2_set):
    # user cost at the lowest-nonnegative-profit price never exceeds the
    # benchmark cost when the implied daily capacity price >= that price
    model = SharingModel(tiny2_set, tariff, tech)
    lnp = search_lnp_price(model, 1e-4, 1e-4, 3e-7)
    cap_price = lnp.price / tech.kappa + 1.0  # benchmark at least as pricey
    for i, u in enumerate(model.users):
        loads = np.array([s.load(u) for s in tiny2_set])
        rens = np.array([s.renewable(u) for s in tiny2_set])
        bench = solve_benchmark(loads, rens, model.probabilities, tariff, tech,
                                grid2, cap_price, 0.0, user=u)
        prof = model.profile(u, 0)
        k = prof.interval_of(lnp.price)
        user_cost = lnp.price * prof.capacities[k] + prof.dispatch[k].v
        assert user_cost <= bench.expected_cost + 1e-9
