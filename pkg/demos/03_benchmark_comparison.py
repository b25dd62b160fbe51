#!/usr/bin/env python3
"""Sharing versus owning: user costs under the virtual-capacity scheme at
the floor price, against each user buying a fixed battery of their own
(production cost and retail price presets)."""

import numpy as np

from vesshare import SharingModel, load_scenarios, retailer_prices, search_lnp_price, solve_benchmark
from vesshare.aggregator import _limiting_point
from vesshare.datagen import bundled_path
from vesshare.scenario_io import ExperimentConfig

cfg = ExperimentConfig()
sset = load_scenarios(bundled_path())
model = SharingModel(sset, cfg.tariff(), cfg.tech())
tech = cfg.tech()

lnp = search_lnp_price(model, cfg.err3, cfg.err4, cfg.eps0)
point = _limiting_point(model, lnp.price)
print(f"floor price q_l = {lnp.price:.5f} /kWh-day\n")

retail = retailer_prices(tech)
presets = {
    "production cost": (tech.c_x, tech.c_p),
    "retail price": retail,
}
print(f"{'user':<12} {'sharing':>9}", *(f"{name:>16}" for name in presets), sep="")
for u in model.users:
    loads = np.array([s.load(u) for s in sset.scenarios])
    rens = np.array([s.renewable(u) for s in sset.scenarios])
    row = [point.user_costs[u]]
    for cx, cp in presets.values():
        bench = solve_benchmark(loads, rens, sset.probabilities, cfg.tariff(), tech,
                                sset.grid, cx, cp, user=u)
        row.append(bench.expected_cost)
    shared = row[0]
    cells = f"{u:<12} {shared:>9.4f}"
    for bench_cost in row[1:]:
        cells += f"{bench_cost:>10.4f} ({100 * (1 - shared / bench_cost):4.1f}%)"
    print(cells)
print("\n(percentages: cost reduction of sharing relative to that benchmark)")
