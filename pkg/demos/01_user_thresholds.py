#!/usr/bin/env python3
"""Walk through the user-side machinery on a two-slot toy case.

A single user has load [2, 0] kW and no renewables under a demand-charge
tariff (energy 0.03, peak 0.4).  Buying virtual capacity x lets the user
flatten the draw to [2-x, x]; the bill falls at 0.4 per kWh until x = 1,
after which more capacity is useless.  That kink is exactly the threshold
price at which the user stops buying.
"""

import numpy as np

from vesshare import (
    StorageTech,
    Tariff,
    TimeGrid,
    build_user_problem,
    compute_thresholds,
    compute_value_function,
    limiting_dispatch,
    optimal_capacity,
    solve_user,
)

grid = TimeGrid(T=2, slot_hours=1.0)
tariff = Tariff(pi_b=0.03, pi_p=0.4, pi_s=0.01)
tech = StorageTech()  # lossless, full energy window
load = np.array([2.0, 0.0])
ren = np.zeros(2)

print("== value of capacity ==")
vf = compute_value_function(load, ren, tariff, tech, grid)
for x in (0.0, 0.5, 1.0, 2.0):
    print(f"  bill at capacity {x:.1f} kWh: {vf.value(x):.4f}")
print(f"  breakpoints {vf.breakpoints} with slopes {vf.slopes}")

print("\n== threshold structure ==")
prof = compute_thresholds(load, ren, tariff, tech, grid)
for k in range(len(prof.prices)):
    upper = prof.prices[k + 1] if k + 1 < len(prof.prices) else np.inf
    print(f"  price in ({prof.prices[k]:.3f}, {upper:.3f}): buy {prof.capacities[k]:.3f} kWh")

print("\n== stepwise purchases along a price sweep ==")
for q in (0.05, 0.2, 0.35, 0.45):
    print(f"  q = {q:.2f}: optimal capacity {optimal_capacity(prof, q):.3f} kWh")

print("\n== the dispatch behind the purchase ==")
dec = limiting_dispatch(load, ren, tariff, tech, grid, 1.0)
print(f"  at capacity 1: charge {dec.charge}, discharge {dec.discharge}")
print(f"  grid draw {dec.grid_draw(load)}, peak {dec.peak:.2f}, bill {dec.v:.4f}")

print("\n== the penalized problem approaches that limit ==")
for eps in (1e-4, 1e-6):
    d = solve_user(build_user_problem(load, ren, tariff, tech, grid, q=0.2, eps=eps))
    gap = max(np.max(np.abs(d.charge - dec.charge)), np.max(np.abs(d.discharge - dec.discharge)))
    print(f"  eps = {eps:.0e}: capacity {d.capacity:.6f}, dispatch gap {gap:.2e}")
