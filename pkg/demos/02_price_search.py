#!/usr/bin/env python3
"""Price the virtual capacity on the bundled 3-user x 7-scenario dataset.

Builds the sharing model with the reference tariff/technology parameters,
collects every user's threshold prices, and runs both searches: the
profit-maximizing price and the lowest price that keeps the aggregator's
profit nonnegative.  Expect roughly half a minute: the threshold profiles
solve a few hundred small LPs/QPs up front.
"""

import time

import numpy as np

from vesshare import SharingModel, load_scenarios, search_lnp_price, search_op_price
from vesshare.datagen import bundled_path
from vesshare.scenario_io import ExperimentConfig

cfg = ExperimentConfig()
sset = load_scenarios(bundled_path())
model = SharingModel(sset, cfg.tariff(), cfg.tech())

t0 = time.perf_counter()
thresholds = model.thresholds()
print(f"threshold prices: {len(thresholds)} unique values, "
      f"{thresholds[thresholds > 0].min():.4f} .. {thresholds.max():.4f} "
      f"({time.perf_counter() - t0:.1f}s)")

t0 = time.perf_counter()
op = search_op_price(model, err1=cfg.err1, err2=cfg.err2, eps0=cfg.eps0)
print(f"\nprofit-maximizing price ({time.perf_counter() - t0:.1f}s):")
print(f"  q* = {op.price:.6f}, profit {op.profit:.4f}/day at penalty {op.eps:.1e}")
print(f"  sold E[capacity] {op.sold:.2f} kWh vs physical build {op.capacity:.2f} kWh "
      f"({op.capacity_reduction_pct:.1f}% smaller)")

t0 = time.perf_counter()
lnp = search_lnp_price(model, err3=cfg.err3, err4=cfg.err4, eps0=cfg.eps0)
print(f"\nlowest nonnegative-profit price ({time.perf_counter() - t0:.1f}s):")
print(f"  q_l = {lnp.price:.6f} ({lnp.case}), profit {lnp.profit:.2e}/day")
print(f"  sold E[capacity] {lnp.sold:.2f} kWh vs physical build {lnp.capacity:.2f} kWh")

print("\nprice ordering: q_l <= q*:", lnp.price <= op.price)
span = np.linspace(lnp.price, op.price, 5)
print("profit along the price band:")
from vesshare import limiting_profit

for q in span:
    print(f"  q = {q:.4f}: {limiting_profit(model, float(q)):+.4f}/day")
