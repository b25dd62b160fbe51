"""Own-storage benchmark: one fixed battery per user across all scenarios.

The user buys capacity x and power rating p once, pays the (daily-scaled)
capital cost plus per-kWh cycling cost, and dispatches within the usable
energy window gamma_min*x .. gamma_max*x in every scenario.  A single LP
couples the scenarios through the shared (x, p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SolverFailureError
from .model import electricity_bill, power_balance, renewable_revenue
from .simplex import EQ, LE, LinearProgram, solve_lp

__all__ = ["BenchmarkResult", "solve_benchmark", "retailer_prices"]

# Retail markup over production cost, calibrated so a 14 kWh / 5 kW unit
# comes out near the quoted $7000 turnkey price.  Configuration, not truth.
RETAIL_MARKUP = 2.76


def retailer_prices(tech):
    """(capacity price, rating price) a household actually pays."""
    return RETAIL_MARKUP * tech.c_x, RETAIL_MARKUP * tech.c_p


@dataclass
class BenchmarkResult:
    user: str
    capacity: float
    rating: float
    expected_cost: float
    capital_cost: float
    energy_cost: float  # expected bill
    cycling_cost: float
    feed_in_revenue: float
    decisions: tuple  # per-scenario (ru, ch, dis, e, peak)


def solve_benchmark(loads, renewables, probabilities, tariff, tech, grid,
                    capacity_price, rating_price, user="") -> BenchmarkResult:
    """Optimal fixed storage size for one user.

    loads/renewables: (n_scenarios, T) arrays; capacity_price/rating_price
    are the investment-phase unit costs the user pays (scaled daily by
    tech.kappa).
    """
    if capacity_price < 0 or rating_price < 0:
        raise DomainError("storage prices must be nonnegative")
    loads = np.atleast_2d(np.asarray(loads, dtype=float))
    renewables = np.atleast_2d(np.asarray(renewables, dtype=float))
    rho = np.asarray(probabilities, dtype=float)
    S, T = loads.shape
    if renewables.shape != (S, T) or rho.shape != (S,):
        raise DomainError("scenario arrays must align")
    h = grid.slot_hours

    # columns: x, p, then per scenario [pm, ru(T), ch(T), dis(T), e(T+1)]
    blk = 1 + 3 * T + (T + 1)
    n = 2 + S * blk
    off = [2 + s * blk for s in range(S)]

    def idx(s):
        o = off[s]
        return o, o + 1, o + 1 + T, o + 1 + 2 * T, o + 1 + 3 * T  # pm, ru, ch, dis, e

    rows, rhs, kinds = [], [], []
    c = np.zeros(n)
    upper = np.full(n, np.inf)
    c[0] = tech.kappa * capacity_price
    c[1] = tech.kappa * rating_price
    for s in range(S):
        pm, ru, ch, dis, e = idx(s)
        c[pm] = rho[s] * tariff.pi_p
        c[ru:ch] = rho[s] * (tariff.pi_s - tariff.pi_b) * h
        c[ch:dis] = rho[s] * (tariff.pi_b + tech.c_s) * h
        c[dis:e] = rho[s] * (tech.c_s - tariff.pi_b) * h
        upper[ru:ch] = renewables[s]
        for t in range(T):
            row = np.zeros(n)  # storage dynamics
            row[e + t + 1] = 1.0
            row[e + t] = -1.0
            row[ch + t] = -tech.eta_c * h
            row[dis + t] = h / tech.eta_d
            rows.append(row)
            rhs.append(0.0)
            kinds.append(EQ)
        row = np.zeros(n)  # periodic level
        row[e] = 1.0
        row[e + T] = -1.0
        rows.append(row)
        rhs.append(0.0)
        kinds.append(EQ)
        for t in range(T + 1):  # usable energy window scales with x
            row = np.zeros(n)
            row[e + t] = 1.0
            row[0] = -tech.gamma_max
            rows.append(row)
            rhs.append(0.0)
            kinds.append(LE)
            row = np.zeros(n)
            row[e + t] = -1.0
            row[0] = tech.gamma_min
            rows.append(row)
            rhs.append(0.0)
            kinds.append(LE)
        for t in range(T):  # rate limits and grid-draw rows
            row = np.zeros(n)
            row[ch + t] = 1.0
            row[1] = -1.0
            rows.append(row)
            rhs.append(0.0)
            kinds.append(LE)
            row = np.zeros(n)
            row[dis + t] = 1.0
            row[1] = -1.0
            rows.append(row)
            rhs.append(0.0)
            kinds.append(LE)
            row = np.zeros(n)  # grid draw >= 0
            row[ru + t] = 1.0
            row[dis + t] = 1.0
            row[ch + t] = -1.0
            rows.append(row)
            rhs.append(loads[s, t])
            kinds.append(LE)
            row = np.zeros(n)  # grid draw <= peak
            row[ru + t] = -1.0
            row[dis + t] = -1.0
            row[ch + t] = 1.0
            row[pm] = -1.0
            rows.append(row)
            rhs.append(-loads[s, t])
            kinds.append(LE)

    lp = LinearProgram(c=c, A=np.array(rows), b=np.array(rhs), row_kind=tuple(kinds), upper=upper)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise SolverFailureError(f"benchmark problem came back {sol.status!r}")

    def _snap(v):
        return float(v) if v > 1e-12 else 0.0

    x = _snap(sol.x[0])
    p = _snap(sol.x[1])
    decisions = []
    bill = revenue = cycling = 0.0
    for s in range(S):
        pm, ru, ch, dis, e = idx(s)
        ru_v = np.clip(sol.x[ru:ch], 0.0, renewables[s])
        ch_v = np.maximum(sol.x[ch:dis], 0.0)
        dis_v = np.maximum(sol.x[dis:e], 0.0)
        e_v = sol.x[e : e + T + 1]
        draw = power_balance(loads[s], ru_v, ch_v, dis_v)
        bill += rho[s] * electricity_bill(draw, tariff, grid)
        revenue += rho[s] * renewable_revenue(renewables[s], ru_v, tariff, grid)
        cycling += rho[s] * tech.c_s * float(np.sum(ch_v + dis_v)) * h
        decisions.append((ru_v, ch_v, dis_v, e_v, float(sol.x[pm])))
    cycling = _snap(cycling)
    capital = tech.kappa * (capacity_price * x + rating_price * p)
    return BenchmarkResult(
        user=user,
        capacity=x,
        rating=p,
        expected_cost=capital + bill + cycling - revenue,
        capital_cost=capital,
        energy_cost=bill,
        cycling_cost=cycling,
        feed_in_revenue=revenue,
        decisions=tuple(decisions),
    )
