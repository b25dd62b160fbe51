"""Aggregator side: demand netting, physical sizing, and price search.

The aggregator nets all users' charge/discharge requests slot by slot (the
physical store only sees the residual), then sizes capacity X and power
rating P by a linear program that may offload any part of the demand to
additional resources.  Profit is revenue from sold virtual capacity minus
that optimal cost.

As the users' penalty goes to zero their decisions become stepwise in the
price, so the profit is piecewise linear between threshold prices.  The two
searches exploit this: the optimal-profit search evaluates left-handed
limits at every threshold and backs off by a controlled amount; the
lowest-nonnegative-profit search scans thresholds in increasing order for
the first sign change, distinguishing an interior zero crossing, an exact
zero left limit, and a jump to a nonnegative right limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousPriceError, DomainError, NoViablePriceError, SolverFailureError
from .model import ScenarioSet, StorageTech, Tariff
from .simplex import EQ, LE, LinearProgram, solve_lp
from .user import _solve_user_vector, build_user_problem, compute_profile

__all__ = [
    "AggregateDemand",
    "CostAllocation",
    "CommunicationResult",
    "PriceSearchResult",
    "SharingModel",
    "aggregate_net",
    "solve_cost_allocation",
    "expected_revenue",
    "communication_unit",
    "limiting_profit",
    "search_op_price",
    "search_lnp_price",
]

_PRICE_TOL = 1e-9
_EPS_ITER_CAP = 20


@dataclass
class AggregateDemand:
    """Net charge/discharge the physical storage must absorb, per scenario.

    Arrays have shape (n_scenarios, T); in every slot at most one of the
    two is positive (netting guarantees it)."""

    charge: np.ndarray
    discharge: np.ndarray

    def __post_init__(self):
        self.charge = np.atleast_2d(np.asarray(self.charge, dtype=float))
        self.discharge = np.atleast_2d(np.asarray(self.discharge, dtype=float))
        if self.charge.shape != self.discharge.shape:
            raise DomainError("charge and discharge must have the same shape")
        if np.any(self.charge < 0) or np.any(self.discharge < 0):
            raise DomainError("net demand must be nonnegative")
        if np.any((self.charge > 0) & (self.discharge > 0)):
            raise DomainError("charge and discharge demand overlap in a slot")


def aggregate_net(charges, discharges):
    """Net all users' dispatch: residual charge and discharge series with
    exact complementarity.  Inputs are (n_users, T) arrays."""
    charges = np.atleast_2d(np.asarray(charges, dtype=float))
    discharges = np.atleast_2d(np.asarray(discharges, dtype=float))
    if charges.shape != discharges.shape:
        raise DomainError("charge and discharge stacks must have the same shape")
    net = charges.sum(axis=0) - discharges.sum(axis=0)
    return np.maximum(net, 0.0), np.maximum(-net, 0.0)


@dataclass
class CostAllocation:
    """Optimal physical sizing plus the storage/additional split, and the
    expected per-day cost it achieves."""

    capacity: float
    rating: float
    storage_charge: np.ndarray
    storage_discharge: np.ndarray
    extra_charge: np.ndarray
    extra_discharge: np.ndarray
    energy: np.ndarray
    total_cost: float
    capital_cost: float
    storage_op_cost: float
    extra_cost: float


def solve_cost_allocation(demand: AggregateDemand, tech: StorageTech, probabilities, grid) -> CostAllocation:
    """Size (X, P) and split each scenario's demand between the physical
    store and additional resources at minimal expected daily cost.

    The store can only absorb demand, so its energy level moves only in
    slots with nonzero net demand; the program is built on that support
    (levels between demand slots collapse to one checkpoint).
    """
    ch_d, dis_d = demand.charge, demand.discharge
    S, T = ch_d.shape
    rho = np.asarray(probabilities, dtype=float)
    if rho.shape != (S,):
        raise DomainError("one probability per scenario required")
    h = grid.slot_hours
    kx, kp = tech.kappa * tech.c_x, tech.kappa * tech.c_p

    # one flow variable per demand slot (charge and discharge demand never
    # coincide); the energy level only moves in those slots
    supports = [np.flatnonzero(ch_d[s] + dis_d[s] > 0.0) for s in range(S)]
    n = 2 + sum(len(sup) + 1 for sup in supports)
    col = 2
    blocks = []
    for sup in supports:
        blocks.append((col, col + len(sup)))  # flow-start, e0
        col += len(sup) + 1

    rows, rhs, kinds = [], [], []
    c = np.zeros(n)
    c[0], c[1] = kx, kp
    upper = np.full(n, np.inf)
    const = 0.0
    coefs = []  # per scenario: signed energy coefficient of each flow var
    for s, sup in enumerate(supports):
        w0, e0 = blocks[s]
        ns = len(sup)
        is_charge = ch_d[s][sup] > 0.0
        coef = np.where(is_charge, tech.eta_a_c * h, -h / tech.eta_a_d)
        coefs.append((is_charge, coef))
        c[w0 : w0 + ns] = rho[s] * np.where(
            is_charge, (tech.c_s - tech.c_a_ch) * h, (tech.c_s - tech.c_a_dis) * h
        )
        const += rho[s] * (tech.c_a_ch * ch_d[s].sum() + tech.c_a_dis * dis_d[s].sum()) * h
        upper[w0 : w0 + ns] = np.where(is_charge, ch_d[s][sup], dis_d[s][sup])
        for j in range(ns + 1):  # energy window at each checkpoint
            lo = np.zeros(n)
            lo[0] = tech.gamma_min
            lo[e0] = -1.0
            lo[w0 : w0 + j] = -coef[:j]
            rows.append(lo)
            rhs.append(0.0)
            kinds.append(LE)
            hi = -lo.copy()
            hi[0] = -tech.gamma_max
            rows.append(hi)
            rhs.append(0.0)
            kinds.append(LE)
        for j in range(ns):  # rate limit on whichever flow the slot has
            r = np.zeros(n)
            r[w0 + j] = 1.0
            r[1] = -1.0
            rows.append(r)
            rhs.append(0.0)
            kinds.append(LE)
        if ns:  # periodic energy level
            per = np.zeros(n)
            per[w0 : w0 + ns] = coef
            rows.append(per)
            rhs.append(0.0)
            kinds.append(EQ)

    lp = LinearProgram(c=c, A=np.array(rows), b=np.array(rhs), row_kind=tuple(kinds), upper=upper)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise SolverFailureError(
            f"cost allocation must be solvable (additional resources always work); got {sol.status!r}"
        )

    X = max(float(sol.x[0]), 0.0)
    P = max(float(sol.x[1]), 0.0)
    st_ch = np.zeros((S, T))
    st_dis = np.zeros((S, T))
    energy = np.zeros((S, T + 1))
    for s, sup in enumerate(supports):
        w0, e0 = blocks[s]
        is_charge, _ = coefs[s]
        w = np.maximum(sol.x[w0 : w0 + len(sup)], 0.0)
        st_ch[s][sup[is_charge]] = w[is_charge]
        st_dis[s][sup[~is_charge]] = w[~is_charge]
        energy[s, 0] = sol.x[e0]
        for t in range(T):
            energy[s, t + 1] = (
                energy[s, t] + tech.eta_a_c * st_ch[s, t] * h - st_dis[s, t] * h / tech.eta_a_d
            )
    capital = kx * X + kp * P
    op = float(np.sum(rho * (st_ch.sum(axis=1) + st_dis.sum(axis=1))) * tech.c_s * h)
    extra_ch = np.maximum(ch_d - st_ch, 0.0)
    extra_dis = np.maximum(dis_d - st_dis, 0.0)
    extra = float(np.sum(rho * (tech.c_a_ch * extra_ch.sum(axis=1) + tech.c_a_dis * extra_dis.sum(axis=1))) * h)
    return CostAllocation(
        capacity=X,
        rating=P,
        storage_charge=st_ch,
        storage_discharge=st_dis,
        extra_charge=extra_ch,
        extra_discharge=extra_dis,
        energy=energy,
        total_cost=float(sol.objective) + const,
        capital_cost=capital,
        storage_op_cost=op,
        extra_cost=extra,
    )


def expected_revenue(q, capacities, probabilities):
    """Expected daily revenue q * E[total sold capacity]."""
    if q < 0:
        raise DomainError("price must be nonnegative")
    caps = np.asarray(capacities, dtype=float)
    if caps.ndim == 2:
        caps = caps.sum(axis=1)
    rho = np.asarray(probabilities, dtype=float)
    return float(q * (rho @ caps))


class SharingModel:
    """A scenario set with its tariff and storage technology, plus cached
    per-(user, scenario) threshold profiles and cost-allocation results."""

    def __init__(self, scenario_set: ScenarioSet, tariff: Tariff, tech: StorageTech):
        self.scenario_set = scenario_set
        self.tariff = tariff
        self.tech = tech
        self.grid = scenario_set.grid
        self._profiles = {}
        self._co_cache = {}
        self._upp_warm = {}

    @property
    def users(self):
        return self.scenario_set.users

    @property
    def probabilities(self):
        return self.scenario_set.probabilities

    def profile(self, user, scenario_index):
        key = (user, scenario_index)
        if key not in self._profiles:
            scen = self.scenario_set.scenarios[scenario_index]
            self._profiles[key] = compute_profile(
                scen.load(user), scen.renewable(user), self.tariff, self.tech, self.grid,
                user=user, scenario=scen.id,
            )
        return self._profiles[key]

    def all_profiles(self):
        for s in range(len(self.scenario_set)):
            for u in self.users:
                self.profile(u, s)
        return self._profiles

    def thresholds(self):
        """Union of all threshold prices, sorted, deduplicated, 0 first."""
        self.all_profiles()
        prices = np.sort(np.concatenate([p.prices for p in self._profiles.values()]))
        merged = [0.0]
        for p in prices:
            if p > merged[-1] + _PRICE_TOL * (1.0 + p):
                merged.append(float(p))
        return np.array(merged)

    def cost_allocation(self, demand: AggregateDemand) -> CostAllocation:
        key = (demand.charge.tobytes(), demand.discharge.tobytes())
        if key not in self._co_cache:
            self._co_cache[key] = solve_cost_allocation(
                demand, self.tech, self.probabilities, self.grid
            )
        return self._co_cache[key]


@dataclass
class _LimitingPoint:
    """Stepwise (limiting) outcome on a fixed price interval."""

    q: float
    capacities: np.ndarray  # (S, I)
    demand: AggregateDemand
    allocation: CostAllocation
    revenue: float
    cost: float
    profit: float
    sold: float  # E[sum_i x_i]
    user_costs: dict


def _limiting_point(model: SharingModel, q) -> _LimitingPoint:
    S = len(model.scenario_set)
    users = model.users
    T = model.grid.T
    rho = model.probabilities
    caps = np.zeros((S, len(users)))
    ch = np.zeros((S, T))
    dis = np.zeros((S, T))
    vs = np.zeros((S, len(users)))
    for s in range(S):
        chs = np.zeros((len(users), T))
        diss = np.zeros((len(users), T))
        for i, u in enumerate(users):
            prof = model.profile(u, s)
            k = prof.interval_of(q)
            dec = prof.dispatch[k]
            caps[s, i] = prof.capacities[k]
            chs[i] = dec.charge
            diss[i] = dec.discharge
            vs[s, i] = dec.v
        ch[s], dis[s] = aggregate_net(chs, diss)
    demand = AggregateDemand(charge=ch, discharge=dis)
    alloc = model.cost_allocation(demand)
    sold = float(rho @ caps.sum(axis=1))
    revenue = float(q) * sold
    profit = revenue - alloc.total_cost
    user_costs = {
        u: float(rho @ (q * caps[:, i] + vs[:, i])) for i, u in enumerate(users)
    }
    return _LimitingPoint(
        q=float(q), capacities=caps, demand=demand, allocation=alloc,
        revenue=revenue, cost=alloc.total_cost, profit=profit, sold=sold,
        user_costs=user_costs,
    )


def limiting_profit(model: SharingModel, q) -> float:
    """Profit in the zero-penalty limit at a non-threshold price q > 0."""
    if q <= 0:
        raise DomainError("price must be positive")
    return _limiting_point(model, q).profit


def _one_sided(model: SharingModel, thresholds, k, side) -> _LimitingPoint:
    """Exact one-sided limit of the limiting profit at thresholds[k].

    The adjacent interval is selected by stepping delta off the threshold;
    on that interval capacities, dispatch, and cost are constant, so the
    limit is recovered exactly by pricing the revenue at the threshold."""
    qa = float(thresholds[k])
    delta = max(1e-7 * qa, 1e-9)
    lo = thresholds[k - 1] if k > 0 else 0.0
    hi = thresholds[k + 1] if k + 1 < len(thresholds) else qa + 4.0 * delta + 1.0
    delta = min(delta, (qa - lo) / 4.0 if side < 0 else (hi - qa) / 4.0)
    point = _limiting_point(model, qa + side * delta)
    revenue = qa * point.sold
    profit = revenue - point.cost
    user_costs = {
        u: c + (qa - point.q) * float(model.probabilities @ point.capacities[:, i])
        for i, (u, c) in enumerate(point.user_costs.items())
    }
    return _LimitingPoint(
        q=qa, capacities=point.capacities, demand=point.demand,
        allocation=point.allocation, revenue=revenue, cost=point.cost,
        profit=profit, sold=point.sold, user_costs=user_costs,
    )


@dataclass
class CommunicationResult:
    """One round of the aggregator-user exchange at (q, eps)."""

    profit: float
    capacity: float
    rating: float
    revenue: float
    cost: float
    sold: float
    capacities: np.ndarray
    allocation: CostAllocation


def communication_unit(model: SharingModel, q, eps) -> CommunicationResult:
    """Solve every user's penalized problem at (q, eps), net the dispatch,
    size the storage, and report profit with the sizing."""
    if q <= 0:
        raise DomainError("communication unit needs q > 0")
    if eps <= 0:
        raise DomainError("communication unit needs eps > 0")
    S = len(model.scenario_set)
    users = model.users
    T = model.grid.T
    rho = model.probabilities
    caps = np.zeros((S, len(users)))
    ch = np.zeros((S, T))
    dis = np.zeros((S, T))
    for s in range(S):
        scen = model.scenario_set.scenarios[s]
        chs = np.zeros((len(users), T))
        diss = np.zeros((len(users), T))
        for i, u in enumerate(users):
            inst = build_user_problem(
                scen.load(u), scen.renewable(u), model.tariff, model.tech, model.grid, q, eps
            )
            start, interval = _warm_start(model, u, s, q, inst)
            dec, z = _solve_user_vector(inst, start)
            if interval is not None:
                model._upp_warm[(u, s)] = (interval, z)
            caps[s, i] = dec.capacity
            chs[i] = dec.charge
            diss[i] = dec.discharge
        ch[s], dis[s] = aggregate_net(chs, diss)
    demand = AggregateDemand(charge=ch, discharge=dis)
    alloc = solve_cost_allocation(demand, model.tech, rho, model.grid)
    sold = float(rho @ caps.sum(axis=1))
    revenue = float(q) * sold
    return CommunicationResult(
        profit=revenue - alloc.total_cost,
        capacity=alloc.capacity,
        rating=alloc.rating,
        revenue=revenue,
        cost=alloc.total_cost,
        sold=sold,
        capacities=caps,
        allocation=alloc,
    )


def _warm_start(model, user, s, q, inst):
    """Initial point for the penalized solve.

    Preferred: the limiting decision of the price's threshold interval
    (the exact zero-penalty optimum, so at small eps the solver lands on
    the right end of the nearly flat penalty valley), or the previous
    solve of this (user, scenario) when it came from the same interval.
    Returns (start, interval) with interval None when unknown.
    """
    try:
        prof = model.profile(user, s)
        k = prof.interval_of(q)
    except (AmbiguousPriceError, DomainError):
        cached = model._upp_warm.get((user, s))
        if cached is not None and cached[1].shape[0] == inst.layout.n:
            return cached[1].copy(), None
        return None, None
    cached = model._upp_warm.get((user, s))
    if cached is not None and cached[0] == k and cached[1].shape[0] == inst.layout.n:
        return cached[1].copy(), k
    dec = prof.dispatch[k]
    lay = inst.layout
    z = np.zeros(lay.n)
    z[lay.x] = dec.capacity
    z[lay.pm] = dec.peak
    T = lay.T
    z[lay.ru : lay.ru + T] = dec.renewable_used
    z[lay.ch : lay.ch + T] = dec.charge
    z[lay.dis : lay.dis + T] = dec.discharge
    z[lay.e : lay.e + T + 1] = np.clip(dec.energy, 0.0, dec.capacity)
    return z, k


@dataclass
class PriceSearchResult:
    """Outcome of a price search: the chosen price, the penalty at which the
    communication round matched the limiting profit, the sizing, and the
    profit decomposition of that final round."""

    price: float
    eps: float
    capacity: float
    rating: float
    profit: float
    revenue: float
    cost: float
    sold: float
    limit_profit: float
    trace: tuple = ()
    flag: str = None
    case: str = None

    @property
    def capacity_reduction_pct(self):
        """How much smaller the physical store is than the sold capacity."""
        if self.sold <= 0:
            return 0.0
        return 100.0 * (self.sold - self.capacity) / self.sold


def _eps_loop(model, q_hat, eps0, stop):
    eps = float(eps0)
    trace = []
    for _ in range(_EPS_ITER_CAP):
        eps /= 10.0
        cu = communication_unit(model, q_hat, eps)
        trace.append((eps, cu.profit))
        if stop(cu.profit):
            return eps, cu, tuple(trace)
    raise SolverFailureError(
        f"penalty loop did not converge within {_EPS_ITER_CAP} reductions at q={q_hat!r}"
    )


def search_op_price(model: SharingModel, err1, err2, eps0) -> PriceSearchResult:
    """Find a near-optimal-profit price.

    Left-handed limit profits are evaluated at every threshold price; the
    best threshold is approached from below so that the limiting profit
    loses at most a factor err1, then the penalty shrinks by 10 until the
    communication round is within relative err2 of the limiting profit.
    """
    if not (0 < err1 < 1) or not (0 < err2 < 1):
        raise DomainError("err1 and err2 must be in (0, 1)")
    if eps0 <= 0:
        raise DomainError("eps0 must be positive")
    thresholds = model.thresholds()
    cand = [k for k in range(len(thresholds)) if thresholds[k] > _PRICE_TOL]
    if not cand:
        return PriceSearchResult(
            price=0.0, eps=eps0, capacity=0.0, rating=0.0, profit=0.0,
            revenue=0.0, cost=0.0, sold=0.0, limit_profit=0.0,
            flag="no-positive-profit",
        )
    lefts = [_one_sided(model, thresholds, k, -1) for k in cand]
    profits = np.array([p.profit for p in lefts])
    best = int(np.argmax(profits))  # ties resolve to the smaller price
    k_best = cand[best]
    qa_m = float(thresholds[k_best])
    best_point = lefts[best]
    if best_point.profit <= 0:
        return PriceSearchResult(
            price=qa_m, eps=eps0, capacity=best_point.allocation.capacity,
            rating=best_point.allocation.rating, profit=best_point.profit,
            revenue=best_point.revenue, cost=best_point.cost, sold=best_point.sold,
            limit_profit=best_point.profit, flag="no-positive-profit",
        )
    prev = float(thresholds[k_best - 1])
    mid = 0.5 * (prev + qa_m)
    rho = model.probabilities
    slope = 0.0
    for s in range(len(model.scenario_set)):
        for u in model.users:
            slope += rho[s] * model.profile(u, s).capacity_at(mid)
    q_hat = qa_m - best_point.profit * err1 / slope
    if q_hat <= prev:
        q_hat = mid  # back-off overshot the interval; stay inside it
    limit = limiting_profit(model, q_hat)
    eps, cu, trace = _eps_loop(
        model, q_hat, eps0, lambda p: abs(p - limit) <= err2 * abs(limit)
    )
    return PriceSearchResult(
        price=q_hat, eps=eps, capacity=cu.capacity, rating=cu.rating,
        profit=cu.profit, revenue=cu.revenue, cost=cu.cost, sold=cu.sold,
        limit_profit=limit, trace=trace,
    )


def search_lnp_price(model: SharingModel, err3, err4, eps0) -> PriceSearchResult:
    """Find a near-lowest-nonnegative-profit price.

    Thresholds are scanned in increasing order; the first of three events
    decides the price: the limiting profit crosses zero strictly inside an
    interval (case 'interior', solved by interpolation), the left-handed
    limit is exactly zero at a threshold (case 'left_limit_zero', backed
    off below it by err3/slope), or the right-handed limit turns
    nonnegative at a threshold (case 'right_limit_nonneg', advanced above
    it by err3/slope).  The penalty then shrinks by 10 until the
    communication round is within absolute err4 of the limiting profit.
    """
    if err3 <= 0 or err4 <= 0:
        raise DomainError("err3 and err4 must be positive")
    if eps0 <= 0:
        raise DomainError("eps0 must be positive")
    thresholds = model.thresholds()
    K = len(thresholds)
    for k in range(K):
        qa = float(thresholds[k])
        left = _one_sided(model, thresholds, k, -1) if qa > _PRICE_TOL else None
        if left is not None and left.profit > _PRICE_TOL:
            # zero crossing strictly inside (thresholds[k-1], thresholds[k])
            prev_right = _one_sided(model, thresholds, k - 1, +1)
            q_hat = (thresholds[k - 1] * left.profit - qa * prev_right.profit) / (
                left.profit - prev_right.profit
            )
            limit = limiting_profit(model, q_hat)
            eps, cu, trace = _eps_loop(model, q_hat, eps0, lambda p: abs(p) <= err4)
            return PriceSearchResult(
                price=float(q_hat), eps=eps, capacity=cu.capacity, rating=cu.rating,
                profit=cu.profit, revenue=cu.revenue, cost=cu.cost, sold=cu.sold,
                limit_profit=limit, trace=trace, case="interior",
            )
        if left is not None and abs(left.profit) <= _PRICE_TOL:
            prev_right = _one_sided(model, thresholds, k - 1, +1)
            slope = (left.profit - prev_right.profit) / (qa - thresholds[k - 1])
            q_hat = qa - err3 / slope
            limit = limiting_profit(model, q_hat)
            eps, cu, trace = _eps_loop(
                model, q_hat, eps0, lambda p: abs(p - limit) <= err4
            )
            return PriceSearchResult(
                price=float(q_hat), eps=eps, capacity=cu.capacity, rating=cu.rating,
                profit=cu.profit, revenue=cu.revenue, cost=cu.cost, sold=cu.sold,
                limit_profit=limit, trace=trace, case="left_limit_zero",
            )
        right = _one_sided(model, thresholds, k, +1)
        if right.profit >= -1e-9:
            if right.sold <= _PRICE_TOL or k + 1 >= K:
                continue  # nothing is sold above this threshold: not viable
            nxt = float(thresholds[k + 1])
            next_left = _one_sided(model, thresholds, k + 1, -1)
            slope = (next_left.profit - right.profit) / (nxt - qa)
            q_hat = qa + err3 / slope
            limit = limiting_profit(model, q_hat)
            eps, cu, trace = _eps_loop(
                model, q_hat, eps0, lambda p: abs(p - limit) <= err4
            )
            return PriceSearchResult(
                price=float(q_hat), eps=eps, capacity=cu.capacity, rating=cu.rating,
                profit=cu.profit, revenue=cu.revenue, cost=cu.cost, sold=cu.sold,
                limit_profit=limit, trace=trace, case="right_limit_nonneg",
            )
    raise NoViablePriceError("profit is negative at every price with actual sales")
