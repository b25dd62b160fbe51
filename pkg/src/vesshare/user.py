"""Per-(user, scenario) capacity purchase and dispatch.

Given a virtual-capacity price q, a user minimizes

    q * x  +  bill(grid draw)  -  feed-in revenue

over capacity x, self-used renewable, charge/discharge, and the energy
path, with the peak linearized through an auxiliary variable.  The module
provides:

* the problem builder and solver (LP for the plain problem, QP when the
  charge/discharge penalty eps is positive),
* the piecewise-linear value function f(x) of capacity, traced with the
  parametric right-hand-side machinery,
* threshold prices / optimal-capacity steps derived from f's slopes,
* the limiting dispatch as eps -> 0+, computed by first minimizing the
  bill component at fixed capacity and then picking the minimum-energy
  (least-squares) dispatch achieving it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousPriceError, DomainError, SolverFailureError, UnboundedCapacityError
from .model import TimeGrid, UserDecision, electricity_bill, power_balance, renewable_revenue
from .parametric import parametric_rhs_ray
from .qp import QuadraticProgram, solve_qp
from .simplex import EQ, LE, LinearProgram, solve_lp

__all__ = [
    "UserProblemInstance",
    "ValueFunction",
    "ThresholdProfile",
    "build_user_problem",
    "solve_user",
    "compute_value_function",
    "compute_thresholds",
    "compute_profile",
    "optimal_capacity",
    "limiting_dispatch",
]

_PRICE_TOL = 1e-9  # prices closer than this to a threshold are ambiguous
_SLOPE_MERGE = 1e-9
_CAP_MERGE = 1e-9


@dataclass
class _Layout:
    """Column layout of the user problem; x is column 0 when present."""

    T: int
    with_x: bool

    @property
    def x(self):
        return 0 if self.with_x else None

    @property
    def pm(self):
        return 1 if self.with_x else 0

    @property
    def ru(self):
        return self.pm + 1

    @property
    def ch(self):
        return self.ru + self.T

    @property
    def dis(self):
        return self.ch + self.T

    @property
    def e(self):
        return self.dis + self.T

    @property
    def n(self):
        return self.e + self.T + 1


def _base_constraints(load, renewable, tech, grid, lay, cap_rows, x_fixed=None):
    """Rows shared by every variant of the user problem.

    cap_rows=True adds explicit `e[t] - x <= 0` rows (needed when x is a
    variable or a ray parameter); otherwise the capacity is enforced via
    upper bounds on e using x_fixed.
    """
    T, h = grid.T, grid.slot_hours
    n = lay.n
    rows, rhs, kinds = [], [], []

    for t in range(T):
        row = np.zeros(n)
        row[lay.e + t + 1] = 1.0
        row[lay.e + t] = -1.0
        row[lay.ch + t] = -tech.eta_c * h
        row[lay.dis + t] = h / tech.eta_d
        rows.append(row)
        rhs.append(0.0)
        kinds.append(EQ)
    row = np.zeros(n)
    row[lay.e] = 1.0
    row[lay.e + T] = -1.0
    rows.append(row)
    rhs.append(0.0)
    kinds.append(EQ)

    if cap_rows:
        for t in range(T + 1):
            row = np.zeros(n)
            row[lay.e + t] = 1.0
            if lay.with_x:
                row[lay.x] = -1.0
                rhs.append(0.0)
            else:
                rhs.append(0.0 if x_fixed is None else float(x_fixed))
            rows.append(row)
            kinds.append(LE)

    for t in range(T):
        row = np.zeros(n)  # grid draw >= 0
        row[lay.ru + t] = 1.0
        row[lay.dis + t] = 1.0
        row[lay.ch + t] = -1.0
        rows.append(row)
        rhs.append(load[t])
        kinds.append(LE)
        row = np.zeros(n)  # grid draw <= peak
        row[lay.ru + t] = -1.0
        row[lay.dis + t] = -1.0
        row[lay.ch + t] = 1.0
        row[lay.pm] = -1.0
        rows.append(row)
        rhs.append(-load[t])
        kinds.append(LE)

    upper = np.full(n, np.inf)
    upper[lay.ru : lay.ru + T] = renewable
    if not cap_rows and x_fixed is not None:
        upper[lay.e : lay.e + T + 1] = float(x_fixed)
    return np.array(rows), np.array(rhs), tuple(kinds), upper


def _bill_cost(tariff, grid, lay):
    """Linear objective of the bill-minus-feedin component (constants folded
    out; see objective_constant)."""
    T, h = grid.T, grid.slot_hours
    c = np.zeros(lay.n)
    c[lay.pm] = tariff.pi_p
    c[lay.ru : lay.ru + T] = (tariff.pi_s - tariff.pi_b) * h
    c[lay.ch : lay.ch + T] = tariff.pi_b * h
    c[lay.dis : lay.dis + T] = -tariff.pi_b * h
    return c


def _objective_constant(load, renewable, tariff, grid):
    h = grid.slot_hours
    return tariff.pi_b * float(np.sum(load)) * h - tariff.pi_s * float(np.sum(renewable)) * h


@dataclass
class UserProblemInstance:
    """One (user, scenario, price, penalty) problem, ready to solve."""

    lp: LinearProgram
    quadratic_diag: np.ndarray
    layout: _Layout
    q: float
    eps: float
    load: np.ndarray
    renewable: np.ndarray
    tariff: object
    tech: object
    grid: TimeGrid
    objective_constant: float


def build_user_problem(load, renewable, tariff, tech, grid, q, eps=0.0) -> UserProblemInstance:
    """Assemble the capacity-purchase problem at price q; eps > 0 adds the
    quadratic charge/discharge penalty that makes the solution unique."""
    if q < 0:
        raise DomainError(f"price must be nonnegative, got {q}")
    if eps < 0:
        raise DomainError(f"penalty must be nonnegative, got {eps}")
    T, h = grid.T, grid.slot_hours
    load = np.asarray(load, dtype=float)
    renewable = np.asarray(renewable, dtype=float)
    lay = _Layout(T=T, with_x=True)
    rows, rhs, kinds, upper = _base_constraints(load, renewable, tech, grid, lay, cap_rows=True)
    # explicit capacity cap keeps the LP bounded even at q = 0; it is far
    # above any useful capacity and never binds at an optimum
    upper[lay.x] = float(np.sum(load) + np.sum(renewable)) * h + 1.0
    c = _bill_cost(tariff, grid, lay)
    c[lay.x] = q
    qdiag = np.zeros(lay.n)
    qdiag[lay.ch : lay.ch + 2 * T] = 2.0 * eps
    lp = LinearProgram(c=c, A=rows, b=rhs, row_kind=kinds, upper=upper)
    return UserProblemInstance(
        lp=lp,
        quadratic_diag=qdiag,
        layout=lay,
        q=q,
        eps=eps,
        load=load,
        renewable=renewable,
        tariff=tariff,
        tech=tech,
        grid=grid,
        objective_constant=_objective_constant(load, renewable, tariff, grid),
    )


def _decision_from_vector(z, inst_or_parts) -> UserDecision:
    lay, load, renewable, tariff, grid = inst_or_parts
    T = lay.T
    ru = np.clip(z[lay.ru : lay.ru + T], 0.0, np.asarray(renewable, dtype=float))
    ch = np.maximum(z[lay.ch : lay.ch + T], 0.0)
    dis = np.maximum(z[lay.dis : lay.dis + T], 0.0)
    e = np.maximum(z[lay.e : lay.e + T + 1], 0.0)
    x = float(z[lay.x]) if lay.with_x else None
    draw = power_balance(load, ru, ch, dis)
    v = electricity_bill(draw, tariff, grid) - renewable_revenue(renewable, ru, tariff, grid)
    return UserDecision(
        capacity=x,
        renewable_used=ru,
        charge=ch,
        discharge=dis,
        energy=e,
        peak=float(z[lay.pm]),
        v=v,
    )


def _solve_user_vector(instance: UserProblemInstance, start=None):
    """solve_user plus the raw solution vector (reused as a warm start)."""
    if instance.q <= 0:
        raise UnboundedCapacityError(
            "at q = 0 the user may buy arbitrarily large capacity; choose q > 0"
        )
    lay = instance.layout
    parts = (lay, instance.load, instance.renewable, instance.tariff, instance.grid)
    if instance.eps == 0.0:
        sol = solve_lp(instance.lp)
        if sol.status != "optimal":
            raise SolverFailureError(f"user problem came back {sol.status!r}")
        return _decision_from_vector(sol.x, parts), sol.x
    qp = QuadraticProgram(
        Q=instance.quadratic_diag,
        c=instance.lp.c,
        A=instance.lp.A,
        b=instance.lp.b,
        row_kind=instance.lp.row_kind,
        lower=instance.lp.lower,
        upper=instance.lp.upper,
    )
    sol = solve_qp(qp, start=start)
    if sol.status != "optimal":
        raise SolverFailureError(f"penalized user problem came back {sol.status!r}")
    return _decision_from_vector(sol.x, parts), sol.x


def solve_user(instance: UserProblemInstance, start=None) -> UserDecision:
    """Solve the assembled problem.  Price zero is rejected: capacity is
    free there and the purchase amount is unbounded."""
    return _solve_user_vector(instance, start)[0]


@dataclass
class ValueFunction:
    """Piecewise-linear minimal bill-minus-feedin as a function of capacity.

    breakpoints[0] = 0; slopes[k] holds on (breakpoints[k], breakpoints[k+1]),
    the last slope (always 0) extending to infinity.  base_value = f(0).
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    base_value: float

    def value(self, x):
        x = float(x)
        if x < 0:
            raise DomainError("capacity must be nonnegative")
        pts = self.breakpoints
        f = self.base_value
        for k in range(len(pts)):
            hi = pts[k + 1] if k + 1 < len(pts) else np.inf
            f += self.slopes[k] * (min(x, hi) - pts[k])
            if x <= hi:
                break
        return f


def compute_value_function(load, renewable, tariff, tech, grid) -> ValueFunction:
    """Trace f over capacity by relaxing the energy-cap rows along the ray
    e[t] <= 0 + phi."""
    T = grid.T
    load = np.asarray(load, dtype=float)
    renewable = np.asarray(renewable, dtype=float)
    lay = _Layout(T=T, with_x=False)
    rows, rhs, kinds, upper = _base_constraints(
        load, renewable, tech, grid, lay, cap_rows=True, x_fixed=0.0
    )
    c = _bill_cost(tariff, grid, lay)
    lp = LinearProgram(c=c, A=rows, b=rhs, row_kind=kinds, upper=upper)
    db = np.zeros(rows.shape[0])
    db[T + 1 : T + 1 + T + 1] = 1.0  # the cap rows sit right after dynamics+periodicity
    ray = parametric_rhs_ray(lp, db)

    pts = list(ray.transition_points)
    slopes = list(ray.slopes)
    # merge numerically equal slopes / capacities
    k = 0
    while k + 1 < len(slopes):
        if abs(slopes[k + 1] - slopes[k]) < _SLOPE_MERGE or pts[k + 1] - pts[k] < _CAP_MERGE:
            del pts[k + 1]
            del slopes[k]  # keep the later (righter) slope
        else:
            k += 1
    if abs(slopes[-1]) > 1e-7:
        raise SolverFailureError(f"value function has nonzero terminal slope {slopes[-1]!r}")
    slopes[-1] = 0.0
    const = _objective_constant(load, renewable, tariff, grid)
    return ValueFunction(
        breakpoints=np.asarray(pts), slopes=np.asarray(slopes), base_value=ray.base_value + const
    )


@dataclass
class ThresholdProfile:
    """Stepwise optimal-capacity structure of one (user, scenario) pair.

    prices[0] = 0 < prices[1] < ...; capacities strictly decreasing to 0.
    For q in (prices[k], prices[k+1]) the optimal capacity is capacities[k]
    (the last interval extends to infinity).  dispatch[k], when present, is
    the limiting eps -> 0+ decision on that interval.
    """

    user: str
    scenario: str
    prices: np.ndarray
    capacities: np.ndarray
    dispatch: tuple = None
    value_function: ValueFunction = None

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        self.capacities = np.asarray(self.capacities, dtype=float)
        if self.prices.shape != self.capacities.shape:
            raise DomainError("prices and capacities must align")
        if self.prices[0] != 0.0 or np.any(np.diff(self.prices) <= 0):
            raise DomainError("prices must increase strictly from 0")
        if self.capacities[-1] != 0.0 or np.any(np.diff(self.capacities) >= 0):
            raise DomainError("capacities must decrease strictly to 0")

    def interval_of(self, q):
        """Index k with q strictly inside (prices[k], prices[k+1])."""
        q = float(q)
        if q <= 0:
            raise DomainError(f"price must be positive, got {q}")
        j = int(np.argmin(np.abs(self.prices - q)))
        if abs(self.prices[j] - q) < _PRICE_TOL:
            hi = self.capacities[j - 1] if j > 0 else np.inf
            raise AmbiguousPriceError(q, float(self.prices[j]), hi, float(self.capacities[j]))
        return int(np.searchsorted(self.prices, q)) - 1

    def capacity_at(self, q):
        return float(self.capacities[self.interval_of(q)])


def compute_thresholds(load, renewable, tariff, tech, grid, user="", scenario="") -> ThresholdProfile:
    """Threshold prices are the absolute slopes of the value function, with
    0 prepended; capacities are its breakpoints in reverse."""
    vf = compute_value_function(load, renewable, tariff, tech, grid)
    slopes = vf.slopes
    pts = vf.breakpoints
    prices = np.concatenate([[0.0], -slopes[:-1][::-1]])
    caps = pts[::-1].copy()
    return ThresholdProfile(
        user=user, scenario=scenario, prices=prices, capacities=caps, value_function=vf
    )


def optimal_capacity(profile: ThresholdProfile, q) -> float:
    """Stepwise optimal capacity; raises AmbiguousPriceError when q sits on
    a threshold (any capacity between the neighbouring steps is optimal)."""
    return profile.capacity_at(q)


def limiting_dispatch(load, renewable, tariff, tech, grid, x_star) -> UserDecision:
    """The unique eps -> 0+ dispatch at capacity x_star: minimize the bill
    component, then the charge/discharge energy subject to achieving it."""
    if x_star < 0:
        raise DomainError(f"capacity must be nonnegative, got {x_star}")
    T, h = grid.T, grid.slot_hours
    load = np.asarray(load, dtype=float)
    renewable = np.asarray(renewable, dtype=float)
    lay = _Layout(T=T, with_x=False)

    if x_star == 0.0:
        ru = np.minimum(renewable, load)
        draw = load - ru
        v = electricity_bill(draw, tariff, grid) - renewable_revenue(renewable, ru, tariff, grid)
        return UserDecision(
            capacity=0.0,
            renewable_used=ru,
            charge=np.zeros(T),
            discharge=np.zeros(T),
            energy=np.zeros(T + 1),
            peak=float(np.max(draw)),
            v=v,
        )

    rows, rhs, kinds, upper = _base_constraints(
        load, renewable, tech, grid, lay, cap_rows=False, x_fixed=x_star
    )
    c = _bill_cost(tariff, grid, lay)
    bill_lp = LinearProgram(c=c, A=rows, b=rhs, row_kind=kinds, upper=upper)
    vsol = solve_lp(bill_lp)
    if vsol.status != "optimal":
        raise DomainError(f"no feasible dispatch at capacity {x_star!r}")
    v_lin = vsol.objective

    # pick the minimum-energy dispatch among those achieving the optimal
    # bill.  The bill-optimal vertex satisfies the pinned-bill row exactly,
    # so the equality form is solvable from it; a slightly relaxed form
    # (<= v* + 1e-9) is kept as a fallback, at the price of an O(1e-9)
    # dispatch bias.
    quad = np.concatenate([np.zeros(lay.ch), np.full(2 * T, 2.0), np.zeros(T + 1)])
    vrow = c.reshape(1, -1)
    sol = None
    for kind, slack in ((EQ, 0.0), (LE, 1e-9)):
        cd = QuadraticProgram(
            Q=quad,
            c=np.zeros(lay.n),
            A=np.vstack([rows, vrow]),
            b=np.concatenate([rhs, [v_lin + slack]]),
            row_kind=kinds + (kind,),
            upper=upper,
        )
        try:
            sol = solve_qp(cd, start=vsol.x.copy())
        except SolverFailureError:
            sol = None
            continue
        if sol.status == "optimal":
            break
    if sol is None or sol.status != "optimal":
        raise SolverFailureError("limiting-dispatch problem did not solve")
    dec = _decision_from_vector(sol.x, (lay, load, renewable, tariff, grid))
    dec.capacity = float(x_star)
    return dec


def compute_profile(load, renewable, tariff, tech, grid, user="", scenario="") -> ThresholdProfile:
    """Thresholds plus the limiting dispatch of every price interval."""
    prof = compute_thresholds(load, renewable, tariff, tech, grid, user=user, scenario=scenario)
    dispatch = tuple(
        limiting_dispatch(load, renewable, tariff, tech, grid, float(cap))
        for cap in prof.capacities
    )
    return ThresholdProfile(
        user=prof.user,
        scenario=prof.scenario,
        prices=prof.prices,
        capacities=prof.capacities,
        dispatch=dispatch,
        value_function=prof.value_function,
    )
