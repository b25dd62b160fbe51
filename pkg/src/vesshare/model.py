"""Domain types and closed-form model arithmetic.

Everything downstream (user problems, aggregator sizing, benchmark) is
expressed in terms of these records.  Conventions:

* Power series are in kW, one value per slot; energy-level series have
  length T+1 (index 0..T) in kWh.
* Energy = power * slot_hours; the slot length is explicit so the model
  does not silently equate kW and kWh.
* Currency is a plain float; tolerances dominate any rounding concern.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, ValidationError

__all__ = [
    "TimeGrid",
    "Tariff",
    "StorageTech",
    "Scenario",
    "ScenarioSet",
    "UserDecision",
    "power_balance",
    "electricity_bill",
    "renewable_revenue",
    "user_net_cost",
    "daily_peak_price",
    "capital_recovery_factor",
]

# Tiny negative grid draws produced by solver round-off are clamped to zero
# in bill evaluation; anything below this is a real constraint violation.
ROUNDOFF = 1e-9


def _as_series(values, T=None, name="series"):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if T is not None and arr.shape[0] != T:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {T}")
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Operational horizon: T slots of slot_hours each."""

    T: int
    slot_hours: float = 1.0

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise DomainError(f"T must be a positive integer, got {self.T}")
        if not self.slot_hours > 0:
            raise DomainError(f"slot_hours must be positive, got {self.slot_hours}")


@dataclass(frozen=True)
class Tariff:
    """Demand-charge electricity tariff plus feed-in price.

    pi_b: energy price (currency/kWh), pi_p: daily peak price (currency/kW),
    pi_s: feed-in price (currency/kWh), with 0 <= pi_s < pi_b so users prefer
    self-consumption over selling back.
    """

    pi_b: float
    pi_p: float
    pi_s: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.pi_s < self.pi_b):
            raise DomainError(
                f"feed-in price must satisfy 0 <= pi_s < pi_b, got pi_s={self.pi_s}, pi_b={self.pi_b}"
            )
        if self.pi_p < 0:
            raise DomainError(f"peak price must be nonnegative, got {self.pi_p}")


@dataclass(frozen=True)
class StorageTech:
    """Storage efficiencies, energy-level window, and cost coefficients.

    eta_c/eta_d apply to the users' virtual storage, eta_a_c/eta_a_d to the
    aggregator's physical unit.  gamma_min/gamma_max bound the physical
    energy level as fractions of installed capacity.  c_x/c_p are investment
    costs over the whole investment phase; kappa scales them to one day.
    c_a_ch / c_a_dis price the additional (non-storage) resources used to
    absorb charge demand / serve discharge demand.
    """

    eta_c: float = 1.0
    eta_d: float = 1.0
    eta_a_c: float = 1.0
    eta_a_d: float = 1.0
    gamma_min: float = 0.0
    gamma_max: float = 1.0
    c_x: float = 0.0
    c_p: float = 0.0
    c_s: float = 0.0
    c_a_ch: float = 0.0
    c_a_dis: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("eta_c", "eta_d", "eta_a_c", "eta_a_d"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise DomainError(f"{name} must be in (0, 1], got {v}")
        if not (0.0 <= self.gamma_min < self.gamma_max <= 1.0):
            raise DomainError(
                f"need 0 <= gamma_min < gamma_max <= 1, got [{self.gamma_min}, {self.gamma_max}]"
            )
        for name in ("c_x", "c_p", "c_s", "c_a_ch", "c_a_dis", "kappa"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class Scenario:
    """One operational horizon: per-user load/renewable series plus weight."""

    id: str
    probability: float
    loads: dict
    renewables: dict

    def __post_init__(self):
        if self.probability < 0:
            raise DomainError(f"scenario {self.id}: probability must be >= 0")
        for name, table in (("load", self.loads), ("renewable", self.renewables)):
            for user, series in table.items():
                arr = _as_series(series, name=f"{name}[{user}]")
                if np.any(arr < 0):
                    raise DomainError(
                        f"scenario {self.id}: {name} of user {user} has negative entries"
                    )
                table[user] = arr

    def load(self, user):
        return self.loads[user]

    def renewable(self, user):
        if user in self.renewables:
            return self.renewables[user]
        return np.zeros_like(self.loads[user])


@dataclass(frozen=True)
class ScenarioSet:
    """All scenarios of a planning model, with a fixed user ordering."""

    scenarios: tuple
    grid: TimeGrid
    users: tuple = field(default=None)

    def __post_init__(self):
        scenarios = tuple(self.scenarios)
        object.__setattr__(self, "scenarios", scenarios)
        if not scenarios:
            raise ValidationError("scenario set is empty")
        users = self.users
        if users is None:
            users = tuple(sorted(scenarios[0].loads))
        object.__setattr__(self, "users", tuple(users))
        total = sum(s.probability for s in scenarios)
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"scenario probabilities sum to {total!r}, expected 1")
        T = self.grid.T
        for s in scenarios:
            for u in self.users:
                if u not in s.loads:
                    raise ValidationError(f"scenario {s.id} is missing user {u}")
                _as_series(s.loads[u], T, name=f"load[{u}] in scenario {s.id}")
                if u in s.renewables:
                    _as_series(s.renewables[u], T, name=f"renewable[{u}] in scenario {s.id}")

    @property
    def probabilities(self):
        return np.array([s.probability for s in self.scenarios])

    def __iter__(self):
        return iter(self.scenarios)

    def __len__(self):
        return len(self.scenarios)


@dataclass
class UserDecision:
    """A full per-(user, scenario) decision: capacity, dispatch, energy path.

    v is the electricity-bill-minus-feed-in component of the net cost; the
    capacity payment q*x comes on top of it.
    """

    capacity: float
    renewable_used: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    energy: np.ndarray
    peak: float
    v: float

    def grid_draw(self, load):
        return power_balance(load, self.renewable_used, self.charge, self.discharge)

    def net_cost(self, q):
        return q * self.capacity + self.v

    def validate(self, load, renewable, tariff, tech, grid, tol=1e-8):
        """Check every structural invariant; raises on violation."""
        T = grid.T
        h = grid.slot_hours
        load = _as_series(load, T, "load")
        renewable = _as_series(renewable, T, "renewable")
        for name, series in (
            ("renewable_used", self.renewable_used),
            ("charge", self.charge),
            ("discharge", self.discharge),
        ):
            arr = _as_series(series, T, name)
            if np.any(arr < -tol):
                raise ValidationError(f"{name} has negative entries")
        if np.any(self.renewable_used > renewable + tol):
            raise ValidationError("renewable_used exceeds available renewable")
        energy = _as_series(self.energy, T + 1, "energy")
        step = tech.eta_c * self.charge * h - self.discharge * h / tech.eta_d
        resid = energy[1:] - energy[:-1] - step
        if np.max(np.abs(resid)) > tol:
            raise ValidationError("storage dynamics identity violated")
        if abs(energy[0] - energy[-1]) > tol:
            raise ValidationError("energy level is not periodic")
        if np.any(energy < -tol) or np.any(energy > self.capacity + tol):
            raise ValidationError("energy level leaves [0, capacity]")
        draw = self.grid_draw(load)
        if np.any(draw < -tol):
            raise ValidationError("implied grid draw is negative")
        if np.any(draw > self.peak + tol):
            raise ValidationError("implied grid draw exceeds the declared peak")
        return True


def power_balance(load, renewable_used, charge, discharge):
    """Grid draw implied by a dispatch: load - self-used renewable
    - discharge + charge, slot by slot.  No clamping."""
    load = _as_series(load, name="load")
    T = load.shape[0]
    renewable_used = _as_series(renewable_used, T, "renewable_used")
    charge = _as_series(charge, T, "charge")
    discharge = _as_series(discharge, T, "discharge")
    return load - renewable_used - discharge + charge


def electricity_bill(grid_draw, tariff, grid):
    """Demand-charge bill: energy term plus peak term over the horizon."""
    draw = _as_series(grid_draw, name="grid_draw")
    if draw.shape[0] == 0:
        raise DimensionError("grid_draw is empty")
    if np.any(draw < -ROUNDOFF):
        raise DomainError(
            f"grid_draw has negative entries below round-off: min {draw.min()!r}"
        )
    draw = np.maximum(draw, 0.0)
    return tariff.pi_b * float(np.sum(draw)) * grid.slot_hours + tariff.pi_p * float(np.max(draw))


def renewable_revenue(renewable, renewable_used, tariff, grid):
    """Feed-in revenue for renewable energy not consumed on site."""
    renewable = _as_series(renewable, name="renewable")
    used = _as_series(renewable_used, renewable.shape[0], "renewable_used")
    if np.any(used > renewable + ROUNDOFF):
        raise DomainError("renewable_used exceeds available renewable")
    if np.any(used < -ROUNDOFF):
        raise DomainError("renewable_used has negative entries")
    surplus = np.maximum(renewable - used, 0.0)
    return tariff.pi_s * float(np.sum(surplus)) * grid.slot_hours


def user_net_cost(decision, load, renewable, tariff, grid, q):
    """Capacity payment plus bill minus feed-in revenue for one decision."""
    draw = decision.grid_draw(load)
    bill = electricity_bill(draw, tariff, grid)
    revenue = renewable_revenue(renewable, decision.renewable_used, tariff, grid)
    return q * decision.capacity + bill - revenue


def daily_peak_price(monthly_peak_price, monthly_peak=None, daily_peaks=None):
    """Opt-in conversion of a monthly demand-charge peak price to a daily
    one: pi_p_daily = pi_p_monthly * peak_month / sum(daily peaks), so a
    user with similar peaks every day pays about the same either way.
    Without peak data, every day is assumed to peak at the monthly level
    over a 30-day month (a flat 1/30 scaling)."""
    if monthly_peak_price < 0:
        raise DomainError("peak price must be nonnegative")
    if daily_peaks is None:
        return monthly_peak_price / 30.0
    daily_peaks = _as_series(daily_peaks, name="daily_peaks")
    if np.any(daily_peaks < 0) or daily_peaks.sum() <= 0:
        raise DomainError("daily peaks must be nonnegative with a positive sum")
    if monthly_peak is None:
        monthly_peak = float(np.max(daily_peaks))
    return monthly_peak_price * float(monthly_peak) / float(np.sum(daily_peaks))


def capital_recovery_factor(interest_rate, years, days_per_year=365):
    """Daily capital recovery factor: the annuity factor for an investment
    over `years` at annual rate `interest_rate`, divided across the days of
    a year.  Rates below 1e-8 take the analytic r -> 0 limit
    1 / (years * days) instead of evaluating the 0/0 form."""
    import math

    r = float(interest_rate)
    y = float(years)
    d = float(days_per_year)
    if r < 0:
        raise DomainError(f"interest rate must be >= 0, got {r}")
    if y < 1 or d < 1:
        raise DomainError("years and days_per_year must be >= 1")
    if r < 1e-8:
        return 1.0 / (y * d)
    growth_m1 = math.expm1(y * math.log1p(r))
    return r * (growth_m1 + 1.0) / growth_m1 / d
