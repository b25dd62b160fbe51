import math

import numpy as np
import pytest

from vesshare.errors import DimensionError, DomainError, ValidationError
from vesshare.model import (
    Scenario,
    ScenarioSet,
    StorageTech,
    Tariff,
    TimeGrid,
    UserDecision,
    capital_recovery_factor,
    electricity_bill,
    power_balance,
    renewable_revenue,
    user_net_cost,
)

Z2 = np.zeros(2)


def test_power_balance_identity():
    assert np.allclose(power_balance([2, 0], Z2, Z2, Z2), [2, 0])


def test_power_balance_dispatch():
    out = power_balance([2, 0], Z2, charge=[0, 1], discharge=[1, 0])
    assert np.allclose(out, [1, 1])


def test_power_balance_full_self_consumption():
    assert np.allclose(power_balance([1, 1], [1, 1], Z2, Z2), [0, 0])


def test_power_balance_length_mismatch():
    with pytest.raises(DimensionError):
        power_balance([1, 2, 3], Z2, Z2, Z2)


def test_bill_peaky(grid2, tariff):
    # 0.03*2 + 0.4*2
    assert electricity_bill([2, 0], tariff, grid2) == pytest.approx(0.86)


def test_bill_zero(grid2, tariff):
    assert electricity_bill([0, 0], tariff, grid2) == 0.0


def test_bill_flat(grid2, tariff):
    # 0.03*2 + 0.4*1
    assert electricity_bill([1, 1], tariff, grid2) == pytest.approx(0.46)


def test_bill_clamps_roundoff_but_rejects_negative(grid2, tariff):
    assert electricity_bill([1.0, -5e-10], tariff, grid2) == pytest.approx(0.43)
    with pytest.raises(DomainError):
        electricity_bill([1.0, -1e-3], tariff, grid2)


def test_bill_empty_series(grid2, tariff):
    with pytest.raises(DimensionError):
        electricity_bill([], tariff, grid2)


def test_bill_monotone_in_draw(grid2, tariff):
    rng = np.random.default_rng(7)
    for _ in range(50):
        a = rng.uniform(0, 3, size=2)
        bump = rng.uniform(0, 1, size=2)
        assert electricity_bill(a + bump, tariff, grid2) >= electricity_bill(a, tariff, grid2) - 1e-12


def test_renewable_revenue_cases(grid2, tariff):
    assert renewable_revenue([1, 1], [1, 1], tariff, grid2) == 0.0
    assert renewable_revenue([2, 0], [0, 0], tariff, grid2) == pytest.approx(0.02)
    assert renewable_revenue([0, 0], [0, 0], tariff, grid2) == 0.0
    with pytest.raises(DomainError):
        renewable_revenue([1, 0], [1.1, 0], tariff, grid2)


def _decision(capacity, charge, discharge, energy, peak, v):
    return UserDecision(
        capacity=capacity,
        renewable_used=Z2.copy(),
        charge=np.asarray(charge, dtype=float),
        discharge=np.asarray(discharge, dtype=float),
        energy=np.asarray(energy, dtype=float),
        peak=peak,
        v=v,
    )


def test_net_cost_no_storage(tiny, tariff):
    d = _decision(0.0, Z2, Z2, np.zeros(3), 2.0, 0.86)
    assert user_net_cost(d, tiny["load"], tiny["renewable"], tariff, tiny["grid"], q=0.5) == pytest.approx(0.86)


def test_net_cost_with_dispatch(tiny, tariff):
    # x=1 at q=0.2 with the flattening dispatch: 0.2 + 0.46
    d = _decision(1.0, [0, 1], [1, 0], [1, 0, 1], 1.0, 0.46)
    got = user_net_cost(d, tiny["load"], tiny["renewable"], tariff, tiny["grid"], q=0.2)
    assert got == pytest.approx(0.66)


def test_net_cost_free_capacity(tiny, tariff):
    d = _decision(5.0, Z2, Z2, np.full(3, 2.0), 2.0, 0.86)
    got = user_net_cost(d, tiny["load"], tiny["renewable"], tariff, tiny["grid"], q=0.0)
    assert got == pytest.approx(0.86)


def test_decision_validate_accepts_good(tiny, tariff, tech):
    d = _decision(1.0, [0, 1], [1, 0], [1, 0, 1], 1.0, 0.46)
    assert d.validate(tiny["load"], tiny["renewable"], tariff, tech, tiny["grid"])


def test_decision_validate_rejects_broken_dynamics(tiny, tariff, tech):
    d = _decision(1.0, [0, 1], [1, 0], [1, 0.5, 1], 1.0, 0.46)
    with pytest.raises(ValidationError):
        d.validate(tiny["load"], tiny["renewable"], tariff, tech, tiny["grid"])


def test_decision_validate_rejects_nonperiodic(tiny, tariff, tech):
    d = _decision(2.0, [0, 1], Z2, [0, 0, 1], 2.0, 0.0)
    with pytest.raises(ValidationError):
        d.validate(tiny["load"], tiny["renewable"], tariff, tech, tiny["grid"])


def test_daily_peak_price_scaling():
    from vesshare.model import daily_peak_price

    # flat-peak simplification: one thirtieth of the monthly price
    assert daily_peak_price(10.8) == pytest.approx(0.36)
    # with real daily peaks: monthly bill == sum of daily bills
    peaks = np.array([1.5, 2.0, 1.8, 1.7])
    pd = daily_peak_price(10.8, daily_peaks=peaks)
    assert pd * peaks.sum() == pytest.approx(10.8 * peaks.max())
    with pytest.raises(DomainError):
        daily_peak_price(-1.0)


def test_capital_recovery_zero_rate():
    assert capital_recovery_factor(0.0, 10, 365) == pytest.approx(1.0 / 3650.0, rel=1e-12)


def test_capital_recovery_reference_value():
    # independently coded: annuity factor r / (1 - (1+r)^-y), spread per day
    r, y, d = 0.05, 15, 365
    expected = r / (1.0 - math.pow(1.0 + r, -y)) / d
    got = capital_recovery_factor(r, y, d)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(2.639e-4, rel=1e-3)


def test_capital_recovery_continuous_at_zero():
    lo = capital_recovery_factor(0.0, 10, 365)
    near = capital_recovery_factor(1e-9, 10, 365)
    assert abs(near - lo) / lo < 1e-9


def test_capital_recovery_domain_errors():
    with pytest.raises(DomainError):
        capital_recovery_factor(-0.1, 10, 365)
    with pytest.raises(DomainError):
        capital_recovery_factor(0.05, 0, 365)


def test_tariff_validation():
    with pytest.raises(DomainError):
        Tariff(pi_b=0.03, pi_p=0.4, pi_s=0.03)  # feed-in not below energy price
    with pytest.raises(DomainError):
        Tariff(pi_b=0.03, pi_p=-0.1, pi_s=0.01)


def test_storage_tech_validation():
    with pytest.raises(DomainError):
        StorageTech(eta_c=0.0)
    with pytest.raises(DomainError):
        StorageTech(gamma_min=0.9, gamma_max=0.9)
    with pytest.raises(DomainError):
        StorageTech(c_x=-1)


def test_time_grid_validation():
    with pytest.raises(DomainError):
        TimeGrid(T=0)
    with pytest.raises(DomainError):
        TimeGrid(T=4, slot_hours=0.0)


def test_scenario_rejects_negative_load():
    with pytest.raises(DomainError):
        Scenario(id="s", probability=0.5, loads={"u": np.array([-1.0, 0.0])}, renewables={})


def test_scenario_set_checks_probabilities(grid2):
    s1 = Scenario(id="a", probability=0.6, loads={"u": np.zeros(2)}, renewables={})
    s2 = Scenario(id="b", probability=0.6, loads={"u": np.zeros(2)}, renewables={})
    with pytest.raises(ValidationError):
        ScenarioSet(scenarios=(s1, s2), grid=grid2)


def test_scenario_set_checks_lengths(grid2):
    s1 = Scenario(id="a", probability=1.0, loads={"u": np.zeros(3)}, renewables={})
    with pytest.raises(DimensionError):
        ScenarioSet(scenarios=(s1,), grid=grid2)
