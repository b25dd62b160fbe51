import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vesshare.model import Scenario, ScenarioSet, StorageTech, Tariff, TimeGrid

# Micro tariff used throughout: energy 0.03, peak 0.4, feed-in 0.01.
MICRO_TARIFF = Tariff(pi_b=0.03, pi_p=0.4, pi_s=0.01)

# Lossless tech with the full energy window and the micro aggregator costs
# used in the cost-allocation examples.
MICRO_TECH = StorageTech(
    eta_c=1.0,
    eta_d=1.0,
    eta_a_c=1.0,
    eta_a_d=1.0,
    gamma_min=0.0,
    gamma_max=1.0,
    c_x=0.1,
    c_p=0.05,
    c_s=0.001,
    c_a_ch=0.0,
    c_a_dis=0.1,
    kappa=1.0,
)


@pytest.fixture
def grid2():
    return TimeGrid(T=2, slot_hours=1.0)


@pytest.fixture
def tariff():
    return MICRO_TARIFF


@pytest.fixture
def tech():
    return MICRO_TECH


@pytest.fixture
def tiny(grid2):
    """Single user, load [2, 0], no renewables."""
    return {
        "load": np.array([2.0, 0.0]),
        "renewable": np.array([0.0, 0.0]),
        "grid": grid2,
    }


@pytest.fixture
def tiny2_set(grid2):
    """Two mirrored users whose optimal dispatch cancels exactly."""
    scen = Scenario(
        id="s0",
        probability=1.0,
        loads={"A": np.array([2.0, 0.0]), "B": np.array([0.0, 2.0])},
        renewables={},
    )
    return ScenarioSet(scenarios=(scen,), grid=grid2, users=("A", "B"))


@pytest.fixture
def tiny2_model(tiny2_set):
    from vesshare.aggregator import SharingModel

    return SharingModel(tiny2_set, MICRO_TARIFF, MICRO_TECH)
