"""Deterministic synthetic scenario data bundled with the package.

Three users, seven scenarios, 24 hourly slots: a commercial-style user
with noon-peaked load and night-heavy wind, and two residential users with
morning/evening load peaks and noon solar.  The shapes mirror the kind of
complementary profiles that make demand netting worthwhile; the numbers
themselves are synthetic (the original utility/observatory data is not
redistributable) and come from a fixed seed, so the emitted CSV is
byte-stable.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .model import Scenario, ScenarioSet, TimeGrid
from .scenario_io import write_scenarios

__all__ = ["bundled_scenario_set", "bundled_path", "main"]

SEED = 20240917
PROBS = (0.18, 0.17, 0.16, 0.15, 0.13, 0.11, 0.10)


def _bell(t, mu, sig):
    return np.exp(-0.5 * ((t - mu) / sig) ** 2)


def bundled_scenario_set() -> ScenarioSet:
    rng = np.random.default_rng(SEED)
    t = np.arange(24) + 0.5
    solar_shape = np.clip(np.sin(np.pi * (t - 6.0) / 13.0), 0.0, None) ** 1.5
    wind_shape = 0.35 + 0.65 * _bell((t + 10.0) % 24.0, 12.0, 4.5)  # night-heavy

    scenarios = []
    for k, rho in enumerate(PROBS):
        load_scale = rng.uniform(0.8, 1.25, size=3)
        wind_scale = rng.uniform(0.35, 1.25)
        cloud = rng.uniform(0.45, 1.1, size=2)
        jitter = rng.uniform(0.92, 1.08, size=(3, 24))

        commercial = (0.45 + 1.7 * _bell(t, 12.5, 2.6)) * load_scale[0] * jitter[0]
        home_a = (
            0.22 + 0.85 * _bell(t, 7.8, 1.4) + 1.15 * _bell(t, 19.4, 1.9)
        ) * load_scale[1] * jitter[1]
        home_b = (
            0.28 + 0.7 * _bell(t, 8.6, 1.6) + 1.3 * _bell(t, 20.3, 1.7)
        ) * load_scale[2] * jitter[2]

        wind = 1.15 * wind_shape * wind_scale * rng.uniform(0.85, 1.15, size=24)
        solar_a = 1.35 * solar_shape * cloud[0]
        solar_b = 1.2 * solar_shape * cloud[1]

        scenarios.append(
            Scenario(
                id=f"d{k + 1}",
                probability=rho,
                loads={
                    "commercial": np.round(commercial, 4),
                    "home_a": np.round(home_a, 4),
                    "home_b": np.round(home_b, 4),
                },
                renewables={
                    "commercial": np.round(np.clip(wind, 0.0, None), 4),
                    "home_a": np.round(np.clip(solar_a, 0.0, None), 4),
                    "home_b": np.round(np.clip(solar_b, 0.0, None), 4),
                },
            )
        )
    return ScenarioSet(
        scenarios=tuple(scenarios),
        grid=TimeGrid(T=24, slot_hours=1.0),
        users=("commercial", "home_a", "home_b"),
    )


def bundled_path() -> Path:
    return Path(__file__).parent / "data" / "scenarios_3x7.csv"


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    out = Path(argv[0]) if argv else bundled_path()
    out.parent.mkdir(parents=True, exist_ok=True)
    write_scenarios(bundled_scenario_set(), out)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
