"""Scenario CSV ingestion/emission and the flat experiment configuration.

Scenario CSV: header then one row per (scenario, user, slot):

    scenario_id,probability,user_id,slot_index,load_kw,renewable_kw

slot_index runs 1..T; the probability must repeat consistently within a
scenario; probabilities must sum to 1 within 1e-6 (they are renormalized to
machine precision after that check).

Config files are flat `key = value` lines with '#' comments; unknown keys
are rejected outright.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ScenarioParseError, ValidationError
from .model import Scenario, ScenarioSet, StorageTech, Tariff, TimeGrid, capital_recovery_factor

__all__ = ["load_scenarios", "write_scenarios", "ExperimentConfig"]

_COLUMNS = ["scenario_id", "probability", "user_id", "slot_index", "load_kw", "renewable_kw"]


def load_scenarios(path) -> ScenarioSet:
    """Parse and validate a scenario CSV into a ScenarioSet."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"scenario file not found: {path}")
    probs = {}
    series = {}  # (scenario, user) -> {slot: (load, ren)}
    order = []
    users_order = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ScenarioParseError("file is empty", line=1) from None
        if [h.strip() for h in header] != _COLUMNS:
            raise ScenarioParseError(
                f"expected header {','.join(_COLUMNS)}, got {','.join(header)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(_COLUMNS):
                raise ScenarioParseError(f"expected {len(_COLUMNS)} fields, got {len(row)}", lineno)
            sid, prob_s, uid, slot_s, load_s, ren_s = (v.strip() for v in row)
            try:
                prob = float(prob_s)
                slot = int(slot_s)
                load = float(load_s)
                ren = float(ren_s)
            except ValueError as exc:
                raise ScenarioParseError(str(exc), lineno) from None
            if slot < 1:
                raise ScenarioParseError(f"slot_index must be >= 1, got {slot}", lineno)
            if load < 0 or ren < 0:
                raise ScenarioParseError("load and renewable must be nonnegative", lineno)
            if sid in probs:
                if abs(probs[sid] - prob) > 1e-12:
                    raise ScenarioParseError(
                        f"scenario {sid} repeats with probability {prob} != {probs[sid]}", lineno
                    )
            else:
                probs[sid] = prob
                order.append(sid)
            if uid not in users_order:
                users_order.append(uid)
            key = (sid, uid)
            slots = series.setdefault(key, {})
            if slot in slots:
                raise ScenarioParseError(f"duplicate slot {slot} for {sid}/{uid}", lineno)
            slots[slot] = (load, ren)
    if not order:
        raise ScenarioParseError("file contains no data rows", line=2)

    lengths = {len(slots) for slots in series.values()}
    if len(lengths) != 1:
        raise ValidationError(f"inconsistent horizon lengths across series: {sorted(lengths)}")
    T = lengths.pop()
    for (sid, uid), slots in series.items():
        if sorted(slots) != list(range(1, T + 1)):
            raise ValidationError(f"series {sid}/{uid} does not cover slots 1..{T}")
    for sid in order:
        for uid in users_order:
            if (sid, uid) not in series:
                raise ValidationError(f"scenario {sid} is missing user {uid}")

    total = sum(probs.values())
    if abs(total - 1.0) > 1e-6:
        raise ValidationError(f"scenario probabilities sum to {total!r}, expected 1 within 1e-6")

    scenarios = []
    for sid in order:
        loads, rens = {}, {}
        for uid in users_order:
            slots = series[(sid, uid)]
            loads[uid] = np.array([slots[t][0] for t in range(1, T + 1)])
            rens[uid] = np.array([slots[t][1] for t in range(1, T + 1)])
        scenarios.append(
            Scenario(id=sid, probability=probs[sid] / total, loads=loads, renewables=rens)
        )
    return ScenarioSet(scenarios=tuple(scenarios), grid=TimeGrid(T=T), users=tuple(users_order))


def write_scenarios(sset: ScenarioSet, path):
    """Emit a ScenarioSet in the bundled CSV format (deterministic order,
    full float precision so a reload reproduces the values)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COLUMNS)
        for scen in sset.scenarios:
            for uid in sset.users:
                load = scen.load(uid)
                ren = scen.renewable(uid)
                for t in range(sset.grid.T):
                    writer.writerow([
                        scen.id,
                        f"{scen.probability:.17g}",
                        uid,
                        t + 1,
                        f"{load[t]:.17g}",
                        f"{ren[t]:.17g}",
                    ])
    return path


_EXPERIMENTS = ("thresholds", "sweep", "op-price", "lnp-price", "benchmark", "peak-report")


@dataclass
class ExperimentConfig:
    """Everything a pipeline run needs; mirrors the documented config keys."""

    scenarios: str = None
    out_dir: str = "out"
    slot_hours: float = 1.0
    pi_b: float = 0.03
    pi_p: float = 0.4
    pi_s: float = 0.01
    eta_c: float = 0.95
    eta_d: float = 0.95
    eta_a_c: float = 0.95
    eta_a_d: float = 0.95
    gamma_min: float = 0.9
    gamma_max: float = 1.0
    c_x: float = 160.0
    c_p: float = 55.0
    c_s: float = 0.001
    c_a_ch: float = 0.0
    c_a_dis: float = 0.1
    interest_rate: float = 0.05
    years: float = 15.0
    days_per_year: float = 365.0
    err1: float = 1e-3
    err2: float = 1e-3
    err3: float = 1e-4
    err4: float = 1e-4
    eps0: float = 3e-7
    sweep_points: int = 10
    sweep_min: float = None
    sweep_max: float = None
    peak_price: float = None
    benchmark_capacity_price: float = None  # defaults to the retail preset
    benchmark_rating_price: float = None
    experiments: tuple = _EXPERIMENTS

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in known:
                raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in ("scenarios", "out_dir"):
                values[key] = val
            elif key == "experiments":
                values[key] = tuple(v.strip() for v in val.split(",") if v.strip())
            elif key == "sweep_points":
                values[key] = int(val)
            else:
                try:
                    values[key] = float(val)
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: bad number {val!r} for {key}") from None
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("err1", "err2", "err3", "err4", "eps0"):
            if getattr(self, name) is None or getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not (0 < self.err1 < 1 and 0 < self.err2 < 1):
            raise ValidationError("err1 and err2 must be in (0, 1)")
        if self.sweep_points < 1:
            raise ValidationError("sweep_points must be >= 1")
        for exp in self.experiments:
            if exp not in _EXPERIMENTS:
                raise ValidationError(f"unknown experiment {exp!r}; pick from {_EXPERIMENTS}")
        if self.scenarios is not None and not Path(self.scenarios).exists():
            raise ValidationError(f"scenario file not found: {self.scenarios}")
        return self

    def tariff(self) -> Tariff:
        return Tariff(pi_b=self.pi_b, pi_p=self.pi_p, pi_s=self.pi_s)

    def tech(self) -> StorageTech:
        kappa = capital_recovery_factor(self.interest_rate, self.years, self.days_per_year)
        return StorageTech(
            eta_c=self.eta_c, eta_d=self.eta_d, eta_a_c=self.eta_a_c, eta_a_d=self.eta_a_d,
            gamma_min=self.gamma_min, gamma_max=self.gamma_max,
            c_x=self.c_x, c_p=self.c_p, c_s=self.c_s,
            c_a_ch=self.c_a_ch, c_a_dis=self.c_a_dis, kappa=kappa,
        )

    def benchmark_prices(self, tech):
        from .benchmark import retailer_prices

        cx, cp = retailer_prices(tech)
        if self.benchmark_capacity_price is not None:
            cx = self.benchmark_capacity_price
        if self.benchmark_rating_price is not None:
            cp = self.benchmark_rating_price
        return cx, cp
