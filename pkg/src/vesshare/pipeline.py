"""Experiment orchestration and CSV emission.

run_pipeline drives the whole study from one config: thresholds for every
(user, scenario), a price sweep, the two price searches, the own-storage
benchmark, and the peak report.  Everything lands in plot-ready CSV files
with a fixed column order and floats at 9 significant digits, so identical
inputs produce byte-identical reports.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aggregator import SharingModel, _limiting_point, search_lnp_price, search_op_price
from .benchmark import solve_benchmark
from .errors import ValidationError
from .scenario_io import ExperimentConfig, load_scenarios

__all__ = ["PeakReport", "ExperimentReport", "emit_peak_report", "run_pipeline"]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return Path(path)


@dataclass
class PeakReport:
    """Aggregate net load before/after the limiting dispatch at one price.

    slot_rows: (scenario_id, slot, original_kw, post_kw) with the aggregate
    (coincident) net load summed over users; user_rows: per-user billed
    peaks before/after.  Two summary peak metrics, both probability-
    weighted across scenarios:

    * coincident: peak of the summed net-load series,
    * noncoincident: sum of the users' individual billed peaks (what the
      demand-charge tariff actually prices).

    reduction_pct is the noncoincident reduction.
    """

    price: float
    slot_rows: tuple
    user_rows: tuple
    coincident_original: float
    coincident_post: float
    noncoincident_original: float
    noncoincident_post: float

    @property
    def coincident_reduction_pct(self):
        if self.coincident_original <= 0:
            return 0.0
        return 100.0 * (1.0 - self.coincident_post / self.coincident_original)

    @property
    def reduction_pct(self):
        if self.noncoincident_original <= 0:
            return 0.0
        return 100.0 * (1.0 - self.noncoincident_post / self.noncoincident_original)


def emit_peak_report(model: SharingModel, price) -> PeakReport:
    """Original vs post-dispatch aggregate net load at a non-threshold
    price (the limiting dispatch of the price's interval)."""
    point = _limiting_point(model, price)
    sset = model.scenario_set
    rho = model.probabilities
    users = model.users
    slot_rows = []
    user_rows = []
    co_orig = co_post = nc_orig = nc_post = 0.0
    for s, scen in enumerate(sset.scenarios):
        orig = np.zeros(sset.grid.T)
        post = np.zeros(sset.grid.T)
        for i, u in enumerate(users):
            load = scen.load(u)
            ren = scen.renewable(u)
            orig += load - ren
            prof = model.profile(u, s)
            dec = prof.dispatch[prof.interval_of(price)]
            draw = dec.grid_draw(load)
            post += draw - (ren - dec.renewable_used)
            base_peak = float(np.max(load - np.minimum(load, ren)))
            user_rows.append((scen.id, u, base_peak, dec.peak))
            nc_orig += rho[s] * base_peak
            nc_post += rho[s] * dec.peak
        for t in range(sset.grid.T):
            slot_rows.append((scen.id, t + 1, float(orig[t]), float(post[t])))
        co_orig += rho[s] * float(np.max(orig))
        co_post += rho[s] * float(np.max(post))
    return PeakReport(
        price=float(price),
        slot_rows=tuple(slot_rows),
        user_rows=tuple(user_rows),
        coincident_original=co_orig,
        coincident_post=co_post,
        noncoincident_original=nc_orig,
        noncoincident_post=nc_post,
    )


@dataclass
class ExperimentReport:
    """In-memory results of a pipeline run plus the files written."""

    model: SharingModel
    thresholds: dict = None
    sweep_rows: tuple = None
    op_result: object = None
    lnp_result: object = None
    benchmarks: tuple = None
    peak: PeakReport = None
    files: tuple = ()


def _search_rows(res):
    return [(
        res.price, res.eps, res.capacity, res.rating, res.revenue, res.cost,
        res.profit, res.sold, res.capacity_reduction_pct,
        res.case or "", res.flag or "",
    )]


def _sweep_prices(model, cfg):
    th = model.thresholds()
    positive = th[th > 0]
    lo = cfg.sweep_min if cfg.sweep_min is not None else max(1e-3, 0.25 * positive.min())
    hi = cfg.sweep_max if cfg.sweep_max is not None else 1.05 * positive.max()
    qs = np.linspace(lo, hi, cfg.sweep_points)
    # nudge sweep points off thresholds, where capacity is set-valued
    for i, q in enumerate(qs):
        if np.min(np.abs(th - q)) < 1e-7:
            qs[i] = q + 1e-6 * (1.0 + q)
    return qs


def run_pipeline(config: ExperimentConfig) -> ExperimentReport:
    """Execute the configured experiments and write their CSV reports."""
    config.validate()
    if config.scenarios is None:
        raise ValidationError("config does not name a scenario file")
    sset = load_scenarios(config.scenarios)
    tariff = config.tariff()
    tech = config.tech()
    model = SharingModel(sset, tariff, tech)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = ExperimentReport(model=model)
    files = []

    if "thresholds" in config.experiments:
        rows = []
        profs = {}
        for s, scen in enumerate(sset.scenarios):
            for u in sset.users:
                prof = model.profile(u, s)
                profs[(u, scen.id)] = prof
                for k in range(len(prof.prices)):
                    rows.append((u, scen.id, k, prof.prices[k], prof.capacities[k]))
        report.thresholds = profs
        files.append(_write_csv(
            out / "thresholds.csv",
            ["user_id", "scenario_id", "step", "threshold_price", "capacity_kwh"],
            rows,
        ))

    if "sweep" in config.experiments:
        rows = []
        for q in _sweep_prices(model, config):
            point = _limiting_point(model, float(q))
            rows.append((
                point.q, point.sold, point.allocation.capacity, point.allocation.rating,
                point.revenue, point.cost, point.profit,
                *[point.user_costs[u] for u in sset.users],
            ))
        report.sweep_rows = tuple(rows)
        files.append(_write_csv(
            out / "sweep.csv",
            ["q", "sold_kwh", "phys_capacity_kwh", "phys_rating_kw", "revenue", "cost", "profit"]
            + [f"user_cost_{u}" for u in sset.users],
            rows,
        ))

    search_header = [
        "q", "eps", "phys_capacity_kwh", "phys_rating_kw", "revenue", "cost",
        "profit", "sold_kwh", "capacity_reduction_pct", "case", "flag",
    ]
    if "op-price" in config.experiments:
        res = search_op_price(model, config.err1, config.err2, config.eps0)
        report.op_result = res
        files.append(_write_csv(out / "op_price.csv", search_header, _search_rows(res)))
        files.append(_write_csv(
            out / "op_price_trace.csv", ["iteration", "eps", "profit"],
            [(i + 1, e, p) for i, (e, p) in enumerate(res.trace)],
        ))

    if "lnp-price" in config.experiments:
        res = search_lnp_price(model, config.err3, config.err4, config.eps0)
        report.lnp_result = res
        files.append(_write_csv(out / "lnp_price.csv", search_header, _search_rows(res)))
        files.append(_write_csv(
            out / "lnp_price_trace.csv", ["iteration", "eps", "profit"],
            [(i + 1, e, p) for i, (e, p) in enumerate(res.trace)],
        ))

    if "benchmark" in config.experiments:
        cx, cp = config.benchmark_prices(tech)
        results = []
        rows = []
        for u in sset.users:
            loads = np.array([sc.load(u) for sc in sset.scenarios])
            rens = np.array([sc.renewable(u) for sc in sset.scenarios])
            res = solve_benchmark(
                loads, rens, sset.probabilities, tariff, tech, sset.grid, cx, cp, user=u
            )
            results.append(res)
            rows.append((
                u, res.capacity, res.rating, res.expected_cost, res.capital_cost,
                res.energy_cost, res.cycling_cost, res.feed_in_revenue,
            ))
        report.benchmarks = tuple(results)
        files.append(_write_csv(
            out / "benchmark.csv",
            ["user_id", "capacity_kwh", "rating_kw", "expected_cost", "capital_cost",
             "energy_cost", "cycling_cost", "feed_in_revenue"],
            rows,
        ))

    if "peak-report" in config.experiments:
        price = config.peak_price
        if price is None:
            res = report.lnp_result or search_lnp_price(model, config.err3, config.err4, config.eps0)
            price = res.price
        peak = emit_peak_report(model, price)
        report.peak = peak
        files.append(_write_csv(
            out / "peak_report.csv",
            ["scenario_id", "slot", "original_kw", "post_kw"],
            peak.slot_rows,
        ))
        files.append(_write_csv(
            out / "peak_summary.csv",
            ["metric", "original_kw", "post_kw", "reduction_pct"],
            [
                ("coincident_peak", peak.coincident_original, peak.coincident_post,
                 peak.coincident_reduction_pct),
                ("noncoincident_peak", peak.noncoincident_original, peak.noncoincident_post,
                 peak.reduction_pct),
            ],
        ))

    report.files = tuple(files)
    return report
