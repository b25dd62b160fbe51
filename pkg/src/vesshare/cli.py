"""Command-line front door.

    vesshare <command> [--config FILE] [--scenarios CSV] [--out DIR]

Commands: thresholds, sweep, op-price, lnp-price, benchmark, peak-report.
--scenarios and --out override the config file; a missing --config uses the
built-in defaults (the bundled tariff/technology parameters).

Exit codes: 0 success, 2 validation problem, 3 solver failure,
4 no price keeps the aggregator profit nonnegative.  Failures also print a
one-line JSON error record to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import (
    DimensionError,
    DomainError,
    NoViablePriceError,
    SolverFailureError,
    ValidationError,
    VesshareError,
)
from .pipeline import run_pipeline
from .scenario_io import ExperimentConfig

_COMMANDS = ("thresholds", "sweep", "op-price", "lnp-price", "benchmark", "peak-report")


def _error_record(exc, code):
    rec = {"error": type(exc).__name__, "exit": code, "message": str(exc)}
    print(json.dumps(rec), file=sys.stderr)
    return code


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="vesshare",
        description="Virtual energy-storage sharing experiments",
    )
    parser.add_argument("command", choices=_COMMANDS, help="experiment to run")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--scenarios", help="scenario CSV (overrides the config)")
    parser.add_argument("--out", help="output directory (overrides the config)")
    args = parser.parse_args(argv)

    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
        updates = {"experiments": (args.command,)}
        if args.scenarios:
            updates["scenarios"] = args.scenarios
        if args.out:
            updates["out_dir"] = args.out
        cfg = dataclasses.replace(cfg, **updates)
        cfg.validate()
        report = run_pipeline(cfg)
    except (ValidationError, DomainError, DimensionError) as exc:
        return _error_record(exc, 2)
    except NoViablePriceError as exc:
        return _error_record(exc, 4)
    except SolverFailureError as exc:
        return _error_record(exc, 3)
    except VesshareError as exc:
        return _error_record(exc, 1)

    for path in report.files:
        print(f"wrote {path}")
    if report.op_result is not None:
        r = report.op_result
        print(f"near-optimal-profit price {r.price:.9g} (profit {r.profit:.9g}, eps {r.eps:.3g})")
    if report.lnp_result is not None:
        r = report.lnp_result
        print(f"near-lowest-nonnegative-profit price {r.price:.9g} "
              f"(profit {r.profit:.3g}, case {r.case})")
    if report.peak is not None:
        print(f"peak reduction at q={report.peak.price:.9g}: "
              f"{report.peak.reduction_pct:.1f}% (noncoincident), "
              f"{report.peak.coincident_reduction_pct:.1f}% (coincident)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
