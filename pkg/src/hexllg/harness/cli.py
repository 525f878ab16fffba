"""Command-line entry point: ``simulate``, ``verify``, ``convergence`` and ``resample``.

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..dynamics import IntegrationError
from ..interpolation import grid_points, p_interp, q_interp, sample_to_grid
from ..model import ConfigurationError
from . import io
from .config import ConfigError, read_config

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = 3


def _cmd_simulate(args) -> int:
    from .simulate import run_simulate

    config = read_config(args.config)
    result = run_simulate(config, args.out)
    out = args.out or config.outputs["directory"]
    series = result.monitors
    print(f"simulated {result.lattice.num_nodes} nodes to t*={result.final.t_star:g} "
          f"in {result.final.step_count} steps (dt={result.dt:.4g})")
    print(f"H*: {series.energy_star[0]:.10g} -> {series.energy_star[-1]:.10g}")
    print(f"wrote {len(result.snapshots)} snapshot(s), series.csv and run.json to {out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_verify

    report = run_verify(args.lattice[0], args.lattice[1], args.h, args.seed, args.trials,
                        corrupt=args.corrupt_neighbors, orders=not args.skip_orders)
    payload = report.to_dict()
    if args.report:
        io.write_json(args.report, payload)
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for c in report.checks:
            mark = "PASS" if c.passed else "FAIL"
            print(f"{mark}  {c.name:<42} residual {c.residual:.3e}  tol {c.tolerance:.0e}")
        for o in report.orders:
            mark = "PASS" if o.passed else "FAIL"
            print(f"{mark}  order {o.name:<36} fitted {o.order:.3f}  need >= {o.target}")
        print(f"{'all identities pass' if report.passed else 'FAILURES: ' + ', '.join(report.failures())}"
              f" ({report.seconds:.2f} s)")
    return EXIT_OK if report.passed else EXIT_VERIFICATION


def _cmd_convergence(args) -> int:
    from .convergence import run_convergence

    config = read_config(args.config)
    result = run_convergence(config, args.out, log=print)
    rep = result.report
    for lvl in rep["levels"]:
        cont = ", ".join(f"{d:.3e}" for d in lvl["l2_to_continuum"])
        print(f"h={lvl['h']:<8g} to continuum: [{cont}]")
        if lvl["l2_to_next"]:
            nxt = ", ".join(f"{d:.3e}" for d in lvl["l2_to_next"])
            print(f"{'':10} to next:       [{nxt}]")
    mono = rep["monotone"]
    print(f"strictly decreasing: to continuum {mono['to_continuum']}, self {mono['self']}")
    return EXIT_OK if result.passed else EXIT_VERIFICATION


def _cmd_resample(args) -> int:
    snap = io.read_snapshot(args.snapshot)
    lat = snap.infer_lattice()
    view = (p_interp if args.kind == "linear" else q_interp)(lat, snap.m)
    grid = sample_to_grid(view, args.nx, args.ny)
    out = Path(args.out) if args.out else Path(args.snapshot).with_name(
        Path(args.snapshot).stem + "_grid.csv")
    io.write_grid(out, grid_points(grid.periods, args.nx, args.ny), grid.values)
    print(f"resampled {lat.num_nodes} nodes (n1={lat.n1}, n2={lat.n2}, h={lat.h:g}) "
          f"onto {args.nx}x{args.ny} grid -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hexllg", description="Honeycomb-lattice LLG simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one lattice from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: outputs.directory)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="run the identity suite on seeded random fields")
    p.add_argument("--lattice", nargs=2, type=int, default=(4, 4), metavar=("N1", "N2"))
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--corrupt-neighbors", action="store_true",
                   help="negative control: scramble one second-neighbour column")
    p.add_argument("--skip-orders", action="store_true", help="skip the consistency-order fits")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("convergence", help="run a refinement ladder against the continuum")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: outputs.directory)")
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("resample", help="sample a snapshot's interpolant on a regular grid")
    p.add_argument("snapshot")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--kind", choices=("linear", "step"), default="linear")
    p.add_argument("--out", help="output CSV (default: <snapshot>_grid.csv)")
    p.set_defaults(func=_cmd_resample)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError, io.SnapshotFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
