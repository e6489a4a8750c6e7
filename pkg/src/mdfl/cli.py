"""Command line entry point: ``python -m mdfl <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .output import write_table_csv
from .scenario import load_scenario, make_paper_room, save_scenario


def parse_counts(text: str) -> list[int]:
    """``"5:20"``, ``"5:20:3"`` (inclusive ranges) or ``"5,8,11"``."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",")]


def cmd_crlb_map(args) -> int:
    sc = load_scenario(args.scenario)
    res = ex.run_crlb_map(sc, args.mode, args.workers)
    paths = ex.write_crlb_map(res, args.out)
    print(json.dumps(res.summary()))
    print(f"wrote {paths['csv']}")
    return 0


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    res = ex.run_node_sweep(sc, parse_counts(args.nodes))
    path = ex.write_sweep(res, args.out)
    for n, k, names, v in res.rows():
        print(f"N={n:3d} surfaces={names:<12s} expected_rmse={v:.4g} m")
    print(f"wrote {path}")
    return 0


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    pos = np.array([args.user_x, args.user_y])
    (res,) = ex.run_monte_carlo_validation(sc, [pos], args.trials, args.seed, args.mode)
    row = [float(pos[0]), float(pos[1]), res.empirical_rmse, res.std_error, res.bound]
    header = ["x_m", "y_m", "empirical_rmse_m", "std_error_m", "rmse_bound_m"]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_table_csv(Path(args.out) / "simulate.csv", header, [row])
    print(",".join(header))
    print(",".join(f"{v:.9g}" for v in row))
    return 0


def cmd_associate(args) -> int:
    sc = load_scenario(args.scenario)
    run = ex.run_association(sc, args.seed, args.cutoff)
    matched = sum(len(r.pairs) for r in run.results)
    expected = sum(r.expected.size for r in run.results)
    print(f"links={len(run.results)} expected={expected} associated={matched}")
    if args.out:
        paths = ex.write_association(run, args.out)
        print(f"wrote {paths['report']}")
    return 0


def cmd_make_scenario(args) -> int:
    if args.kind != "paper-room":
        raise SystemExit(f"unknown scenario kind {args.kind!r}")
    save_scenario(make_paper_room(), args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdfl", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("crlb-map", help="RMSE bound over the scenario grid")
    c.add_argument("--scenario", required=True)
    c.add_argument("--mode", choices=ex.MODES, default="mdfl")
    c.add_argument("--out", required=True)
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_crlb_map)

    c = sub.add_parser("sweep", help="expected RMSE versus node count and surface subset")
    c.add_argument("--scenario", required=True)
    c.add_argument("--nodes", default="5:20:3")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_sweep)

    c = sub.add_parser("simulate", help="Monte-Carlo ML estimation at one user position")
    c.add_argument("--scenario", required=True)
    c.add_argument("--user-x", type=float, required=True)
    c.add_argument("--user-y", type=float, required=True)
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--mode", choices=ex.MODES, default="mdfl")
    c.add_argument("--out")
    c.set_defaults(func=cmd_simulate)

    c = sub.add_parser("associate", help="idle-channel initialization and data association")
    c.add_argument("--scenario", required=True)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--cutoff", type=float, default=None, help="meters; default c/B")
    c.add_argument("--out")
    c.set_defaults(func=cmd_associate)

    c = sub.add_parser("make-scenario", help="write a reference scenario file")
    c.add_argument("kind", choices=["paper-room"])
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_make_scenario)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
