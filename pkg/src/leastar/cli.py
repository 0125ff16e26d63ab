"""Command-line entry point: ``leastar {gen-world,build-graph,plan,bench,aggregate}``.

Exit codes: 0 success, 1 planner found no solution, 2 usage / input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

from . import bench
from .algorithms import PLANNERS, SOLVED, plan
from .roadmap import Roadmap, attach_query, build_roadmap
from .world import World, WorldBounds, sample_world

EXIT_OK, EXIT_NO_SOLUTION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _point(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _bounds(args) -> WorldBounds:
    return WorldBounds((args.lo,) * args.dim, (args.hi,) * args.dim)


def _add_bounds(p):
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leastar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-world", help="sample a random box world")
    _add_bounds(p)
    p.add_argument("--obstacles", type=int, default=8)
    p.add_argument("--size-min", type=float, default=0.02)
    p.add_argument("--size-max", type=float, default=0.08)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("build-graph", help="build a lazy r-disk roadmap (.json or binary)")
    _add_bounds(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plan", help="plan between two points")
    p.add_argument("--graph", required=True)
    p.add_argument("--world", required=True)
    p.add_argument("--start", type=_point, required=True)
    p.add_argument("--goal", type=_point, required=True)
    p.add_argument("--algo", choices=sorted(PLANNERS), default="lea")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--lookahead", type=int, default=4)

    p = sub.add_parser("bench", help="run a benchmark sweep")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON config file")
    src.add_argument("--preset", choices=sorted(bench.NAMED_CONFIGS))
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("aggregate", help="group a report's raw records")
    p.add_argument("--report", required=True)
    p.add_argument("--by", default=",".join(bench.DEFAULT_ROW_KEYS))
    p.add_argument("--out", default=None, help="CSV path; stdout if omitted")
    return parser


def _gen_world(args) -> int:
    world = sample_world(_bounds(args), args.obstacles, (args.size_min, args.size_max), args.seed)
    bench.write_atomic(args.out, world.to_json())
    print(f"wrote {len(world.obstacles)} obstacles to {args.out}", file=sys.stderr)
    return EXIT_OK


def _build_graph(args) -> int:
    rm = build_roadmap(_bounds(args), args.n, args.gamma, args.seed)
    rm.save(args.out)
    print(f"wrote N={rm.n} edges={rm.n_edges} radius={rm.radius:.6g} to {args.out}", file=sys.stderr)
    return EXIT_OK


def _plan(args) -> int:
    try:
        with open(args.world) as fh:
            world = World.from_json(fh.read())
        roadmap = Roadmap.load(args.graph)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read inputs: {exc}")
    if roadmap.dim != world.dim:
        raise UsageError("graph and world dimensions differ")
    try:
        roadmap, query = attach_query(roadmap, args.start, args.goal, world.bounds)
        result = plan(args.algo, roadmap, query, world, args.epsilon, args.lookahead)
    except ValueError as exc:
        raise UsageError(str(exc))
    result.seed = (world.seed, roadmap.seed)
    print(json.dumps(result.to_dict()))
    c = result.counters
    print(
        f"{args.algo}: {result.status} cost={result.cost:.6g} edge_evals={c.edge_evaluations} "
        f"expansions={c.vertex_expansions} pushes={c.queue_pushes} pops={c.queue_pops} "
        f"time={c.wall_time_ns / 1e6:.3f}ms",
        file=sys.stderr,
    )
    return EXIT_OK if result.status == SOLVED else EXIT_NO_SOLUTION


def _bench(args) -> int:
    try:
        if args.config:
            cfg = bench.BenchConfig.from_json_file(args.config)
        else:
            cfg = bench.named_config(args.preset)
        if args.seed is not None:
            cfg.master_seed = args.seed
        cfg.validate()
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"bad config: {exc}")
    os.makedirs(args.out, exist_ok=True)
    report = bench.run_benchmark(cfg, jobs=args.jobs)
    bench.write_atomic(os.path.join(args.out, "records.csv"), report.records_csv())
    bench.write_atomic(os.path.join(args.out, "report.json"), report.to_json())
    print("Avg. time (s)")
    print(bench.format_table(report.rows, "time_ns_mean", 1e-9, 4))
    print("\nEdge evaluations")
    print(bench.format_table(report.rows, "edge_evals_mean", 1.0, 2))
    failures = report.failures()
    if failures:
        print(f"{len(failures)} planner runs failed; see report.json", file=sys.stderr)
    return EXIT_OK


def _aggregate(args) -> int:
    try:
        report = bench.BenchmarkReport.load(args.report)
        rows = bench.aggregate(report, [k for k in args.by.split(",") if k])
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(str(exc))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        bench.write_atomic(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


COMMANDS = {
    "gen-world": _gen_world,
    "build-graph": _build_graph,
    "plan": _plan,
    "bench": _bench,
    "aggregate": _aggregate,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"leastar {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"leastar {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
