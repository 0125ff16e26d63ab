"""Benchmark sweeps: worlds x roadmaps x queries x planners x inflation factors.

Seed derivation. Every random object gets its own 64-bit seed
``derive_seed(master, *key) = SeedSequence(master, spawn_key=key).generate_state(1, uint64)[0]``:

* roadmap for graph size index ``i``:            key ``(0, i)``
* world for preset index ``p``, environment ``e``: key ``(1, p, e)``
* queries for ``(i, p, e)``:                       key ``(2, i, p, e)``

Worlds do not depend on the graph size and roadmaps do not depend on the
world, so one roadmap per size is shared by all environments. Query
vertices are drawn without replacement from the roadmap vertices lying in
free space. Results therefore do not depend on scheduling order or ``jobs``.
"""

from __future__ import annotations

import csv
import gc
import io
import json
import logging
import math
import os
import statistics
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np

from .algorithms import NO_SOLUTION, PLANNERS, EvaluatedGraph, dijkstra_oracle, plan
from .core import EdgeEvaluator
from .roadmap import Query, Roadmap, build_roadmap
from .world import World, WorldBounds, sample_world

log = logging.getLogger(__name__)

ERROR = "Error"

CSV_FIELDS = (
    "algorithm", "epsilon", "N", "obstacles", "env_seed", "query_idx", "status", "cost",
    "edge_evals", "vertex_expansions", "queue_pushes", "queue_pops", "time_ns",
)
COUNT_FIELDS = ("status", "edge_evals", "vertex_expansions", "queue_pushes", "queue_pops")
GROUP_KEYS = ("algorithm", "epsilon", "N", "obstacles", "env_seed", "query_idx", "status")
METRICS = ("time_ns", "edge_evals", "vertex_expansions", "queue_pushes", "queue_pops", "cost")
DEFAULT_ROW_KEYS = ("algorithm", "epsilon", "N", "obstacles")


def derive_seed(master: int, *key: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ObstaclePreset:
    name: str
    obstacles: int
    size_range: tuple[float, float] = (0.02, 0.08)


SPARSE_MEDIUM_CLUTTERED = (
    ObstaclePreset("sparse", 8),
    ObstaclePreset("medium", 18),
    ObstaclePreset("cluttered", 28),
)
# alternative counts for the medium and cluttered presets
SPARSE_MEDIUM_CLUTTERED_ALT = (
    ObstaclePreset("sparse", 8),
    ObstaclePreset("medium", 16),
    ObstaclePreset("cluttered", 24),
)


@dataclass
class BenchConfig:
    graph_sizes: tuple[int, ...] = (200, 1000, 5000)
    presets: tuple[ObstaclePreset, ...] = SPARSE_MEDIUM_CLUTTERED
    envs: int = 5
    queries: int = 20
    epsilons: tuple[float, ...] = (1.0, 1.5, 2.0, 2.5)
    algorithms: tuple[str, ...] = ("astar", "lwa", "lea", "lazysp", "lra")
    master_seed: int = 0
    lookahead: int = 4
    dims: int = 2
    lo: float = 0.0
    hi: float = 1.0
    gamma: float | None = None
    oracle: bool = True
    warmup: bool = True
    keep_expanded: bool = False

    def __post_init__(self):
        self.graph_sizes = tuple(int(n) for n in self.graph_sizes)
        self.presets = tuple(p if isinstance(p, ObstaclePreset) else ObstaclePreset(**p) for p in self.presets)
        self.presets = tuple(
            ObstaclePreset(p.name, int(p.obstacles), tuple(float(x) for x in p.size_range)) for p in self.presets
        )
        self.epsilons = tuple(float(e) for e in self.epsilons)
        self.algorithms = tuple(self.algorithms)
        self.validate()

    def validate(self) -> None:
        if not self.graph_sizes or any(n < 2 for n in self.graph_sizes):
            raise ValueError("graph_sizes must be a non-empty list of sizes >= 2")
        if not self.presets:
            raise ValueError("at least one obstacle preset is required")
        if any(p.obstacles < 0 for p in self.presets):
            raise ValueError("obstacle counts must be non-negative")
        if self.envs < 1 or self.queries < 1:
            raise ValueError("envs and queries must be at least 1")
        if not self.epsilons or any(not e >= 1.0 for e in self.epsilons):
            raise ValueError("epsilons must be a non-empty list of values >= 1")
        if not self.algorithms:
            raise ValueError("algorithm list is empty")
        unknown = [a for a in self.algorithms if a not in PLANNERS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; valid: {sorted(PLANNERS)}")
        if self.lookahead < 1:
            raise ValueError("lookahead must be at least 1")
        if self.dims < 2 or not self.lo < self.hi:
            raise ValueError("need dims >= 2 and lo < hi")

    @property
    def bounds(self) -> WorldBounds:
        return WorldBounds((self.lo,) * self.dims, (self.hi,) * self.dims)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["presets"] = [asdict(p) for p in self.presets]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "BenchConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


NAMED_CONFIGS = {
    "smoke": dict(graph_sizes=(200,), envs=1, queries=3, epsilons=(1.0, 2.0)),
    "desk": dict(graph_sizes=(200, 1000, 5000), envs=5, queries=20),
    "desk-replica": dict(graph_sizes=(200, 1000), envs=10, queries=50),
    "full": dict(graph_sizes=(200, 1000, 5000, 10000, 20000), envs=10, queries=50),
    "full-alt-presets": dict(
        graph_sizes=(200, 1000, 5000, 10000, 20000), envs=10, queries=50, presets=SPARSE_MEDIUM_CLUTTERED_ALT
    ),
}


def named_config(name: str, **overrides) -> BenchConfig:
    if name not in NAMED_CONFIGS:
        raise KeyError(f"unknown named config {name!r}; choose from {sorted(NAMED_CONFIGS)}")
    return BenchConfig(**{**NAMED_CONFIGS[name], **overrides})


@dataclass
class RawRecord:
    algorithm: str
    epsilon: float
    N: int
    obstacles: int
    env_seed: int
    query_idx: int
    status: str
    cost: float
    edge_evals: int
    vertex_expansions: int
    queue_pushes: int
    queue_pops: int
    time_ns: int
    expanded: frozenset | None = field(default=None, compare=False, repr=False)
    error: str | None = field(default=None, compare=False, repr=False)

    def csv_row(self) -> list:
        return [getattr(self, k) for k in CSV_FIELDS]

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in CSV_FIELDS}
        d["cost"] = d["cost"] if math.isfinite(d["cost"]) else None
        if self.error:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RawRecord":
        vals = {k: d[k] for k in CSV_FIELDS}
        vals["cost"] = math.inf if vals["cost"] is None else float(vals["cost"])
        return cls(**vals, error=d.get("error"))


@dataclass
class Instance:
    N: int
    obstacles: int
    preset: str
    env_seed: int
    query_idx: int
    start: int
    goal: int
    oracle_cost: float | None

    def key(self) -> tuple:
        return (self.N, self.obstacles, self.env_seed, self.query_idx)


@dataclass
class BenchmarkReport:
    config: BenchConfig
    records: list[RawRecord]
    instances: list[Instance]
    rows: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if not self.rows and self.records:
            self.rows = aggregate(self, DEFAULT_ROW_KEYS)

    def failures(self) -> list[RawRecord]:
        return [r for r in self.records if r.status == ERROR]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "instances": [asdict(i) for i in self.instances],
            "records": [r.to_dict() for r in self.records],
            "rows": self.rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkReport":
        report = cls(
            BenchConfig.from_dict(data["config"]),
            [RawRecord.from_dict(r) for r in data["records"]],
            [Instance(**i) for i in data["instances"]],
            rows=data["rows"],
        )
        fresh = aggregate(report, DEFAULT_ROW_KEYS)
        if json.loads(json.dumps(fresh)) != data["rows"]:
            raise ValueError("report rows do not match its raw records")
        return report

    @classmethod
    def load(cls, path) -> "BenchmarkReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def records_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.records:
            w.writerow(r.csv_row())
        return buf.getvalue()


# -- sweep -------------------------------------------------------------

@lru_cache(maxsize=8)
def _roadmap(bounds: WorldBounds, n: int, gamma, seed: int) -> Roadmap:
    rm = build_roadmap(bounds, n, gamma, seed)
    rm.adjacency  # materialise outside any timed region
    rm.points
    return rm


def sample_queries(roadmap: Roadmap, world: World, count: int, seed: int) -> list[Query]:
    free = [i for i, p in enumerate(roadmap.points) if not world.point_in_collision(p)]
    if len(free) < 2:
        return []
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    out = []
    for _ in range(count):
        s, g = rng.choice(len(free), size=2, replace=False)
        out.append(Query(free[int(s)], free[int(g)]))
    return out


def _run_one(cfg: BenchConfig, name: str, roadmap, query, world, eps):
    evaluator = EdgeEvaluator(world, roadmap)
    # like timeit: cyclic GC pauses scale with unrelated live objects, not the planner
    enabled = gc.isenabled()
    gc.disable()
    try:
        return plan(name, roadmap, query, world, eps, cfg.lookahead, evaluator)
    finally:
        if enabled:
            gc.enable()


def _run_cell(cfg: BenchConfig, i: int, p: int, e: int):
    bounds = cfg.bounds
    preset = cfg.presets[p]
    n = cfg.graph_sizes[i]
    roadmap = _roadmap(bounds, n, cfg.gamma, derive_seed(cfg.master_seed, 0, i))
    env_seed = derive_seed(cfg.master_seed, 1, p, e)
    world = sample_world(bounds, preset.obstacles, preset.size_range, env_seed)
    queries = sample_queries(roadmap, world, cfg.queries, derive_seed(cfg.master_seed, 2, i, p, e))
    evaluated = EvaluatedGraph(roadmap, world) if cfg.oracle else None
    if cfg.warmup and queries:
        for name in cfg.algorithms:
            try:
                _run_one(cfg, name, roadmap, queries[0], world, cfg.epsilons[0])
            except Exception:
                pass
    records, instances = [], []
    for qi, query in enumerate(queries):
        oracle_cost = None
        if evaluated is not None:
            o = dijkstra_oracle(roadmap, query, world, evaluated)
            oracle_cost = o.cost if o.solved else None
        instances.append(Instance(n, preset.obstacles, preset.name, env_seed, qi, query.start, query.goal, oracle_cost))
        for eps in cfg.epsilons:
            for name in cfg.algorithms:
                try:
                    r = _run_one(cfg, name, roadmap, query, world, eps)
                except Exception as exc:  # recorded, never fatal for the sweep
                    log.warning("planner %s failed on N=%d o=%d env=%d q=%d: %s",
                                name, n, preset.obstacles, env_seed, qi, exc)
                    records.append(RawRecord(name, eps, n, preset.obstacles, env_seed, qi, ERROR,
                                             math.inf, 0, 0, 0, 0, 0, error=traceback.format_exc(limit=3)))
                    continue
                c = r.counters
                records.append(RawRecord(
                    name, eps, n, preset.obstacles, env_seed, qi, r.status, r.cost,
                    c.edge_evaluations, c.vertex_expansions, c.queue_pushes, c.queue_pops, c.wall_time_ns,
                    expanded=r.expanded if cfg.keep_expanded else None,
                ))
    return records, instances


def run_benchmark(config: BenchConfig, jobs: int = 1) -> BenchmarkReport:
    """Run the full cross product described by ``config``."""
    config.validate()
    cells = [
        (i, p, e)
        for i in range(len(config.graph_sizes))
        for p in range(len(config.presets))
        for e in range(config.envs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_run_cell, [config] * len(cells), *zip(*cells)))
    else:
        outs = [_run_cell(config, *c) for c in cells]
    records, instances = [], []
    for recs, insts in outs:
        records.extend(recs)
        instances.extend(insts)
    return BenchmarkReport(config, records, instances)


# -- aggregation -------------------------------------------------------

def _stats(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "median": None, "std": None}
    return {
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "std": statistics.stdev(values) if len(values) > 1 else 0.0,
    }


def aggregate(report: BenchmarkReport | list[RawRecord], group_keys=DEFAULT_ROW_KEYS) -> list[dict]:
    """Group raw records and summarise every metric over the solved ones.

    Unsolved and failed records only show up in the ``n_unsolved`` and
    ``n_failed`` columns. Rows are sorted by their group values.
    """
    records = report.records if isinstance(report, BenchmarkReport) else list(report)
    if not records:
        raise ValueError("cannot aggregate an empty report")
    group_keys = tuple(group_keys)
    bad = [k for k in group_keys if k not in GROUP_KEYS]
    if bad:
        raise ValueError(f"unknown group keys {bad}; valid: {list(GROUP_KEYS)}")
    groups: dict[tuple, list[RawRecord]] = {}
    for r in records:
        groups.setdefault(tuple(getattr(r, k) for k in group_keys), []).append(r)
    rows = []
    for key in sorted(groups):
        members = groups[key]
        solved = [r for r in members if r.status not in (NO_SOLUTION, ERROR)]
        row = dict(zip(group_keys, key))
        row["n"] = len(members)
        row["n_solved"] = len(solved)
        row["n_unsolved"] = sum(r.status == NO_SOLUTION for r in members)
        row["n_failed"] = sum(r.status == ERROR for r in members)
        for m in METRICS:
            for stat, value in _stats([float(getattr(r, m)) for r in solved]).items():
                row[f"{m}_{stat}"] = value
        rows.append(row)
    return rows


def trend_report(report: BenchmarkReport | list[RawRecord]) -> dict:
    """Relative time / cost change against the smallest epsilon, and LEA*-to-LazySP evaluation ratios."""
    records = report.records if isinstance(report, BenchmarkReport) else list(report)
    eps_values = sorted({r.epsilon for r in records})
    if len(eps_values) < 2:
        raise ValueError("trend report needs at least two epsilon values")
    base = eps_values[0]
    rows = {(row["algorithm"], row["epsilon"]): row for row in aggregate(records, ("algorithm", "epsilon"))}

    def rel(a, b):
        if a is None or b is None or b == 0:
            return None
        return a / b - 1.0

    per_algorithm = {}
    for alg in sorted({r.algorithm for r in records}):
        ref = rows.get((alg, base))
        entry = {}
        for eps in eps_values:
            row = rows.get((alg, eps))
            if row is None or ref is None:
                continue
            entry[eps] = {
                "relative_time": rel(row["time_ns_mean"], ref["time_ns_mean"]),
                "relative_cost": rel(row["cost_mean"], ref["cost_mean"]),
                "relative_edge_evals": rel(row["edge_evals_mean"], ref["edge_evals_mean"]),
                "mean_edge_evals": row["edge_evals_mean"],
                "mean_cost": row["cost_mean"],
                "mean_time_ns": row["time_ns_mean"],
            }
        per_algorithm[alg] = entry

    def ratios(rowmap, keyfn):
        out = {}
        for eps in eps_values:
            lea = rowmap.get(keyfn("lea", eps))
            lsp = rowmap.get(keyfn("lazysp", eps))
            if lea and lsp and lsp["edge_evals_mean"]:
                out[eps] = lea["edge_evals_mean"] / lsp["edge_evals_mean"]
        return out

    by_obs = {}
    obs_rows = {
        (row["algorithm"], row["epsilon"], row["obstacles"]): row
        for row in aggregate(records, ("algorithm", "epsilon", "obstacles"))
    }
    for o in sorted({r.obstacles for r in records}):
        by_obs[o] = ratios(obs_rows, lambda a, e, o=o: (a, e, o))
    return {
        "base_epsilon": base,
        "algorithms": per_algorithm,
        "lea_over_lazysp": ratios(rows, lambda a, e: (a, e)),
        "lea_over_lazysp_by_obstacles": by_obs,
    }


def format_table(rows: list[dict], metric: str = "time_ns_mean", scale: float = 1.0, digits: int = 4) -> str:
    """Planner-by-(N, obstacles) grid of one metric, one line per (algorithm, epsilon)."""
    cols = sorted({(r["N"], r["obstacles"]) for r in rows})
    lines = {}
    for r in rows:
        lines.setdefault((r["epsilon"], r["algorithm"]), {})[(r["N"], r["obstacles"])] = r.get(metric)
    head = f"{'':22}" + "".join(f"{f'N={n} o={o}':>16}" for n, o in cols)
    out = [head]
    for (eps, alg) in sorted(lines):
        cells = []
        for c in cols:
            v = lines[(eps, alg)].get(c)
            cells.append(f"{'-':>16}" if v is None else f"{v * scale:>16.{digits}f}")
        out.append(f"{alg + f' (eps={eps:g})':22}" + "".join(cells))
    return "\n".join(out)


def write_atomic(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
