from dataclasses import dataclass
from functools import lru_cache

import pytest

from leastar.algorithms import EvaluatedGraph, dijkstra_oracle
from leastar.bench import derive_seed, sample_queries
from leastar.roadmap import Query, Roadmap, build_roadmap, roadmap_from_edges
from leastar.world import World, WorldBounds, sample_world

UNIT = WorldBounds.unit(2)


@dataclass(frozen=True)
class Case:
    roadmap: Roadmap
    world: World
    query: Query
    oracle_cost: float | None
    label: str


@lru_cache(maxsize=None)
def random_suite(n=200, worlds=20, queries=10, seed=7, size_range=(0.04, 0.16)):
    """``worlds * queries`` instances on one roadmap with oracle costs attached.

    The boxes are larger than the benchmark presets so that most searches hit
    obstacles at this graph size.
    """
    roadmap = build_roadmap(UNIT, n, seed=derive_seed(seed, 0))
    cases = []
    for k in range(worlds):
        world = sample_world(UNIT, (8, 18, 28)[k % 3], size_range, derive_seed(seed, 1, k))
        evaluated = EvaluatedGraph(roadmap, world)
        for qi, q in enumerate(sample_queries(roadmap, world, queries, derive_seed(seed, 2, k))):
            o = dijkstra_oracle(roadmap, q, world, evaluated)
            cases.append(Case(roadmap, world, q, o.cost if o.solved else None, f"w{k}q{qi}"))
    return tuple(cases)


@pytest.fixture(scope="session")
def suite():
    return random_suite()


def six_vertex_fixture():
    """Six vertices: three decoys behind the start, one detour vertex, the goal.

    LEA* needs only start-detour and detour-goal; A* evaluates all four edges
    out of the start and then every new edge out of the detour vertex.
    """
    pts = [(0.0, 0.0), (-1.0, 1.0), (-1.0, -1.0), (0.0, -1.5), (2.0, 0.5), (4.0, 0.0)]
    s, a, b, c, d, g = range(6)
    edges = [(s, a), (s, b), (s, c), (s, d), (d, a), (d, b), (d, c), (d, g)]
    bounds = WorldBounds((-2.0, -2.0), (5.0, 2.0))
    return roadmap_from_edges(pts, edges), World(bounds, ()), Query(s, g)
