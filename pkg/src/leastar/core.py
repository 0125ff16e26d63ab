"""Shared search machinery: counting edge evaluator, keys, heuristic, lazy heap.

Queue entries compare lexicographically on ``(f, h, seq)``: ties in ``f``
go to the entry closer to the goal, and the insertion sequence number makes
runs reproducible. Decrease-key is done by reinsertion; consumers skip the
stale duplicates.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .roadmap import Roadmap, euclidean
from .world import World, segment_in_collision

INF = math.inf


class EdgeEvaluator:
    """Memoising collision oracle: ``w(e) = w_hat(e)`` if the segment is free, else ``inf``.

    ``eval_count`` counts distinct unordered vertex pairs ever checked.
    """

    __slots__ = ("world", "points", "cache", "eval_count")

    def __init__(self, world: World, roadmap: Roadmap):
        self.world = world
        self.points = roadmap.points
        self.cache: dict[tuple[int, int], float] = {}
        self.eval_count = 0

    def evaluate(self, u: int, v: int, w_hat: float) -> float:
        key = (u, v) if u < v else (v, u)
        w = self.cache.get(key)
        if w is None:
            self.eval_count += 1
            hit = segment_in_collision(self.world, self.points[u], self.points[v])
            w = INF if hit else w_hat
            self.cache[key] = w
        return w

    def lookup(self, u: int, v: int):
        """Cached cost of ``(u, v)`` or ``None`` if it has not been evaluated."""
        return self.cache.get((u, v) if u < v else (v, u))

    def is_evaluated(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.cache


class Heuristic:
    """Euclidean distance to the goal, precomputed for every roadmap vertex."""

    def __init__(self, roadmap: Roadmap, goal: int):
        self.goal = goal
        self.goal_point = roadmap.vertices[goal]
        self.values: list[float] = euclidean(roadmap.vertices - self.goal_point).tolist()
        self.values[goal] = 0.0

    def __call__(self, v: int) -> float:
        return self.values[v]

    def at(self, point) -> float:
        return float(euclidean(np.asarray(point, dtype=float) - self.goal_point)[0])


class Key(NamedTuple):
    f: float
    h: float


@dataclass
class SearchState:
    g: list[float]
    parent: list[int]
    h: list[float]
    epsilon: float = 1.0
    expanded: set[int] = field(default_factory=set)

    @classmethod
    def fresh(cls, n: int, start: int, heuristic: Heuristic, epsilon: float) -> "SearchState":
        if epsilon < 1.0:
            raise ValueError("epsilon must be at least 1")
        g = [INF] * n
        g[start] = 0.0
        return cls(g, [-1] * n, heuristic.values, float(epsilon))


def vertex_key(state: SearchState, v: int) -> Key:
    h = state.h[v]
    return Key(state.g[v] + state.epsilon * h, h)


def edge_key(state: SearchState, u: int, v: int, w_hat: float) -> Key:
    h = state.h[v]
    return Key(state.g[u] + w_hat + state.epsilon * h, h)


@dataclass
class Counters:
    edge_evaluations: int = 0
    vertex_expansions: int = 0
    queue_pushes: int = 0
    queue_pops: int = 0
    wall_time_ns: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class LazyHeap:
    """Binary heap of ``(f, h, seq, *payload)`` tuples with push/pop counting."""

    __slots__ = ("items", "seq", "pushes", "pops")

    def __init__(self):
        self.items: list[tuple] = []
        self.seq = 0
        self.pushes = 0
        self.pops = 0

    def push(self, f: float, h: float, *payload) -> None:
        heapq.heappush(self.items, (f, h, self.seq, *payload))
        self.seq += 1
        self.pushes += 1

    def push_with_seq(self, f: float, h: float, seq: int, *payload) -> None:
        heapq.heappush(self.items, (f, h, seq, *payload))
        self.pushes += 1

    def pop(self) -> tuple:
        self.pops += 1
        return heapq.heappop(self.items)

    def peek(self) -> tuple:
        return self.items[0]

    def __len__(self) -> int:
        return len(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)


def path_from_parents(parent: list[int], start: int, goal: int) -> list[int]:
    path = [goal]
    while path[-1] != start:
        p = parent[path[-1]]
        if p < 0:
            raise RuntimeError("broken parent chain")
        path.append(p)
    path.reverse()
    return path
