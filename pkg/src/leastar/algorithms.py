"""Shortest-path planners over lazily evaluated roadmaps.

Every planner takes ``(roadmap, query, evaluator, epsilon)`` and returns a
:class:`SearchResult`. Edge costs are only known through the evaluator; the
roadmap supplies the optimistic estimate ``w_hat``. ``epsilon`` inflates the
cost-to-go heuristic.

Expansion bookkeeping: ``expanded`` is the set of distinct vertices whose
outgoing edges were generated (A*, LWA*, inner searches) or at least one of
whose outgoing edges was evaluated (LEA*). ``vertex_expansions`` counts
expansion events, one per (vertex, cost-to-come) pair for the single-search
planners and the sum over inner searches for LazySP / LRA*.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import INF, Counters, EdgeEvaluator, Heuristic, LazyHeap, SearchState, path_from_parents
from .roadmap import Query, Roadmap
from .world import World, segments_in_collision

SOLVED = "Solved"
NO_SOLUTION = "NoSolution"


@dataclass
class SearchResult:
    algorithm: str
    epsilon: float
    status: str
    path: list[int]
    cost: float
    counters: Counters
    expanded: frozenset[int] = frozenset()
    extra: dict = field(default_factory=dict)
    seed: tuple | None = None

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "epsilon": self.epsilon,
            "status": self.status,
            "cost": self.cost if math.isfinite(self.cost) else None,
            "path": list(self.path),
            "counters": self.counters.to_dict(),
            "seed": list(self.seed) if self.seed is not None else None,
        }


def _check(roadmap: Roadmap, query: Query, epsilon: float) -> None:
    if not (query.start < roadmap.n and query.goal < roadmap.n):
        raise ValueError(f"query {query} out of range for {roadmap.n} vertices")
    if not epsilon >= 1.0:
        raise ValueError("epsilon must be at least 1")


def _result(name, epsilon, evaluator, path, counters, expanded, **extra) -> SearchResult:
    counters.edge_evaluations = evaluator.eval_count
    if path is None:
        return SearchResult(name, epsilon, NO_SOLUTION, [], INF, counters, frozenset(expanded), extra)
    cost = 0.0
    for a, b in zip(path, path[1:]):
        cost += evaluator.lookup(a, b)
    return SearchResult(name, epsilon, SOLVED, path, cost, counters, frozenset(expanded), extra)


def a_star(roadmap: Roadmap, query: Query, evaluator: EdgeEvaluator, epsilon: float = 1.0,
           *, skip_stale: bool = True) -> SearchResult:
    """Vertex-queue A*: every outgoing edge is evaluated when a vertex is expanded."""
    _check(roadmap, query, epsilon)
    adj = roadmap.adjacency
    s, t = query.start, query.goal
    t0 = time.perf_counter_ns()
    state = SearchState.fresh(roadmap.n, s, Heuristic(roadmap, t), epsilon)
    g, parent, h, eps = state.g, state.parent, state.h, state.epsilon
    expanded = state.expanded
    evaluate = evaluator.evaluate
    q = LazyHeap()
    q.push(eps * h[s], h[s], s)
    expansions = 0
    solved = False
    while q:
        f, hv, _, v = q.pop()
        if v == t:
            solved = True
            break
        gv = g[v]
        if skip_stale and f > gv + eps * hv:
            continue
        expansions += 1
        expanded.add(v)
        for x, wh in adj[v]:
            w = evaluate(v, x, wh)
            if w < INF:
                ng = gv + w
                if ng < g[x]:
                    g[x] = ng
                    parent[x] = v
                    hx = h[x]
                    q.push(ng + eps * hx, hx, x)
    elapsed = time.perf_counter_ns() - t0
    counters = Counters(0, expansions, q.pushes, q.pops, elapsed)
    path = path_from_parents(parent, s, t) if solved else None
    return _result("astar", epsilon, evaluator, path, counters, expanded)


def lea_star(roadmap: Roadmap, query: Query, evaluator: EdgeEvaluator, epsilon: float = 1.0,
             *, skip_stale: bool = True) -> SearchResult:
    """Lazy edge-based A*: one edge queue keyed by ``g(src) + w_hat + eps * h(dst)``.

    Only the popped edge is evaluated; the search stops as soon as the goal's
    cost-to-come is no larger than the popped key.
    """
    _check(roadmap, query, epsilon)
    adj = roadmap.adjacency
    s, t = query.start, query.goal
    t0 = time.perf_counter_ns()
    state = SearchState.fresh(roadmap.n, s, Heuristic(roadmap, t), epsilon)
    g, parent, h, eps = state.g, state.parent, state.h, state.epsilon
    expanded = state.expanded
    expanded_at = [INF] * roadmap.n
    evaluate = evaluator.evaluate
    q = LazyHeap()
    push = q.push
    for x, wh in adj[s]:
        push(wh + eps * h[x], h[x], s, x, wh)
    expansions = 0
    exit_key = None
    while q:
        f, hx, _, u, x, wh = q.pop()
        if g[t] <= f:
            exit_key = f
            break
        gu = g[u]
        if skip_stale and f > gu + wh + eps * hx:
            continue
        if expanded_at[u] != gu:
            expanded_at[u] = gu
            expansions += 1
            expanded.add(u)
        w = evaluate(u, x, wh)
        if w < INF:
            ng = gu + w
            if ng < g[x]:
                g[x] = ng
                parent[x] = u
                for y, wy in adj[x]:
                    push(ng + wy + eps * h[y], h[y], x, y, wy)
    elapsed = time.perf_counter_ns() - t0
    remaining = q.peek()[0] if q else INF
    counters = Counters(0, expansions, q.pushes, q.pops, elapsed)
    path = path_from_parents(parent, s, t) if g[t] < INF else None
    return _result("lea", epsilon, evaluator, path, counters, expanded,
                   exit_key=exit_key, min_remaining_key=remaining, goal_g=g[t])


_UNEVALUATED = 0
_EVALUATED = 1


def lwa_star(roadmap: Roadmap, query: Query, evaluator: EdgeEvaluator, epsilon: float = 1.0,
             *, skip_stale: bool = True) -> SearchResult:
    """Lazy weighted A* with a single queue holding both entry kinds.

    An unevaluated entry ``(src -> dst)`` is keyed by its optimistic total
    cost; once its edge is found free and improving, ``dst`` goes back in as
    an evaluated entry and is expanded when popped. The reinserted entry
    keeps the sequence number of the entry it replaces.
    """
    _check(roadmap, query, epsilon)
    adj = roadmap.adjacency
    s, t = query.start, query.goal
    t0 = time.perf_counter_ns()
    state = SearchState.fresh(roadmap.n, s, Heuristic(roadmap, t), epsilon)
    g, parent, h, eps = state.g, state.parent, state.h, state.epsilon
    expanded = state.expanded
    evaluate = evaluator.evaluate
    q = LazyHeap()
    push = q.push
    push(eps * h[s], h[s], _EVALUATED, -1, s, 0.0)
    expansions = 0
    solved = False
    while q:
        f, hv, seq, flag, u, x, wh = q.pop()
        if flag == _EVALUATED:
            if x == t:
                solved = True
                break
            gx = g[x]
            if skip_stale and f > gx + eps * hv:
                continue
            expansions += 1
            expanded.add(x)
            for y, wy in adj[x]:
                push(gx + wy + eps * h[y], h[y], _UNEVALUATED, x, y, wy)
            continue
        gu = g[u]
        if skip_stale and f > gu + wh + eps * hv:
            continue
        w = evaluate(u, x, wh)
        if w < INF:
            ng = gu + w
            if ng < g[x]:
                g[x] = ng
                parent[x] = u
                q.push_with_seq(ng + eps * hv, hv, seq, _EVALUATED, u, x, 0.0)
    elapsed = time.perf_counter_ns() - t0
    counters = Counters(0, expansions, q.pushes, q.pops, elapsed)
    path = path_from_parents(parent, s, t) if solved else None
    return _result("lwa", epsilon, evaluator, path, counters, expanded)


_VERTEX = 0
_LEAF = 1


class _Tally:
    __slots__ = ("expansions", "pushes", "pops", "searches", "expanded")

    def __init__(self):
        self.expansions = 0
        self.pushes = 0
        self.pops = 0
        self.searches = 0
        self.expanded: set[int] = set()


def _lazy_search(adj, h, eps, s, t, lookup, depth_limit, tally):
    """A* over hybrid costs (evaluated cost if known, else ``w_hat``). No evaluations.

    With ``depth_limit`` set, a vertex whose tree path already holds
    ``depth_limit - 1`` unevaluated edges is not extended through a further
    unevaluated edge; that edge becomes a leaf candidate instead, kept
    regardless of the target's current cost-to-come. Returns the vertex path
    and its ``w_hat`` values for the first goal or leaf popped, or ``None``.
    """
    tally.searches += 1
    g = {s: 0.0}
    depth = {s: 0}
    parent = {s: -1}
    parent_w = {s: 0.0}
    q = LazyHeap()
    push = q.push
    push(eps * h[s], h[s], _VERTEX, s, -1, 0.0)
    limit = depth_limit if depth_limit is not None else -1
    expanded = tally.expanded
    found = None
    while q:
        f, hv, _, kind, v, u, wh = q.pop()
        if kind == _LEAF:
            if f > g[u] + wh + eps * hv:
                continue
            found = (u, v, wh)
            break
        gv = g[v]
        if v == t:
            found = (v, None, None)
            break
        if f > gv + eps * hv:
            continue
        tally.expansions += 1
        expanded.add(v)
        dv = depth[v]
        for x, wx in adj[v]:
            w = lookup(v, x)
            if w is None:
                if dv + 1 == limit:
                    push(gv + wx + eps * h[x], h[x], _LEAF, x, v, wx)
                    continue
                nd = dv + 1
                ng = gv + wx
            elif w == INF:
                continue
            else:
                nd = dv
                ng = gv + w
            if ng < g.get(x, INF):
                g[x] = ng
                depth[x] = nd
                parent[x] = v
                parent_w[x] = wx
                push(ng + eps * h[x], h[x], _VERTEX, x, v, 0.0)
    tally.pushes += q.pushes
    tally.pops += q.pops
    if found is None:
        return None
    end, leaf, leaf_w = found
    path = [end]
    ws = []
    while parent[path[-1]] >= 0:
        ws.append(parent_w[path[-1]])
        path.append(parent[path[-1]])
    path.reverse()
    ws.reverse()
    if leaf is not None:
        path.append(leaf)
        ws.append(leaf_w)
    return path, ws


def lazy_sp(roadmap: Roadmap, query: Query, evaluator: EdgeEvaluator, epsilon: float = 1.0,
            *, replan_every_edge: bool = False) -> SearchResult:
    """LazySP with the forward selector.

    The selector evaluates the first unevaluated edge of the current shortest
    hybrid path. A free edge keeps its cost at ``w_hat``, so replanning would
    return the same path; by default the walk therefore continues along the
    path, replans only after a collision and returns a path walked without
    one. ``replan_every_edge=True`` runs the inner search after every single
    evaluation instead; both modes evaluate the same edges in the same order.
    """
    _check(roadmap, query, epsilon)
    adj = roadmap.adjacency
    s, t = query.start, query.goal
    t0 = time.perf_counter_ns()
    h = Heuristic(roadmap, t).values
    lookup = evaluator.lookup
    tally = _Tally()
    path = None
    while True:
        found = _lazy_search(adj, h, epsilon, s, t, lookup, None, tally)
        if found is None:
            break
        cand, ws = found
        clean = True
        collided = False
        for i in range(len(cand) - 1):
            if lookup(cand[i], cand[i + 1]) is None:
                clean = False
                w = evaluator.evaluate(cand[i], cand[i + 1], ws[i])
                if w == INF:
                    collided = True
                    break
                if replan_every_edge:
                    break
        # a fully walked free path is what the next search would return anyway
        if clean or not (collided or replan_every_edge):
            path = cand
            break
    elapsed = time.perf_counter_ns() - t0
    counters = Counters(0, tally.expansions, tally.pushes, tally.pops, elapsed)
    return _result("lazysp", epsilon, evaluator, path, counters, tally.expanded,
                   inner_searches=tally.searches)


def lra_star(roadmap: Roadmap, query: Query, evaluator: EdgeEvaluator, epsilon: float = 1.0,
             lookahead: int = 4) -> SearchResult:
    """Lazy receding-horizon A*.

    Each round grows a lazy tree at most ``lookahead`` unevaluated edges past
    the evaluated part, picks the best goal path or leaf, and evaluates that
    subpath's unevaluated edges front to back, stopping at the first
    collision. ``lookahead=1`` evaluates exactly the edges LWA* does;
    a lookahead no smaller than the vertex count behaves as LazySP.
    """
    _check(roadmap, query, epsilon)
    if lookahead < 1:
        raise ValueError("lookahead must be at least 1")
    adj = roadmap.adjacency
    s, t = query.start, query.goal
    t0 = time.perf_counter_ns()
    h = Heuristic(roadmap, t).values
    lookup = evaluator.lookup
    tally = _Tally()
    path = None
    while True:
        found = _lazy_search(adj, h, epsilon, s, t, lookup, lookahead, tally)
        if found is None:
            break
        cand, ws = found
        pending = [i for i in range(len(cand) - 1) if lookup(cand[i], cand[i + 1]) is None]
        if not pending:
            path = cand
            break
        collided = False
        for i in pending:
            if evaluator.evaluate(cand[i], cand[i + 1], ws[i]) == INF:
                collided = True
                break
        if cand[-1] == t and not collided:
            path = cand
            break
    elapsed = time.perf_counter_ns() - t0
    counters = Counters(0, tally.expansions, tally.pushes, tally.pops, elapsed)
    return _result("lra", epsilon, evaluator, path, counters, tally.expanded,
                   inner_searches=tally.searches, lookahead=lookahead)


class EvaluatedGraph:
    """All roadmap edges collision-checked up front against one world."""

    def __init__(self, roadmap: Roadmap, world: World):
        self.roadmap = roadmap
        u, v, w_hat = roadmap.edge_list()
        pts = roadmap.vertices
        hit = segments_in_collision(world, pts[u], pts[v])
        self.n_edges = len(u)
        self.n_blocked = int(hit.sum())
        src = np.repeat(np.arange(roadmap.n), np.diff(roadmap.offsets))
        blocked = set(zip(u[hit].tolist(), v[hit].tolist()))
        lo = np.minimum(src, roadmap.neighbors).tolist()
        hi = np.maximum(src, roadmap.neighbors).tolist()
        costs = [INF if (a, b) in blocked else w for a, b, w in zip(lo, hi, roadmap.weights.tolist())]
        offs = roadmap.offsets.tolist()
        nbrs = roadmap.neighbors.tolist()
        self.adjacency = [
            [(x, c) for x, c in zip(nbrs[offs[i] : offs[i + 1]], costs[offs[i] : offs[i + 1]]) if c < INF]
            for i in range(roadmap.n)
        ]


def dijkstra_oracle(roadmap: Roadmap, query: Query, world: World,
                    evaluated: EvaluatedGraph | None = None) -> SearchResult:
    """Ground truth: evaluate every edge, then run plain Dijkstra."""
    _check(roadmap, query, 1.0)
    t0 = time.perf_counter_ns()
    if evaluated is None:
        evaluated = EvaluatedGraph(roadmap, world)
    adj = evaluated.adjacency
    s, t = query.start, query.goal
    dist = {s: 0.0}
    parent = {s: -1}
    done = set()
    heap = [(0.0, s)]
    pushes, pops = 1, 0
    while heap:
        d, v = heapq.heappop(heap)
        pops += 1
        if v in done:
            continue
        done.add(v)
        if v == t:
            break
        for x, w in adj[v]:
            nd = d + w
            if nd < dist.get(x, INF):
                dist[x] = nd
                parent[x] = v
                heapq.heappush(heap, (nd, x))
                pushes += 1
    elapsed = time.perf_counter_ns() - t0
    counters = Counters(evaluated.n_edges, len(done), pushes, pops, elapsed)
    if t not in done:
        return SearchResult("dijkstra", 1.0, NO_SOLUTION, [], INF, counters, frozenset(done))
    path = [t]
    while parent[path[-1]] >= 0:
        path.append(parent[path[-1]])
    path.reverse()
    cost = 0.0
    for a, b in zip(path, path[1:]):
        cost += dict(adj[a])[b]
    return SearchResult("dijkstra", 1.0, SOLVED, path, cost, counters, frozenset(done))


PLANNERS = {
    "astar": a_star,
    "lea": lea_star,
    "lwa": lwa_star,
    "lazysp": lazy_sp,
    "lra": lra_star,
}


def plan(algorithm: str, roadmap: Roadmap, query: Query, world: World, epsilon: float = 1.0,
         lookahead: int = 4, evaluator: EdgeEvaluator | None = None) -> SearchResult:
    """Run a planner by name with a fresh evaluator unless one is given."""
    if algorithm not in PLANNERS:
        raise KeyError(f"unknown algorithm {algorithm!r}; choose from {sorted(PLANNERS)}")
    if evaluator is None:
        evaluator = EdgeEvaluator(world, roadmap)
    if algorithm == "lra":
        return lra_star(roadmap, query, evaluator, epsilon, lookahead=lookahead)
    return PLANNERS[algorithm](roadmap, query, evaluator, epsilon)
