import json
import math

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as cs_dijkstra

from conftest import UNIT, six_vertex_fixture
from leastar.algorithms import (
    PLANNERS,
    EvaluatedGraph,
    a_star,
    dijkstra_oracle,
    lazy_sp,
    lea_star,
    lra_star,
    lwa_star,
    plan,
)
from leastar.core import INF, EdgeEvaluator
from leastar.roadmap import Query, build_roadmap, roadmap_from_edges, roadmap_from_points
from leastar.world import BoxObstacle, World, segment_in_collision

NAMES = sorted(PLANNERS)
EMPTY = World(UNIT, ())


def run(name, case, eps=1.0, **kw):
    ev = EdgeEvaluator(case.world, case.roadmap)
    fn = PLANNERS[name]
    return fn(case.roadmap, case.query, ev, eps, **kw), ev


def rel_close(a, b):
    return abs(a - b) <= 1e-9 * max(abs(b), 1e-300)


# -- small fixtures ------------------------------------------------------

def two_vertex():
    return roadmap_from_points([(0.0, 0.0), (1.0, 0.0)], radius=1.0), World(
        type(UNIT)((-1.0, -1.0), (2.0, 1.0)), ()
    )


@pytest.mark.parametrize("name", NAMES)
def test_two_vertex_graph(name):
    rm, world = two_vertex()
    r = plan(name, rm, Query(0, 1), world)
    assert r.status == "Solved" and r.path == [0, 1] and r.cost == 1.0
    assert r.counters.edge_evaluations == 1


def test_six_vertex_fixture_counts():
    rm, world, q = six_vertex_fixture()
    lea = plan("lea", rm, q, world)
    ast = plan("astar", rm, q, world)
    assert lea.counters.edge_evaluations == 2
    assert ast.counters.edge_evaluations == 8
    assert lea.path == ast.path == [0, 4, 5]
    assert lea.expanded <= ast.expanded


def test_oracle_line_graph():
    rm = roadmap_from_points([(0.0, 0.5), (0.25, 0.5), (0.5, 0.5)], radius=0.3)
    r = dijkstra_oracle(rm, Query(0, 2), EMPTY)
    assert r.cost == 0.5 and r.path == [0, 1, 2]
    rm = roadmap_from_edges([(0, 0), (1, 0), (2, 0)], [(0, 1), (1, 2)])
    world = World(type(UNIT)((-1.0, -1.0), (3.0, 1.0)), ())
    assert dijkstra_oracle(rm, Query(0, 2), world).cost == 2.0


def walled():
    rm = build_roadmap(UNIT, 300, seed=4)
    wall = World(UNIT, (BoxObstacle((0.48, 0.0), (0.52, 1.0)),))
    left = int(np.argmin(rm.vertices[:, 0]))
    right = int(np.argmax(rm.vertices[:, 0]))
    return rm, wall, Query(left, right)


@pytest.mark.parametrize("name", NAMES + ["oracle"])
def test_blocked_goal_has_no_solution(name):
    rm, wall, q = walled()
    r = dijkstra_oracle(rm, q, wall) if name == "oracle" else plan(name, rm, q, wall, 1.5)
    assert r.status == "NoSolution" and r.path == [] and r.cost == INF
    assert json.loads(json.dumps(r.to_dict()))["cost"] is None


def test_obstacle_free_world():
    rm = build_roadmap(UNIT, 500, seed=10)
    q = Query(3, 444)
    lea = plan("lea", rm, q, EMPTY)
    ast = plan("astar", rm, q, EMPTY)
    assert lea.cost == ast.cost == dijkstra_oracle(rm, q, EMPTY).cost
    sp = plan("lazysp", rm, q, EMPTY)
    assert sp.counters.edge_evaluations == len(sp.path) - 1
    assert sp.extra["inner_searches"] == 1


def test_invalid_inputs():
    rm, world = two_vertex()
    with pytest.raises(KeyError, match="astar"):
        plan("lea*", rm, Query(0, 1), world)
    with pytest.raises(ValueError):
        plan("lea", rm, Query(0, 1), world, epsilon=0.9)
    with pytest.raises(ValueError):
        plan("astar", rm, Query(0, 5), world)
    with pytest.raises(ValueError):
        plan("lra", rm, Query(0, 1), world, lookahead=0)


def test_result_json_shape():
    rm, world = two_vertex()
    r = plan("lea", rm, Query(0, 1), world)
    r.seed = (1, 2)
    d = json.loads(json.dumps(r.to_dict()))
    assert list(d) == ["algorithm", "epsilon", "status", "cost", "path", "counters", "seed"]
    assert list(d["counters"]) == [
        "edge_evaluations", "vertex_expansions", "queue_pushes", "queue_pops", "wall_time_ns"
    ]
    assert d["seed"] == [1, 2]


# -- the random suite ----------------------------------------------------

def test_oracle_matches_scipy(suite):
    checked = 0
    for case in suite[::4]:
        rm, world = case.roadmap, case.world
        u, v, w = rm.edge_list()
        free = ~np.array([segment_in_collision(world, rm.vertices[a], rm.vertices[b]) for a, b in zip(u, v)])
        m = csr_matrix((w[free], (u[free], v[free])), shape=(rm.n, rm.n))
        ref = cs_dijkstra(m, directed=False, indices=case.query.start)[case.query.goal]
        ours = dijkstra_oracle(rm, case.query, world)
        if math.isinf(ref):
            assert not ours.solved
        else:
            assert rel_close(ours.cost, ref)
        checked += 1
    assert checked == 50


@pytest.mark.parametrize("name", NAMES)
def test_optimal_and_complete_at_unit_epsilon(suite, name):
    for case in suite:
        r, ev = run(name, case)
        if case.oracle_cost is None:
            assert r.status == "NoSolution", case.label
            continue
        assert r.status == "Solved", case.label
        assert rel_close(r.cost, case.oracle_cost), (case.label, r.cost, case.oracle_cost)
        assert r.path[0] == case.query.start and r.path[-1] == case.query.goal
        total = 0.0
        for a, b in zip(r.path, r.path[1:]):
            assert b in dict(case.roadmap.adjacency[a])
            assert ev.lookup(a, b) is not None and ev.lookup(a, b) < INF
            total += ev.lookup(a, b)
        assert total == r.cost


@pytest.mark.parametrize("eps", [1.5, 2.0, 2.5])
@pytest.mark.parametrize("name", NAMES)
def test_weighted_bound(suite, name, eps):
    for case in suite:
        r, _ = run(name, case, eps)
        assert r.solved == (case.oracle_cost is not None)
        if r.solved:
            assert r.cost <= eps * case.oracle_cost * (1 + 1e-12), case.label


@pytest.mark.parametrize("eps", [1.0, 2.0])
def test_lea_and_lwa_evaluate_identically(suite, eps):
    for case in suite:
        a, ev_a = run("lea", case, eps)
        b, ev_b = run("lwa", case, eps)
        assert a.counters.edge_evaluations == b.counters.edge_evaluations
        # same edges in the same order
        assert list(ev_a.cache) == list(ev_b.cache)
        assert a.path == b.path


def test_lea_expands_subset_of_astar(suite):
    for case in suite:
        lea, _ = run("lea", case)
        ast, _ = run("astar", case)
        assert lea.expanded <= ast.expanded, case.label
        assert lea.counters.edge_evaluations <= ast.counters.edge_evaluations


def test_lazysp_evaluates_fewest_edges(suite):
    for case in suite:
        counts = {n: run(n, case)[0].counters.edge_evaluations for n in NAMES}
        assert all(counts["lazysp"] <= c for c in counts.values()), (case.label, counts)


def test_termination_key_soundness(suite):
    for case in suite:
        r, ev = run("lea", case)
        if r.solved:
            assert r.extra["goal_g"] <= r.extra["min_remaining_key"]
            if r.extra["exit_key"] is not None:
                assert r.extra["goal_g"] <= r.extra["exit_key"] <= r.extra["min_remaining_key"]
        else:
            assert r.extra["exit_key"] is None and r.extra["goal_g"] == INF
        assert r.counters.edge_evaluations == len(ev.cache)


def test_terminating_pop_is_not_evaluated():
    # after evaluating s-g the queue still holds g-s; popping it must stop the search
    rm, world = two_vertex()
    r = lea_star(rm, Query(0, 1), EdgeEvaluator(world, rm))
    assert r.extra["exit_key"] == 2.0 + 1.0 and r.counters.edge_evaluations == 1


def test_lazysp_replan_modes_agree(suite):
    for case in suite[::5]:
        a, ev_a = run("lazysp", case)
        b, ev_b = run("lazysp", case, replan_every_edge=True)
        assert list(ev_a.cache) == list(ev_b.cache)
        assert a.path == b.path and a.cost == b.cost
        assert b.extra["inner_searches"] >= a.extra["inner_searches"]


def test_lra_reduces_to_lwa_and_lazysp(suite):
    for case in suite:
        one, ev_one = run("lra", case, lookahead=1)
        lwa, ev_lwa = run("lwa", case)
        assert one.counters.edge_evaluations == lwa.counters.edge_evaluations, case.label
        assert set(ev_one.cache) == set(ev_lwa.cache)
        inf, ev_inf = run("lra", case, lookahead=10**9)
        sp, ev_sp = run("lazysp", case)
        assert inf.counters.edge_evaluations == sp.counters.edge_evaluations, case.label
        assert list(ev_inf.cache) == list(ev_sp.cache)


def test_lra_default_lookahead_between_extremes(suite):
    total = {k: 0 for k in ("lwa", "lra", "lazysp")}
    for case in suite:
        for k in total:
            total[k] += run(k, case)[0].counters.edge_evaluations
    assert total["lazysp"] <= total["lra"] <= total["lwa"]


@pytest.mark.parametrize("fn", [a_star, lea_star, lwa_star])
def test_without_stale_skipping_still_optimal(suite, fn):
    for case in suite[::3]:
        r = fn(case.roadmap, case.query, EdgeEvaluator(case.world, case.roadmap), skip_stale=False)
        if case.oracle_cost is None:
            assert not r.solved
        else:
            assert rel_close(r.cost, case.oracle_cost)


def test_fresh_evaluator_per_run(suite):
    case = suite[0]
    a = plan("lea", case.roadmap, case.query, case.world)
    b = plan("lea", case.roadmap, case.query, case.world)
    assert a.counters.edge_evaluations == b.counters.edge_evaluations > 0


def test_counters_are_consistent(suite):
    for case in suite[::10]:
        for name in NAMES:
            c = run(name, case)[0].counters
            assert c.queue_pops <= c.queue_pushes
            assert c.vertex_expansions <= c.queue_pops
            assert c.wall_time_ns > 0


def test_evaluated_graph_drops_blocked_edges(suite):
    case = suite[1]
    g = EvaluatedGraph(case.roadmap, case.world)
    kept = sum(len(a) for a in g.adjacency) // 2
    assert kept == g.n_edges - g.n_blocked
    assert g.n_edges == case.roadmap.n_edges
