"""Lazy edge-based A* and baseline planners over lazily built roadmaps."""

from .algorithms import (
    PLANNERS,
    SearchResult,
    a_star,
    dijkstra_oracle,
    lazy_sp,
    lea_star,
    lra_star,
    lwa_star,
    plan,
)
from .core import EdgeEvaluator, Heuristic
from .roadmap import Query, Roadmap, attach_query, build_roadmap, connection_radius, roadmap_from_edges
from .world import BoxObstacle, World, WorldBounds, sample_world, segment_in_collision

__version__ = "0.1.0"

__all__ = [
    "PLANNERS", "SearchResult", "a_star", "dijkstra_oracle", "lazy_sp", "lea_star", "lra_star",
    "lwa_star", "plan", "EdgeEvaluator", "Heuristic", "Query", "Roadmap", "attach_query",
    "build_roadmap", "connection_radius", "roadmap_from_edges", "BoxObstacle", "World", "WorldBounds", "sample_world",
    "segment_in_collision",
]
