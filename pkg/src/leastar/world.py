"""Obstacle worlds: axis-aligned boxes in a bounded d-dimensional space.

Worlds are the collision ground truth. Obstacles are closed sets, so a
segment that merely touches a box face is in collision, and any point
outside the bounds counts as in collision.

Random worlds are drawn with numpy's PCG64 generator seeded through
``numpy.random.SeedSequence(seed)``. For ``n`` obstacles the draw order is
fixed: first an ``(n, d)`` array of side lengths from
``uniform(size_lo, size_hi)``, then an ``(n, d)`` array of centres from
``uniform(lo, hi)``. Boxes are then clipped to the bounds.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _jsonfmt


@dataclass(frozen=True)
class WorldBounds:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same length")
        if len(lo) < 2:
            raise ValueError("worlds need at least two dimensions")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate bounds lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, dim: int = 2) -> "WorldBounds":
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, point: Sequence[float]) -> bool:
        return all(a <= p <= b for a, p, b in zip(self.lo, point, self.hi))


@dataclass(frozen=True)
class BoxObstacle:
    min_corner: tuple[float, ...]
    max_corner: tuple[float, ...]

    def __post_init__(self):
        mn = tuple(float(x) for x in self.min_corner)
        mx = tuple(float(x) for x in self.max_corner)
        if len(mn) != len(mx):
            raise ValueError("corner dimensions differ")
        if any(a > b for a, b in zip(mn, mx)):
            raise ValueError(f"inverted box {mn} .. {mx}")
        object.__setattr__(self, "min_corner", mn)
        object.__setattr__(self, "max_corner", mx)

    def contains(self, point: Sequence[float]) -> bool:
        return all(a <= p <= b for a, p, b in zip(self.min_corner, point, self.max_corner))


class _BoxGrid:
    """Uniform broad-phase grid over the bounds; each cell lists the boxes touching it.

    Cell indices come from ``floor((x - lo) * k / extent)``, which is monotone
    in ``x``, so a box and a segment that share a point share a cell.
    """

    __slots__ = ("lo", "scale", "k", "strides", "cells", "boxes")

    MAX_CELLS = 4096
    MAX_SCAN = 8  # cells per query before falling back to a full scan

    def __init__(self, bounds: WorldBounds, boxes: tuple[BoxObstacle, ...]):
        d = bounds.dim
        sides = np.mean([np.subtract(b.max_corner, b.min_corner) for b in boxes], axis=0)
        ext = bounds.extent
        per_cell = max(1, int(self.MAX_CELLS ** (1.0 / d)))
        k = [int(min(per_cell, max(1, ext[i] / max(sides[i], ext[i] * 1e-3)))) for i in range(d)]
        self.lo = bounds.lo
        self.k = tuple(k)
        self.scale = tuple(k[i] / ext[i] for i in range(d))
        self.strides = tuple(int(np.prod(k[i + 1:])) for i in range(d))
        cells = [[] for _ in range(math.prod(k))]
        for idx, box in enumerate(boxes):
            spans = [range(self.cell(box.min_corner[i], i), self.cell(box.max_corner[i], i) + 1) for i in range(d)]
            for c in itertools.product(*spans):
                cells[self.flat(c)].append(box)
        self.cells = [tuple(c) for c in cells]
        self.boxes = boxes

    def cell(self, x: float, i: int) -> int:
        c = int((x - self.lo[i]) * self.scale[i])
        return 0 if c < 0 else (self.k[i] - 1 if c >= self.k[i] else c)

    def flat(self, c) -> int:
        return sum(ci * s for ci, s in zip(c, self.strides))

    def candidates(self, a, b):
        """Boxes that could touch the segment; all boxes when it spans many cells.

        Both endpoints must already lie inside the bounds.
        """
        lo, scale, k, strides = self.lo, self.scale, self.k, self.strides
        spans = []
        count = 1
        base = 0
        for i in range(len(k)):
            x, y = a[i], b[i]
            if x > y:
                x, y = y, x
            c0 = int((x - lo[i]) * scale[i])
            c1 = int((y - lo[i]) * scale[i])
            top = k[i] - 1
            if c1 > top:
                c1 = top
                if c0 > top:
                    c0 = top
            base += c0 * strides[i]
            if c1 != c0:
                count *= c1 - c0 + 1
                spans.append(range(0, (c1 - c0 + 1) * strides[i], strides[i]))
        if count == 1:
            return self.cells[base]
        if count > self.MAX_SCAN:
            return self.boxes
        out = {}
        for offs in itertools.product(*spans):
            for box in self.cells[base + sum(offs)]:
                out[id(box)] = box
        return out.values()


@dataclass(frozen=True)
class World:
    bounds: WorldBounds
    obstacles: tuple[BoxObstacle, ...] = ()
    seed: int = 0
    _mins: np.ndarray = field(init=False, repr=False, compare=False)
    _maxs: np.ndarray = field(init=False, repr=False, compare=False)
    _grid: _BoxGrid | None = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        obstacles = tuple(self.obstacles)
        d = self.bounds.dim
        for box in obstacles:
            if len(box.min_corner) != d:
                raise ValueError("obstacle dimension does not match bounds")
            if not (self.bounds.contains(box.min_corner) and self.bounds.contains(box.max_corner)):
                raise ValueError(f"obstacle {box} leaves the world bounds")
        object.__setattr__(self, "obstacles", obstacles)
        object.__setattr__(self, "seed", int(self.seed))
        mins = np.array([b.min_corner for b in obstacles], dtype=float).reshape(-1, d)
        maxs = np.array([b.max_corner for b in obstacles], dtype=float).reshape(-1, d)
        object.__setattr__(self, "_mins", mins)
        object.__setattr__(self, "_maxs", maxs)
        object.__setattr__(self, "_grid", _BoxGrid(self.bounds, obstacles) if len(obstacles) >= 4 else None)

    @property
    def dim(self) -> int:
        return self.bounds.dim

    def point_in_collision(self, p: Sequence[float]) -> bool:
        if not self.bounds.contains(p):
            return True
        return any(box.contains(p) for box in self.obstacles)

    def with_obstacle(self, box: BoxObstacle) -> "World":
        return World(self.bounds, self.obstacles + (box,), self.seed)

    # -- serialisation -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "lo": list(self.bounds.lo),
            "hi": list(self.bounds.hi),
            "seed": self.seed,
            "obstacles": [
                {"min": list(b.min_corner), "max": list(b.max_corner)} for b in self.obstacles
            ],
        }

    def to_json(self) -> str:
        return _jsonfmt.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "World":
        bounds = WorldBounds(data["lo"], data["hi"])
        if int(data["dim"]) != bounds.dim:
            raise ValueError("dim field disagrees with bounds")
        boxes = tuple(BoxObstacle(o["min"], o["max"]) for o in data["obstacles"])
        return cls(bounds, boxes, int(data.get("seed", 0)))

    @classmethod
    def from_json(cls, text: str) -> "World":
        return cls.from_dict(json.loads(text))


def segment_in_collision(world: World, a: Sequence[float], b: Sequence[float]) -> bool:
    """Exact closed-segment vs closed-box test (parametric slab clipping).

    Points outside the world bounds are treated as colliding.
    """
    lo = world.bounds.lo
    hi = world.bounds.hi
    d = len(lo)
    for i in range(d):
        if not (lo[i] <= a[i] <= hi[i]) or not (lo[i] <= b[i] <= hi[i]):
            return True
    grid = world._grid
    for box in world.obstacles if grid is None else grid.candidates(a, b):
        mn = box.min_corner
        mx = box.max_corner
        t0 = 0.0
        t1 = 1.0
        for i in range(d):
            ai = a[i]
            di = b[i] - ai
            if di == 0.0:
                if ai < mn[i] or ai > mx[i]:
                    break
                continue
            ta = (mn[i] - ai) / di
            tb = (mx[i] - ai) / di
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
            if t0 > t1:
                break
        else:
            return True
    return False


def segments_in_collision(world: World, a: np.ndarray, b: np.ndarray, chunk: int = 32768) -> np.ndarray:
    """Vectorised :func:`segment_in_collision` over rows of ``a`` and ``b``.

    Uses the same arithmetic as the scalar test, so answers agree bit for bit.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.asarray(world.bounds.lo)
    hi = np.asarray(world.bounds.hi)
    out = np.zeros(len(a), dtype=bool)
    outside = ((a < lo) | (a > hi) | (b < lo) | (b > hi)).any(axis=1)
    out |= outside
    if not world.obstacles:
        return out
    mins = world._mins[None, :, :]
    maxs = world._maxs[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(0, len(a), chunk):
            aa = a[s : s + chunk, None, :]
            dd = b[s : s + chunk, None, :] - aa
            ta = (mins - aa) / dd
            tb = (maxs - aa) / dd
            t_enter = np.minimum(ta, tb)
            t_exit = np.maximum(ta, tb)
            flat = dd == 0.0
            inside = (aa >= mins) & (aa <= maxs)
            t_enter = np.where(flat, np.where(inside, -np.inf, np.inf), t_enter)
            t_exit = np.where(flat, np.where(inside, np.inf, -np.inf), t_exit)
            t0 = np.maximum(t_enter.max(axis=2), 0.0)
            t1 = np.minimum(t_exit.min(axis=2), 1.0)
            out[s : s + chunk] |= (t0 <= t1).any(axis=1)
    return out


def _as_size_range(size_range, dim: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = size_range
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy()
    return lo, hi


def sample_world(bounds: WorldBounds, n_obstacles: int, size_range, seed: int) -> World:
    """Draw ``n_obstacles`` random boxes (overlaps allowed) and clip them to ``bounds``.

    ``size_range`` is ``(lo, hi)`` where each end is a scalar or a per-axis sequence.
    """
    if n_obstacles < 0:
        raise ValueError("n_obstacles must be non-negative")
    d = bounds.dim
    size_lo, size_hi = _as_size_range(size_range, d)
    if np.any(size_lo <= 0) or np.any(size_hi < size_lo):
        raise ValueError(f"size range must be positive and non-empty, got {size_range}")
    if np.any(size_hi > bounds.extent):
        raise ValueError("obstacle size range is wider than the world extent")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    sizes = rng.uniform(size_lo, size_hi, size=(n_obstacles, d))
    lo = np.asarray(bounds.lo)
    hi = np.asarray(bounds.hi)
    centres = rng.uniform(lo, hi, size=(n_obstacles, d))
    mins = np.clip(centres - sizes / 2.0, lo, hi)
    maxs = np.clip(centres + sizes / 2.0, lo, hi)
    boxes = tuple(BoxObstacle(tuple(mn), tuple(mx)) for mn, mx in zip(mins.tolist(), maxs.tolist()))
    return World(bounds, boxes, int(seed))
