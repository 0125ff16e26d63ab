"""Environment-independent r-disk roadmaps, built without any collision checks.

Storage is CSR: ``offsets`` (N+1), ``neighbors`` and ``weights`` (one entry
per directed half of every undirected edge, neighbours sorted by id).

Binary format (all fields little-endian)::

    magic    4 bytes   b"LRMP"
    version  uint32    1
    dim      uint32
    N        uint64
    nnz      uint64    length of neighbors / weights
    radius   float64
    gamma    float64
    seed     uint64
    vertices float64[N * dim]   row-major
    offsets  int64[N + 1]
    neighbors int64[nnz]
    weights  float64[nnz]
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from . import _jsonfmt
from .world import WorldBounds

_MAGIC = b"LRMP"
_HEADER = struct.Struct("<4sIIQQddQ")


def euclidean(diff: np.ndarray) -> np.ndarray:
    """Row norms of ``diff``; the single formula behind edge lengths and heuristics."""
    diff = np.atleast_2d(diff)
    return np.sqrt((diff * diff).sum(axis=1))


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


def default_gamma(bounds: WorldBounds) -> float:
    """PRM* constant with the whole bounds volume standing in for free space."""
    d = bounds.dim
    return 2.0 * (1.0 + 1.0 / d) ** (1.0 / d) * (bounds.volume / unit_ball_volume(d)) ** (1.0 / d)


def connection_radius(n: float, dim: int, gamma: float) -> float:
    if n < 2:
        raise ValueError("connection radius needs at least two vertices")
    return gamma * (math.log(n) / n) ** (1.0 / dim)


@dataclass(frozen=True)
class Query:
    start: int
    goal: int

    def __post_init__(self):
        if self.start == self.goal:
            raise ValueError("start and goal must differ")
        if self.start < 0 or self.goal < 0:
            raise ValueError("vertex ids are non-negative")


@dataclass(frozen=True, eq=False)
class Roadmap:
    vertices: np.ndarray
    offsets: np.ndarray
    neighbors: np.ndarray
    weights: np.ndarray
    radius: float
    gamma: float
    seed: int = 0

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_edges(self) -> int:
        return len(self.neighbors) // 2

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    @cached_property
    def adjacency(self) -> list[list[tuple[int, float]]]:
        """Per-vertex ``[(neighbour, w_hat), ...]`` as plain Python objects for search loops."""
        nbrs = self.neighbors.tolist()
        ws = self.weights.tolist()
        offs = self.offsets.tolist()
        return [list(zip(nbrs[offs[i] : offs[i + 1]], ws[offs[i] : offs[i + 1]])) for i in range(self.n)]

    @cached_property
    def points(self) -> list[tuple[float, ...]]:
        return [tuple(p) for p in self.vertices.tolist()]

    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Undirected edges ``(u, v, w_hat)`` with ``u < v``."""
        src = np.repeat(np.arange(self.n), np.diff(self.offsets))
        keep = src < self.neighbors
        return src[keep], self.neighbors[keep], self.weights[keep]

    def validate(self) -> None:
        """Raise ``ValueError`` if symmetry or length invariants are broken."""
        src = np.repeat(np.arange(self.n), np.diff(self.offsets))
        if np.any(src == self.neighbors):
            raise ValueError("self-loop in roadmap")
        fwd = set(zip(src.tolist(), self.neighbors.tolist(), self.weights.tolist()))
        if len(fwd) != len(src):
            raise ValueError("duplicate neighbour entries")
        for u, v, w in fwd:
            if (v, u, w) not in fwd:
                raise ValueError(f"edge ({u},{v}) lacks its reverse")
        lengths = euclidean(self.vertices[src] - self.vertices[self.neighbors])
        if not np.allclose(lengths, self.weights, rtol=1e-15, atol=0.0):
            raise ValueError("edge weight differs from Euclidean length")

    # -- serialisation -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "N": self.n,
            "radius": float(self.radius),
            "gamma": float(self.gamma),
            "seed": int(self.seed),
            "vertices": self.vertices.tolist(),
            "offsets": self.offsets.tolist(),
            "neighbors": self.neighbors.tolist(),
            "weights": self.weights.tolist(),
        }

    def to_json(self) -> str:
        return _jsonfmt.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Roadmap":
        verts = np.asarray(data["vertices"], dtype=float).reshape(int(data["N"]), int(data["dim"]))
        return cls(
            verts,
            np.asarray(data["offsets"], dtype=np.int64),
            np.asarray(data["neighbors"], dtype=np.int64),
            np.asarray(data["weights"], dtype=float),
            float(data["radius"]),
            float(data["gamma"]),
            int(data["seed"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Roadmap":
        return cls.from_dict(json.loads(text))

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            _MAGIC, 1, self.dim, self.n, len(self.neighbors), self.radius, self.gamma, self.seed
        )
        return b"".join(
            [
                header,
                self.vertices.astype("<f8").tobytes(),
                self.offsets.astype("<i8").tobytes(),
                self.neighbors.astype("<i8").tobytes(),
                self.weights.astype("<f8").tobytes(),
            ]
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Roadmap":
        magic, version, dim, n, nnz, radius, gamma, seed = _HEADER.unpack_from(blob, 0)
        if magic != _MAGIC or version != 1:
            raise ValueError("not a roadmap file")
        pos = _HEADER.size

        def take(dtype, count):
            nonlocal pos
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=pos)
            pos += arr.nbytes
            return arr.astype(dtype[1:])

        verts = take("<f8", n * dim).reshape(n, dim)
        offsets = take("<i8", n + 1)
        nbrs = take("<i8", nnz)
        ws = take("<f8", nnz)
        return cls(verts, offsets, nbrs, ws, radius, gamma, seed)

    def save(self, path) -> None:
        path = str(path)
        if path.endswith(".json"):
            data = self.to_json().encode()
        else:
            data = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(data)

    @classmethod
    def load(cls, path) -> "Roadmap":
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob[:4] == _MAGIC:
            return cls.from_bytes(blob)
        return cls.from_json(blob.decode())


def _csr_from_pairs(n: int, u: np.ndarray, v: np.ndarray, w: np.ndarray):
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    ws = np.concatenate([w, w])
    order = np.lexsort((dst, src))
    src, dst, ws = src[order], dst[order], ws[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    return offsets, dst.astype(np.int64), ws.astype(float)


def roadmap_from_points(points, radius: float, gamma: float = float("nan"), seed: int = 0) -> Roadmap:
    """Connect every pair with ``0 < |u - v| <= radius``."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n >= 2:
        pairs = cKDTree(pts).query_pairs(radius * (1.0 + 1e-9), output_type="ndarray")
    else:
        pairs = np.zeros((0, 2), dtype=np.int64)
    u = pairs[:, 0].astype(np.int64)
    v = pairs[:, 1].astype(np.int64)
    w = euclidean(pts[u] - pts[v]) if len(u) else np.zeros(0)
    keep = (w > 0.0) & (w <= radius)
    offsets, nbrs, ws = _csr_from_pairs(n, u[keep], v[keep], w[keep])
    rm = Roadmap(pts, offsets, nbrs, ws, float(radius), float(gamma), int(seed))
    isolated = int(np.sum(np.diff(offsets) == 0))
    if isolated:
        warnings.warn(f"{isolated} roadmap vertices have no neighbours", RuntimeWarning, stacklevel=2)
    return rm


def roadmap_from_edges(points, edges, seed: int = 0) -> Roadmap:
    """Hand-wired roadmap over ``points`` with the given undirected ``edges``."""
    pts = np.asarray(points, dtype=float)
    pairs = np.asarray(sorted({(min(a, b), max(a, b)) for a, b in edges}), dtype=np.int64).reshape(-1, 2)
    if len(pairs) and (np.any(pairs[:, 0] == pairs[:, 1]) or pairs.min() < 0 or pairs.max() >= len(pts)):
        raise ValueError("edges must join two distinct existing vertices")
    u, v = pairs[:, 0], pairs[:, 1]
    w = euclidean(pts[u] - pts[v]) if len(u) else np.zeros(0)
    offsets, nbrs, ws = _csr_from_pairs(len(pts), u, v, w)
    radius = float(w.max()) if len(w) else 0.0
    return Roadmap(pts, offsets, nbrs, ws, radius, float("nan"), int(seed))


def build_roadmap(bounds: WorldBounds, n: int, gamma: float | None = None, seed: int = 0) -> Roadmap:
    """Sample ``n`` vertices uniformly in ``bounds`` and connect them by the r-disk rule.

    The vertex draw is ``uniform(lo, hi, size=(n, dim))`` from PCG64 seeded via
    ``SeedSequence(seed)``.
    """
    if n < 2:
        raise ValueError("a roadmap needs at least two vertices")
    if gamma is None:
        gamma = default_gamma(bounds)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    pts = rng.uniform(np.asarray(bounds.lo), np.asarray(bounds.hi), size=(n, bounds.dim))
    radius = connection_radius(n, bounds.dim, gamma)
    return roadmap_from_points(pts, radius, gamma, seed)


def attach_query(roadmap: Roadmap, start_point, goal_point, bounds: WorldBounds | None = None):
    """Append two vertices wired in with the roadmap's radius; returns ``(roadmap, Query)``."""
    new = np.asarray([start_point, goal_point], dtype=float)
    if new.shape != (2, roadmap.dim):
        raise ValueError(f"query points must have dimension {roadmap.dim}")
    if bounds is not None:
        for p in new:
            if not bounds.contains(p):
                raise ValueError(f"query point {p.tolist()} lies outside the bounds")
    n = roadmap.n
    pts = np.vstack([roadmap.vertices, new])
    u_old, v_old, w_old = roadmap.edge_list()
    us, vs, ws = [u_old], [v_old], [w_old]
    for k in range(2):
        vid = n + k
        others = np.arange(vid)
        d = euclidean(pts[:vid] - pts[vid])
        keep = (d > 0.0) & (d <= roadmap.radius)
        us.append(others[keep])
        vs.append(np.full(int(keep.sum()), vid, dtype=np.int64))
        ws.append(d[keep])
        if not keep.any():
            raise ValueError(f"{'start' if k == 0 else 'goal'} point has no roadmap neighbour")
    offsets, nbrs, wts = _csr_from_pairs(
        n + 2, np.concatenate(us), np.concatenate(vs), np.concatenate(ws)
    )
    out = Roadmap(pts, offsets, nbrs, wts, roadmap.radius, roadmap.gamma, roadmap.seed)
    return out, Query(n, n + 1)
