"""Finite-box geometry of Z^d: vertices, nearest-neighbour edges, annuli, cylinders.

Vertices are tuples of ints.  Inside a :class:`Box` every vertex has a flat
index (C order, first coordinate slowest) and every edge ``{u, u + e_a}`` has
the integer id ``flat(u) * d + a``.  Array-valued edge data throughout the
package is indexed by these ids; slots whose edge would leave the box are
marked invalid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Vertex = tuple[int, ...]


def as_vertex(v: Iterable[int]) -> Vertex:
    return tuple(int(c) for c in v)


def linf(v: Sequence[int]) -> int:
    return max(abs(int(c)) for c in v)


def euclid(v: Sequence[float]) -> float:
    return math.sqrt(sum(float(c) * float(c) for c in v))


def floor_log(base: int, m: int) -> int:
    """Largest k with base**k <= m, in exact integer arithmetic."""
    if m < 1:
        raise ValueError("floor_log needs m >= 1")
    k, p = 0, base
    while p <= m:
        k += 1
        p *= base
    return k


def ceil_log(base: int, m: int) -> int:
    """Smallest k >= 0 with base**k >= m."""
    k, p = 0, 1
    while p < m:
        k += 1
        p *= base
    return k


@dataclass(frozen=True, order=True)
class Edge:
    """Unordered nearest-neighbour edge, stored with the lexicographically smaller endpoint first.

    The dataclass ordering (``u`` then ``v``) is the deterministic edge order
    used wherever a canonical choice is needed.
    """

    u: Vertex
    v: Vertex

    def __post_init__(self):
        if len(self.u) != len(self.v):
            raise ValueError("endpoints live in different dimensions")
        diff = [b - a for a, b in zip(self.u, self.v)]
        if sorted(abs(x) for x in diff)[-1] != 1 or sum(abs(x) for x in diff) != 1:
            raise ValueError(f"{self.u} and {self.v} are not nearest neighbours")
        if self.v < self.u:
            raise ValueError("use Edge.between() to build edges from unordered endpoints")

    @classmethod
    def between(cls, a: Iterable[int], b: Iterable[int]) -> "Edge":
        a, b = as_vertex(a), as_vertex(b)
        return cls(a, b) if a <= b else cls(b, a)

    @property
    def axis(self) -> int:
        return next(i for i, (a, b) in enumerate(zip(self.u, self.v)) if a != b)


@dataclass(frozen=True)
class ScaleParams:
    """Annulus growth base ``K`` and largest annulus index ``j_max``."""

    K: int = 4
    j_max: int = 1
    d: int = 2

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.j_max < 1:
            raise ValueError("j_max must be >= 1")
        if self.d < 2:
            raise ValueError("d must be >= 2")

    def radius(self, j: int) -> int:
        return self.K**j

    def _check(self, j: int) -> None:
        if not 1 <= j <= self.j_max:
            raise ValueError(f"annulus index {j} outside [1, {self.j_max}]")


class Box:
    """Axis-aligned box ``[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]`` of lattice vertices."""

    def __init__(self, lo: Sequence[int], hi: Sequence[int]):
        self.lo = as_vertex(lo)
        self.hi = as_vertex(hi)
        if len(self.lo) != len(self.hi) or len(self.lo) < 1:
            raise ValueError("lo and hi must have the same positive length")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("empty box")
        self.d = len(self.lo)
        self.shape = tuple(h - l + 1 for l, h in zip(self.lo, self.hi))
        strides = [1] * self.d
        for a in range(self.d - 2, -1, -1):
            strides[a] = strides[a + 1] * self.shape[a + 1]
        self.strides = tuple(strides)
        self.n_vertices = int(np.prod(self.shape))
        self.n_slots = self.n_vertices * self.d

    @classmethod
    def cube(cls, radius: int, d: int = 2) -> "Box":
        return cls((-radius,) * d, (radius,) * d)

    def __repr__(self) -> str:
        return f"Box(lo={self.lo}, hi={self.hi})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Box) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    # vertices -----------------------------------------------------------
    def contains(self, v: Sequence[int]) -> bool:
        return len(v) == self.d and all(l <= c <= h for c, l, h in zip(v, self.lo, self.hi))

    def flat(self, v: Sequence[int]) -> int:
        if not self.contains(v):
            raise ValueError(f"vertex {tuple(v)} outside {self!r}")
        return sum((int(c) - l) * s for c, l, s in zip(v, self.lo, self.strides))

    def vertex(self, idx: int) -> Vertex:
        return tuple(int(c) for c in self.coords[idx])

    @cached_property
    def coords(self) -> np.ndarray:
        """(n_vertices, d) integer coordinates, row i for flat index i."""
        grids = np.indices(self.shape).reshape(self.d, -1).T
        return (grids + np.asarray(self.lo)).astype(np.int64)

    @cached_property
    def shape_arr(self) -> np.ndarray:
        return np.asarray(self.shape, dtype=np.int64)

    @cached_property
    def strides_arr(self) -> np.ndarray:
        return np.asarray(self.strides, dtype=np.int64)

    @cached_property
    def boundary(self) -> np.ndarray:
        """Vertices with a lattice neighbour outside the box."""
        c = self.coords
        return np.any((c == np.asarray(self.lo)) | (c == np.asarray(self.hi)), axis=1)

    # edges --------------------------------------------------------------
    @cached_property
    def valid_slots(self) -> np.ndarray:
        """Boolean mask over edge ids; False where ``u + e_a`` leaves the box."""
        return (self.coords < np.asarray(self.hi)).reshape(-1)

    @cached_property
    def edge_ids(self) -> np.ndarray:
        return np.flatnonzero(self.valid_slots)

    @property
    def n_edges(self) -> int:
        return int(self.edge_ids.size)

    def edge_id(self, e: Edge) -> int:
        return self.flat(e.u) * self.d + e.axis

    def edge(self, eid: int) -> Edge:
        u_idx, a = divmod(int(eid), self.d)
        u = self.vertex(u_idx)
        v = list(u)
        v[a] += 1
        return Edge(u, tuple(v))

    def edges(self, ids: Iterable[int]) -> frozenset[Edge]:
        return frozenset(self.edge(i) for i in ids)

    @cached_property
    def edge_far_coords(self) -> np.ndarray:
        """(n_slots, d) coordinates of the upper endpoint ``u + e_a`` of every slot."""
        far = np.repeat(self.coords, self.d, axis=0)
        far[np.arange(self.n_slots), np.tile(np.arange(self.d), self.n_vertices)] += 1
        return far

    @cached_property
    def canonical_rank(self) -> np.ndarray:
        """Position of every valid edge id in the lexicographic (u, v) edge order."""
        ids = self.edge_ids
        u = ids // self.d
        a = ids % self.d
        # for a shared lower endpoint u, u + e_a is lexicographically smaller for larger a
        order = np.lexsort((self.d - 1 - a, u))
        rank = np.full(self.n_slots, -1, dtype=np.int64)
        rank[ids[order]] = np.arange(ids.size)
        return rank

    def edge_linf(self) -> np.ndarray:
        """Max L-infinity norm over the two endpoints of each slot (-1 for invalid slots)."""
        near = np.repeat(np.abs(self.coords).max(axis=1), self.d)
        far = np.abs(self.edge_far_coords).max(axis=1)
        out = np.maximum(near, far)
        out[~self.valid_slots] = -1
        return out

    def annulus_index(self, K: int) -> np.ndarray:
        """Annulus label per edge slot: smallest j >= 1 with the edge inside [-K^j, K^j]^d."""
        m = self.edge_linf()
        top = max(1, ceil_log(K, max(1, int(m.max()))))
        powers = np.array([K**j for j in range(1, top + 1)], dtype=np.int64)
        j = np.searchsorted(powers, m, side="left") + 1
        j[~self.valid_slots] = -1
        return j.astype(np.int64)


def box_edges(params: ScaleParams, j: int) -> frozenset[Edge]:
    """All edges with both endpoints in ``[-K^j, K^j]^d``."""
    params._check(j)
    box = Box.cube(params.radius(j), params.d)
    return box.edges(box.edge_ids)


def annulus_edges(params: ScaleParams, j: int) -> frozenset[Edge]:
    """A(1) = B(1) and A(j) = B(j) minus B(j-1) for j >= 2."""
    params._check(j)
    box = Box.cube(params.radius(j), params.d)
    labels = box.annulus_index(params.K)
    return box.edges(np.flatnonzero(labels == j))


@dataclass(frozen=True)
class CylinderSpec:
    """Points within Euclidean distance ``||target||^alpha`` of the line through 0 and target."""

    target: Vertex
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "target", as_vertex(self.target))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if all(c == 0 for c in self.target):
            raise ValueError("cylinder target must be nonzero")

    @property
    def width(self) -> float:
        return euclid(self.target) ** self.alpha


def line_distance(target: Sequence[int], points: np.ndarray) -> np.ndarray:
    """Euclidean distance of each row of ``points`` to the line through 0 and ``target``."""
    x = np.asarray(target)
    p = np.atleast_2d(np.asarray(points))
    if np.issubdtype(x.dtype, np.integer) and np.issubdtype(p.dtype, np.integer):
        # Lagrange identity in exact integers: |p|^2 |x|^2 - (p.x)^2 = |x|^2 dist^2
        xi = x.astype(np.int64)
        pi = p.astype(np.int64)
        xx = int(xi @ xi)
        num = np.einsum("ij,ij->i", pi, pi) * xx - (pi @ xi) ** 2
        return np.sqrt(num.astype(float) / xx)
    x = x.astype(float)
    p = p.astype(float)
    unit = x / np.linalg.norm(x)
    perp = p - np.outer(p @ unit, unit)
    return np.sqrt(np.einsum("ij,ij->i", perp, perp))


def perp_distance(target: Sequence[int], points: np.ndarray) -> np.ndarray:
    """Distance to the line through 0 and ``target``; exact for axis-aligned targets."""
    x = np.asarray(target)
    p = np.atleast_2d(np.asarray(points))
    nz = np.flatnonzero(x)
    if nz.size == 1:
        perp = np.delete(p, nz[0], axis=1).astype(float)
        return np.sqrt((perp * perp).sum(axis=1))
    return line_distance(target, p)


def cylinder_contains(spec: CylinderSpec, v: Sequence[int]) -> bool:
    if len(v) != len(spec.target):
        raise ValueError("dimension mismatch between vertex and cylinder")
    return bool(perp_distance(spec.target, np.asarray([v]))[0] <= spec.width)


def cylinder_mask(spec: CylinderSpec, box: Box) -> np.ndarray:
    """Vertex mask of ``box`` restricted to the cylinder."""
    if box.d != len(spec.target):
        raise ValueError("dimension mismatch between box and cylinder")
    return perp_distance(spec.target, box.coords) <= spec.width


def scale_index(params: ScaleParams, x: Sequence[int]) -> int:
    """floor(log_K ||x||_inf)."""
    m = linf(x)
    if m == 0:
        raise ValueError("scale_index is undefined at the origin")
    return floor_log(params.K, m)
