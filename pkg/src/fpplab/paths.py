"""Passage times, geodesics, geodesic unions and hi-mode counts on weighted boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .lattice import Box, CylinderSpec, Edge, as_vertex, cylinder_mask, linf
from .seeding import stream, worker_map
from .weights import Distribution, ModeThreshold, augment_himode

TIE_TOL = 1e-9
"""Absolute tolerance for geodesic tie tests.  Integer-valued weights sum
exactly in floating point, so for them every tie test is exact."""


@dataclass(frozen=True, eq=False)
class WeightField:
    """Nonnegative weights on every edge of ``box``; ``weights[u, a]`` is edge ``{u, u + e_a}``."""

    box: Box
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(self.box.n_vertices, self.box.d)
        w = np.where(self.box.valid_slots.reshape(w.shape), w, np.inf)
        vals = w.reshape(-1)[self.box.edge_ids]
        if np.isnan(vals).any() or (vals < 0).any():
            raise ValueError("edge weights must be nonnegative numbers")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_slots(cls, box: Box, slots: np.ndarray) -> "WeightField":
        return cls(box, np.asarray(slots, dtype=np.float64).reshape(box.n_vertices, box.d))

    @classmethod
    def constant(cls, box: Box, value: float) -> "WeightField":
        return cls(box, np.full((box.n_vertices, box.d), float(value)))

    @classmethod
    def iid(cls, box: Box, dist: Distribution, rng: np.random.Generator) -> "WeightField":
        slots = np.full(box.n_slots, np.inf)
        slots[box.edge_ids] = dist.sample(rng, box.n_edges)
        return cls.from_slots(box, slots)

    @classmethod
    def from_edges(cls, box: Box, weights: Mapping[Edge, float], default: float = 1.0) -> "WeightField":
        slots = np.full(box.n_slots, float(default))
        for e, w in weights.items():
            slots[box.edge_id(e)] = float(w)
        return cls.from_slots(box, slots)

    @property
    def slots(self) -> np.ndarray:
        return self.weights.reshape(-1)

    def weight(self, e: Edge) -> float:
        return float(self.slots[self.box.edge_id(e)])

    def replace_slots(self, slots: np.ndarray) -> "WeightField":
        return WeightField.from_slots(self.box, slots)


@dataclass
class GeodesicReport:
    """Passage time between two vertices together with its geodesic structure."""

    time: float
    witness: tuple[Edge, ...]
    union_ids: np.ndarray
    touched_boundary: bool
    box: Box
    annulus_hi_counts: dict[int, int] | None = None
    dist_from: np.ndarray | None = field(default=None, repr=False)
    dist_to: np.ndarray | None = field(default=None, repr=False)
    source: int = -1
    target: int = -1

    @property
    def union_edges(self) -> frozenset[Edge]:
        return self.box.edges(self.union_ids)


def _all_allowed(box: Box) -> np.ndarray:
    return np.ones(box.n_vertices, dtype=np.bool_)


def _run(field: WeightField, source: int, target: int, allowed, limit=np.inf, slack=-1.0):
    b = field.box
    return kernels.dijkstra(
        field.weights, b.shape_arr, b.strides_arr, allowed, int(source), int(target), float(limit), float(slack)
    )


def point_to_point(field: WeightField, x: Sequence[int], y: Sequence[int], allowed=None) -> float:
    """T(x, y) only, with the search stopped as soon as y is settled."""
    b = field.box
    allowed = _all_allowed(b) if allowed is None else allowed
    sx, sy = b.flat(x), b.flat(y)
    dist, _ = _run(field, sx, sy, allowed)
    return float(dist[sy])


def _witness(box: Box, pred: np.ndarray, source: int, target: int) -> tuple[Edge, ...]:
    d = box.d
    edges = []
    v = target
    while v != source:
        s = int(pred[v])
        if s < 0:
            raise RuntimeError("broken predecessor chain")
        u, a = divmod(s, d)
        edges.append(box.edge(s))
        # slot s joins u and u + e_a; step to whichever endpoint is not v
        v = u if v != u else u + box.strides[a]
    edges.reverse()
    return tuple(edges)


def union_mask(field: WeightField, dist_from: np.ndarray, dist_to: np.ndarray, total: float, tol: float = TIE_TOL):
    """Edge-slot mask of the geodesic union given both distance maps."""
    b = field.box
    n, d = b.n_vertices, b.d
    w = field.weights
    u = np.repeat(np.arange(n), d)
    a = np.tile(np.arange(d), n)
    valid = b.valid_slots
    v = np.where(valid, u + b.strides_arr[a], 0)
    ws = w.reshape(-1)
    with np.errstate(invalid="ignore"):
        fwd = dist_from[u] + ws + dist_to[v]
        bwd = dist_from[v] + ws + dist_to[u]
    return valid & (np.minimum(fwd, bwd) <= total + tol)


def geodesics(field: WeightField, x: Sequence[int], y: Sequence[int], allowed=None, tol: float = TIE_TOL) -> GeodesicReport:
    """T(x, y), one geodesic, the union of all geodesics, and the boundary-contact flag.

    Two searches: forward from x until every vertex within ``tol`` of T is
    settled, then backward from y up to ``T + tol``.
    """
    b = field.box
    allowed = _all_allowed(b) if allowed is None else np.asarray(allowed, dtype=np.bool_)
    x, y = as_vertex(x), as_vertex(y)
    sx, sy = b.flat(x), b.flat(y)
    dx, pred = _run(field, sx, sy, allowed, np.inf, tol)
    total = float(dx[sy])
    if not math.isfinite(total):
        raise ValueError(f"no admissible path from {x} to {y}")
    dy, _ = _run(field, sy, -1, allowed, total + tol, -1.0)
    umask = union_mask(field, dx, dy, total, tol)
    on_geo = (dx + dy) <= total + tol
    touched = bool(np.any(on_geo & b.boundary))
    return GeodesicReport(
        time=total,
        witness=_witness(b, pred, sx, sy),
        union_ids=np.flatnonzero(umask),
        touched_boundary=touched,
        box=b,
        dist_from=dx,
        dist_to=dy,
        source=sx,
        target=sy,
    )


def passage_time(field: WeightField, x: Sequence[int], y: Sequence[int], tol: float = TIE_TOL) -> GeodesicReport:
    return geodesics(field, x, y, None, tol)


def geodesic_union(field: WeightField, x: Sequence[int], y: Sequence[int], tol: float = TIE_TOL) -> frozenset[Edge]:
    return geodesics(field, x, y, None, tol).union_edges


def path_time(field: WeightField, path: Iterable[Edge]) -> float:
    return math.fsum(field.weight(e) for e in path)


def region_mask(box: Box, region) -> np.ndarray:
    """Normalize a region (None/"all", slot mask, or edge collection) to a slot mask."""
    if region is None or (isinstance(region, str) and region == "all"):
        return box.valid_slots.copy()
    if isinstance(region, np.ndarray) and region.dtype == np.bool_:
        if region.shape != (box.n_slots,):
            raise ValueError("region mask must have one entry per edge slot")
        return region & box.valid_slots
    mask = np.zeros(box.n_slots, dtype=np.bool_)
    for e in region:
        if all(box.contains(p) for p in (e.u, e.v)):
            mask[box.edge_id(e)] = True
    return mask


def min_cost_on_geodesics(field: WeightField, report: GeodesicReport, cost: np.ndarray, tol: float = TIE_TOL) -> float:
    b = field.box
    return kernels.geodesic_min_cost(
        field.weights,
        b.shape_arr,
        b.strides_arr,
        report.dist_from,
        report.dist_to,
        report.time,
        tol,
        np.asarray(cost, dtype=np.float64),
        report.source,
        report.target,
    )


def min_himode_count(
    field: WeightField,
    thr: ModeThreshold,
    x: Sequence[int],
    y: Sequence[int],
    region=None,
    report: GeodesicReport | None = None,
    allowed=None,
    tol: float = TIE_TOL,
) -> int:
    """Fewest hi-mode edges inside ``region`` carried by any geodesic from x to y."""
    b = field.box
    mask = region_mask(b, region)
    if not mask.any():
        raise ValueError("region does not meet the box")
    if report is None:
        report = geodesics(field, x, y, allowed, tol)
    cost = (mask & (field.slots > thr.d0)).astype(np.float64)
    best = min_cost_on_geodesics(field, report, cost, tol)
    if best < 0:
        raise RuntimeError("geodesic subgraph does not connect the endpoints")
    return int(round(best))


def annulus_hi_counts(
    field: WeightField,
    thr: ModeThreshold,
    report: GeodesicReport,
    labels: np.ndarray,
    indices: Iterable[int],
    tol: float = TIE_TOL,
) -> dict[int, int]:
    """Per-annulus minimal hi-mode counts; fills ``report.annulus_hi_counts``."""
    hi = field.slots > thr.d0
    out = {}
    for j in indices:
        cost = ((labels == j) & hi).astype(np.float64)
        out[int(j)] = int(round(min_cost_on_geodesics(field, report, cost, tol)))
    report.annulus_hi_counts = out
    return out


def cylinder_passage_time(field: WeightField, spec: CylinderSpec, tol: float = TIE_TOL) -> GeodesicReport:
    """T(0, x; alpha): geodesics from 0 to the cylinder target through cylinder vertices only."""
    b = field.box
    origin = (0,) * b.d
    if not (b.contains(origin) and b.contains(spec.target)):
        raise ValueError("0 and the cylinder target must lie in the box")
    allowed = cylinder_mask(spec, b)
    return geodesics(field, origin, spec.target, allowed, tol)


# ---------------------------------------------------------------------------
# time constant


def plane_box(target: Sequence[int], pad: float = 1.5) -> Box:
    """Cube of L-infinity radius ``ceil(pad * ||target||_inf)`` around the origin."""
    return Box.cube(max(1, math.ceil(pad * linf(target))), len(target))


def estimate_time_constant(
    dist: Distribution,
    direction: Sequence[int],
    n_list: Sequence[int],
    replicates: int,
    seed: int,
    thr: ModeThreshold | None = None,
    pad: float = 1.5,
    workers: int | None = None,
) -> list[dict]:
    """Monte Carlo T(0, n * direction) / n with standard errors.

    With ``thr`` given, each replicate also reports the same quantity for the
    augmented field (hi-mode weights + 1) built from the same draw.
    """
    direction = as_vertex(direction)
    rows = []
    for n in n_list:
        target = tuple(n * c for c in direction)
        box = plane_box(target, pad)
        origin = (0,) * len(target)

        def one(r, n=n, target=target, box=box):
            f = WeightField.iid(box, dist, stream(seed, "time-constant", n, r))
            t = point_to_point(f, origin, target) / n
            if thr is None:
                return t, math.nan
            return t, point_to_point(augment_himode(f, thr), origin, target) / n

        vals = np.asarray(worker_map(one, range(replicates), workers))
        row = {
            "n": int(n),
            "replicates": int(replicates),
            "mean": float(vals[:, 0].mean()),
            "se": float(vals[:, 0].std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0,
        }
        if thr is not None:
            row["mean_augmented"] = float(vals[:, 1].mean())
            row["se_augmented"] = float(vals[:, 1].std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
            row["min_paired_gap"] = float((vals[:, 1] - vals[:, 0]).min())
        rows.append(row)
    return rows
