"""Open-edge clusters, closest-giant-vertex map and shelter events."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from . import kernels
from .lattice import Box, Vertex, as_vertex
from .paths import WeightField


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """Connected components of the subgraph of edges with weight ``<= threshold``.

    Labels are compact (0..n_clusters-1), numbered by first appearance in flat
    vertex order.  The giant cluster is the largest; ties go to the smaller label.
    """

    box: Box
    threshold: float
    labels: np.ndarray
    sizes: np.ndarray
    giant_id: int

    @property
    def n_clusters(self) -> int:
        return int(self.sizes.size)

    @property
    def giant_mask(self) -> np.ndarray:
        return self.labels == self.giant_id

    @property
    def giant_density(self) -> float:
        return float(self.sizes[self.giant_id]) / self.box.n_vertices

    def label(self, v: Sequence[int]) -> int:
        return int(self.labels[self.box.flat(v)])

    def connected(self, a: Sequence[int], b: Sequence[int]) -> bool:
        return self.label(a) == self.label(b)


def open_clusters(field: WeightField, threshold: float) -> ClusterLabeling:
    b = field.box
    roots = kernels.open_cluster_roots(field.weights, b.shape_arr, b.strides_arr, float(threshold))
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    # renumber so label order follows the first vertex of each cluster
    order = np.argsort(first, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    labels = relabel[inverse].astype(np.int64)
    sizes = np.bincount(labels).astype(np.int64)
    giant = int(np.flatnonzero(sizes == sizes.max())[0])
    return ClusterLabeling(b, float(threshold), labels, sizes, giant)


def tilde_map(labeling: ClusterLabeling, x: Sequence[int]) -> Vertex:
    """Giant-cluster vertex closest to ``x`` in Euclidean distance; ties go to the lexicographically smallest."""
    idx = np.flatnonzero(labeling.giant_mask)
    if idx.size == 0:
        raise ValueError("empty giant cluster")
    pts = labeling.box.coords[idx]
    diff = pts - np.asarray(as_vertex(x), dtype=np.int64)
    d2 = np.einsum("ij,ij->i", diff, diff)
    best = idx[d2 == d2.min()]
    # flat order is lexicographic order of coordinates
    return labeling.box.vertex(int(best.min()))


def shelter_check(labeling: ClusterLabeling, n: int, center: Sequence[int]) -> bool:
    """True iff every lattice path from ``center`` to the shell of ``[center - n, center + n]^d`` hits the giant cluster."""
    box = labeling.box
    c = as_vertex(center)
    lo = tuple(ci - n for ci in c)
    hi = tuple(ci + n for ci in c)
    if n < 1 or not (box.contains(lo) and box.contains(hi)):
        raise ValueError("shelter window must have n >= 1 and lie inside the box")
    if labeling.giant_mask[box.flat(c)]:
        return True
    grid = labeling.giant_mask.reshape(box.shape)
    sl = tuple(slice(l - bl, h - bl + 1) for l, h, bl in zip(lo, hi, box.lo))
    free = ~grid[sl]
    comp, _ = ndimage.label(free)  # nearest-neighbour connectivity
    mine = comp[(n,) * box.d]
    shell = np.zeros(free.shape, dtype=bool)
    for a in range(box.d):
        idx = [slice(None)] * box.d
        idx[a] = 0
        shell[tuple(idx)] = True
        idx[a] = -1
        shell[tuple(idx)] = True
    return not bool(np.any(comp[shell] == mine))


def shelter_frequency(labelings, n: int, center: Sequence[int]) -> float:
    hits = [shelter_check(lab, n, center) for lab in labelings]
    return float(np.mean(hits)) if hits else float("nan")
