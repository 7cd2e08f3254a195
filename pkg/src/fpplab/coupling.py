"""Count/ordering/pair representation of an i.i.d. weight field, and the binomial split.

A field on a box is rebuilt from three independent ingredients:

* ``counts[j]``: how many edges of annulus ``j`` carry a hi-mode weight,
  Binomial(#A(j), 1 - F(d0));
* ``ranks``: a uniform ordering of each annulus (1-based rank per edge);
* ``lo``/``hi``: an independent (lo-mode, hi-mode) weight pair per edge.

Edge ``e`` of annulus ``j`` is hi-mode iff ``rank(e) <= counts[j]``.  Holding
the orderings and pairs fixed while changing counts gives the common-random-
number comparisons used by the experiments.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .lattice import Box, CylinderSpec, cylinder_mask, linf
from .paths import WeightField
from .weights import Distribution, ModeThreshold, sample_pair

FREE_GROUP = 0
"""Group label of box edges outside every annulus (cylinder mode); they get an independent hi/lo coin."""


@dataclass(frozen=True, eq=False)
class CouplingGeometry:
    """Assignment of the box's edge slots to annuli.

    ``group[s]`` is the annulus index ``j >= 1`` of slot ``s``, ``0`` for a
    box edge outside the coupled region, and ``-1`` for an invalid slot.
    """

    box: Box
    K: int
    group: np.ndarray
    j_max: int

    @classmethod
    def for_box(cls, box: Box, K: int) -> "CouplingGeometry":
        labels = box.annulus_index(K)
        return cls(box, K, labels, int(labels.max()))

    @classmethod
    def for_target(cls, target: Sequence[int], K: int, pad: float = 1.5) -> "CouplingGeometry":
        """Cube of radius ``ceil(pad * ||target||_inf)``; the outermost annulus is cut by the box."""
        radius = max(1, math.ceil(pad * linf(target)))
        return cls.for_box(Box.cube(radius, len(target)), K)

    def restricted(self, slot_mask: np.ndarray) -> "CouplingGeometry":
        """Same box, with slots outside ``slot_mask`` moved to the free group."""
        g = self.group.copy()
        g[(g > 0) & ~slot_mask] = FREE_GROUP
        return CouplingGeometry(self.box, self.K, g, self.j_max)

    def for_cylinder(self, spec: CylinderSpec) -> "CouplingGeometry":
        """Annuli intersected with the edges whose endpoints both lie in the cylinder."""
        inside = cylinder_mask(spec, self.box)
        b = self.box
        u = np.repeat(np.arange(b.n_vertices), b.d)
        a = np.tile(np.arange(b.d), b.n_vertices)
        v = np.where(b.valid_slots, u + b.strides_arr[a], 0)
        return self.restricted(b.valid_slots & inside[u] & inside[v])

    @property
    def sizes(self) -> np.ndarray:
        """``sizes[j]`` = #A(j) for j = 1..j_max; ``sizes[0]`` counts free edges."""
        g = self.group[self.group >= 0]
        return np.bincount(g, minlength=self.j_max + 1).astype(np.int64)

    def members(self, j: int) -> np.ndarray:
        """Slot ids of group ``j`` in the canonical (lexicographic) edge order."""
        ids = np.flatnonzero(self.group == j)
        return ids[np.argsort(self.box.canonical_rank[ids], kind="stable")]

    def check_index(self, j: int) -> None:
        if not 1 <= j <= self.j_max:
            raise IndexError(f"annulus index {j} outside [1, {self.j_max}]")


@dataclass(frozen=True, eq=False)
class CouplingSample:
    """One realization of (counts, orderings, pairs) on a :class:`CouplingGeometry`."""

    geometry: CouplingGeometry
    counts: np.ndarray
    ranks: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    free_hi: np.ndarray = field(repr=False)

    def __post_init__(self):
        sizes = self.geometry.sizes
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (self.geometry.j_max + 1,):
            raise ValueError("counts needs one entry per annulus plus the unused slot 0")
        if np.any(c[1:] < 0) or np.any(c[1:] > sizes[1:]):
            raise ValueError("counts must satisfy 0 <= N_j <= #A(j)")
        c = c.copy()
        c[0] = 0
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)


def sample_plan(geom: CouplingGeometry, dist: Distribution, thr: ModeThreshold, rng: np.random.Generator):
    """Orderings, weight pairs and free-edge coins, drawn in a fixed order from ``rng``."""
    n = geom.box.n_slots
    ranks = np.zeros(n, dtype=np.int64)
    for j in range(1, geom.j_max + 1):
        ids = geom.members(j)
        ranks[ids] = rng.permutation(ids.size) + 1
    valid = geom.box.valid_slots
    lo = np.full(n, np.inf)
    hi = np.full(n, np.inf)
    m = int(valid.sum())
    lo_v, hi_v = sample_pair(dist, thr, rng, m)
    lo[valid] = lo_v
    hi[valid] = hi_v
    free_hi = np.zeros(n, dtype=np.bool_)
    free = geom.group == FREE_GROUP
    free_hi[free] = rng.random(int(free.sum())) < thr.p_hi
    return ranks, lo, hi, free_hi


def draw_counts(geom: CouplingGeometry, thr: ModeThreshold, rng: np.random.Generator) -> np.ndarray:
    sizes = geom.sizes
    counts = np.zeros(geom.j_max + 1, dtype=np.int64)
    counts[1:] = rng.binomial(sizes[1:], thr.p_hi)
    return counts


def sample_coupling(
    geom: CouplingGeometry,
    dist: Distribution,
    thr: ModeThreshold,
    rng: np.random.Generator,
    counts: Sequence[int] | None = None,
) -> CouplingSample:
    """Draw orderings and pairs from ``rng``; then counts from ``rng`` unless supplied.

    Orderings and pairs are drawn first, so the same ``rng`` state gives the
    same orderings and pairs whatever counts are used.
    """
    ranks, lo, hi, free_hi = sample_plan(geom, dist, thr, rng)
    if counts is None:
        counts = draw_counts(geom, thr, rng)
    return CouplingSample(geom, np.asarray(counts, dtype=np.int64), ranks, lo, hi, free_hi)


def with_counts(c: CouplingSample, counts: Sequence[int]) -> CouplingSample:
    return replace(c, counts=np.asarray(counts, dtype=np.int64))


def flip_count(c: CouplingSample, j: int, new_n: int) -> CouplingSample:
    """Copy of ``c`` with ``N_j`` replaced; orderings and pairs are shared."""
    c.geometry.check_index(j)
    counts = np.array(c.counts)
    counts[j] = new_n
    return with_counts(c, counts)


def hi_mask(c: CouplingSample) -> np.ndarray:
    g = c.geometry.group
    in_ann = g > 0
    gi = np.where(in_ann, g, 0)
    return (in_ann & (c.ranks <= c.counts[gi])) | ((g == FREE_GROUP) & c.free_hi)


def assemble_field(c: CouplingSample, thr: ModeThreshold | None = None) -> WeightField:
    """t_e = hi_e when e is among the first N_j edges of its annulus ordering, lo_e otherwise."""
    if np.any(c.geometry.group[c.geometry.box.valid_slots] < 0):
        raise ValueError("coupling does not cover every box edge")
    slots = np.where(hi_mask(c), c.hi, c.lo)
    return WeightField.from_slots(c.geometry.box, slots)


# ---------------------------------------------------------------------------
# snapshots

_MAGIC = b"FPPCPL"
_VERSION = 1


def to_bytes(c: CouplingSample) -> bytes:
    """Versioned little-endian snapshot: header, box, K, then the per-slot arrays."""
    g = c.geometry
    d = g.box.d
    out = [_MAGIC, struct.pack("<HII", _VERSION, d, g.K)]
    out.append(np.asarray(g.box.lo + g.box.hi, dtype="<i8").tobytes())
    out.append(struct.pack("<I", g.j_max))
    out.append(c.counts.astype("<i8").tobytes())
    out.append(g.group.astype("<i8").tobytes())
    out.append(c.ranks.astype("<i8").tobytes())
    out.append(c.lo.astype("<f8").tobytes())
    out.append(c.hi.astype("<f8").tobytes())
    out.append(c.free_hi.astype("u1").tobytes())
    return b"".join(out)


def from_bytes(data: bytes) -> CouplingSample:
    if data[:6] != _MAGIC:
        raise ValueError("not a coupling snapshot")
    version, d, K = struct.unpack_from("<HII", data, 6)
    if version != _VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    pos = 6 + struct.calcsize("<HII")

    def take(dtype, count):
        nonlocal pos
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
        pos += arr.nbytes
        return arr.copy()

    corners = take("<i8", 2 * d)
    box = Box(tuple(corners[:d]), tuple(corners[d:]))
    (j_max,) = struct.unpack_from("<I", data, pos)
    pos += 4
    counts = take("<i8", j_max + 1).astype(np.int64)
    n = box.n_slots
    group = take("<i8", n).astype(np.int64)
    ranks = take("<i8", n).astype(np.int64)
    lo = take("<f8", n).astype(np.float64)
    hi = take("<f8", n).astype(np.float64)
    free_hi = take("u1", n).astype(np.bool_)
    if pos != len(data):
        raise ValueError("trailing bytes in snapshot")
    geom = CouplingGeometry(box, int(K), group, int(j_max))
    return CouplingSample(geom, counts, ranks, lo, hi, free_hi)


# ---------------------------------------------------------------------------
# binomial split


def binomial_pmf(n: int, p: float) -> np.ndarray:
    return stats.binom.pmf(np.arange(n + 1), n, p)


def binomial_quantile(n: int, p: float, t) -> int | np.ndarray:
    """Generalized inverse ``min{k : F(k) >= t}`` of the Binomial(n, p) CDF."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0,1)")
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr <= 0.0) | (t_arr > 1.0)):
        raise ValueError("t must lie in (0,1]")
    cdf = np.cumsum(binomial_pmf(n, p))
    k = np.minimum(np.searchsorted(cdf, t_arr, side="left"), n)
    return int(k) if k.ndim == 0 else k.astype(np.int64)


@dataclass(frozen=True)
class SplitLaws:
    """Laws of the lower-half and upper-half inverse-CDF images of a binomial.

    ``x_pmf[k]`` is P(F^{-1}(U) = k) for U uniform on (0, 1/2] and ``z_pmf``
    the same for U on [1/2, 1); both are supported on ``0..n``.
    """

    n: int
    p: float
    x_pmf: np.ndarray
    z_pmf: np.ndarray
    median: int
    cdf: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return self.n * self.p

    @property
    def sd(self) -> float:
        return math.sqrt(self.n * self.p * (1.0 - self.p))

    def mixture_pmf(self) -> np.ndarray:
        """Law of X + eta (Z - X) with eta a fair coin independent of X, Z."""
        return 0.5 * self.x_pmf + 0.5 * self.z_pmf

    def gap_pmf(self) -> np.ndarray:
        """Law of Y = Z - X for independent X and Z; indexed by 0..n."""
        full = np.convolve(self.z_pmf, self.x_pmf[::-1])
        neg, pos = full[: self.n], full[self.n :]
        if np.any(neg > 1e-15):
            raise AssertionError("Z - X took a negative value")
        return pos

    def draw(self, rng: np.random.Generator, size=None):
        """Independent (X, Z, eta) by inverse CDF on the two halves of (0, 1)."""
        u = 0.5 * (1.0 - rng.random(size))  # (0, 1/2]
        v = 0.5 + 0.5 * rng.random(size)  # [1/2, 1)
        eta = rng.random(size) < 0.5
        x = np.minimum(np.searchsorted(self.cdf, u, side="left"), self.n)
        z = np.minimum(np.searchsorted(self.cdf, v, side="left"), self.n)
        return x, z, eta


def split_binomial(n: int, p: float) -> SplitLaws:
    """Split Binomial(n, p) at its median into the two half-conditioned laws.

    With m = F^{-1}(1/2): X puts mass 2 pmf(k) on k < m and 2(1/2 - F(m-1))
    on m; Z puts 2(F(m) - 1/2) on m and 2 pmf(k) on k > m.  Every entry is
    taken from the pmf directly, so the halves recombine to it to rounding.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0,1)")
    pmf = binomial_pmf(n, p)
    cdf = np.cumsum(pmf)
    m = int(min(np.searchsorted(cdf, 0.5, side="left"), n))
    below = float(cdf[m - 1]) if m > 0 else 0.0
    x = np.zeros(n + 1)
    z = np.zeros(n + 1)
    x[:m] = 2.0 * pmf[:m]
    z[m + 1 :] = 2.0 * pmf[m + 1 :]
    x_at = max(0.0, 2.0 * (0.5 - below))
    x[m] = x_at
    # the two halves share pmf[m]; take Z's share as the remainder
    z[m] = 2.0 * pmf[m] - x_at
    return SplitLaws(n, p, x, z, m, cdf)


# ---------------------------------------------------------------------------
# eligible index set


def index_range(K: int, x: Sequence[int]) -> tuple[int, int]:
    """[ceil(0.25 log_K m), floor(0.75 log_K m)] with m = ||x||_inf, in integer arithmetic."""
    m = linf(x)
    if m == 0:
        raise ValueError("index range is undefined at the origin")
    # ceil(L/4) is the least j with K^(4j) >= m; floor(3L/4) the largest with K^(4j) <= m^3
    j_lo = 0
    while K ** (4 * j_lo) < m:
        j_lo += 1
    j_hi = 0
    while K ** (4 * (j_hi + 1)) <= m**3:
        j_hi += 1
    return j_lo, j_hi


@dataclass(frozen=True)
class EligibleIndexSet:
    j_lo: int
    j_hi: int
    members: tuple[int, ...]


def eligible_indices(
    draws: Mapping[int, tuple[int, int]],
    sizes: Sequence[int],
    p_hi: float,
    K: int,
    x: Sequence[int],
) -> EligibleIndexSet:
    """Indices j in range with X_j <= mu_j - sigma_j and Z_j >= mu_j + sigma_j.

    ``draws[j] = (X_j, Z_j)``; ``sizes[j] = #A(j)``; indices beyond the
    available annuli are dropped from the range.
    """
    j_lo, j_hi = index_range(K, x)
    members = []
    for j in range(max(1, j_lo), min(j_hi, len(sizes) - 1) + 1):
        if j not in draws:
            raise KeyError(f"no split draw for index {j}")
        n = int(sizes[j])
        mu = n * p_hi
        sigma = math.sqrt(n * p_hi * (1.0 - p_hi))
        xj, zj = draws[j]
        if xj <= mu - sigma and zj >= mu + sigma:
            members.append(j)
    return EligibleIndexSet(j_lo, j_hi, tuple(members))


@dataclass(frozen=True)
class SplitDraw:
    """Per-annulus (X_j, Z_j, eta_j); ``counts`` realizes N_j = X_j + eta_j (Z_j - X_j)."""

    x: np.ndarray
    z: np.ndarray
    eta: np.ndarray

    def counts(self, eta: np.ndarray | None = None) -> np.ndarray:
        e = self.eta if eta is None else np.asarray(eta, dtype=bool)
        c = np.where(e, self.z, self.x).astype(np.int64)
        c[0] = 0
        return c


def draw_split(geom: CouplingGeometry, thr: ModeThreshold, rng: np.random.Generator) -> SplitDraw:
    sizes = geom.sizes
    x = np.zeros(geom.j_max + 1, dtype=np.int64)
    z = np.zeros(geom.j_max + 1, dtype=np.int64)
    eta = np.zeros(geom.j_max + 1, dtype=np.bool_)
    for j in range(1, geom.j_max + 1):
        if sizes[j] == 0:
            continue
        if thr.p_hi <= 0.0 or thr.p_hi >= 1.0:
            x[j] = z[j] = 0 if thr.p_hi <= 0.0 else sizes[j]
            eta[j] = rng.random() < 0.5
            continue
        xj, zj, ej = split_binomial(int(sizes[j]), thr.p_hi).draw(rng)
        x[j], z[j], eta[j] = xj, zj, ej
    if np.any(z < x):
        raise AssertionError("Z_j < X_j in a split draw")
    return SplitDraw(x, z, eta)
