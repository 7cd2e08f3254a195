"""Truncation windows, conditional-mean estimates given the counts, and the median search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..coupling import draw_counts
from ..seeding import stream, worker_map
from .model import ModelParams, evaluate, inner_sample


@dataclass(frozen=True)
class TruncationWindow:
    a_low: float
    width: float

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("window width must be >= 0")

    @property
    def b_high(self) -> float:
        return self.a_low + self.width

    @property
    def mid(self) -> float:
        return self.a_low + self.width / 2.0

    @property
    def inner_interval(self) -> tuple[float, float]:
        return (self.mid - self.width / 4.0, self.mid + self.width / 4.0)

    def in_inner(self, t) -> np.ndarray | bool:
        lo, hi = self.inner_interval
        return (np.asarray(t) >= lo) & (np.asarray(t) <= hi)

    def to_dict(self) -> dict:
        lo, hi = self.inner_interval
        return {
            "a_low": self.a_low,
            "b_high": self.b_high,
            "mid": self.mid,
            "width": self.width,
            "inner_low": lo,
            "inner_high": hi,
        }


def clamp_truncate(t, w: TruncationWindow):
    """min(max(t, a_low), b_high); scalars stay scalars."""
    out = np.minimum(np.maximum(t, w.a_low), w.b_high)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ConditionalMeanEstimate:
    value: float
    stderr: float
    replicates: int
    seed_tag: str

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "replicates": self.replicates, "seed_tag": self.seed_tag}


def mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def inner_key(seed: int, key: Sequence[int], r: int):
    return stream(seed, "inner", *key, r)


def inner_times(
    model: ModelParams,
    counts: Sequence[int],
    replicates: int,
    seed: int,
    key: Sequence[int] = (),
    workers: int | None = None,
) -> np.ndarray:
    """Passage times over ``replicates`` orderings/pairs with ``counts`` held fixed.

    Replicate ``r`` uses the stream ``(seed, "inner", *key, r)``; with the same
    key, different counts see identical orderings and pairs.
    """
    counts = np.asarray(counts, dtype=np.int64)

    def one(r: int) -> float:
        return evaluate(model, inner_sample(model, counts, inner_key(seed, key, r))).time

    return np.asarray(worker_map(one, range(replicates), workers), dtype=float)


def estimate_conditional_mean(
    model: ModelParams,
    counts: Sequence[int],
    window: TruncationWindow,
    replicates: int,
    seed: int,
    key: Sequence[int] = (),
    workers: int | None = None,
) -> ConditionalMeanEstimate:
    """Monte Carlo E[clamp(T) | counts]; the default empty key pairs streams across counts."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    t = clamp_truncate(inner_times(model, counts, replicates, seed, key, workers), window)
    value, se = mean_se(np.atleast_1d(t))
    tag = "inner/" + "/".join(str(k) for k in key) if key else "inner"
    return ConditionalMeanEstimate(value, se, replicates, f"{seed}:{tag}")


def outer_counts(model: ModelParams, seed: int, i: int) -> np.ndarray:
    """Counts vector for outer draw ``i``."""
    return draw_counts(model.geometry, model.threshold, stream(seed, "outer", i))


def time_matrix(model: ModelParams, outer: int, inner: int, seed: int, workers: int | None = None) -> np.ndarray:
    """(outer, inner) passage times; row i holds independent replicates given outer draw i."""
    rows = []
    for i in range(outer):
        rows.append(inner_times(model, outer_counts(model, seed, i), inner, seed, (i,), workers))
    return np.vstack(rows) if rows else np.zeros((0, inner))


def median_gap(times: np.ndarray, a: float, width: float) -> float:
    """median_i mean_r clamp(T_ir, a, a + w) minus the window midpoint; nonincreasing in ``a``."""
    est = np.clip(times, a, a + width).mean(axis=1)
    return float(np.median(est) - (a + width / 2.0))


@dataclass(frozen=True)
class TruncationResult:
    window: TruncationWindow
    gap: float
    tol: float
    converged: bool
    iterations: int
    outer: int
    inner: int

    def to_dict(self) -> dict:
        out = self.window.to_dict()
        out.update(
            gap=self.gap, tol=self.tol, converged=self.converged, iterations=self.iterations, outer=self.outer, inner=self.inner
        )
        return out


def find_truncation_from_times(times: np.ndarray, width: float, tol: float, max_iter: int = 200) -> tuple[float, float, bool, int]:
    """Bisection for the window start; returns (a, gap, converged, iterations).

    The gap is continuous and nonincreasing in ``a``; it equals ``+w/2`` for
    ``a <= min T - w`` and ``-w/2`` for ``a >= max T``, so a root is bracketed.
    """
    if width == 0.0:
        a = float(np.median(times.mean(axis=1)))
        return a, 0.0, True, 0
    lo = float(times.min()) - width
    hi = float(times.max())
    best_a, best_gap = lo, median_gap(times, lo, width)
    for it in range(1, max_iter + 1):
        a = 0.5 * (lo + hi)
        g = median_gap(times, a, width)
        if abs(g) < abs(best_gap):
            best_a, best_gap = a, g
        if abs(g) <= tol:
            return a, g, True, it
        if g > 0:
            lo = a
        else:
            hi = a
    return best_a, best_gap, abs(best_gap) <= tol, max_iter


def find_truncation(
    model: ModelParams,
    seed: int,
    tol: float | None = None,
    outer: int = 200,
    inner: int = 100,
    max_iter: int = 200,
    workers: int | None = None,
) -> TruncationResult:
    """Window [A, A + w] whose midpoint is an empirical median of E[clamp(T) | counts].

    One matrix of passage times (outer count draws x inner replicates) is
    computed once and shared by every candidate ``A``, so all comparisons
    along the bisection are paired.  For ||x|| = 1 every ``A`` works and 0 is
    returned.
    """
    width = model.width()
    tol = 0.05 * width if tol is None else tol
    if model.norm <= 1.0:
        return TruncationResult(TruncationWindow(0.0, width), 0.0, tol, True, 0, 0, 0)
    times = time_matrix(model, outer, inner, seed, workers)
    a, gap, ok, it = find_truncation_from_times(times, width, tol, max_iter)
    return TruncationResult(TruncationWindow(a, width), gap, tol, ok, it, outer, inner)
