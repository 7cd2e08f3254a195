"""Good-set membership of a counts vector, and small-ball frequencies of conditional means."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..seeding import worker_map
from .model import ModelParams, evaluate, inner_sample
from .truncation import TruncationWindow, clamp_truncate, inner_key, mean_se, outer_counts


@dataclass
class GoodSetReport:
    """Frequencies over inner replicates with the counts held fixed.

    ``item1_freq``: T(0, x) lands in the inner interval.
    ``item2_freq[j]``: every geodesic carries at least K^(j-1) hi-mode edges in A(j).
    """

    item1_freq: float
    item2_freq: dict[int, float]
    xi: float
    replicates: int
    cond_mean: float = float("nan")
    cond_mean_se: float = float("nan")
    min_counts: dict[int, list[int]] = field(default_factory=dict, repr=False)

    @property
    def is_good(self) -> bool:
        ok = self.item1_freq > 1.0 - self.xi
        return ok and all(v > 1.0 - self.xi for v in self.item2_freq.values())

    def to_dict(self) -> dict:
        return {
            "item1_freq": self.item1_freq,
            "item2_freq": {str(j): v for j, v in self.item2_freq.items()},
            "xi": self.xi,
            "replicates": self.replicates,
            "is_good": self.is_good,
            "cond_mean": self.cond_mean,
            "cond_mean_se": self.cond_mean_se,
        }


def good_set_probe(
    model: ModelParams,
    counts: Sequence[int],
    window: TruncationWindow,
    xi: float,
    replicates: int,
    seed: int,
    key: Sequence[int] = (),
    workers: int | None = None,
) -> GoodSetReport:
    """Estimate both good-set conditions for ``counts``; also returns the conditional mean of the clamped time."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    counts = np.asarray(counts, dtype=np.int64)
    idx = model.indices()

    def one(r: int):
        return evaluate(model, inner_sample(model, counts, inner_key(seed, key, r)), idx)

    outs = worker_map(one, range(replicates), workers)
    times = np.array([o.time for o in outs])
    item1 = float(np.mean(window.in_inner(times)))
    item2 = {}
    mins = {}
    for j in idx:
        c = np.array([o.hi_counts[j] for o in outs])
        item2[j] = float(np.mean(c >= model.K ** (j - 1)))
        mins[j] = c.tolist()
    m, se = mean_se(clamp_truncate(times, window))
    return GoodSetReport(item1, item2, xi, replicates, m, se, mins)


@dataclass
class SmallBallResult:
    epsilon: float
    grid: np.ndarray
    freq: np.ndarray
    estimates: np.ndarray
    good: np.ndarray

    @property
    def sup_freq(self) -> float:
        return float(self.freq.max()) if self.freq.size else 0.0

    @property
    def argmax_r(self) -> float:
        return float(self.grid[int(np.argmax(self.freq))]) if self.freq.size else float("nan")

    def rows(self) -> list[dict]:
        return [{"r": float(r), "freq": float(f)} for r, f in zip(self.grid, self.freq)]


def small_ball_grid(window: TruncationWindow, epsilon: float) -> np.ndarray:
    lo, hi = window.inner_interval
    step = epsilon / 2.0
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def small_ball_frequencies(estimates: np.ndarray, good: np.ndarray, grid: np.ndarray, epsilon: float) -> np.ndarray:
    est = np.asarray(estimates)[:, None]
    hit = (est >= grid[None, :]) & (est <= grid[None, :] + epsilon) & np.asarray(good)[:, None]
    return hit.mean(axis=0)


def small_ball_scan(
    model: ModelParams,
    window: TruncationWindow,
    epsilon: float,
    replicates: int,
    n_outer: int,
    seed: int,
    xi: float = 0.1,
    require_good: bool = True,
    workers: int | None = None,
) -> SmallBallResult:
    """Sup over r in the inner interval (step eps/2) of P(E[clamp T | counts] in [r, r + eps], counts good)."""
    if n_outer < 1:
        raise ValueError("n_outer must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    est = np.empty(n_outer)
    good = np.ones(n_outer, dtype=bool)
    for i in range(n_outer):
        counts = outer_counts(model, seed, i)
        rep = good_set_probe(model, counts, window, xi, replicates, seed, (i,), workers)
        est[i] = rep.cond_mean
        good[i] = rep.is_good if require_good else True
    grid = small_ball_grid(window, epsilon)
    return SmallBallResult(epsilon, grid, small_ball_frequencies(est, good, grid, epsilon), est, good)
