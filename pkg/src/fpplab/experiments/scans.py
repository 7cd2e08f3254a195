"""Fluctuation-scaling scans of T(0, (n, 0, ...)) and two-sided tail (reckoning) checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..lattice import Box, CylinderSpec, cylinder_mask
from ..paths import WeightField, geodesics, plane_box
from ..seeding import stream, worker_map
from ..weights import Distribution
from .model import ModelParams
from .truncation import TruncationWindow

SCAN_COLUMNS = ("n", "samples", "mean", "var", "iqr", "q20", "q80", "norm_sqrtlog", "norm_cyl", "boundary_frac")


def cylinder_exponent(alpha: float, d: int = 2) -> float:
    return (1.0 - alpha * (d - 1)) / 2.0


def summarize(n: int, samples: np.ndarray, touched: np.ndarray, alpha: float | None, d: int = 2) -> dict:
    """One scan row; the spread columns are normalized by sqrt(log n) and n^((1 - alpha(d-1))/2)."""
    s = np.asarray(samples, dtype=float)
    q20, q25, q75, q80 = np.quantile(s, [0.2, 0.25, 0.75, 0.8])
    iqr = float(q75 - q25)
    a = 0.5 if alpha is None else alpha
    return {
        "n": int(n),
        "samples": int(s.size),
        "mean": float(s.mean()),
        "var": float(s.var(ddof=1)) if s.size > 1 else math.nan,
        "iqr": iqr,
        "q20": float(q20),
        "q80": float(q80),
        "norm_sqrtlog": iqr / math.sqrt(math.log(n)) if n > 1 else math.nan,
        "norm_cyl": iqr / n ** cylinder_exponent(a, d),
        "boundary_frac": float(np.mean(touched)) if touched.size else math.nan,
    }


@dataclass
class ScanResult:
    mode: str
    alpha: float | None
    rows: list[dict]
    samples: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)


def scan_box(n: int, d: int = 2, pad: float = 1.5) -> Box:
    return plane_box((n,) + (0,) * (d - 1), pad)


def sample_passage(
    dist: Distribution,
    n: int,
    replicates: int,
    seed: int,
    alpha: float | None = None,
    d: int = 2,
    pad: float = 1.5,
    workers: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(T samples, boundary-contact flags) for x = (n, 0, ...).

    The field of replicate ``r`` comes from stream ``(seed, "field", n, r)`` on
    the same cube in both modes, so plane and cylinder samples are paired.
    """
    box = scan_box(n, d, pad)
    x = (n,) + (0,) * (d - 1)
    origin = (0,) * d
    allowed = cylinder_mask(CylinderSpec(x, alpha), box) if alpha is not None else None

    def one(r: int):
        f = WeightField.iid(box, dist, stream(seed, "field", n, r))
        rep = geodesics(f, origin, x, allowed)
        return rep.time, float(rep.touched_boundary)

    out = np.asarray(worker_map(one, range(replicates), workers), dtype=float).reshape(-1, 2)
    return out[:, 0], out[:, 1].astype(bool)


def fluctuation_scan(
    dist: Distribution,
    n_list: Sequence[int],
    replicates: int,
    seed: int,
    alpha: float | None = None,
    d: int = 2,
    pad: float = 1.5,
    workers: int | None = None,
) -> ScanResult:
    if list(n_list) != sorted(set(n_list)):
        raise ValueError("n_list must be strictly increasing")
    rows, samples = [], {}
    for n in n_list:
        s, touched = sample_passage(dist, n, replicates, seed, alpha, d, pad, workers)
        samples[int(n)] = s
        rows.append(summarize(n, s, touched, alpha, d))
    return ScanResult("plane" if alpha is None else "cylinder", alpha, rows, samples)


def iqr(x: np.ndarray, axis=-1) -> np.ndarray:
    q75, q25 = np.quantile(x, [0.75, 0.25], axis=axis)
    return q75 - q25


def bootstrap_variance_slope(samples: dict[int, np.ndarray], resamples: int, rng: np.random.Generator) -> dict:
    """Least-squares slope of Var T against log n, with a percentile bootstrap CI over per-n resampling."""
    ns = sorted(samples)
    logn = np.log(np.asarray(ns, dtype=float))

    def slope(vars_):
        return float(np.polyfit(logn, vars_, 1)[0])

    point = slope([np.var(samples[n], ddof=1) for n in ns])
    boots = np.empty(resamples)
    for b in range(resamples):
        vs = []
        for n in ns:
            s = samples[n]
            vs.append(np.var(s[rng.integers(0, s.size, s.size)], ddof=1))
        boots[b] = slope(vs)
    lo, hi = np.quantile(boots, [0.025, 0.975])
    return {"slope": point, "ci_low": float(lo), "ci_high": float(hi)}


def bootstrap_dominance(a: np.ndarray, b: np.ndarray, resamples: int, rng: np.random.Generator) -> float:
    """Fraction of paired bootstrap resamples with IQR(a) >= IQR(b)."""
    a, b = np.asarray(a), np.asarray(b)
    idx = rng.integers(0, a.size, (resamples, a.size))
    return float(np.mean(iqr(a[idx], axis=1) >= iqr(b[idx], axis=1)))


# ---------------------------------------------------------------------------
# reckoning


@dataclass
class ReckoningReport:
    c_grid: np.ndarray
    lower_freq: np.ndarray
    upper_freq: np.ndarray
    samples: int

    @property
    def certified_c(self) -> float:
        """Largest grid c with both tail frequencies above c (0 if none)."""
        ok = (self.lower_freq > self.c_grid) & (self.upper_freq > self.c_grid)
        return float(self.c_grid[ok].max()) if ok.any() else 0.0

    def rows(self) -> list[dict]:
        return [
            {"c": float(c), "lower_freq": float(lo), "upper_freq": float(up)}
            for c, lo, up in zip(self.c_grid, self.lower_freq, self.upper_freq)
        ]


def reckoning_from_samples(samples: np.ndarray, window: TruncationWindow, c_grid: Sequence[float]) -> ReckoningReport:
    """P(T <= M - c w) and P(T >= M + c w) for each c, with M the window midpoint and w its width."""
    s = np.asarray(samples, dtype=float)[:, None]
    c = np.asarray(c_grid, dtype=float)
    lower = np.mean(s <= window.mid - c * window.width, axis=0)
    upper = np.mean(s >= window.mid + c * window.width, axis=0)
    return ReckoningReport(c, lower, upper, int(s.shape[0]))


def reckoning_check(
    model: ModelParams,
    window: TruncationWindow,
    c_grid: Sequence[float],
    replicates: int,
    seed: int,
    workers: int | None = None,
) -> ReckoningReport:
    """Tail frequencies of T(0, x) from i.i.d. fields on the model's box."""
    box = model.box

    def one(r: int) -> float:
        return model.passage(WeightField.iid(box, model.dist, stream(seed, "field", r)))

    samples = np.asarray(worker_map(one, range(replicates), workers), dtype=float)
    return reckoning_from_samples(samples, window, c_grid)
