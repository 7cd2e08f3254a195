"""Count flips under common random numbers, and the antichain extraction built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..antichain import comparable, is_antichain
from ..coupling import SplitDraw, assemble_field, draw_split, eligible_indices, flip_count, with_counts
from ..seeding import stream, worker_map
from .goodset import good_set_probe
from .model import ModelParams, inner_sample
from .truncation import TruncationWindow, clamp_truncate, inner_key, mean_se


@dataclass
class FlipResult:
    """Paired differences T_n(counts) - T_n(counts with N_j lowered to new_n)."""

    j: int
    old_n: int
    new_n: int
    deltas: np.ndarray
    raw_deltas: np.ndarray
    marked: np.ndarray

    @property
    def mean(self) -> float:
        return mean_se(self.deltas)[0]

    @property
    def se(self) -> float:
        return mean_se(self.deltas)[1]

    @property
    def geodesic_hit_freq(self) -> float:
        """Fraction of replicates where some lowered edge lies on a geodesic of the original field."""
        return float(np.mean(self.marked > 0)) if self.marked.size else math.nan

    @property
    def n_negative(self) -> int:
        return int(np.sum(self.raw_deltas < 0) + np.sum(self.deltas < 0))

    def paley_zygmund(self) -> dict:
        """Empirical P(Z >= mean/2) against the bound (1/4) mean^2 / E[Z^2] for the marked count Z."""
        z = self.marked.astype(float)
        m1, m2 = float(z.mean()), float((z * z).mean())
        bound = 0.25 * m1 * m1 / m2 if m2 > 0 else 0.0
        freq = float(np.mean(z >= 0.5 * m1))
        se = math.sqrt(max(freq * (1 - freq), 1e-12) / z.size)
        return {"freq": freq, "bound": bound, "holds": freq + 3 * se >= bound}

    def to_dict(self) -> dict:
        pz = self.paley_zygmund()
        return {
            "j": self.j,
            "old_n": int(self.old_n),
            "new_n": int(self.new_n),
            "replicates": int(self.deltas.size),
            "mean_delta": self.mean,
            "se_delta": self.se,
            "min_delta": float(self.deltas.min()) if self.deltas.size else math.nan,
            "min_raw_delta": float(self.raw_deltas.min()) if self.raw_deltas.size else math.nan,
            "negative": self.n_negative,
            "geodesic_hit_freq": self.geodesic_hit_freq,
            "marked_mean": float(self.marked.mean()) if self.marked.size else math.nan,
            "pz_freq": pz["freq"],
            "pz_bound": pz["bound"],
        }


def flip_delta(
    model: ModelParams,
    counts: Sequence[int],
    j: int,
    new_n: int,
    window: TruncationWindow,
    replicates: int,
    seed: int,
    key: Sequence[int] = (),
    workers: int | None = None,
) -> FlipResult:
    counts = np.asarray(counts, dtype=np.int64)
    model.geometry.check_index(j)
    old_n = int(counts[j])
    if not 0 <= new_n <= old_n:
        raise ValueError("new_n must lie in [0, N_j]")
    in_j = model.geometry.group == j

    def one(r: int):
        c1 = inner_sample(model, counts, inner_key(seed, key, r))
        c2 = flip_count(c1, j, new_n)
        f1 = assemble_field(c1)
        rep = model.report(f1)
        t2 = model.passage(assemble_field(c2))
        lowered = in_j & (c1.ranks > new_n) & (c1.ranks <= old_n)
        on_geo = np.zeros_like(lowered)
        on_geo[rep.union_ids] = True
        return rep.time, t2, int(np.sum(lowered & on_geo))

    outs = np.asarray(worker_map(one, range(replicates), workers), dtype=float).reshape(-1, 3)
    t1, t2 = outs[:, 0], outs[:, 1]
    deltas = np.asarray(clamp_truncate(t1, window)) - np.asarray(clamp_truncate(t2, window))
    return FlipResult(j, old_n, new_n, np.atleast_1d(deltas), t1 - t2, outs[:, 2].astype(np.int64))


# ---------------------------------------------------------------------------
# antichain extraction


@dataclass
class FlipEdge:
    """One covering pair: ``upper`` has bit ``bit`` set, ``lower`` is the same with it cleared."""

    lower: int
    upper: int
    bit: int
    decrease: float
    se: float


@dataclass
class AntichainResult:
    indices: tuple[int, ...]
    split: SplitDraw
    epsilon: float
    r: float
    estimates: dict[int, float]
    ses: dict[int, float]
    good: dict[int, bool]
    family: list[int]
    flips: list[FlipEdge]
    verdict: str
    reasons: list[str] = field(default_factory=list)

    @property
    def is_antichain(self) -> bool:
        return is_antichain(self.family)

    @property
    def min_decrease(self) -> float:
        return min((f.decrease for f in self.flips), default=math.inf)

    @property
    def min_margin_in_se(self) -> float:
        """min over flips of (decrease - eps) / se."""
        vals = [(f.decrease - self.epsilon) / f.se if f.se > 0 else math.copysign(math.inf, f.decrease - self.epsilon) for f in self.flips]
        return min(vals, default=math.inf)

    def to_dict(self) -> dict:
        n = len(self.indices)
        return {
            "indices": list(self.indices),
            "epsilon": self.epsilon,
            "r": self.r,
            "verdict": self.verdict,
            "reasons": self.reasons,
            "is_antichain": self.is_antichain,
            "family": [list(bits_of(m, n)) for m in self.family],
            "assignments": [
                {"eta": list(bits_of(m, n)), "estimate": self.estimates[m], "se": self.ses[m], "good": self.good[m]}
                for m in sorted(self.estimates)
            ],
            "min_decrease": self.min_decrease,
            "flips": [
                {"lower": list(bits_of(f.lower, n)), "upper": list(bits_of(f.upper, n)), "decrease": f.decrease, "se": f.se}
                for f in self.flips
            ],
        }


def bits_of(mask: int, n: int) -> tuple[int, ...]:
    return tuple((mask >> i) & 1 for i in range(n))


def pick_split(model: ModelParams, seed: int, min_size: int = 1, max_tries: int = 1000) -> tuple[SplitDraw, tuple[int, ...], int]:
    """First split draw (streams ``(seed, "split", k)``) whose eligible set has at least ``min_size`` members."""
    geom, thr = model.geometry, model.threshold
    sizes = geom.sizes
    best = None
    for k in range(max_tries):
        sd = draw_split(geom, thr, stream(seed, "split", k))
        draws = {j: (int(sd.x[j]), int(sd.z[j])) for j in range(1, geom.j_max + 1)}
        elig = eligible_indices(draws, sizes, thr.p_hi, model.K, model.target).members
        elig = tuple(j for j in elig if j in model.indices())
        if best is None or len(elig) > len(best[1]):
            best = (sd, elig, k)
        if len(elig) >= min_size:
            return sd, elig, k
    return best


def classify(family: list[int], estimates: dict[int, float], ses_diff, flips: list[FlipEdge], epsilon: float) -> tuple[str, list[str]]:
    """Three-valued verdict.

    pass: Q is an antichain and every flip decrease exceeds eps by >= 3 SE.
    fail: two comparable members of Q whose paired gap is below eps by >= 3 SE.
    inconclusive: anything else.
    """
    reasons = []
    certified = all(f.decrease - 3.0 * f.se >= epsilon for f in flips)
    anti = is_antichain(family)
    if anti and certified:
        return "pass", reasons
    if not anti:
        for i, a in enumerate(family):
            for b in family[i + 1 :]:
                if comparable(a, b):
                    gap = abs(estimates[a] - estimates[b])
                    se = ses_diff(a, b)
                    if gap + 3.0 * se < epsilon:
                        reasons.append(f"comparable members {a} and {b} with gap {gap:.4g} < eps")
                        return "fail", reasons
        reasons.append("Q is not an antichain but the gap is not significantly below eps")
    for f in flips:
        if f.decrease - 3.0 * f.se < epsilon:
            reasons.append(f"flip of bit {f.bit} from {f.upper}: decrease {f.decrease:.4g} (se {f.se:.2g}) not 3 SE above eps")
    return "inconclusive", reasons


def antichain_extract(
    model: ModelParams,
    window: TruncationWindow,
    epsilon: float,
    r: float,
    replicates: int,
    seed: int,
    split: SplitDraw | None = None,
    indices: Sequence[int] | None = None,
    xi: float = 0.1,
    require_good: bool = True,
    good_replicates: int = 200,
    max_indices: int = 12,
    workers: int | None = None,
) -> AntichainResult:
    """Estimate E[clamp T | counts(eta)] for every eta on the eligible indices and test the window family.

    All assignments share inner streams ``(seed, "inner", r)``, so each flip
    decrease is a paired mean with its own standard error.  Off-index coins
    keep the values of ``split``.
    """
    if split is None or indices is None:
        split, indices, _ = pick_split(model, seed)
    indices = tuple(indices)
    n = len(indices)
    if n > max_indices:
        raise ValueError(f"{n} eligible indices exceeds the brute-force limit {max_indices}")
    masks = list(range(1 << n))

    def counts_for(mask: int) -> np.ndarray:
        eta = split.eta.copy()
        for b, j in enumerate(indices):
            eta[j] = bool((mask >> b) & 1)
        return split.counts(eta)

    all_counts = {m: counts_for(m) for m in masks}

    def one(rep: int):
        rng_key = inner_key(seed, (), rep)
        base = inner_sample(model, all_counts[0], rng_key)
        out = []
        for m in masks:
            c = with_counts(base, all_counts[m])
            out.append(model.passage(assemble_field(c)))
        return out

    times = np.asarray(worker_map(one, range(replicates), workers), dtype=float).reshape(replicates, len(masks))
    tn = np.asarray(clamp_truncate(times, window)).reshape(times.shape)
    estimates = {m: float(tn[:, m].mean()) for m in masks}
    ses = {m: mean_se(tn[:, m])[1] for m in masks}

    def ses_diff(a: int, b: int) -> float:
        return mean_se(tn[:, a] - tn[:, b])[1]

    flips = []
    for m in masks:
        for b in range(n):
            if (m >> b) & 1:
                lower = m & ~(1 << b)
                dec, se = mean_se(tn[:, m] - tn[:, lower])
                flips.append(FlipEdge(lower, m, b, dec, se))

    good = {}
    for m in masks:
        if require_good:
            rep = good_set_probe(model, all_counts[m], window, xi, good_replicates, seed, (m,), workers)
            good[m] = rep.is_good
        else:
            good[m] = True
    family = [m for m in masks if r <= estimates[m] <= r + epsilon and good[m]]
    verdict, reasons = classify(family, estimates, ses_diff, flips, epsilon)
    return AntichainResult(indices, split, epsilon, r, estimates, ses, good, family, flips, verdict, reasons)


def window_family_scan(result_estimates: dict[int, float], epsilon: float, grid: Sequence[float]) -> list[tuple[float, list[int]]]:
    """Families Q(r) for each r in ``grid`` from precomputed estimates (all assumed good)."""
    return [(float(r), [m for m, v in sorted(result_estimates.items()) if r <= v <= r + epsilon]) for r in grid]

