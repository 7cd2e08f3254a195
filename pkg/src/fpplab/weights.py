"""Edge-weight distributions, the percolation assumption, and hi/lo-mode machinery.

Every distribution exposes ``cdf``, the generalized inverse ``quantile``
(``inf{x : F(x) >= u}``), a seeded ``sample`` and the support infimum.
Samplers always take an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PC = 0.5
"""Critical probability of two-dimensional bond percolation."""

PC_ORIENTED = 0.644
"""Critical probability of two-dimensional oriented bond percolation (approximate)."""

BORDERLINE = 0.01


class Distribution:
    name = "distribution"

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    @property
    def infimum(self) -> float:
        raise NotImplementedError

    @property
    def atom_at_zero(self) -> float:
        return float(self.cdf(0.0))

    def sample(self, rng: np.random.Generator, size=None):
        return self.quantile(1.0 - rng.random(size))

    def partial_mean(self, u0: float, u1: float) -> float:
        """Integral of the quantile function over ``[u0, u1]``."""
        if u1 <= u0:
            return 0.0
        n = 200_000
        u = u0 + (u1 - u0) * (np.arange(n) + 0.5) / n
        return float(np.mean(self.quantile(u)) * (u1 - u0))

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"name": self.name, **self.params()}


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float = 1.0
    name = "exponential"

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("exponential rate must be positive")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)))

    def quantile(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    @property
    def infimum(self) -> float:
        return 0.0

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def partial_mean(self, u0, u1):
        # closed form of the integral of -log(1-u)/rate
        def anti(u):
            w = 1.0 - u
            return 0.0 if w == 0 else (w * math.log(w) - w)

        return (anti(u1) - anti(u0)) / self.rate

    def params(self):
        return {"lambda": self.rate}


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float = 0.0
    b: float = 1.0
    name = "uniform"

    def __post_init__(self):
        if not 0 <= self.a < self.b:
            raise ValueError("uniform needs 0 <= a < b")

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def quantile(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)

    @property
    def infimum(self):
        return float(self.a)

    def partial_mean(self, u0, u1):
        return (u1 - u0) * self.a + (self.b - self.a) * (u1 * u1 - u0 * u0) / 2.0

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class Discrete(Distribution):
    """Finitely supported law; covers two-point laws and user tables."""

    values: tuple
    probs: tuple
    name = "table"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size == 0:
            raise ValueError("values and probs must be equal-length 1-d sequences")
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-12):
            raise ValueError("probs must be nonnegative and sum to 1")
        if np.any(v < 0):
            raise ValueError("edge weights must be nonnegative")
        order = np.argsort(v, kind="stable")
        object.__setattr__(self, "values", tuple(float(x) for x in v[order]))
        object.__setattr__(self, "probs", tuple(float(x) for x in p[order]))

    @property
    def _v(self):
        return np.asarray(self.values)

    @property
    def _cum(self):
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self._v, x, side="right")
        return np.where(idx == 0, 0.0, self._cum[np.maximum(idx - 1, 0)])

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self._cum, u, side="left")
        return self._v[np.minimum(idx, self._v.size - 1)]

    @property
    def infimum(self):
        return float(self._v[np.flatnonzero(np.asarray(self.probs) > 0)[0]])

    def sample(self, rng, size=None):
        return rng.choice(self._v, size=size, p=np.asarray(self.probs))

    def partial_mean(self, u0, u1):
        lo = np.concatenate([[0.0], self._cum[:-1]])
        overlap = np.clip(np.minimum(self._cum, u1) - np.maximum(lo, u0), 0.0, None)
        return float(np.dot(overlap, self._v))

    def params(self):
        return {"values": list(self.values), "probs": list(self.probs)}


def two_point(low: float, high: float, p_low: float = 0.5) -> Discrete:
    d = Discrete((low, high), (p_low, 1.0 - p_low))
    return d


def atom(c: float) -> Discrete:
    return Discrete((c,), (1.0,))


@dataclass(frozen=True)
class Shifted(Distribution):
    """``shift + base``; e.g. shifted exponentials with support infimum ``shift``."""

    base: Distribution
    shift: float
    name = "shifted"

    def __post_init__(self):
        if self.shift < 0:
            raise ValueError("shift must be nonnegative")

    def cdf(self, x):
        return self.base.cdf(np.asarray(x, dtype=float) - self.shift)

    def quantile(self, u):
        return self.shift + self.base.quantile(u)

    @property
    def infimum(self):
        return self.shift + self.base.infimum

    def sample(self, rng, size=None):
        return self.shift + self.base.sample(rng, size)

    def partial_mean(self, u0, u1):
        return self.shift * max(u1 - u0, 0.0) + self.base.partial_mean(u0, u1)

    def params(self):
        return {"shift": self.shift, "base": self.base.describe()}


@dataclass(frozen=True)
class Mixture(Distribution):
    components: tuple
    weights: tuple
    name = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.components) != w.size or w.size == 0:
            raise ValueError("one weight per component")
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-12):
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(w * np.asarray(c.cdf(x)) for c, w in zip(self.components, self.weights))

    @property
    def infimum(self):
        return min(c.infimum for c, w in zip(self.components, self.weights) if w > 0)

    def _atoms(self) -> np.ndarray:
        pts = [v for c in self.components if isinstance(c, Discrete) for v in c.values]
        return np.asarray(sorted(set(pts)), dtype=float)

    def quantile(self, u):
        u_in = np.asarray(u, dtype=float)
        u = u_in.reshape(-1)
        lo = np.full(u.shape, self.infimum - 1.0)
        hi = np.full(u.shape, 1.0)
        # expand the bracket until F(hi) >= u
        for _ in range(200):
            short = self.cdf(hi) < u
            if not short.any():
                break
            hi[short] *= 2.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            ok = self.cdf(mid) >= u
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        # snap onto atoms that the bisection brackets from above
        atoms = self._atoms()
        if atoms.size:
            k = np.searchsorted(atoms, hi, side="right") - 1
            near = (k >= 0) & (np.abs(hi - atoms[np.maximum(k, 0)]) < 1e-9)
            hi = np.where(near, atoms[np.maximum(k, 0)], hi)
        out = hi.reshape(u_in.shape)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        n = 1 if size is None else int(np.prod(size))
        which = rng.choice(len(self.components), size=n, p=np.asarray(self.weights))
        out = np.empty(n)
        for i, c in enumerate(self.components):
            m = which == i
            if m.any():
                out[m] = c.sample(rng, int(m.sum()))
        return out[0] if size is None else out.reshape(size)

    def params(self):
        return {
            "components": [c.describe() for c in self.components],
            "weights": list(self.weights),
        }


# ---------------------------------------------------------------------------
# parsing

_TERM = re.compile(r"^\s*([0-9.eE+-]+)\s*\*\s*([a-z_]+)\s*\(([^)]*)\)\s*$")


def _floats(text: str) -> list[float]:
    return [float(t) for t in re.split(r"[,\s]+", text.strip()) if t]


def make_distribution(name: str, **params) -> Distribution:
    """Build a catalog distribution from a name and keyword parameters (strings accepted)."""
    key = name.strip().lower().replace("-", "_")
    get = lambda k, default=None: params.get(k, default)  # noqa: E731
    if key in ("exponential", "exp"):
        return Exponential(float(get("lambda", get("rate", 1.0))))
    if key == "uniform":
        return Uniform(float(get("a", 0.0)), float(get("b", 1.0)))
    if key in ("two_point", "twopoint"):
        return two_point(float(get("low")), float(get("high")), float(get("p_low", 0.5)))
    if key in ("shifted_exponential", "shifted_exp"):
        return Shifted(Exponential(float(get("lambda", get("rate", 1.0)))), float(get("shift")))
    if key in ("table", "empirical"):
        values, probs = get("values"), get("probs")
        values = _floats(values) if isinstance(values, str) else list(values)
        probs = _floats(probs) if isinstance(probs, str) else list(probs)
        return Discrete(tuple(values), tuple(probs))
    if key == "atom":
        return atom(float(get("at", get("value", 0.0))))
    if key == "mixture":
        return parse_mixture(get("components"))
    raise ValueError(f"unknown distribution {name!r}")


def parse_mixture(text: str) -> Mixture:
    """Parse ``"0.7*atom(0) + 0.3*exponential(1)"`` style mixtures."""
    if not text:
        raise ValueError("mixture needs a 'components' expression")
    comps, weights = [], []
    for term in re.split(r"\s\+\s", text):
        m = _TERM.match(term)
        if not m:
            raise ValueError(f"cannot parse mixture term {term!r}")
        w, kind, args = float(m.group(1)), m.group(2), _floats(m.group(3))
        if kind == "atom":
            comps.append(atom(args[0]))
        elif kind in ("exponential", "exp"):
            comps.append(Exponential(args[0] if args else 1.0))
        elif kind == "uniform":
            comps.append(Uniform(*args))
        else:
            raise ValueError(f"unsupported mixture component {kind!r}")
        weights.append(w)
    return Mixture(tuple(comps), tuple(weights))


# ---------------------------------------------------------------------------
# assumption check and thresholds


@dataclass
class ValidationReport:
    passed: bool
    reasons: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    atom_at_zero: float = 0.0
    infimum: float = 0.0
    mass_at_infimum: float = 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def validate_distribution(dist: Distribution) -> ValidationReport:
    """Check ``F(0) < p_c`` and, when the support infimum I is positive, ``F(I) < oriented p_c``."""
    f0 = float(dist.cdf(0.0))
    inf = float(dist.infimum)
    f_inf = float(dist.cdf(inf))
    rep = ValidationReport(True, atom_at_zero=f0, infimum=inf, mass_at_infimum=f_inf)
    if not f0 < PC:
        rep.passed = False
        rep.reasons.append(f"F(0) = {f0:.6g} is not below p_c = {PC}")
    if inf > 0:
        if not f_inf < PC_ORIENTED:
            rep.passed = False
            rep.reasons.append(
                f"I = {inf:.6g} > 0 and F(I) = {f_inf:.6g} is not below oriented p_c = {PC_ORIENTED}"
            )
        elif PC_ORIENTED - f_inf < BORDERLINE:
            rep.warnings.append(f"F(I) = {f_inf:.6g} within {BORDERLINE} of oriented p_c; constant is approximate")
    return rep


@dataclass(frozen=True)
class ModeThreshold:
    """Weights ``<= d0`` are lo-mode, weights ``> d0`` hi-mode; ``p_lo = F(d0)``."""

    d0: float
    p_lo: float

    @property
    def p_hi(self) -> float:
        return 1.0 - self.p_lo


def choose_threshold(dist: Distribution, q: float = 0.5) -> ModeThreshold:
    if not 0.0 < q < 1.0:
        raise ValueError("threshold quantile must lie in (0,1)")
    d0 = float(dist.quantile(q))
    p = float(dist.cdf(d0))
    if not 0.0 < p < 1.0:
        raise ValueError(f"F(d0) = {p} is not in (0,1) for d0 = {d0}; pick another quantile")
    return ModeThreshold(d0, p)


def strict_lo_mass(dist: Distribution, thr: ModeThreshold) -> float:
    """P(t_e < d0); zero when d0 sits on the lowest atom."""
    below = np.nextafter(thr.d0, -np.inf)
    return float(dist.cdf(below)) if thr.d0 > dist.infimum else 0.0


def sample_pair(dist: Distribution, thr: ModeThreshold, rng: np.random.Generator, size=None):
    """Independent draws of ``t | t <= d0`` and ``t | t > d0`` by conditional inverse CDF."""
    p = thr.p_lo
    u_lo = p * (1.0 - rng.random(size))  # (0, p]
    lo = np.minimum(dist.quantile(u_lo), thr.d0)
    v = rng.random(size)
    if p >= 1.0:
        hi = np.full(np.shape(v), np.inf) if size is not None else np.inf
    else:
        v = np.where(v == 0.0, 0.5, v)  # open interval (0, 1)
        hi = dist.quantile(p + (1.0 - p) * v)
        hi = np.maximum(hi, np.nextafter(thr.d0, np.inf))
    return lo, hi


def conditional_means(dist: Distribution, thr: ModeThreshold) -> tuple[float, float]:
    """(E[t | t <= d0], E[t | t > d0])."""
    p = thr.p_lo
    lo = dist.partial_mean(0.0, p) / p
    hi = dist.partial_mean(p, 1.0) / (1.0 - p) if p < 1.0 else math.inf
    return lo, hi


def augment_himode(field_or_weights, thr: ModeThreshold):
    """Add 1 to every hi-mode weight; accepts a WeightField or a raw weight array."""
    w = getattr(field_or_weights, "weights", field_or_weights)
    w = np.asarray(w)
    out = np.where(w > thr.d0, w + 1.0, w)
    if hasattr(field_or_weights, "weights"):
        return dataclasses.replace(field_or_weights, weights=out)
    return out


def default_epsilon(dist: Distribution, thr: ModeThreshold) -> float:
    """Resolution for small-ball/antichain runs: a tenth of the mean hi-to-lo drop.

    Uses ``d0 - E[lo]`` when positive; with an atom sitting at d0 that gap is 0
    and the mean pair gap ``E[hi] - E[lo]`` is used instead.
    """
    lo, hi = conditional_means(dist, thr)
    gap = thr.d0 - lo
    if gap <= 1e-12:
        gap = hi - lo
    return 0.1 * gap


__all__ = [
    "PC",
    "PC_ORIENTED",
    "Distribution",
    "Exponential",
    "Uniform",
    "Discrete",
    "Shifted",
    "Mixture",
    "two_point",
    "atom",
    "make_distribution",
    "parse_mixture",
    "ValidationReport",
    "validate_distribution",
    "ModeThreshold",
    "choose_threshold",
    "strict_lo_mass",
    "sample_pair",
    "conditional_means",
    "augment_himode",
    "default_epsilon",
]
