"""Model parameters shared by all experiment drivers, and the per-replicate evaluator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ..coupling import CouplingGeometry, CouplingSample, assemble_field, index_range, sample_coupling
from ..lattice import Box, CylinderSpec, ScaleParams, Vertex, as_vertex, cylinder_mask, euclid, linf, scale_index
from ..paths import GeodesicReport, WeightField, annulus_hi_counts, cylinder_passage_time, geodesics, point_to_point
from ..weights import Distribution, ModeThreshold, choose_threshold


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Weight law, target point and geometry knobs for one experiment.

    ``alpha`` switches to cylinder mode: passage times are restricted to the
    cylinder of width ``||x||^alpha`` and only cylinder edges are coupled.
    ``d0`` pins the mode threshold; otherwise it is the ``q``-quantile.
    The box is the cube of radius ``ceil(pad * ||x||_inf)``, or exactly
    ``[-K^j_max, K^j_max]^d`` when ``j_max`` is given.
    """

    dist: Distribution
    target: Vertex
    K: int = 4
    pad: float = 1.5
    q: float = 0.5
    d0: float | None = None
    alpha: float | None = None
    j_max: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "target", as_vertex(self.target))
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.pad < 1.0:
            raise ValueError("pad must be >= 1 so the target lies in the box")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0,1)")
        if linf(self.target) == 0:
            raise ValueError("target must be nonzero")
        if self.j_max is not None:
            if self.j_max < 1:
                raise ValueError("j_max must be >= 1")
            if linf(self.target) > self.K**self.j_max:
                raise ValueError("target lies outside [-K^j_max, K^j_max]^d")

    @property
    def d(self) -> int:
        return len(self.target)

    @property
    def origin(self) -> Vertex:
        return (0,) * self.d

    @property
    def norm(self) -> float:
        return euclid(self.target)

    @property
    def cylinder_mode(self) -> bool:
        return self.alpha is not None

    @cached_property
    def threshold(self) -> ModeThreshold:
        if self.d0 is not None:
            return ModeThreshold(float(self.d0), float(self.dist.cdf(self.d0)))
        return choose_threshold(self.dist, self.q)

    @cached_property
    def cylinder(self) -> CylinderSpec | None:
        return CylinderSpec(self.target, self.alpha) if self.cylinder_mode else None

    @cached_property
    def geometry(self) -> CouplingGeometry:
        if self.j_max is not None:
            geom = CouplingGeometry.for_box(Box.cube(self.K**self.j_max, self.d), self.K)
        else:
            geom = CouplingGeometry.for_target(self.target, self.K, self.pad)
        return geom.for_cylinder(self.cylinder) if self.cylinder_mode else geom

    @property
    def box(self):
        return self.geometry.box

    @cached_property
    def allowed(self) -> np.ndarray | None:
        return cylinder_mask(self.cylinder, self.box) if self.cylinder_mode else None

    def width(self) -> float:
        """Truncation window width: sqrt(log||x||) in the plane, ||x||^((1 - alpha(d-1))/2) in a cylinder."""
        if self.cylinder_mode:
            return self.norm ** ((1.0 - self.alpha * (self.d - 1)) / 2.0)
        return math.sqrt(math.log(self.norm)) if self.norm > 1.0 else 0.0

    def indices(self) -> tuple[int, ...]:
        """Annulus indices probed by the good-set and antichain drivers.

        Plane: the middle range of scales clipped to the coupled annuli.
        Cylinder: the single top scale floor(log_K ||x||_inf).
        """
        if self.cylinder_mode:
            k0 = scale_index(ScaleParams(K=self.K, j_max=1, d=self.d), self.target)
            return (k0,) if 1 <= k0 <= self.geometry.j_max else ()
        lo, hi = index_range(self.K, self.target)
        return tuple(range(max(1, lo), min(hi, self.geometry.j_max) + 1))

    # single-field quantities ------------------------------------------------
    def passage(self, field: WeightField) -> float:
        return point_to_point(field, self.origin, self.target, self.allowed)

    def report(self, field: WeightField) -> GeodesicReport:
        if self.cylinder_mode:
            return cylinder_passage_time(field, self.cylinder)
        return geodesics(field, self.origin, self.target)

    def describe(self) -> dict:
        out = {
            "distribution": self.dist.describe(),
            "target": list(self.target),
            "K": self.K,
            "pad": self.pad,
            "j_max": self.geometry.j_max,
            "box_radius": self.box.hi[0],
            "d0": self.threshold.d0,
            "p_lo": self.threshold.p_lo,
        }
        if self.cylinder_mode:
            out["alpha"] = self.alpha
        return out


@dataclass
class InnerOutcome:
    """One inner replicate: passage time, and optionally per-annulus minimal hi-mode counts."""

    time: float
    hi_counts: dict[int, int] = field(default_factory=dict)


def evaluate(model: ModelParams, sample: CouplingSample, indices: Sequence[int] = ()) -> InnerOutcome:
    f = assemble_field(sample)
    if not indices:
        return InnerOutcome(model.passage(f))
    rep = model.report(f)
    counts = annulus_hi_counts(f, model.threshold, rep, model.geometry.group, indices)
    return InnerOutcome(rep.time, counts)


def inner_sample(model: ModelParams, counts: Sequence[int], rng: np.random.Generator) -> CouplingSample:
    return sample_coupling(model.geometry, model.dist, model.threshold, rng, counts=counts)
