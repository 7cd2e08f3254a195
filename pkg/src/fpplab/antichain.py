"""Families of 0/1 vectors: antichain tests, Sperner's bound, small-n enumeration.

Comparability is symmetric, so whether the coordinatewise order is read as
``<=`` or ``>=`` makes no difference to any function here.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Sequence

import numpy as np

ENUM_LIMIT = 20


def to_mask(bits: Sequence[int]) -> int:
    """Bit vector -> integer, coordinate i in bit i."""
    out = 0
    for i, b in enumerate(bits):
        if b not in (0, 1, True, False):
            raise ValueError("bit vectors hold 0/1 entries")
        if b:
            out |= 1 << i
    return out


def from_mask(mask: int, n: int) -> tuple[int, ...]:
    return tuple((mask >> i) & 1 for i in range(n))


def _masks(family: Iterable) -> list[int]:
    return sorted({m if isinstance(m, (int, np.integer)) else to_mask(m) for m in family})


def comparable(a: int, b: int) -> bool:
    return (a & b) == a or (a & b) == b


def is_antichain(family: Iterable) -> bool:
    """No two distinct members are coordinatewise comparable.  Members may be bit tuples or int masks."""
    ms = _masks(family)
    for i in range(len(ms)):
        a = ms[i]
        for b in ms[i + 1 :]:
            if comparable(a, b):
                return False
    return True


def comparable_pairs(family: Iterable) -> list[tuple[int, int]]:
    ms = _masks(family)
    return [(a, b) for i, a in enumerate(ms) for b in ms[i + 1 :] if comparable(a, b)]


def max_antichain_size(n: int) -> int:
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.comb(n, n // 2)


def probability_bound(n: int) -> float:
    """Upper bound 8/sqrt(n) on the uniform measure of any antichain in {0,1}^n."""
    return 8.0 / math.sqrt(n)


def bound_check(family: Iterable, n: int) -> bool:
    """Family size within Sperner's bound and uniform measure within ``8/sqrt(n)``."""
    size = len(_masks(family))
    return size <= max_antichain_size(n) and size / 2**n <= probability_bound(n)


def level_set(n: int, k: int) -> list[int]:
    return [m for m in range(1 << n) if bin(m).count("1") == k]


def iter_antichains(n: int) -> Iterator[tuple[int, ...]]:
    """Every antichain of {0,1}^n (including the empty one), as sorted mask tuples.

    Exponential; intended for n <= 5 (n = 5 already gives 7581 antichains).
    """
    if not 0 <= n <= ENUM_LIMIT:
        raise ValueError(f"enumeration needs 0 <= n <= {ENUM_LIMIT}")
    universe = list(range(1 << n))

    def grow(start: int, chosen: list[int]):
        yield tuple(chosen)
        for i in range(start, len(universe)):
            m = universe[i]
            if all(not comparable(m, c) for c in chosen):
                chosen.append(m)
                yield from grow(i + 1, chosen)
                chosen.pop()

    yield from grow(0, [])


def random_maximal_antichain(n: int, rng: np.random.Generator) -> list[int]:
    """Greedy maximal antichain from a uniformly shuffled scan of {0,1}^n."""
    if not 1 <= n <= ENUM_LIMIT:
        raise ValueError(f"enumeration needs 1 <= n <= {ENUM_LIMIT}")
    chosen: list[int] = []
    for m in rng.permutation(1 << n):
        m = int(m)
        if all(not comparable(m, c) for c in chosen):
            chosen.append(m)
    return sorted(chosen)
