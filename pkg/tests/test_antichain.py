import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpplab.antichain import (
    bound_check,
    comparable_pairs,
    from_mask,
    is_antichain,
    iter_antichains,
    level_set,
    max_antichain_size,
    probability_bound,
    random_maximal_antichain,
    to_mask,
)


def test_examples():
    assert is_antichain([(1, 0), (0, 1)])
    assert not is_antichain([(0, 0), (1, 0)])
    lvl = [from_mask(m, 4) for m in level_set(4, 2)]
    assert len(lvl) == 6 and is_antichain(lvl)


def test_sizes_and_bound():
    assert max_antichain_size(2) == 2
    assert max_antichain_size(4) == 6
    assert 6 / 16 <= probability_bound(4) == 4.0
    assert bound_check(level_set(4, 2), 4)
    with pytest.raises(ValueError):
        max_antichain_size(0)


@pytest.mark.parametrize("n,count", [(0, 2), (1, 3), (2, 6), (3, 20), (4, 168), (5, 7581)])
def test_enumeration_counts_dedekind(n, count):
    assert sum(1 for _ in iter_antichains(n)) == count


def test_enumeration_max_is_sperner():
    assert max(len(a) for a in iter_antichains(4)) == 6


def test_enumeration_limit():
    with pytest.raises(ValueError):
        next(iter_antichains(21))


@pytest.mark.parametrize("n", range(1, 13))
def test_level_sets_are_antichains(n):
    for k in range(n + 1):
        assert is_antichain(level_set(n, k))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.data())
def test_chains_fail(n, data):
    perm = data.draw(st.permutations(range(n)))
    length = data.draw(st.integers(2, n + 1))
    chain, m = [0], 0
    for i in perm[: length - 1]:
        m |= 1 << i
        chain.append(m)
    assert not is_antichain(chain)
    assert comparable_pairs(chain)


@pytest.mark.parametrize("n", range(1, 13))
def test_random_antichains_obey_sperner(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        a = random_maximal_antichain(n, rng)
        assert is_antichain(a)
        assert len(a) <= math.comb(n, n // 2)
        assert bound_check(a, n)


def test_mask_roundtrip():
    for bits in itertools.product((0, 1), repeat=5):
        assert from_mask(to_mask(bits), 5) == bits
    with pytest.raises(ValueError):
        to_mask((0, 2))
