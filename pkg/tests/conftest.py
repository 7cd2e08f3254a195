import itertools
import math

import numpy as np
import pytest

from fpplab.lattice import Box, Edge


def neighbours(box: Box, v):
    for a in range(box.d):
        for s in (-1, 1):
            w = list(v)
            w[a] += s
            w = tuple(w)
            if box.contains(w):
                yield w


def simple_paths(box: Box, x, y, allowed=None):
    """All self-avoiding vertex paths from x to y inside box (depth-first)."""
    x, y = tuple(x), tuple(y)
    ok = (lambda v: True) if allowed is None else allowed
    out = []

    def dfs(v, path, seen):
        if v == y:
            out.append(list(path))
            return
        for w in neighbours(box, v):
            if w not in seen and ok(w):
                seen.add(w)
                path.append(w)
                dfs(w, path, seen)
                path.pop()
                seen.remove(w)

    dfs(x, [x], {x})
    return out


def path_edges(path):
    return [Edge.between(a, b) for a, b in zip(path, path[1:])]


def brute_time(weight_of, box, x, y, allowed=None):
    best = math.inf
    for p in simple_paths(box, x, y, allowed):
        best = min(best, sum(weight_of(e) for e in path_edges(p)))
    return best


def brute_union(weight_of, box, x, y, tol=1e-9):
    paths = simple_paths(box, x, y)
    times = [sum(weight_of(e) for e in path_edges(p)) for p in paths]
    t = min(times)
    union = set()
    for p, tp in zip(paths, times):
        if tp <= t + tol:
            union.update(path_edges(p))
    return t, union, [p for p, tp in zip(paths, times) if tp <= t + tol]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        lines.append((number, f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
