"""Inner loops over box-shaped grid graphs.

All kernels take the edge weights as a ``(n_vertices, d)`` float array where
``weights[u, a]`` is the weight of ``{u, u + e_a}`` (``inf`` when that edge
leaves the box), plus the box ``shape`` and C-order ``strides``.  They are
compiled with numba unless ``FPPLAB_NO_NUMBA`` is set; ``kernel.py_func``
is always the uncompiled source.
"""

import numpy as np

from ._accel import kernel


@kernel
def heap_push(keys, vals, size, key, val):
    i = size
    keys[i] = key
    vals[i] = val
    while i > 0:
        parent = (i - 1) >> 1
        if keys[parent] <= keys[i]:
            break
        keys[parent], keys[i] = keys[i], keys[parent]
        vals[parent], vals[i] = vals[i], vals[parent]
        i = parent
    return size + 1


@kernel
def heap_pop(keys, vals, size):
    key = keys[0]
    val = vals[0]
    size -= 1
    keys[0] = keys[size]
    vals[0] = vals[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        if left + 1 < size and keys[left + 1] < keys[left]:
            child = left + 1
        if keys[i] <= keys[child]:
            break
        keys[child], keys[i] = keys[i], keys[child]
        vals[child], vals[i] = vals[i], vals[child]
        i = child
    return key, val, size


@kernel
def dijkstra(weights, shape, strides, allowed, source, target, limit, slack):
    """Single-source shortest paths restricted to ``allowed`` vertices.

    Stops once the next key exceeds ``limit``.  When ``target`` (>= 0) is
    settled at distance T the limit drops to ``T + slack``, so every vertex
    within the slack of T is settled too; a negative slack stops at once.
    Returns ``(dist, pred)``: ``dist`` is exact for settled vertices and
    ``inf`` elsewhere; ``pred[v]`` is the edge slot used to reach ``v``.
    """
    n, d = weights.shape
    dist = np.full(n, np.inf)
    tent = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    cap = 2 * d * n + 1
    keys = np.empty(cap, dtype=np.float64)
    vals = np.empty(cap, dtype=np.int64)
    size = 0
    if not allowed[source]:
        return dist, pred
    tent[source] = 0.0
    size = heap_push(keys, vals, size, 0.0, source)
    while size > 0:
        du, u, size = heap_pop(keys, vals, size)
        if done[u]:
            continue
        if du > limit:
            break
        done[u] = True
        dist[u] = du
        if u == target:
            if slack < 0:
                break
            limit = min(limit, du + slack)
        for a in range(d):
            c = (u // strides[a]) % shape[a]
            if c + 1 < shape[a]:
                v = u + strides[a]
                if allowed[v] and not done[v]:
                    nd = du + weights[u, a]
                    if nd < tent[v]:
                        tent[v] = nd
                        pred[v] = u * d + a
                        size = heap_push(keys, vals, size, nd, v)
            if c > 0:
                v = u - strides[a]
                if allowed[v] and not done[v]:
                    nd = du + weights[v, a]
                    if nd < tent[v]:
                        tent[v] = nd
                        pred[v] = v * d + a
                        size = heap_push(keys, vals, size, nd, v)
    for v in range(n):
        if not done[v]:
            pred[v] = -1
    return dist, pred


@kernel
def geodesic_min_cost(weights, shape, strides, dist_from, dist_to, total, tol, cost, source, target):
    """Minimum total ``cost`` (per edge slot, nonnegative) over geodesics from source to target.

    A move ``u -> v`` across slot ``s`` is admissible iff
    ``dist_from[u] + w_s + dist_to[v] <= total + tol``; every admissible walk
    from source to target is then a geodesic.  Returns -1 if none exists.
    """
    n, d = weights.shape
    best = np.full(n, np.inf)
    done = np.zeros(n, dtype=np.bool_)
    cap = 2 * d * n + 1
    keys = np.empty(cap, dtype=np.float64)
    vals = np.empty(cap, dtype=np.int64)
    size = 0
    if not (dist_from[source] + dist_to[source] <= total + tol):
        return -1.0
    best[source] = 0.0
    size = heap_push(keys, vals, size, 0.0, source)
    while size > 0:
        cu, u, size = heap_pop(keys, vals, size)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            return cu
        base = dist_from[u]
        for a in range(d):
            c = (u // strides[a]) % shape[a]
            if c + 1 < shape[a]:
                v = u + strides[a]
                s = u * d + a
                if not done[v] and base + weights[u, a] + dist_to[v] <= total + tol:
                    nc = cu + cost[s]
                    if nc < best[v]:
                        best[v] = nc
                        size = heap_push(keys, vals, size, nc, v)
            if c > 0:
                v = u - strides[a]
                s = v * d + a
                if not done[v] and base + weights[v, a] + dist_to[v] <= total + tol:
                    nc = cu + cost[s]
                    if nc < best[v]:
                        best[v] = nc
                        size = heap_push(keys, vals, size, nc, v)
    return -1.0


@kernel
def find_root(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@kernel
def open_cluster_roots(weights, shape, strides, threshold):
    """Union-find over edges with weight <= threshold; returns each vertex's root."""
    n, d = weights.shape
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for u in range(n):
        for a in range(d):
            if weights[u, a] <= threshold:
                c = (u // strides[a]) % shape[a]
                if c + 1 < shape[a]:
                    ru = find_root(parent, u)
                    rv = find_root(parent, u + strides[a])
                    if ru != rv:
                        if size[ru] < size[rv]:
                            ru, rv = rv, ru
                        parent[rv] = ru
                        size[ru] += size[rv]
    for u in range(n):
        parent[u] = find_root(parent, u)
    return parent
