import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as scipy_dijkstra

from fpplab import kernels
from fpplab._accel import USE_NUMBA
from fpplab.lattice import Box
from fpplab.paths import WeightField
from fpplab.weights import Exponential, two_point


def sparse_graph(field: WeightField):
    b = field.box
    ids = b.edge_ids
    u = ids // b.d
    a = ids % b.d
    v = u + np.asarray(b.strides)[a]
    w = field.slots[ids]
    # csgraph drops explicit zeros, so shift by a tiny constant is not needed for positive weights
    m = csr_matrix((w, (u, v)), shape=(b.n_vertices, b.n_vertices))
    return m


@pytest.mark.parametrize("shape", [((-3, -3), (3, 3)), ((0, 0), (6, 2)), ((-1, -2, 0), (2, 1, 2))])
def test_dijkstra_matches_scipy(shape):
    box = Box(*shape)
    f = WeightField.iid(box, Exponential(1.0), np.random.default_rng(4))
    allowed = np.ones(box.n_vertices, dtype=np.bool_)
    dist, pred = kernels.dijkstra(f.weights, box.shape_arr, box.strides_arr, allowed, 0, -1, np.inf, -1.0)
    ref = scipy_dijkstra(sparse_graph(f), directed=False, indices=0)
    assert np.allclose(dist, ref, rtol=1e-12, atol=1e-12)


def test_dijkstra_limit_and_slack():
    box = Box.cube(4)
    f = WeightField.constant(box, 1.0)
    allowed = np.ones(box.n_vertices, dtype=np.bool_)
    src, dst = box.flat((0, 0)), box.flat((2, 0))
    dist, _ = kernels.dijkstra(f.weights, box.shape_arr, box.strides_arr, allowed, src, dst, np.inf, -1.0)
    assert dist[dst] == 2.0
    assert np.all(dist[np.isfinite(dist)] <= 2.0)
    dist, _ = kernels.dijkstra(f.weights, box.shape_arr, box.strides_arr, allowed, src, dst, np.inf, 0.5)
    # every vertex at distance 2 is settled when the slack is used
    assert np.sum(dist == 2.0) == 8
    dist, _ = kernels.dijkstra(f.weights, box.shape_arr, box.strides_arr, allowed, src, -1, 1.0, -1.0)
    assert np.sum(np.isfinite(dist)) == 5


def test_dijkstra_respects_allowed():
    box = Box((0, 0), (2, 2))
    f = WeightField.constant(box, 1.0)
    allowed = np.ones(box.n_vertices, dtype=np.bool_)
    allowed[box.flat((1, 0))] = allowed[box.flat((1, 1))] = False
    dist, _ = kernels.dijkstra(f.weights, box.shape_arr, box.strides_arr, allowed, 0, box.flat((2, 0)), np.inf, -1.0)
    assert dist[box.flat((2, 0))] == 6.0


def test_compiled_matches_python():
    box = Box.cube(5)
    f = WeightField.iid(box, two_point(1.0, 3.0), np.random.default_rng(5))
    allowed = np.ones(box.n_vertices, dtype=np.bool_)
    args = (f.weights, box.shape_arr, box.strides_arr, allowed, 0, box.n_vertices - 1, np.inf, 1e-9)
    d1, p1 = kernels.dijkstra(*args)
    d2, p2 = kernels.dijkstra.py_func(*args)
    assert np.array_equal(d1, d2) and np.array_equal(p1, p2)
    r1 = kernels.open_cluster_roots(f.weights, box.shape_arr, box.strides_arr, 1.5)
    r2 = kernels.open_cluster_roots.py_func(f.weights, box.shape_arr, box.strides_arr, 1.5)
    assert np.array_equal(r1, r2)
    cost = (f.slots > 1.5).astype(float)
    dx = d1
    dy, _ = kernels.dijkstra(f.weights, box.shape_arr, box.strides_arr, allowed, box.n_vertices - 1, -1, np.inf, -1.0)
    t = dx[box.n_vertices - 1]
    c1 = kernels.geodesic_min_cost(f.weights, box.shape_arr, box.strides_arr, dx, dy, t, 1e-9, cost, 0, box.n_vertices - 1)
    c2 = kernels.geodesic_min_cost.py_func(f.weights, box.shape_arr, box.strides_arr, dx, dy, t, 1e-9, cost, 0, box.n_vertices - 1)
    assert c1 == c2


def test_numba_flag_exposed():
    assert isinstance(USE_NUMBA, bool)
    assert callable(kernels.dijkstra.py_func)


def test_heap_sorts():
    rng = np.random.default_rng(0)
    keys = np.empty(64)
    vals = np.empty(64, dtype=np.int64)
    size = 0
    data = rng.random(50)
    for i, k in enumerate(data):
        size = kernels.heap_push(keys, vals, size, k, i)
    out = []
    while size:
        k, v, size = kernels.heap_pop(keys, vals, size)
        out.append(k)
    assert out == sorted(data)


def test_env_flag_fallback_agrees():
    import os
    import subprocess
    import sys

    code = (
        "import numpy as np\n"
        "from fpplab._accel import USE_NUMBA\n"
        "from fpplab.lattice import Box\n"
        "from fpplab.paths import WeightField, passage_time\n"
        "from fpplab.weights import Exponential\n"
        "f = WeightField.iid(Box.cube(4), Exponential(1.0), np.random.default_rng(0))\n"
        "print(USE_NUMBA, repr(passage_time(f, (-3, -2), (4, 1)).time))\n"
    )
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, FPPLAB_NO_NUMBA=flag)
        out[flag] = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert out["0"][0] == "True" and out["1"][0] == "False"
    assert out["0"][1] == out["1"][1]
