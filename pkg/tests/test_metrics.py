import itertools
import math

import networkx as nx
import numpy as np
import pytest
import scipy.sparse.csgraph as csg

from lpsnet import metrics as M
from lpsnet.topology import mms_delta
from lpsnet.bisection import cut_size, kl_bisection
from lpsnet.errors import DisconnectedGraphError, ParameterError
from lpsnet.graph import Graph

from conftest import built, complete, cycle, hypercube, petersen


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges().tolist())
    return h


@pytest.mark.parametrize("text", ["lps:3,5", "sf:7", "df:6", "bf:5,3"])
def test_bfs_matches_scipy(text):
    g = built(text)
    ref = csg.shortest_path(g.adjacency_matrix(), unweighted=True, directed=False)
    assert np.array_equal(M.bfs_distances(g), ref.astype(np.int16))


def test_bfs_unreachable_is_minus_one():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    d = M.bfs_distances(g)
    assert d[0, 2] == -1 and d[0, 1] == 1
    assert not M.is_connected(g)
    st = M.structural(g)
    assert not st.connected and st.diameter is None


@pytest.mark.parametrize("g,expect", [
    (cycle(7), 7), (cycle(4), 4), (complete(4), 3), (petersen(), 5), (hypercube(3), 4),
    (Graph.from_edges(3, [(0, 1), (1, 2)]), None),
])
def test_girth_small_graphs(g, expect):
    assert M.girth(g) == expect


@pytest.mark.parametrize("text", ["lps:3,5", "sf:5", "df:4"])
def test_girth_matches_networkx(text):
    g = built(text)
    assert M.girth(g) == nx.girth(to_nx(g))


def test_structural_vertex_transitive_shortcut():
    g = built("lps:11,7")
    fast = M.structural(g)
    full = M.structural(g, all_sources=True)
    assert fast.sources == 1 and full.sources == g.n
    assert (fast.diameter, round(fast.mean_distance, 9)) == (full.diameter, round(full.mean_distance, 9))


@pytest.mark.parametrize("text", ["lps:11,7", "sf:7", "df:5", "lps:3,5"])
def test_spectral_dense_matches_numpy(text):
    g = built(text)
    ev = np.linalg.eigvalsh(g.adjacency_matrix().toarray())
    k = g.radix
    rest = ev[np.abs(np.abs(ev) - k) > 1e-8]
    sp = M.spectral(g)
    assert sp.lambda_ == pytest.approx(np.abs(rest).max(), abs=1e-9)
    assert sp.lambda2 == pytest.approx(ev[ev < k - 1e-8].max(), abs=1e-9)
    assert sp.mu1 == pytest.approx((k - sp.lambda_) / k)


@pytest.mark.parametrize("text", ["lps:11,7", "lps:3,5", "sf:7"])
def test_iterative_path_agrees_with_dense(text):
    g = built(text)
    d = M.spectral(g, method="dense")
    it = M.spectral(g, method="iterative")
    assert it.lambda_ == pytest.approx(d.lambda_, abs=1e-5)
    assert it.lambda2 == pytest.approx(d.lambda2, abs=1e-5)


def test_ramanujan_and_alon_boppana():
    assert M.is_ramanujan(built("lps:11,7"))
    assert not M.is_ramanujan(built("df:12"))
    sp = M.spectral(built("lps:23,11"))
    assert sp.lambda_ >= M.alon_boppana_floor(24, 3)
    assert M.alon_boppana_floor(4, math.inf) == pytest.approx(2 * math.sqrt(3))
    with pytest.raises(ParameterError):
        M.alon_boppana_floor(2, 3)


def exhaustive_bisection(g):
    n = g.n
    e = g.edges()
    best = None
    for S in itertools.combinations(range(n), n // 2):
        side = np.zeros(n, dtype=np.int8)
        side[list(S)] = 1
        c = int(np.count_nonzero(side[e[:, 0]] != side[e[:, 1]]))
        best = c if best is None else min(best, c)
    return best


def random_regular(d, n, seed):
    h = nx.random_regular_graph(d, n, seed=seed)
    return Graph.from_edges(n, list(h.edges()))


SMALL_GRAPHS = [petersen(), hypercube(4), cycle(9), complete(6), built("df:3"), cycle(14),
                random_regular(3, 16, 0), random_regular(4, 15, 1)]


@pytest.mark.parametrize("g", SMALL_GRAPHS)
def test_kl_matches_exhaustive(g):
    cut, side = kl_bisection(g, restarts=16, seed=1)
    assert abs(int(side.sum()) - (g.n - int(side.sum()))) <= 1
    assert cut == cut_size(g, side) == exhaustive_bisection(g)


def test_bisection_bounds_bracket():
    for text in ["lps:11,7", "sf:7", "df:12"]:
        b = M.bisection(built(text), restarts=8)
        assert b.lower <= b.upper
        assert b.normalized_upper == pytest.approx(b.upper / built(text).m)
    with pytest.raises(DisconnectedGraphError):
        M.bisection(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_discrepancy_exhaustive_on_k5():
    g = complete(5)
    lam = M.spectral(g).lambda_
    assert lam == pytest.approx(1.0)
    worst = 0.0
    for s in range(1, 5):
        for S in itertools.combinations(range(5), s):
            rest = [v for v in range(5) if v not in S]
            for t in range(1, len(rest) + 1):
                for T in itertools.combinations(rest, t):
                    worst = max(worst, M.discrepancy_ratio(g, S, T, lam))
    assert worst <= 1 + 1e-12
    assert M.discrepancy_sample(g, samples=200) <= worst + 1e-12


def test_discrepancy_small_sets_lps_3_5():
    g = built("lps:3,5")
    lam = M.spectral(g).lambda_
    for S in itertools.combinations(range(8), 2):
        for T in itertools.combinations(range(8, 16), 3):
            assert M.discrepancy_ratio(g, S, T, lam) <= 1 + 1e-12
    assert M.discrepancy_sample(g, samples=300, seed=3) <= 1 + 1e-12


def test_failure_experiment_basics():
    g = built("sf:5")
    curve = M.failure_experiment(g, [0.0, 0.2], seed=2, measure_bisection=True, max_trials=100)
    p0, p1 = curve.points
    assert p0.connected_rate == 1.0 and p0.mean_diameter == 2.0 and p0.cv["diameter"] == 0.0
    assert p1.trials >= 100 and 0 <= p1.connected_rate <= 1
    again = M.failure_experiment(g, [0.0, 0.2], seed=2, measure_bisection=True, max_trials=100)
    assert again.points == curve.points
    rows = curve.rows()
    assert {"cv_diameter", "converged", "connected_rate"} <= set(rows[0])
    with pytest.raises(ParameterError):
        M.failure_experiment(g, [1.0])


@pytest.mark.parametrize("q", [4, 5, 7, 8, 9, 13, 17])
def test_slimfly_laplacian_gap_is_q(q):
    # k - lambda2 = q with k = (3q - delta)/2, i.e. mu1 = 2 / (3 - delta/q)
    g = built(f"sf:{q}")
    sp = M.spectral(g)
    delta = mms_delta(q)
    assert g.radix - sp.lambda2 == pytest.approx(q, abs=1e-8)
    assert sp.laplacian_mu1 == pytest.approx(2 / (3 - delta / q), abs=1e-9)
