"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary ends
with one PASS/FAIL line per criterion.
"""

import itertools
import math
import time
from dataclasses import asdict

import numpy as np
import pytest

from lpsnet import layout as L
from lpsnet import metrics as M
from lpsnet import routing as R
from lpsnet import simnet as S
from lpsnet import topology as T
from lpsnet.bisection import kl_bisection

from conftest import built
from test_metrics import SMALL_GRAPHS, exhaustive_bisection

C1 = pytest.mark.criterion(1, "structural reference values, small/medium classes")
C2 = pytest.mark.criterion(2, "Ramanujan property of LPS instances")
C3 = pytest.mark.criterion(3, "SlimFly spectral closed form 2/(3+delta/q)")
C4 = pytest.mark.criterion(4, "bisection bracketing")
C5 = pytest.mark.criterion(5, "edge-failure protocol at 600-vertex scale")
C6 = pytest.mark.criterion(6, "routing invariants")
C7 = pytest.mark.criterion(7, "simulator properties")
C8 = pytest.mark.criterion(8, "machine-room layout")


# --- 1 -------------------------------------------------------------------------

REFERENCE_ROWS = {
    # text: (n, radix, diameter, mean distance, mu1); None = not checked
    "lps:11,7": (168, 12, 3, 2.39, 0.50),
    "lps:23,11": (660, 24, 3, 2.35, 0.65),
    "sf:7": (98, 11, 2, 1.89, 0.62),
    "sf:17": (578, 25, 2, None, None),
    "df:12": (156, 12, 3, 2.70, 0.08),
}


@C1
@pytest.mark.parametrize("text", list(REFERENCE_ROWS))
def test_c1_reference_rows(text):
    n, k, diam, mean, mu1 = REFERENCE_ROWS[text]
    g = built(text)
    st = M.structural(g)
    assert g.n == n and g.is_regular and g.radix == k
    assert st.diameter == diam
    if mean is not None:
        assert abs(st.mean_distance - mean) <= 0.01
    if mu1 is not None:
        assert abs(M.spectral(g).mu1 - mu1) <= 0.01
    if text == "lps:11,7":
        assert st.girth == 3


@C1
def test_c1_bundlefly_13_3():
    g = built("bf:13,3")
    assert g.n == 234 and g.radix == 11
    diam = M.structural(g).diameter
    deviation = diam == 4
    if deviation:
        print("BF(13,3) deviation flag: diameter 4 (matching scheme)")
    assert diam in (3, 4)
    assert not deviation, "diameter 3 expected with the default bundle matching"


@C1
def test_c1_runtime_budget():
    t0 = time.perf_counter()
    for text in REFERENCE_ROWS:
        g = T.build(text)
        M.structural(g)
        M.spectral(g)
    T.build("bf:13,3")
    assert time.perf_counter() - t0 < 300


# --- 2 -------------------------------------------------------------------------

LPS_MATRIX = ["lps:3,5", "lps:3,7", "lps:11,7", "lps:23,11", "lps:5,13", "lps:3,13", "lps:7,11",
              "lps:13,11", "lps:13,17"]


@C2
@pytest.mark.parametrize("text", LPS_MATRIX)
def test_c2_ramanujan(text):
    g = built(text)
    assert g.n <= 3000
    sp = M.spectral(g, method="dense")
    p = g.radix - 1
    assert sp.lambda_ <= 2 * math.sqrt(p) + 1e-8
    assert M.is_ramanujan(g)


# --- 3 -------------------------------------------------------------------------

@C3
@pytest.mark.parametrize("q", [5, 7, 13, 17])
def test_c3_slimfly_closed_form(q):
    delta = T.mms_delta(q)
    # the closed form concerns the second normalized Laplacian eigenvalue
    sp = M.spectral(built(f"sf:{q}"))
    assert abs(sp.laplacian_mu1 - 2 / (3 + delta / q)) <= 1e-6


# --- 4 -------------------------------------------------------------------------

BISECT_GRAPHS = ["lps:11,7", "sf:7", "df:12", "bf:13,3", "lps:3,5", "sf:5"]


def literal_lower(g):
    sp = M.spectral(g)
    return sp.laplacian_mu1 * g.radix * g.n / 4


@C4
@pytest.mark.parametrize("text", BISECT_GRAPHS)
def test_c4_lower_below_upper(text):
    g = built(text)
    est = M.bisection(g, restarts=32, seed=0)
    assert literal_lower(g) <= est.upper + 1e-9
    assert est.lower <= est.upper


@C4
@pytest.mark.parametrize("g", SMALL_GRAPHS, ids=lambda g: f"n{g.n}m{g.m}")
def test_c4_exhaustive_small(g):
    assert g.n <= 16
    cut, _ = kl_bisection(g, restarts=32, seed=0)
    assert cut == exhaustive_bisection(g)
    if g.is_regular:
        assert literal_lower(g) <= cut + 1e-9


@C4
def test_c4_lps_23_11_normalized_above_third():
    est = M.bisection(built("lps:23,11"), restarts=32, seed=0)
    assert est.normalized_upper > 1 / 3


# --- 5 -------------------------------------------------------------------------

PROPORTIONS = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
CAP = 1000


@pytest.fixture(scope="module")
def failure_curves():
    return {text: M.failure_experiment(built(text), PROPORTIONS, seed=0, max_trials=CAP,
                                       measure_bisection=False)
            for text in ("sf:17", "lps:23,11")}


@C5
@pytest.mark.parametrize("text", ["sf:17", "lps:23,11"])
def test_c5_connectivity_and_convergence(failure_curves, text):
    assert 500 <= built(text).n <= 700
    for p in failure_curves[text].points:
        assert p.connected_rate == 1.0
        assert p.converged and p.trials <= CAP


@C5
def test_c5_slimfly_diameter_at_ten_percent(failure_curves):
    p = failure_curves["sf:17"].points[1]
    assert p.proportion == 0.1
    assert abs(p.mean_diameter - 4) <= 0.5


# --- 6 -------------------------------------------------------------------------

@C6
@pytest.mark.parametrize("text", ["lps:3,5", "df:3"])
def test_c6_channel_dependencies_acyclic(text):
    g = built(text)
    t = R.build_tables(g)
    rng = np.random.default_rng(0)
    routes = []
    for s, d in itertools.permutations(range(g.n), 2):
        routes.extend(R.minimal_route(t, s, d, rng) for _ in range(3))
        routes.append(R.valiant_route(t, s, d, rng))
    if g.n <= 20:
        routes.extend(R.valiant_route(t, s, d, rng, intermediate=i)
                      for s, d, i in itertools.product(range(g.n), repeat=3))
    assert R.is_acyclic(R.channel_dependencies(routes))
    # the same paths on a single VC do close cycles, so the check has teeth
    flat = [R.Route(r.hops, (0,) * r.length, r.kind) for r in routes]
    assert not R.is_acyclic(R.channel_dependencies(flat))


@C6
def test_c6_minimal_lengths_equal_bfs():
    g = built("lps:11,7")
    t = R.build_tables(g)
    ref = M.bfs_distances(g)
    rng = np.random.default_rng(1)
    pairs = rng.integers(g.n, size=(100_000, 2))
    for s, d in pairs.tolist():
        assert R.minimal_route(t, s, d, rng).length == ref[s, d]


@C6
def test_c6_valiant_mean_length():
    g = built("lps:11,7")
    t = R.build_tables(g)
    mean = M.structural(g).mean_distance
    rng = np.random.default_rng(2)
    lengths = []
    while len(lengths) < 100_000:
        s, d = (int(v) for v in rng.integers(g.n, size=2))
        if s != d:
            lengths.append(R.valiant_route(t, s, d, rng).length)
    assert abs(np.mean(lengths) / (2 * mean) - 1) <= 0.02


# --- 7 -------------------------------------------------------------------------

SMALL_CLASS = T.SIZE_CLASSES[0]
_t_sim = {"elapsed": 0.0}


def _setup(text, concentration=2, seed=0, pattern="random"):
    g = built(text)
    endpoints = g.n * concentration
    nbits = S.default_nbits(endpoints, pattern)
    return g, nbits, S.place_ranks(1 << nbits, endpoints, concentration, seed)


@C7
@pytest.mark.parametrize("text", SMALL_CLASS)
@pytest.mark.parametrize("routing", [R.MINIMAL, R.VALIANT, R.UGAL])
def test_c7_drain_at_full_load(text, routing):
    g = built(text)
    t = R.build_tables(g)
    t0 = time.perf_counter()
    for pattern in S.PATTERNS:
        _, nbits, pl = _setup(text, pattern=pattern)
        cfg = S.SimConfig(routing=routing, duration=4000, warmup=400, seed=0)
        st = S.run_sim(g, cfg, S.make_pattern(pattern, nbits, 0), pl, 1.0, table=t)
        assert st.in_flight_end == 0 and st.delivered == st.injected > 0
    _t_sim["elapsed"] += time.perf_counter() - t0


@C7
@pytest.mark.parametrize("text", SMALL_CLASS)
def test_c7_unloaded_latency_oracle(text):
    g, nbits, pl = _setup(text)
    t = R.build_tables(g)
    # long window: about 30 messages per pair, so a pair's median is uncontended
    cfg = S.SimConfig(routing=R.MINIMAL, duration=1_000_000, warmup=0, seed=0)
    t0 = time.perf_counter()
    st = S.run_sim(g, cfg, S.make_pattern("random", nbits, 0), pl, 0.01, table=t,
                   record_latencies=True)
    _t_sim["elapsed"] += time.perf_counter() - t0
    per_pair: dict = {}
    for src, dst, lat in st.latencies:
        per_pair.setdefault((src, dst), []).append(lat)
    ratios = []
    for (src, dst), lats in per_pair.items():
        oracle = S.unloaded_latency(cfg, int(t.dist[src // 2, dst // 2]))
        ratios.append(np.median(lats) / oracle)
    assert len(per_pair) >= 100
    assert all(abs(r - 1) <= 0.01 for r in ratios)
    assert abs(np.mean(ratios) - 1) <= 0.01


def _inversions(series):
    return [(a - b) / a for a, b in zip(series, series[1:]) if b < a]


@C7
@pytest.mark.parametrize("routing", [R.MINIMAL, R.UGAL])
def test_c7_latency_monotone_in_load(routing):
    g, nbits, pl = _setup("lps:11,7")
    t = R.build_tables(g)
    loads = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
    t0 = time.perf_counter()
    runs = []
    for seed in range(5):
        cfg = S.SimConfig(routing=routing, seed=seed)
        stats = S.sweep(g, cfg, S.make_pattern("random", nbits, seed), pl, loads, table=t)
        runs.append([s.max_message_time for s in stats])
    _t_sim["elapsed"] += time.perf_counter() - t0
    mean = np.mean(runs, axis=0)
    inv = _inversions(mean)
    assert len(inv) <= 1 and all(x <= 0.02 for x in inv)


@C7
def test_c7_determinism():
    g, nbits, pl = _setup("bf:13,3")
    cfg = S.SimConfig(routing=R.UGAL, duration=5000, warmup=500, seed=11)
    pat = S.make_pattern("random", nbits, 11)
    a = S.run_sim(g, cfg, pat, pl, 0.6, record_latencies=True)
    b = S.run_sim(g, cfg, pat, pl, 0.6, record_latencies=True)
    assert asdict(a) == asdict(b)
    assert S.stats_to_csv([("BF", "random", a)]).encode() == S.stats_to_csv([("BF", "random", b)]).encode()
    c = S.run_sim(g, S.SimConfig(**{**asdict(cfg), "seed": 12}), pat, pl, 0.6)
    assert asdict(c) != asdict(a)


@C7
def test_c7_runtime_budget():
    assert _t_sim["elapsed"] <= 30 * 60


# --- 8 -------------------------------------------------------------------------

LAYOUT_ROUTER_COUNTS = [168, 162, 336, 338, 660, 578, 1092, 1058]


@C8
@pytest.mark.parametrize("n", LAYOUT_ROUTER_COUNTS)
def test_c8_room_dimensions(n):
    c = math.ceil(n / 2)
    y = math.ceil(math.sqrt(2 * c / 0.6))
    x = math.ceil(c / y)
    assert L.room_for(n) == L.MachineRoom(x, y, c)


@pytest.fixture(scope="module")
def lps_11_7_layout():
    g = built("lps:11,7")
    return g, L.optimize_layout(g, seed=0)


@C8
def test_c8_matching_pairs_share_cabinets(lps_11_7_layout):
    g, pl = lps_11_7_layout
    assert len(pl.matched_pairs) == g.n // 2 and not pl.forced_pairs
    for u, v in pl.matched_pairs:
        assert g.has_edge(u, v) and pl.cabinet_of(u) == pl.cabinet_of(v)
    cabinets = [pl.cabinet_of(r) for r in range(g.n)]
    assert max(np.bincount(cabinets)) == 2


@C8
def test_c8_lps_11_7_wire_lengths(lps_11_7_layout):
    g, pl = lps_11_7_layout
    ws = L.wire_stats(g, pl)
    assert ws.mean_length <= 9.0
    assert ws.max_length <= 22.0


@C8
def test_c8_power_ratio_arithmetic():
    assert round(L.mw_per_gbps(928, 304, 100), 1) == 30.5


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
