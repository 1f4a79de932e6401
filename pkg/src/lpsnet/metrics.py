"""Structural and spectral measurements of router graphs.

Distances come from a level-synchronous BFS that advances a block of sources
at once with one sparse-dense product per level. Spectra use a dense
symmetric solver up to ``DENSE_LIMIT`` vertices and Lanczos (``eigsh``) with
explicit deflation of the trivial eigenvectors above it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bisection import kl_bisection
from .errors import DisconnectedGraphError, ParameterError
from .graph import Graph
from .seeding import rng_for

DENSE_LIMIT = 3000
RAMANUJAN_TOL = 1e-8


# --- distances -----------------------------------------------------------


def bfs_distances(graph: Graph, sources=None, block: int = 1024) -> np.ndarray:
    """Hop distances from ``sources`` (default: all) to every vertex.

    Returns an int16 array of shape (len(sources), n); -1 marks unreachable.
    """
    n = graph.n
    src = np.arange(n) if sources is None else np.asarray(sources, dtype=np.int64)
    A = graph.adjacency_matrix(np.float32)
    out = np.full((len(src), n), -1, dtype=np.int16)
    for lo in range(0, len(src), block):
        s = src[lo : lo + block]
        b = len(s)
        front = np.zeros((n, b), dtype=np.float32)
        front[s, np.arange(b)] = 1.0
        reach = front > 0
        dist = np.full((n, b), -1, dtype=np.int16)
        dist[reach] = 0
        d = 0
        while True:
            d += 1
            nxt = (A @ front) > 0
            nxt &= ~reach
            if not nxt.any():
                break
            dist[nxt] = d
            reach |= nxt
            front = nxt.astype(np.float32)
        out[lo : lo + b] = dist.T
    return out


def is_connected(graph: Graph) -> bool:
    if graph.n == 0:
        return False
    return bool(np.all(bfs_distances(graph, [0])[0] >= 0))


def is_bipartite(graph: Graph) -> bool:
    """2-coloring by BFS parity; assumes a connected graph."""
    d = bfs_distances(graph, [0])[0]
    e = graph.edges()
    return bool(np.all((d[e[:, 0]] - d[e[:, 1]]) % 2 == 1))


@dataclass
class StructuralReport:
    diameter: int | None
    mean_distance: float | None
    girth: int | None
    connected: bool
    n: int = 0
    sources: int = 0


def girth(graph: Graph) -> int | None:
    """Length of a shortest cycle (None for a forest).

    Triangles and 4-cycles are detected algebraically from A^2; longer
    girths fall back to a BFS from every vertex (one vertex suffices for
    vertex-transitive graphs).
    """
    A = graph.adjacency_matrix(np.int32)
    n = graph.n
    four = False
    for lo in range(0, n, 512):
        rows = A[lo : lo + 512]
        A2 = (rows @ A).tocoo()
        if rows.multiply(A2.tocsr()).sum() > 0:
            return 3
        if np.any((A2.data >= 2) & (A2.row + lo != A2.col)):
            four = True
    if four:
        return 4
    best = None
    for root in [0] if graph.vertex_transitive else range(n):
        c = _shortest_cycle_from(graph, root, best)
        if c is not None and (best is None or c < best):
            best = c
    return best


def _shortest_cycle_from(graph: Graph, root: int, best: int | None) -> int | None:
    dist = {root: 0}
    parent = {root: -1}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            du = dist[u]
            if best is not None and 2 * du + 1 >= best:
                return best
            for v in graph.neighbors(u).tolist():
                if v not in dist:
                    dist[v] = du + 1
                    parent[v] = u
                    nxt.append(v)
                elif parent[u] != v:
                    c = du + dist[v] + 1
                    if best is None or c < best:
                        best = c
        frontier = nxt
    return best


def structural(graph: Graph, all_sources: bool | None = None) -> StructuralReport:
    """Diameter, mean distance over ordered distinct pairs, girth, connectivity.

    Vertex-transitive graphs (as certified by their builder) need only one
    BFS source unless ``all_sources`` forces the full computation.
    """
    if graph.n == 0:
        raise ParameterError("empty graph")
    if all_sources is None:
        all_sources = not graph.vertex_transitive
    sources = None if all_sources else [0]
    D = bfs_distances(graph, sources)
    ns = D.shape[0]
    if np.any(D < 0):
        return StructuralReport(None, None, girth(graph), False, graph.n, ns)
    n = graph.n
    mean = float(D.sum(dtype=np.int64)) / (ns * (n - 1)) if n > 1 else 0.0
    return StructuralReport(int(D.max()), mean, girth(graph), True, n, ns)


def distance_summary(graph: Graph) -> tuple[bool, int | None, float | None]:
    """(connected, diameter, mean distance) without the girth computation."""
    D = bfs_distances(graph)
    if np.any(D < 0):
        return False, None, None
    n = graph.n
    return True, int(D.max()), float(D.sum(dtype=np.int64)) / (n * (n - 1))


# --- spectrum -----------------------------------------------------------


@dataclass
class SpectralReport:
    """Nontrivial adjacency spectrum summary of a k-regular graph.

    ``lambda_`` is the largest magnitude eigenvalue other than +-k and
    ``mu1 = (k - lambda_) / k``. ``lambda2`` is the largest eigenvalue below
    k and ``laplacian_mu1 = (k - lambda2) / k`` is the second smallest
    normalized Laplacian eigenvalue. The two coincide unless the most
    negative eigenvalue dominates.
    """

    k: int
    lambda_: float
    lambda2: float
    lambda_min: float
    mu1: float
    laplacian_mu1: float
    ramanujan: bool
    bipartite: bool
    method: str

    @property
    def ramanujan_bound(self) -> float:
        return 2.0 * math.sqrt(self.k - 1)


def _require_regular(graph: Graph) -> int:
    if not graph.is_regular:
        raise ParameterError("spectral quantities here are defined for regular graphs only")
    return graph.radix


def adjacency_eigenvalues(graph: Graph) -> np.ndarray:
    return np.linalg.eigvalsh(graph.adjacency_matrix().toarray())


def _dense_extremes(graph: Graph, k: int, tol: float):
    ev = adjacency_eigenvalues(graph)
    inner = ev[np.abs(np.abs(ev) - k) > tol]
    if inner.size == 0:
        return 0.0, 0.0
    return float(inner.max()), float(inner.min())


def _iterative_extremes(graph: Graph, k: int, bipartite: bool, tol: float):
    n = graph.n
    A = graph.adjacency_matrix()
    basis = [np.ones(n) / math.sqrt(n)]
    if bipartite:
        d = bfs_distances(graph, [0])[0]
        basis.append(np.where(d % 2 == 0, 1.0, -1.0) / math.sqrt(n))
    Q = np.stack(basis, axis=1)

    def mv(x):
        x = x - Q @ (Q.T @ x)
        y = A @ x
        return y - Q @ (Q.T @ y)

    op = spla.LinearOperator((n, n), matvec=mv, dtype=np.float64)
    v0 = rng_for(0, "lanczos").standard_normal(n)
    hi = spla.eigsh(op, k=1, which="LA", v0=v0, tol=1e-12, return_eigenvectors=False)[0]
    lo = spla.eigsh(op, k=1, which="SA", v0=v0, tol=1e-12, return_eigenvectors=False)[0]
    return float(hi), float(lo)


def spectral(graph: Graph, tol: float = 1e-6, method: str | None = None) -> SpectralReport:
    """Nontrivial extreme adjacency eigenvalues and derived gaps.

    ``method`` is "dense", "iterative" or None (dense up to DENSE_LIMIT).
    """
    k = _require_regular(graph)
    if not is_connected(graph):
        raise DisconnectedGraphError("spectral() needs a connected graph")
    bip = is_bipartite(graph)
    if method is None:
        method = "dense" if graph.n <= DENSE_LIMIT else "iterative"
    if method == "dense":
        hi, lo = _dense_extremes(graph, k, tol)
    elif method == "iterative":
        hi, lo = _iterative_extremes(graph, k, bip, tol)
    else:
        raise ParameterError(f"unknown eigensolver method {method!r}")
    lam = max(abs(hi), abs(lo))
    return SpectralReport(
        k=k,
        lambda_=lam,
        lambda2=hi,
        lambda_min=lo,
        mu1=(k - lam) / k,
        laplacian_mu1=(k - hi) / k,
        ramanujan=lam <= 2.0 * math.sqrt(k - 1) + RAMANUJAN_TOL,
        bipartite=bip,
        method=method,
    )


def is_ramanujan(graph: Graph) -> bool:
    return spectral(graph).ramanujan


def alon_boppana_floor(k: int, D: float) -> float:
    """Lower bound on lambda for a k-regular graph of diameter D."""
    if k < 3 or D < 1:
        raise ParameterError("need k >= 3 and D >= 1")
    if math.isinf(D):
        return 2.0 * math.sqrt(k - 1)
    return 2.0 * math.sqrt(k - 1) * (1.0 - 2.0 / D) - 2.0 / D


def algebraic_connectivity(graph: Graph) -> float:
    """Second smallest eigenvalue of the combinatorial Laplacian."""
    A = graph.adjacency_matrix()
    L = sp.diags(graph.degrees.astype(float)) - A
    if graph.n <= DENSE_LIMIT:
        return float(np.linalg.eigvalsh(L.toarray())[1])
    n = graph.n
    one = np.ones(n) / math.sqrt(n)
    shift = 2.0 * float(graph.degrees.max())

    def mv(x):
        x = x - one * (one @ x)
        y = shift * x - L @ x
        return y - one * (one @ y)

    op = spla.LinearOperator((n, n), matvec=mv, dtype=np.float64)
    top = spla.eigsh(op, k=1, which="LA", tol=1e-12, return_eigenvectors=False)[0]
    return float(shift - top)


# --- bisection -----------------------------------------------------------


@dataclass
class BisectionEstimate:
    lower: float
    upper: int
    normalized_upper: float
    partition: np.ndarray = field(repr=False, default=None)


def bisection(graph: Graph, restarts: int = 32, seed: int = 0) -> BisectionEstimate:
    """Spectral lower bound and heuristic upper bound on bisection width.

    lower = a(G) * floor(n/2) * ceil(n/2) / n with a(G) the algebraic
    connectivity; for a k-regular graph and even n this is mu1 * k * n / 4
    with mu1 the normalized Laplacian gap.
    """
    if not is_connected(graph):
        raise DisconnectedGraphError("bisection() needs a connected graph")
    n = graph.n
    if graph.is_regular:
        a = graph.radix * spectral(graph).laplacian_mu1
    else:
        a = algebraic_connectivity(graph)
    lower = a * (n // 2) * (n - n // 2) / n
    cut, part = kl_bisection(graph, restarts=restarts, seed=seed)
    return BisectionEstimate(lower, cut, cut / graph.m if graph.m else 0.0, part)


# --- discrepancy ---------------------------------------------------------


def discrepancy_ratio(graph: Graph, S, T, lam: float) -> float:
    """|e(S,T) - k|S||T|/n| / (lam * sqrt(|S||T|)); 0 when S or T is empty."""
    S = np.asarray(S, dtype=np.int64)
    T = np.asarray(T, dtype=np.int64)
    if S.size == 0 or T.size == 0:
        return 0.0
    k = graph.radix
    inT = np.zeros(graph.n, dtype=bool)
    inT[T] = True
    e = sum(int(inT[graph.neighbors(int(u))].sum()) for u in S)
    dev = abs(e - k * S.size * T.size / graph.n)
    return dev / (lam * math.sqrt(S.size * T.size))


def discrepancy_sample(graph: Graph, samples: int = 1000, seed: int = 0,
                       lam: float | None = None) -> float:
    """Max discrepancy ratio over random disjoint vertex-set pairs.

    Each sample draws |S| and |T| uniformly with |S| + |T| <= n and takes
    the sets from a random permutation. Values <= 1 agree with the expander
    mixing bound.
    """
    k = _require_regular(graph)
    if lam is None:
        lam = spectral(graph).lambda_
    if lam <= 0:
        return 0.0
    rng = rng_for(seed, "discrepancy")
    n = graph.n
    A = graph.adjacency_matrix()
    worst = 0.0
    for _ in range(samples):
        s = int(rng.integers(0, n + 1))
        t = int(rng.integers(0, n - s + 1))
        if s == 0 or t == 0:
            continue
        perm = rng.permutation(n)
        xs = np.zeros(n)
        xt = np.zeros(n)
        xs[perm[:s]] = 1
        xt[perm[s : s + t]] = 1
        e = float(xs @ (A @ xt))
        r = abs(e - k * s * t / n) / (lam * math.sqrt(s * t))
        worst = max(worst, r)
    return worst


# --- edge failures ------------------------------------------------------


@dataclass
class FailurePoint:
    proportion: float
    trials: int
    connected_rate: float
    mean_diameter: float | None
    mean_distance: float | None
    mean_bisection: float | None
    cv: dict
    converged: bool


@dataclass
class FailureCurve:
    graph: str
    points: list[FailurePoint]

    @property
    def proportions(self) -> list[float]:
        return [p.proportion for p in self.points]

    def rows(self) -> list[dict]:
        out = []
        for p in self.points:
            row = {"topology": self.graph, **asdict(p)}
            cv = row.pop("cv")
            for key in ("diameter", "mean_distance", "bisection"):
                row[f"cv_{key}"] = cv.get(key)
            out.append(row)
        return out


def _trial(graph: Graph, drop_count: int, seed_parts, measure_bisection: bool, restarts: int):
    if drop_count == 0:
        g = graph
    else:
        rng = rng_for(*seed_parts)
        drop = rng.choice(graph.m, size=drop_count, replace=False)
        g = graph.subgraph_without(drop)
    ok, diam, mean = distance_summary(g)
    if not ok:
        return False, np.nan, np.nan, np.nan
    bis = np.nan
    if measure_bisection:
        bis, _ = kl_bisection(g, restarts=restarts, seed=seed_parts)
    return True, diam, mean, bis


def failure_experiment(
    graph: Graph,
    proportions,
    seed: int = 0,
    *,
    batches: int = 10,
    start_trials: int = 10,
    max_trials: int = 1000,
    cv_target: float = 0.10,
    measure_bisection: bool = True,
    bisection_restarts: int = 2,
) -> FailureCurve:
    """Random edge-deletion resilience curve.

    For each proportion, ``batches`` batches of x trials are run with x
    starting at ``start_trials`` and growing tenfold until every measured
    statistic has a coefficient of variation of batch means below
    ``cv_target``, or x would exceed ``max_trials`` (then ``converged`` is
    False). Metrics are averaged over connected samples only. Trial t at
    proportion index i draws from the stream (seed, "fail", i, t), so
    results do not depend on evaluation order.
    """
    points = []
    for i, prop in enumerate(proportions):
        if not 0 <= prop < 1:
            raise ParameterError(f"deletion proportion {prop} outside [0, 1)")
        drop = int(round(prop * graph.m))
        if drop == 0:
            r = _trial(graph, 0, (seed, "fail", i, 0), measure_bisection, bisection_restarts)
            cache = [r]
        else:
            cache = []
        x = start_trials
        while True:
            total = batches * x
            if drop == 0:
                results = cache * total
            else:
                while len(cache) < total:
                    cache.append(_trial(graph, drop, (seed, "fail", i, len(cache)),
                                        measure_bisection, bisection_restarts))
                results = cache[:total]
            arr = np.array([r[1:] for r in results], dtype=float).reshape(batches, x, 3)
            conn = np.array([r[0] for r in results])
            cv = {}
            for j, key in enumerate(("diameter", "mean_distance", "bisection")):
                if key == "bisection" and not measure_bisection:
                    continue
                with np.errstate(invalid="ignore"):
                    bm = np.nanmean(arr[:, :, j], axis=1) if conn.any() else np.full(batches, np.nan)
                bm = bm[~np.isnan(bm)]
                if bm.size < 2 or bm.mean() == 0:
                    cv[key] = 0.0 if bm.size >= 1 and np.all(bm == bm[0]) else math.inf
                else:
                    cv[key] = float(bm.std(ddof=1) / bm.mean())
            converged = all(v < cv_target for v in cv.values())
            if converged or x * 10 > max_trials:
                break
            x *= 10
        flat = arr.reshape(-1, 3)
        measured = 3 if measure_bisection else 2
        means = [float(np.nanmean(flat[:, j])) if conn.any() and j < measured else None
                 for j in range(3)]
        points.append(FailurePoint(
            proportion=float(prop),
            trials=total,
            connected_rate=float(conn.mean()),
            mean_diameter=means[0],
            mean_distance=means[1],
            mean_bisection=means[2] if measure_bisection else None,
            cv=cv,
            converged=converged,
        ))
    return FailureCurve(graph.name, points)
