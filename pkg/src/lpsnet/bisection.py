"""Kernighan-Lin balanced bisection with random restarts."""

from __future__ import annotations

import numpy as np

from .graph import Graph
from .seeding import rng_for

# Candidate pool per side when picking the best swap pair in a KL step.
POOL = 8


def cut_size(graph: Graph, side: np.ndarray) -> int:
    e = graph.edges()
    return int(np.count_nonzero(side[e[:, 0]] != side[e[:, 1]]))


def _gains(graph: Graph, side: np.ndarray) -> np.ndarray:
    """D[v] = external(v) - internal(v)."""
    nb = graph.neighbor_array
    valid = nb >= 0
    other = side[np.where(valid, nb, 0)] != side[:, None]
    ext = np.count_nonzero(other & valid, axis=1)
    return 2 * ext - graph.degrees


def _kl_pass(graph: Graph, adj: np.ndarray, side: np.ndarray, D: np.ndarray) -> int:
    """One KL pass in place; returns the realized cut reduction (>= 0)."""
    nb = graph.neighbor_array
    locked = np.zeros(graph.n, dtype=bool)
    steps = min(int(np.count_nonzero(side == 0)), int(np.count_nonzero(side == 1)))
    history = []
    total = 0
    best_total, best_len = 0, 0
    neg = np.iinfo(np.int64).min // 4
    for _ in range(steps):
        da = np.where((side == 0) & ~locked, D, neg)
        db = np.where((side == 1) & ~locked, D, neg)
        ca = np.argpartition(-da, min(POOL, len(da) - 1))[:POOL]
        cb = np.argpartition(-db, min(POOL, len(db) - 1))[:POOL]
        ca = ca[da[ca] > neg]
        cb = cb[db[cb] > neg]
        if ca.size == 0 or cb.size == 0:
            break
        g = D[ca][:, None] + D[cb][None, :] - 2 * adj[np.ix_(ca, cb)].astype(np.int64)
        i, j = np.unravel_index(int(np.argmax(g)), g.shape)
        a, b = int(ca[i]), int(cb[j])
        total += int(g[i, j])
        for v in (a, b):
            nv = nb[v][nb[v] >= 0]
            same = side[nv] == side[v]
            D[nv] += np.where(same, 2, -2)
            D[v] = -D[v]
            side[v] ^= 1
        # a and b were adjacent: each flip above already accounted for the edge
        locked[a] = locked[b] = True
        history.append((a, b))
        if total > best_total:
            best_total, best_len = total, len(history)
    for a, b in history[best_len:]:
        for v in (a, b):
            nv = nb[v][nb[v] >= 0]
            same = side[nv] == side[v]
            D[nv] += np.where(same, 2, -2)
            D[v] = -D[v]
            side[v] ^= 1
    return best_total


def kl_refine(graph: Graph, side: np.ndarray, max_passes: int = 50) -> np.ndarray:
    side = side.astype(np.int8).copy()
    adj = graph.adjacency_matrix(np.int8).toarray().astype(bool)
    D = _gains(graph, side).astype(np.int64)
    for _ in range(max_passes):
        if _kl_pass(graph, adj, side, D) <= 0:
            break
    return side


def kl_bisection(graph: Graph, restarts: int = 32, seed=0) -> tuple[int, np.ndarray]:
    """Best balanced cut over ``restarts`` KL runs from random bipartitions.

    Part sizes are floor(n/2) and ceil(n/2). Restart r uses the stream
    (seed, "bisection", r); ties go to the lowest restart index.
    """
    n = graph.n
    best_cut, best_side = None, None
    for r in range(max(1, restarts)):
        rng = rng_for(seed, "bisection", r)
        side = np.zeros(n, dtype=np.int8)
        side[rng.permutation(n)[: n - n // 2]] = 1
        side = kl_refine(graph, side)
        c = cut_size(graph, side)
        if best_cut is None or c < best_cut:
            best_cut, best_side = c, side
    return best_cut, best_side
