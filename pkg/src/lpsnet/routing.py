"""Minimal (randomized ECMP), Valiant and UGAL-L route selection.

Virtual channels follow the hop index: a packet uses VC i on its i-th
network hop. Since VCs strictly increase along every route, the channel
dependency graph is acyclic and routing is deadlock free; a minimal route
needs at most d VCs and a Valiant route at most 2d (d = diameter).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DisconnectedGraphError, RoutingError
from .graph import Graph
from .metrics import bfs_distances

MINIMAL = "minimal"
VALIANT = "valiant"
UGAL = "ugal"


@dataclass(frozen=True)
class VcPolicy:
    diameter: int

    @property
    def count_minimal(self) -> int:
        return self.diameter + 1

    @property
    def count_valiant(self) -> int:
        return 2 * self.diameter + 1

    def budget(self, kind: str) -> int:
        return self.count_minimal if kind == MINIMAL else self.count_valiant


@dataclass(frozen=True)
class Route:
    hops: tuple[int, ...]
    vcs: tuple[int, ...]
    kind: str

    @property
    def length(self) -> int:
        return len(self.vcs)


class RoutingTable:
    """All-pairs hop distances plus equal-cost next-hop sets.

    ``next_hops(u, d)`` lists, in increasing order, the neighbors of u that
    are one hop closer to d.
    """

    def __init__(self, graph: Graph):
        dist = bfs_distances(graph)
        if np.any(dist < 0):
            raise DisconnectedGraphError("routing tables need a connected graph")
        self.graph = graph
        self.dist = dist
        self.n = graph.n
        self.diameter = int(dist.max())
        self.policy = VcPolicy(self.diameter)
        nb = graph.neighbor_array
        self._nb = nb
        valid = nb >= 0
        # mask[u, d, j]: neighbor slot j of u is on a shortest path to d
        nd = dist[np.where(valid, nb, 0)]  # (n, k, n)
        self._mask = ((nd == (dist[:, None, :] - 1)) & valid[:, :, None]).transpose(0, 2, 1)
        self._mask = np.ascontiguousarray(self._mask)
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def next_hops(self, u: int, d: int) -> np.ndarray:
        key = (u, d)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._nb[u][self._mask[u, d]]
            self._cache[key] = hit
        return hit

    def distance(self, u: int, d: int) -> int:
        return int(self.dist[u, d])


def build_tables(graph: Graph) -> RoutingTable:
    return RoutingTable(graph)


def _walk(table: RoutingTable, s: int, d: int, rng: np.random.Generator) -> list[int]:
    path = [s]
    u = s
    while u != d:
        nh = table.next_hops(u, d)
        u = int(nh[rng.integers(len(nh))]) if len(nh) > 1 else int(nh[0])
        path.append(u)
    return path


def vc_for_hop(hop_index: int, kind: str, d: int) -> int:
    """VC for the hop at ``hop_index``; RoutingError if over budget."""
    budget = VcPolicy(d).budget(kind)
    if hop_index >= budget:
        raise RoutingError(f"hop {hop_index} exceeds {kind} VC budget {budget} (d={d})")
    return hop_index


def _route(table: RoutingTable, hops: list[int], kind: str) -> Route:
    vcs = tuple(vc_for_hop(i, kind, table.diameter) for i in range(len(hops) - 1))
    return Route(tuple(hops), vcs, kind)


def minimal_route(table: RoutingTable, s: int, d: int, rng: np.random.Generator) -> Route:
    """Shortest path with a uniform choice among equal-cost next hops."""
    return _route(table, _walk(table, s, d, rng), MINIMAL)


def valiant_route(table: RoutingTable, s: int, d: int, rng: np.random.Generator,
                  intermediate: int | None = None) -> Route:
    """Two minimal phases through a uniformly random intermediate router."""
    i = int(rng.integers(table.n)) if intermediate is None else intermediate
    first = _walk(table, s, i, rng)
    second = _walk(table, i, d, rng)
    return _route(table, first + second[1:], VALIANT)


def ugal_choice(min_queue: float, min_hops: int, val_queue: float, val_hops: int,
                threshold: float = 0.0) -> str:
    """UGAL-L rule: minimal iff min_queue*min_hops <= val_queue*val_hops + threshold."""
    if min_queue * min_hops <= val_queue * val_hops + threshold:
        return MINIMAL
    return VALIANT


def channel_dependencies(routes: Iterable[Route]) -> set[tuple[tuple[int, int, int], tuple[int, int, int]]]:
    """Edges between consecutive (from, to, vc) channels used by each route."""
    deps = set()
    for r in routes:
        ch = [(r.hops[i], r.hops[i + 1], r.vcs[i]) for i in range(len(r.vcs))]
        deps.update(zip(ch, ch[1:]))
    return deps


def is_acyclic(edges) -> bool:
    """Kahn's algorithm on a directed edge set."""
    succ: dict = {}
    indeg: dict = {}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
        indeg[b] = indeg.get(b, 0) + 1
        indeg.setdefault(a, 0)
    ready = [v for v, c in indeg.items() if c == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for w in succ.get(v, ()):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return seen == len(indeg)
