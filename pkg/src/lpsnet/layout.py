"""Machine-room embedding: cabinet grid, wire-length QAP heuristic, power and latency.

Cabinets sit on an x_dim by y_dim grid and hold two routers each. Cell
``i`` is at grid position (i % x_dim, i // x_dim) and owns slots 2i and
2i+1. A maximum matching of the topology fixes which routers share a
cabinet, so the optimization only assigns router pairs to cells.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .graph import Graph
from .metrics import bfs_distances
from .seeding import rng_for

INTRA_CABINET_M = 2.0


@dataclass(frozen=True)
class MachineRoom:
    x_dim: int
    y_dim: int
    cabinets: int
    slots_per_cabinet: int = 2

    def __post_init__(self):
        if self.x_dim * self.y_dim < self.cabinets:
            raise ParameterError("grid too small for the requested cabinets")

    @property
    def cells(self) -> int:
        return self.x_dim * self.y_dim

    def position(self, cell: int) -> tuple[int, int]:
        return cell % self.x_dim, cell // self.x_dim

    def cell_distances(self) -> np.ndarray:
        """Inter-cabinet wire length between every two cells (2.0 on the diagonal)."""
        idx = np.arange(self.cells)
        x, y = idx % self.x_dim, idx // self.x_dim
        d = 4.0 + 2.0 * np.abs(x[:, None] - x[None, :]) + 0.6 * np.abs(y[:, None] - y[None, :])
        np.fill_diagonal(d, INTRA_CABINET_M)
        return d


def room_for(n_routers: int) -> MachineRoom:
    """Roughly square room for ``n_routers``: c = ceil(n/2), y = ceil(sqrt(2c/0.6)), x = ceil(c/y)."""
    if n_routers < 1:
        raise ParameterError("need at least one router")
    c = -(-n_routers // 2)
    # exact integer form of ceil(sqrt(10c/3)): the least y with 3y^2 >= 10c
    y = math.isqrt(10 * c // 3)
    while 3 * y * y < 10 * c:
        y += 1
    x = -(-c // y)
    return MachineRoom(x, y, c)


def wire_length(slot_a: int, slot_b: int, room: MachineRoom) -> float:
    ca, cb = slot_a // 2, slot_b // 2
    if ca == cb:
        return INTRA_CABINET_M
    (xa, ya), (xb, yb) = room.position(ca), room.position(cb)
    return 4.0 + 2.0 * abs(xa - xb) + 0.6 * abs(ya - yb)


# --- matching ----------------------------------------------------------------


@dataclass(frozen=True)
class CabinetMatching:
    pairs: tuple[tuple[int, int], ...]  # topology edges
    forced: tuple[tuple[int, int], ...]  # leftovers paired without an edge
    single: int | None = None  # odd n: router alone in its cabinet

    @property
    def size(self) -> int:
        return len(self.pairs)

    @property
    def units(self) -> list[tuple[int, ...]]:
        out = [tuple(p) for p in self.pairs] + [tuple(p) for p in self.forced]
        if self.single is not None:
            out.append((self.single,))
        return out


def _augment_from(root: int, graph: Graph, mate: np.ndarray) -> bool:
    """BFS for an alternating path from unmatched ``root``; augments in place.

    Odd cycles are not contracted, so a path hidden behind a blossom may be
    missed. Vertices are labelled at most once, so any path found is simple.
    """
    parent = {root: -1}
    queue = [root]
    for u in queue:
        for w in graph.neighbors(u):
            w = int(w)
            if w in parent:
                continue
            if mate[w] < 0:
                # flip the path root .. u, w
                while u >= 0:
                    nxt = mate[u] if u != root else -1
                    mate[u], mate[w] = w, u
                    if nxt < 0:
                        break
                    w = int(nxt)
                    u = parent[w]
                return True
            parent[w] = u
            m = int(mate[w])
            if m not in parent:
                parent[m] = w
                queue.append(m)
    return False


def cabinet_matching(graph: Graph, seed=0) -> CabinetMatching:
    """Randomized greedy matching grown by augmenting paths until none is found."""
    n = graph.n
    rng = rng_for(seed, "matching")
    mate = np.full(n, -1, dtype=np.int64)
    for u in rng.permutation(n):
        if mate[u] >= 0:
            continue
        nbrs = [int(w) for w in rng.permutation(graph.neighbors(u)) if mate[w] < 0]
        if nbrs:
            mate[u], mate[nbrs[0]] = nbrs[0], u
    improved = True
    while improved:
        improved = False
        for r in range(n):
            if mate[r] < 0 and _augment_from(r, graph, mate):
                improved = True
    pairs = tuple(sorted((u, int(mate[u])) for u in range(n) if mate[u] > u))
    left = [u for u in range(n) if mate[u] < 0]
    forced = tuple((left[i], left[i + 1]) for i in range(0, len(left) - 1, 2))
    single = left[-1] if len(left) % 2 else None
    return CabinetMatching(pairs, forced, single)


# --- placement -----------------------------------------------------------------


@dataclass
class RouterPlacement:
    router_to_slot: tuple[int, ...]
    matched_pairs: tuple[tuple[int, int], ...]
    room: MachineRoom
    total_length: float
    forced_pairs: tuple[tuple[int, int], ...] = ()
    history: list = field(default_factory=list, repr=False)  # objective after each accepted swap

    def cabinet_of(self, router: int) -> int:
        return self.router_to_slot[router] // 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# lpsnet-placement-csv v1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["router", "x", "y", "slot"])
        for r, s in enumerate(self.router_to_slot):
            x, y = self.room.position(s // 2)
            w.writerow([r, x, y, s % 2])
        return buf.getvalue()


def _unit_flows(graph: Graph, units: list[tuple[int, ...]], size: int) -> tuple[np.ndarray, int]:
    """Edge counts between units (padded to ``size``) and the number of intra-unit edges."""
    owner = np.empty(graph.n, dtype=np.int64)
    for i, u in enumerate(units):
        owner[list(u)] = i
    e = graph.edges()
    a, b = owner[e[:, 0]], owner[e[:, 1]]
    intra = int(np.count_nonzero(a == b))
    W = np.zeros((size, size))
    np.add.at(W, (a[a != b], b[a != b]), 1.0)
    W += W.T
    return W, intra


def _objective(W: np.ndarray, D: np.ndarray, perm: np.ndarray) -> float:
    Dp = D[np.ix_(perm, perm)]
    np.fill_diagonal(Dp, 0.0)
    return 0.5 * float(np.sum(W * Dp))


def _swap_climb(W: np.ndarray, D: np.ndarray, perm: np.ndarray, max_swaps: int | None,
                history: list | None = None) -> float:
    """Best-improvement pairwise swap descent on ``perm`` (unit -> cell), in place."""
    Dp = D[np.ix_(perm, perm)]
    np.fill_diagonal(Dp, 0.0)
    A = W @ Dp
    obj = 0.5 * float(np.sum(W * Dp))
    steps = 0
    while max_swaps is None or steps < max_swaps:
        diag = np.diag(A)
        delta = A + A.T - diag[:, None] - diag[None, :] + 2.0 * W * Dp
        np.fill_diagonal(delta, 0.0)
        k = int(np.argmin(delta))
        r, s = divmod(k, delta.shape[1])
        if delta[r, s] >= -1e-9:
            break
        obj += float(delta[r, s])
        # A' = W Dp' where Dp' swaps rows/cols r, s of Dp
        colfix = np.outer(W[:, r] - W[:, s], Dp[s, :] - Dp[r, :])
        perm[r], perm[s] = perm[s], perm[r]
        Dp[[r, s], :] = Dp[[s, r], :]
        Dp[:, [r, s]] = Dp[:, [s, r]]
        A += colfix
        A[:, [r, s]] = W @ Dp[:, [r, s]]
        steps += 1
        if history is not None:
            history.append(obj)
    return obj


def optimize_layout(graph: Graph, room: MachineRoom | None = None,
                    matching: CabinetMatching | None = None, seed=0, budget: int = 20,
                    max_swaps: int | None = None) -> RouterPlacement:
    """Minimize total wire length with the matching pairs pinned inside cabinets.

    Each of ``budget`` starts draws a random assignment of pairs to cells
    (stream (seed, "layout", start)) and runs swap descent to a local optimum.
    The lowest total wins; ties go to the lower start index.
    """
    room = room or room_for(graph.n)
    matching = matching or cabinet_matching(graph, seed)
    units = matching.units
    if len(units) > room.cells:
        raise ParameterError(f"{len(units)} cabinets needed but the room has {room.cells} cells")
    N = room.cells
    W, intra = _unit_flows(graph, units, N)
    D = room.cell_distances()
    best = None
    for start in range(max(1, budget)):
        perm = rng_for(seed, "layout", start).permutation(N)
        hist: list = []
        obj = _swap_climb(W, D, perm, max_swaps, hist)
        if best is None or obj < best[0] - 1e-9:
            best = (obj, perm.copy(), hist)
    obj, perm, hist = best
    slots = [0] * graph.n
    for i, unit in enumerate(units):
        for j, r in enumerate(unit):
            slots[r] = 2 * int(perm[i]) + j
    return RouterPlacement(tuple(slots), matching.pairs, room, obj + INTRA_CABINET_M * intra,
                           matching.forced, [h + INTRA_CABINET_M * intra for h in hist])


# --- statistics ------------------------------------------------------------------


@dataclass(frozen=True)
class CostModel:
    electrical_port_watts: float = 3.76
    optical_port_watts: float = 4.72
    cable_delay_ns_per_m: float = 5.0
    electrical_cutoff_m: float = 5.0
    link_gbps: float = 100.0


@dataclass(frozen=True)
class WireStats:
    mean_length: float
    max_length: float
    total_length: float
    electrical_links: int
    optical_links: int
    cutoff_m: float


def edge_lengths(graph: Graph, placement: RouterPlacement) -> np.ndarray:
    e = graph.edges()
    slots = np.asarray(placement.router_to_slot)
    return np.array([wire_length(int(a), int(b), placement.room)
                     for a, b in zip(slots[e[:, 0]], slots[e[:, 1]])])


def wire_stats(graph: Graph, placement: RouterPlacement, model: CostModel = CostModel()) -> WireStats:
    L = edge_lengths(graph, placement)
    elec = int(np.count_nonzero(L <= model.electrical_cutoff_m))
    return WireStats(float(L.mean()), float(L.max()), float(L.sum()), elec, len(L) - elec,
                     model.electrical_cutoff_m)


POWER_FORMULA = ("total_watts = 2 * (electrical_links * electrical_port_watts + "
                 "optical_links * optical_port_watts); "
                 "mw_per_gbps = total_watts * 1000 / (bisection_links * link_gbps)")


def mw_per_gbps(total_watts: float, bisection_links: float, link_gbps: float = 100.0) -> float:
    return total_watts * 1000.0 / (bisection_links * link_gbps)


def power_estimate(stats: WireStats, model: CostModel = CostModel(),
                   bisection_links: float | None = None) -> tuple[float, float | None]:
    """Total port power and, given a bisection link count, mW per Gb/s of bisection."""
    total = 2.0 * (stats.electrical_links * model.electrical_port_watts
                   + stats.optical_links * model.optical_port_watts)
    ratio = None if bisection_links is None else mw_per_gbps(total, bisection_links, model.link_gbps)
    return total, ratio


def latency_profile(graph: Graph, placement: RouterPlacement, model: CostModel = CostModel(),
                    switch_latency_ns: float = 0.0, switch_per_hop_plus_one: bool = True
                    ) -> tuple[float, float]:
    """(max, mean) over ordered router pairs of the fastest hop-minimal path.

    Path latency = cable delay over its wires + (hops + 1) switch traversals
    (hops switch traversals with ``switch_per_hop_plus_one=False``).
    """
    wire = wire_delays(graph, placement, model)
    dist = wire.hops
    n = graph.n
    off = ~np.eye(n, dtype=bool)
    sw = dist + (1 if switch_per_hop_plus_one else 0)
    lat = wire.delay + sw * switch_latency_ns
    return float(lat[off].max()), float(lat[off].mean())


@dataclass(frozen=True)
class _WireDelays:
    hops: np.ndarray
    delay: np.ndarray


def wire_delays(graph: Graph, placement: RouterPlacement, model: CostModel = CostModel()) -> _WireDelays:
    """Minimum cable delay over hop-minimal paths, for every ordered pair."""
    dist = bfs_distances(graph).astype(np.int64)
    e = graph.edges()
    L = edge_lengths(graph, placement) * model.cable_delay_ns_per_m
    U = np.concatenate([e[:, 0], e[:, 1]])
    V = np.concatenate([e[:, 1], e[:, 0]])
    C = np.concatenate([L, L])
    order = np.argsort(V, kind="stable")
    U, V, C = U[order], V[order], C[order]
    starts = np.flatnonzero(np.r_[True, V[1:] != V[:-1]])
    heads = V[starts]
    best = np.where(dist == 0, 0.0, np.inf)
    for h in range(1, int(dist.max()) + 1):
        ok = (dist[:, U] == h - 1) & (dist[:, V] == h)
        cand = np.where(ok, best[:, U] + C[None, :], np.inf)
        red = np.minimum.reduceat(cand, starts, axis=1)
        layer = dist[:, heads] == h
        best[:, heads] = np.where(layer, red, best[:, heads])
    return _WireDelays(dist, best)


def latency_sweep(graph: Graph, placement: RouterPlacement, switch_latencies,
                  model: CostModel = CostModel(), switch_per_hop_plus_one: bool = True):
    """Rows (switch_latency, max_ns, mean_ns); the wire term is computed once."""
    wire = wire_delays(graph, placement, model)
    off = ~np.eye(graph.n, dtype=bool)
    sw = wire.hops + (1 if switch_per_hop_plus_one else 0)
    rows = []
    for s in switch_latencies:
        lat = wire.delay + sw * float(s)
        rows.append((float(s), float(lat[off].max()), float(lat[off].mean())))
    return rows
