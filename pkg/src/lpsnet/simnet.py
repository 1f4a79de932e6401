"""Discrete-event network simulator with credit-based flow control.

Model
-----
Routers have one output port per neighbor and one ejection port per attached
endpoint; every endpoint has one injection port (its NIC). All ports send at
``link_bandwidth``. Messages are split into packets and packets into flits of
``flit_bytes``; buffer space and credits are counted in flits.

A packet advances in cut-through fashion: once its head reaches a router it
may leave on the next link ``switch_latency`` later, provided the downstream
input buffer for (link, VC) has room for the whole packet. The head reaches
the next router ``link_latency`` after transmission starts and the tail
follows one packet serialization time behind. Buffer space at a router is
released when the tail leaves it, and the credit reaches the upstream port
one ``link_latency`` later. Ejection and injection add no latency beyond
serialization, so an uncontended message over h router-to-router hops takes

    message_bytes / link_bandwidth + h * (switch_latency + link_latency).

The VC of a packet on its i-th network hop is i, which makes routing
deadlock free. Routing (minimal / valiant / ugal) is chosen once, when a
packet's head reaches its source router; UGAL compares the waiting flits on
the two candidate first-hop ports times the route lengths.

Events are processed from a heap ordered by (time, sequence number), so a run
is a deterministic function of its inputs and seed.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from . import routing as R
from .errors import DeadlockError, ParameterError
from .graph import Graph
from .seeding import rng_for

PATTERNS = ("random", "bitshuffle", "bitreverse", "transpose")


@dataclass
class SimConfig:
    concentration: int = 2
    buffer_bytes: int = 65536
    packet_bytes: int = 1024
    message_bytes: int = 4096
    flit_bytes: int = 64
    link_bandwidth: float = 12.5  # bytes/ns, i.e. 100 Gb/s
    link_latency: float = 10.0  # ns
    switch_latency: float = 50.0  # ns
    vc_count: int | None = None  # None: d+1 for minimal, 2d+1 otherwise
    routing: str = R.MINIMAL
    ugal_threshold: float = 0.0
    duration: float = 20000.0  # ns, injection stops here
    warmup: float = 2000.0  # ns
    seed: int = 0
    deadlock_span: float = 1e7  # ns without any packet movement
    saturation_ratio: float = 0.95

    def validate(self, diameter: int | None = None) -> None:
        if self.buffer_bytes < self.packet_bytes:
            raise ParameterError("buffer_bytes must be >= packet_bytes")
        if self.routing not in (R.MINIMAL, R.VALIANT, R.UGAL):
            raise ParameterError(f"unknown routing {self.routing!r}")
        for name in ("concentration", "packet_bytes", "message_bytes", "flit_bytes"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if self.link_bandwidth <= 0 or self.warmup < 0 or self.duration <= self.warmup:
            raise ParameterError("need link_bandwidth > 0 and 0 <= warmup < duration")
        if diameter is not None and self.vc_count is not None:
            if self.vc_count < self.vcs_needed(diameter):
                raise ParameterError(
                    f"vc_count={self.vc_count} below {self.vcs_needed(diameter)} needed "
                    f"for {self.routing} routing at diameter {diameter}")

    def vcs_needed(self, diameter: int) -> int:
        pol = R.VcPolicy(diameter)
        return pol.budget(R.MINIMAL if self.routing == R.MINIMAL else R.VALIANT)


# --- traffic -------------------------------------------------------------


def make_pattern(kind: str, nbits: int, seed: int = 0) -> np.ndarray:
    """Destination rank for every source rank in 0 .. 2^nbits - 1."""
    if nbits < 1:
        raise ParameterError("nbits must be >= 1")
    n = 1 << nbits
    src = np.arange(n)
    if kind == "random":
        return rng_for(seed, "pattern").permutation(n)
    if kind == "bitshuffle":
        return ((src << 1) | (src >> (nbits - 1))) & (n - 1)
    if kind == "bitreverse":
        out = np.zeros(n, dtype=np.int64)
        for b in range(nbits):
            out |= ((src >> b) & 1) << (nbits - 1 - b)
        return out
    if kind == "transpose":
        if nbits % 2:
            raise ParameterError("transpose needs an even number of address bits")
        h = nbits // 2
        lo = src & ((1 << h) - 1)
        return (lo << h) | (src >> h)
    raise ParameterError(f"unknown traffic pattern {kind!r}")


@dataclass(frozen=True)
class Placement:
    rank_to_endpoint: tuple[int, ...]

    def __len__(self):
        return len(self.rank_to_endpoint)


def place_ranks(n_ranks: int, endpoints: int, concentration: int, seed: int = 0) -> Placement:
    """Random routers, sequential ranks.

    ceil(n_ranks / concentration) routers are drawn uniformly without
    replacement; taken in topology order, their endpoint slots receive ranks
    0, 1, 2, ...
    """
    if n_ranks > endpoints:
        raise ParameterError(f"{n_ranks} ranks oversubscribe {endpoints} endpoints")
    if endpoints % concentration:
        raise ParameterError("endpoints must be a multiple of the concentration")
    routers = endpoints // concentration
    need = -(-n_ranks // concentration)
    chosen = np.sort(rng_for(seed, "placement").choice(routers, size=need, replace=False))
    r = np.arange(n_ranks)
    return Placement(tuple(int(v) for v in chosen[r // concentration] * concentration + r % concentration))


def default_nbits(endpoints: int, kind: str = "random") -> int:
    """Widest address space that fits the endpoints; even for transpose."""
    bits = int(math.floor(math.log2(endpoints)))
    if kind == "transpose" and bits % 2:
        bits -= 1
    return bits


def unloaded_latency(config: SimConfig, hops: int) -> float:
    return config.message_bytes / config.link_bandwidth + hops * (config.switch_latency + config.link_latency)


# --- results -------------------------------------------------------------


@dataclass
class SimStats:
    max_message_time: float
    mean_latency: float
    delivered: int
    injected: int
    offered_load: float
    accepted_ratio: float
    saturated: bool
    in_flight_end: int
    routing: str = ""
    events: int = 0
    # (source endpoint, destination endpoint, latency) per measured message
    latencies: list = field(default_factory=list, repr=False)

    def speedup_vs(self, baseline: "SimStats") -> float:
        return baseline.max_message_time / self.max_message_time


CSV_VERSION = 1
# Fixed column order of simulation CSV output; extra columns (e.g. speedup) follow in name order.
CSV_COLUMNS = (
    "topology", "pattern", "routing", "offered_load", "max_message_time", "mean_latency",
    "delivered", "injected", "accepted_ratio", "saturated", "in_flight_end", "events",
)


def stats_to_csv(rows: list[tuple[str, str, SimStats]], extra: dict | None = None) -> str:
    """CSV text with a versioned header comment, one row per (topology, pattern, stats).

    ``extra`` maps additional column names to per-row value lists.
    """
    extra = extra or {}
    names = sorted(extra)
    buf = io.StringIO()
    buf.write(f"# lpsnet-sim-csv v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(CSV_COLUMNS) + names)
    for i, (topo, pat, s) in enumerate(rows):
        row = [topo, pat, s.routing, s.offered_load, repr(s.max_message_time), repr(s.mean_latency),
               s.delivered, s.injected, repr(s.accepted_ratio), int(s.saturated), s.in_flight_end,
               s.events]
        w.writerow(row + [extra[k][i] for k in names])
    return buf.getvalue()


# --- engine ----------------------------------------------------------------

_GEN, _HEAD, _PORT_TRY, _PORT_DONE, _CREDIT, _NIC_TRY, _NIC_CREDIT, _DELIVER = range(8)


class _Packet:
    __slots__ = ("msg", "dst_ep", "dst_router", "route", "hop", "kind", "ready", "in_port", "in_vc")

    def __init__(self, msg, dst_ep, dst_router):
        self.msg = msg
        self.dst_ep = dst_ep
        self.dst_router = dst_router
        self.route = None
        self.hop = 0
        self.kind = None
        self.ready = 0.0
        self.in_port = -1  # directed edge id, or -1 - endpoint for the injection buffer
        self.in_vc = 0


class Simulator:
    """One simulation run; see the module docstring for the model."""

    def __init__(self, graph: Graph, config: SimConfig, table: R.RoutingTable | None = None):
        self.graph = graph
        self.cfg = config
        self.table = table or R.build_tables(graph)
        config.validate(self.table.diameter)
        self.vcs = config.vc_count or config.vcs_needed(self.table.diameter)
        self.n_endpoints = graph.n * config.concentration
        self.edge_id = {}
        indptr, indices = graph.indptr, graph.indices
        for u in range(graph.n):
            for e in range(indptr[u], indptr[u + 1]):
                self.edge_id[(u, int(indices[e]))] = e
        self.edge_dst = indices.tolist()
        self.n_edges = len(indices)

    def run(self, pattern: np.ndarray, placement: Placement, load: float,
            record_latencies: bool = False, check_invariants: bool = False) -> SimStats:
        cfg = self.cfg
        if not 0 < load <= 1:
            raise ParameterError(f"offered load {load} outside (0, 1]")
        if len(pattern) != len(placement):
            raise ParameterError("pattern size must equal the number of placed ranks")
        if max(placement.rank_to_endpoint) >= self.n_endpoints:
            raise ParameterError("placement refers to endpoints outside the topology")
        conc = cfg.concentration
        flit = cfg.flit_bytes
        pkt_flits = -(-cfg.packet_bytes // flit)
        buf_flits = cfg.buffer_bytes // flit
        ser = cfg.packet_bytes / cfg.link_bandwidth
        sw, lk = cfg.switch_latency, cfg.link_latency
        n_pk = -(-cfg.message_bytes // cfg.packet_bytes)
        vcs = self.vcs
        table = self.table
        edge_id = self.edge_id
        edge_dst = self.edge_dst
        n_edges = self.n_edges
        n_ports = n_edges + self.n_endpoints
        route_rng = rng_for(cfg.seed, "routing")

        credits = [[buf_flits] * vcs for _ in range(n_edges)]
        nic_credit = [buf_flits] * self.n_endpoints
        queues = [None] * n_ports  # lazily created list of deques per VC
        busy = [False] * n_ports
        rr = [0] * n_ports
        waiting = [0] * n_ports  # flits queued at each port
        nic_q = [deque() for _ in range(self.n_endpoints)]
        nic_busy = [False] * self.n_endpoints

        heap = []
        seq = 0

        def push(t, kind, a=None, b=None, c=None):
            nonlocal seq
            heapq.heappush(heap, (t, seq, kind, a, b, c))
            seq += 1

        # Poisson message arrivals, one independent stream per source rank
        rate = load * cfg.link_bandwidth / cfg.message_bytes
        ep_of = placement.rank_to_endpoint
        n_sources = 0
        for rank, dst_rank in enumerate(pattern.tolist()):
            if dst_rank == rank:
                continue
            n_sources += 1
            arr_rng = rng_for(cfg.seed, "arrivals", rank)
            t = float(arr_rng.exponential(1.0 / rate))
            if t < cfg.duration:
                push(t, _GEN, ep_of[rank], ep_of[dst_rank], arr_rng)

        msg_created = []
        msg_ends = []
        msg_left = []
        msg_done = []
        injected = delivered = 0
        win_inj = win_del = 0
        last_progress = 0.0
        events = 0

        def port_queues(p):
            q = queues[p]
            if q is None:
                q = queues[p] = [deque() for _ in range(vcs)]
            return q

        def enqueue(p, vc, pk, now, delay):
            pk.ready = now + delay
            port_queues(p)[vc].append(pk)
            waiting[p] += pkt_flits
            push(pk.ready, _PORT_TRY, p)

        def try_port(p, now):
            nonlocal last_progress
            if busy[p]:
                return
            qs = queues[p]
            if qs is None:
                return
            eject = p >= n_edges
            start = rr[p]
            for off in range(vcs):
                vc = (start + off) % vcs
                q = qs[vc]
                if not q:
                    continue
                pk = q[0]
                if pk.ready > now:
                    continue
                if not eject and credits[p][vc] < pkt_flits:
                    continue
                q.popleft()
                waiting[p] -= pkt_flits
                rr[p] = (vc + 1) % vcs
                busy[p] = True
                last_progress = now
                push(now + ser, _PORT_DONE, p)
                # free the buffer slot this packet held at the current router
                if pk.in_port >= 0:
                    push(now + ser + lk, _CREDIT, pk.in_port, pk.in_vc)
                else:
                    push(now + ser, _NIC_CREDIT, -1 - pk.in_port)
                if eject:
                    push(now + ser, _DELIVER, pk)
                else:
                    credits[p][vc] -= pkt_flits
                    pk.in_port = p
                    pk.in_vc = vc
                    pk.hop += 1
                    push(now + lk, _HEAD, pk, edge_dst[p])
                return

        def try_nic(e, now):
            nonlocal last_progress
            if nic_busy[e] or not nic_q[e] or nic_credit[e] < pkt_flits:
                return
            pk = nic_q[e].popleft()
            nic_credit[e] -= pkt_flits
            nic_busy[e] = True
            last_progress = now
            pk.in_port = -1 - e
            push(now + ser, _NIC_TRY, e)
            push(now, _HEAD, pk, e // conc)

        def choose_route(pk, u, now):
            d = pk.dst_router
            kind = cfg.routing
            if kind == R.MINIMAL or u == d:
                r = R.minimal_route(table, u, d, route_rng)
            elif kind == R.VALIANT:
                r = R.valiant_route(table, u, d, route_rng)
            else:
                rm = R.minimal_route(table, u, d, route_rng)
                rv = R.valiant_route(table, u, d, route_rng)
                qm = waiting[edge_id[(u, rm.hops[1])]] if rm.length else 0
                qv = waiting[edge_id[(u, rv.hops[1])]] if rv.length else 0
                pick = R.ugal_choice(qm, rm.length, qv, rv.length, cfg.ugal_threshold)
                r = rm if pick == R.MINIMAL else rv
            pk.route = r.hops
            pk.kind = r.kind
            pk.hop = 0

        while heap:
            now, _, kind, a, b, c = heapq.heappop(heap)
            events += 1
            if kind == _PORT_TRY or kind == _PORT_DONE:
                if kind == _PORT_DONE:
                    busy[a] = False
                try_port(a, now)
            elif kind == _HEAD:
                pk, u = a, b
                if pk.route is None:
                    choose_route(pk, u, now)
                hop = pk.hop
                if hop == len(pk.route) - 1:
                    enqueue(n_edges + pk.dst_ep, 0, pk, now, 0.0)
                else:
                    vc = hop
                    if vc >= vcs:
                        raise R.RoutingError(f"hop {hop} needs VC {vc} but only {vcs} exist")
                    enqueue(edge_id[(u, pk.route[hop + 1])], vc, pk, now, sw)
            elif kind == _CREDIT:
                credits[a][b] += pkt_flits
                try_port(a, now)
            elif kind == _NIC_TRY:
                nic_busy[a] = False
                try_nic(a, now)
            elif kind == _NIC_CREDIT:
                nic_credit[a] += pkt_flits
                try_nic(a, now)
            elif kind == _DELIVER:
                m = a.msg
                msg_left[m] -= 1
                if msg_left[m] == 0:
                    msg_done[m] = now
                    delivered += 1
                    if cfg.warmup <= now < cfg.duration:
                        win_del += 1
            elif kind == _GEN:
                src_ep, dst_ep, arr_rng = a, b, c
                m = len(msg_created)
                msg_created.append(now)
                msg_ends.append((src_ep, dst_ep))
                msg_left.append(n_pk)
                msg_done.append(math.nan)
                injected += 1
                if cfg.warmup <= now < cfg.duration:
                    win_inj += 1
                dr = dst_ep // conc
                for _ in range(n_pk):
                    nic_q[src_ep].append(_Packet(m, dst_ep, dr))
                try_nic(src_ep, now)
                t = now + float(arr_rng.exponential(1.0 / rate))
                if t < cfg.duration:
                    push(t, _GEN, src_ep, dst_ep, arr_rng)
            if check_invariants:
                in_flight = sum(1 for v in msg_left if v > 0)
                assert injected == delivered + in_flight
            if injected > delivered and now - last_progress > cfg.deadlock_span:
                raise DeadlockError(f"no packet movement for {now - last_progress:.0f} ns")

        if injected != delivered:
            raise DeadlockError(f"event queue drained with {injected - delivered} messages in flight")

        created = np.array(msg_created)
        done = np.array(msg_done)
        measured = (created >= cfg.warmup) & (created < cfg.duration)
        lat = done[measured] - created[measured]
        return SimStats(
            max_message_time=float(lat.max()) if lat.size else 0.0,
            mean_latency=float(lat.mean()) if lat.size else 0.0,
            delivered=int(np.count_nonzero(~np.isnan(done[measured]))),
            injected=int(measured.sum()),
            offered_load=float(load),
            accepted_ratio=(win_del / win_inj) if win_inj else 1.0,
            saturated=bool(win_inj and win_del < cfg.saturation_ratio * win_inj),
            in_flight_end=injected - delivered,
            routing=cfg.routing,
            events=events,
            latencies=[(*msg_ends[i], float(done[i] - created[i])) for i in np.flatnonzero(measured)]
            if record_latencies else [],
        )


def run_sim(graph: Graph, config: SimConfig, pattern: np.ndarray, placement: Placement,
            load: float, table: R.RoutingTable | None = None, **kw) -> SimStats:
    return Simulator(graph, config, table).run(pattern, placement, load, **kw)


def sweep(graph: Graph, config: SimConfig, pattern: np.ndarray, placement: Placement,
          loads, table: R.RoutingTable | None = None) -> list[SimStats]:
    """One run per load; load i uses seed (config.seed, "load", i)."""
    loads = list(loads)
    if any(b <= a for a, b in zip(loads, loads[1:])):
        raise ParameterError("loads must be strictly increasing")
    table = table or R.build_tables(graph)
    out = []
    for i, load in enumerate(loads):
        sub = rng_for(config.seed, "load", i).integers(2**31)
        cfg = SimConfig(**{**asdict(config), "seed": int(sub)})
        out.append(Simulator(graph, cfg, table).run(pattern, placement, load))
    return out
