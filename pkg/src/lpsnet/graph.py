"""Immutable undirected simple graph in CSR form, plus text import/export."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError


@dataclass(frozen=True, eq=False)
class Graph:
    """Router topology with a stable vertex order.

    ``indptr``/``indices`` hold sorted neighbor lists (CSR). ``labels`` is an
    optional per-vertex string (e.g. the canonical matrix of an LPS vertex).
    ``name`` is informational; ``vertex_transitive`` is set only by builders
    that can certify it (Cayley graphs), enabling single-source shortcuts.
    """

    indptr: np.ndarray
    indices: np.ndarray
    labels: tuple[str, ...] | None = None
    name: str = ""
    vertex_transitive: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges, **kw) -> "Graph":
        """Build from an iterable/array of (u, v) pairs; validates simplicity."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ParameterError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ParameterError("self-loop in edge list")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        key = lo * n + hi
        if np.unique(key).size != key.size:
            raise ParameterError("repeated edge in edge list")
        return cls._from_directed(n, np.concatenate([lo, hi]), np.concatenate([hi, lo]), **kw)

    @classmethod
    def from_neighbor_lists(cls, adj, **kw) -> "Graph":
        """Build from per-vertex neighbor lists; must already be symmetric."""
        n = len(adj)
        src = np.repeat(np.arange(n), [len(a) for a in adj])
        dst = np.fromiter((v for a in adj for v in a), dtype=np.int64, count=src.size)
        g = cls._from_directed(n, src, dst, **kw)
        g.validate()
        return g

    @classmethod
    def _from_directed(cls, n, src, dst, **kw) -> "Graph":
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return cls(np.cumsum(indptr), dst.astype(np.int64), **kw)

    def validate(self) -> None:
        """Check undirected + simple. Raises ParameterError."""
        n = self.n
        src = np.repeat(np.arange(n), np.diff(self.indptr))
        if np.any(src == self.indices):
            raise ParameterError("self-loop")
        key = src * n + self.indices
        if np.unique(key).size != key.size:
            raise ParameterError("repeated neighbor")
        rev = np.sort(self.indices * n + src)
        if not np.array_equal(np.sort(key), rev):
            raise ParameterError("adjacency is not symmetric")

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def is_regular(self) -> bool:
        d = self.degrees
        return d.size > 0 and bool(np.all(d == d[0]))

    @property
    def radix(self) -> int:
        """Common degree; ParameterError if the graph is not regular."""
        if not self.is_regular:
            raise ParameterError("graph is not regular")
        return int(self.degrees[0])

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v, sorted lexicographically."""
        src = np.repeat(np.arange(self.n), self.degrees)
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    def adjacency_matrix(self, dtype=np.float64) -> sp.csr_matrix:
        data = np.ones(len(self.indices), dtype=dtype)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def neighbor_array(self) -> np.ndarray:
        """(n, max_degree) neighbor table padded with -1."""
        k = int(self.degrees.max()) if self.n else 0
        out = np.full((self.n, k), -1, dtype=np.int64)
        col = np.arange(len(self.indices)) - np.repeat(self.indptr[:-1], self.degrees)
        out[np.repeat(np.arange(self.n), self.degrees), col] = self.indices
        return out

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def subgraph_without(self, drop: np.ndarray) -> "Graph":
        """Copy with the edges at positions ``drop`` of ``edges()`` removed."""
        e = self.edges()
        mask = np.ones(len(e), dtype=bool)
        mask[drop] = False
        return Graph.from_edges(self.n, e[mask], name=self.name)

    def __repr__(self):
        return f"Graph(name={self.name!r}, n={self.n}, m={self.m})"


def to_edge_list(g: Graph) -> str:
    """One ``u v`` line per edge, u < v, sorted; LF terminated."""
    return "".join(f"{u} {v}\n" for u, v in g.edges())


def to_dot(g: Graph) -> str:
    lines = [f"graph {_dot_id(g.name or 'G')} {{"]
    for v in range(g.n):
        if g.labels is not None:
            lines.append(f'  {v} [label="{g.labels[v]}"];')
        else:
            lines.append(f"  {v};")
    lines.extend(f"  {u} -- {v};" for u, v in g.edges())
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_id(s: str) -> str:
    return '"' + s.replace('"', r"\"") + '"'


def export(g: Graph, fmt: str = "edge-list") -> str:
    if fmt in ("edge-list", "edgelist", "txt"):
        return to_edge_list(g)
    if fmt == "dot":
        return to_dot(g)
    raise ParameterError(f"unknown export format {fmt!r}")


def parse_edge_list(text: str, n: int | None = None, name: str = "") -> Graph:
    """Inverse of :func:`to_edge_list`. ``n`` defaults to max id + 1."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParameterError(f"bad edge line: {line!r}")
        rows.append((int(parts[0]), int(parts[1])))
    e = np.array(rows, dtype=np.int64).reshape(-1, 2)
    if n is None:
        n = int(e.max()) + 1 if e.size else 0
    return Graph.from_edges(n, e, name=name)
