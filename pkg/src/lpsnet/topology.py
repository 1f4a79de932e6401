"""Builders for the LPS, SlimFly, BundleFly and DragonFly router graphs."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .algebra import PrimePair, legendre_symbol
from .errors import ConstructionError, ParameterError
from .gf import field as gf_field
from .graph import Graph

FAMILIES = ("lps", "sf", "bf", "df")
_ALIASES = {
    "lps": "lps",
    "sf": "sf", "slimfly": "sf",
    "bf": "bf", "bundlefly": "bf",
    "df": "df", "dragonfly": "df",
}


@dataclass(frozen=True)
class TopologySpec:
    """Family name plus its integer parameters.

    lps: (p, q); sf: (q,); bf: (p, s); df: (a,)
    """

    family: str
    params: tuple[int, ...]
    options: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        fam = _ALIASES.get(self.family.lower())
        if fam is None:
            raise ParameterError(f"unknown topology family {self.family!r}")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", tuple(int(v) for v in self.params))
        want = {"lps": 2, "sf": 1, "bf": 2, "df": 1}[fam]
        if len(self.params) != want:
            raise ParameterError(f"{fam} takes {want} parameter(s), got {self.params}")

    @classmethod
    def parse(cls, text: str) -> "TopologySpec":
        """Parse forms like ``lps:11,7``, ``LPS(11,7)``, ``sf:7`` or ``df-12``."""
        m = re.fullmatch(r"\s*([A-Za-z]+)\s*[:(\-\s]?\s*([\d,\s]+)\)?\s*", text)
        if not m:
            raise ParameterError(f"cannot parse topology spec {text!r}")
        nums = tuple(int(x) for x in re.split(r"[,\s]+", m.group(2).strip()) if x)
        return cls(m.group(1), nums)

    @property
    def label(self) -> str:
        return f"{self.family.upper()}({','.join(map(str, self.params))})"

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class TopologyInfo:
    family: str
    params: tuple[int, ...]
    routers: int
    radix: int
    predicted_routers: int

    @property
    def label(self) -> str:
        return f"{self.family.upper()}({','.join(map(str, self.params))})"


def mms_delta(q: int) -> int:
    """delta in q = 4w + delta; ParameterError unless q is a valid MMS parameter."""
    if q < 3 or algebra.prime_power(q) is None:
        raise ParameterError(f"q={q} must be a prime power >= 3")
    r = q % 4
    if r == 2:
        raise ParameterError(f"q={q} is not of the form 4w + delta, delta in {{-1, 0, 1}}")
    return {0: 0, 1: 1, 3: -1}[r]


def predicted(spec: TopologySpec) -> tuple[int, int]:
    """(routers, radix) from the closed-form size formulas, no construction."""
    f, a = spec.family, spec.params
    if f == "lps":
        pair = PrimePair(*a, spec.options.get("allow_small_q", False))
        return pair.order, pair.radix
    if f == "sf":
        (q,) = a
        d = mms_delta(q)
        return 2 * q * q, (3 * q - d) // 2
    if f == "bf":
        p, s = a
        _check_paley(p)
        d = mms_delta(s)
        return 2 * p * s * s, (p - 1) // 2 + (3 * s - d) // 2
    (n,) = a
    if n < 2:
        raise ParameterError(f"dragonfly a={n} must be >= 2")
    return n * (n + 1), n


def _check_paley(p: int) -> None:
    if algebra.prime_power(p) is None or p % 4 != 1:
        raise ParameterError(f"Paley parameter p={p} must be a prime power = 1 mod 4")


# --- LPS -----------------------------------------------------------------


def _encode(m: np.ndarray, q: int) -> np.ndarray:
    return ((m[:, 0] * q + m[:, 1]) * q + m[:, 2]) * q + m[:, 3]


def build_lps(p: int, q: int, allow_small_q: bool = False) -> Graph:
    """LPS(p, q) Cayley graph on PSL(2, q) or PGL(2, q).

    Vertices are canonical matrices in sorted order; u ~ u*s for s in the
    generator set. ``allow_small_q`` admits q <= 2 sqrt(p); generator
    collisions still raise ConstructionError.
    """
    pair = PrimePair(p, q, allow_small_q)
    gens = algebra.generator_set(pair)
    psl = pair.kind is algebra.GroupKind.PSL
    verts = np.array(algebra.group_elements(q, psl), dtype=np.int64)
    if len(verts) != pair.order:
        raise ConstructionError(f"{len(verts)} group elements, expected {pair.order}")
    keys = _encode(verts, q)
    inv = np.zeros(q, dtype=np.int64)
    inv[1:] = [pow(v, -1, q) for v in range(1, q)]
    a00, a01, a10, a11 = verts.T
    nbrs = np.empty((len(verts), len(gens)), dtype=np.int64)
    for j, (s00, s01, s10, s11) in enumerate(gens):
        prod = np.stack(
            [a00 * s00 + a01 * s10, a00 * s01 + a01 * s11, a10 * s00 + a11 * s10, a10 * s01 + a11 * s11],
            axis=1,
        ) % q
        lead = np.where(prod[:, 0] != 0, prod[:, 0], prod[:, 1])
        prod = prod * inv[lead][:, None] % q
        k = _encode(prod, q)
        idx = np.searchsorted(keys, k)
        if np.any(idx >= len(keys)) or np.any(keys[np.minimum(idx, len(keys) - 1)] != k):
            raise ConstructionError("product left the vertex set")
        nbrs[:, j] = idx
    nbrs.sort(axis=1)
    labels = tuple(f"[[{a},{b}],[{c},{d}]]" for a, b, c, d in verts.tolist())
    g = Graph.from_neighbor_lists(
        nbrs.tolist(), labels=labels, name=f"LPS({p},{q})", vertex_transitive=True,
        meta={"group": pair.kind.value, "generators": [list(s) for s in gens]},
    )
    return g


# --- SlimFly / MMS -------------------------------------------------------


def mms_generator_sets(q: int) -> tuple[list[int], list[int]]:
    """Difference sets (X, X') of the MMS graph over GF(q).

    X' = xi * X for a primitive element xi; |X| = (q - delta) / 2.
    """
    d = mms_delta(q)
    F = gf_field(q)
    w = (q - d) // 4
    if d == 1:
        exps = list(range(0, q - 1, 2))
    elif d == 0:
        exps = list(range(0, q - 1, 2))
    else:
        exps = list(range(0, 2 * w - 1, 2)) + list(range(2 * w - 1, 4 * w - 2, 2))
    X = sorted(int(F.power[e % (q - 1)]) for e in exps)
    Xp = sorted(int(F.mul[x, F.generator]) for x in X)
    return X, Xp


def _mms_edges(q: int) -> np.ndarray:
    """Edge array of MMS(q); vertex (part, a, b) has index part*q^2 + a*q + b."""
    F = gf_field(q)
    X, Xp = mms_generator_sets(q)
    qq = q * q
    edges = []
    a = np.repeat(np.arange(q), q)
    b = np.tile(np.arange(q), q)
    for part, S in ((0, X), (1, Xp)):
        for s in S:
            b2 = F.add[b, s]
            keep = b < b2
            edges.append(np.stack([part * qq + a * q + b, part * qq + a * q + b2], axis=1)[keep])
    # (0, x, y) ~ (1, m, c) iff y = m x + c
    x = np.repeat(np.arange(q), q)
    m = np.tile(np.arange(q), q)
    for c in range(q):
        y = F.add[F.mul[m, x], c]
        edges.append(np.stack([x * q + y, qq + m * q + c], axis=1))
    return np.concatenate(edges)


def build_slimfly(q: int) -> Graph:
    """SlimFly SF(q): the McKay-Miller-Siran graph on 2 q^2 vertices."""
    mms_delta(q)
    e = _mms_edges(q)
    labels = tuple(f"({t},{a},{b})" for t in (0, 1) for a in range(q) for b in range(q))
    return Graph.from_edges(2 * q * q, e, labels=labels, name=f"SF({q})")


# --- BundleFly -----------------------------------------------------------


def paley_edges(p: int) -> np.ndarray:
    _check_paley(p)
    F = gf_field(p)
    squares = sorted({int(F.mul[v, v]) for v in range(1, p)})
    out = []
    i = np.arange(p)
    for s in squares:
        j = F.add[i, s]
        keep = i < j
        out.append(np.stack([i[keep], j[keep]], axis=1))
    return np.concatenate(out)


def build_bundlefly(p: int, s: int, matching: str = "multiplier") -> Graph:
    """BundleFly BF(p, s): MMS(s) star-product Paley(p).

    Each MMS vertex carries a Paley(p) bundle and each MMS edge {u, v},
    u < v, becomes a perfect matching between the two bundles:

    ``multiplier`` (default)
        slot i at u joins slot xi*i at v, xi a primitive element of GF(p).
        Since xi is a non-square this maps the bundle graph onto its
        complement, which is what brings the diameter down to 3.
    ``identity``
        slot i joins slot i (a plain Cartesian product, diameter 4).
    """
    _check_paley(p)
    mms_delta(s)
    F = gf_field(p)
    mms = _mms_edges(s)
    pal = paley_edges(p)
    nm = 2 * s * s
    bundle = (np.arange(nm)[:, None, None] * p + pal[None, :, :]).reshape(-1, 2)
    i = np.arange(p)
    if matching == "identity":
        j = i
    elif matching == "multiplier":
        j = F.mul[i, F.generator]
    else:
        raise ParameterError(f"unknown bundle matching {matching!r}")
    lo = np.minimum(mms[:, 0], mms[:, 1])
    hi = np.maximum(mms[:, 0], mms[:, 1])
    inter = np.stack([(lo[:, None] * p + i).ravel(), (hi[:, None] * p + j).ravel()], axis=1)
    labels = tuple(
        f"({t},{a},{b};{x})" for t in (0, 1) for a in range(s) for b in range(s) for x in range(p)
    )
    return Graph.from_edges(
        nm * p, np.concatenate([bundle, inter]), labels=labels, name=f"BF({p},{s})",
        meta={"matching": matching},
    )


# --- DragonFly -----------------------------------------------------------


def build_dragonfly(a: int, arrangement: str = "absolute") -> Graph:
    """Canonical DragonFly DF(a): a+1 cliques of a routers, one global link each.

    ``absolute``: router r of group g links to group r if r < g else r + 1.
    ``circulant``: router r of group g links to group (g + r + 1) mod (a+1).
    """
    if a < 2:
        raise ParameterError(f"dragonfly a={a} must be >= 2")
    groups = a + 1
    edges = []
    for g in range(groups):
        for r in range(a):
            for r2 in range(r + 1, a):
                edges.append((g * a + r, g * a + r2))
    for g in range(groups):
        for r in range(a):
            if arrangement == "absolute":
                t = r if r < g else r + 1
                r2 = g if g < t else g - 1
            elif arrangement == "circulant":
                t = (g + r + 1) % groups
                r2 = (g - t - 1) % groups
            else:
                raise ParameterError(f"unknown arrangement {arrangement!r}")
            u, v = g * a + r, t * a + r2
            if u < v:
                edges.append((u, v))
    labels = tuple(f"({g},{r})" for g in range(groups) for r in range(a))
    return Graph.from_edges(
        a * groups, edges, labels=labels, name=f"DF({a})", meta={"arrangement": arrangement}
    )


def build(spec: TopologySpec | str) -> Graph:
    """Dispatch on the topology family and check the closed-form size/radix."""
    if isinstance(spec, str):
        spec = TopologySpec.parse(spec)
    n_pred, k_pred = predicted(spec)
    f, a = spec.family, spec.params
    if f == "lps":
        g = build_lps(*a, **spec.options)
    elif f == "sf":
        g = build_slimfly(*a)
    elif f == "bf":
        g = build_bundlefly(*a, **spec.options)
    else:
        g = build_dragonfly(*a, **spec.options)
    if g.n != n_pred or not g.is_regular or g.radix != k_pred:
        raise ConstructionError(f"{spec}: built n={g.n}, expected n={n_pred} radix={k_pred}")
    return g


def info(spec: TopologySpec, graph: Graph | None = None) -> TopologyInfo:
    n_pred, k = predicted(spec)
    return TopologyInfo(spec.family, spec.params, graph.n if graph else n_pred, k, n_pred)


# --- design-space enumeration -------------------------------------------


def _primes_upto(n: int) -> list[int]:
    return [v for v in range(3, n + 1) if algebra.is_prime(v)]


def _prime_powers_upto(n: int) -> list[int]:
    return [v for v in range(3, n + 1) if algebra.prime_power(v) is not None]


def feasible_sizes(family: str, radix_max: int, size_max: int,
                   p_max: int | None = None, q_max: int | None = None) -> list[TopologyInfo]:
    """All parameter tuples with radix <= radix_max and routers <= size_max.

    Uses only the closed forms. For LPS the optional ``p_max``/``q_max``
    bounds restrict the primes further (e.g. p, q < 300).
    """
    fam = _ALIASES.get(family.lower())
    if fam is None:
        raise ParameterError(f"unknown topology family {family!r}")
    if radix_max < 1 or size_max < 1:
        raise ParameterError("bounds must be positive")
    out: list[TopologyInfo] = []
    if fam == "lps":
        ps = [p for p in _primes_upto(radix_max - 1) if p_max is None or p <= p_max]
        for p in ps:
            q = 3
            while True:
                if q_max is not None and q > q_max:
                    break
                if q * q * q - q > 2 * size_max:
                    break
                if algebra.is_prime(q) and q != p and q * q > 4 * p:
                    n = (3 - legendre_symbol(p, q)) * (q**3 - q) // 4
                    if n <= size_max:
                        out.append(TopologyInfo("lps", (p, q), n, p + 1, n))
                q += 2
    elif fam == "sf":
        q = 3
        while (3 * q - 1) // 2 <= radix_max:
            if q % 4 != 2 and algebra.prime_power(q):
                n, k = predicted(TopologySpec("sf", (q,)))
                if k <= radix_max and n <= size_max:
                    out.append(TopologyInfo("sf", (q,), n, k, n))
            q += 1
    elif fam == "bf":
        for p in _prime_powers_upto(2 * radix_max + 1):
            if p % 4 != 1:
                continue
            for s in _prime_powers_upto(radix_max):
                if s % 4 == 2:
                    continue
                n, k = predicted(TopologySpec("bf", (p, s)))
                if k <= radix_max and n <= size_max:
                    out.append(TopologyInfo("bf", (p, s), n, k, n))
    else:
        for a in range(2, radix_max + 1):
            n = a * (a + 1)
            if n <= size_max:
                out.append(TopologyInfo("df", (a,), n, a, n))
    out.sort(key=lambda t: (t.radix, t.routers, t.params))
    return out


# Reference size classes: one comparably sized instance per family, smallest class first.
SIZE_CLASSES: tuple[tuple[str, ...], ...] = (
    ("lps:11,7", "sf:7", "bf:13,3", "df:12"),
    ("lps:23,11", "sf:17", "bf:37,3", "df:24"),
    ("lps:53,17", "sf:37", "bf:97,4", "df:53"),
    ("lps:71,17", "sf:47", "bf:137,4", "df:69"),
    ("lps:89,19", "sf:59", "bf:157,5", "df:85"),
)
