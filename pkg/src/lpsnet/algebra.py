"""Number theory and projective 2x2 matrix arithmetic for LPS Cayley graphs.

Group elements of PGL(2, F_q) are stored as 4-tuples ``(m00, m01, m10, m11)``
in canonical form: the whole matrix is scaled so that its first nonzero entry
(row-major) equals 1. Two matrices represent the same coset exactly when their
canonical forms are equal, so tuples can be hashed and compared directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .errors import ConstructionError, ParameterError

Matrix = tuple[int, int, int, int]

MAX_MODULUS = 1 << 20


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for p in small:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """Return ``(p, k)`` with ``n == p**k`` for prime p, or None."""
    if n < 2:
        return None
    for p in range(2, math.isqrt(n) + 1):
        if n % p == 0:
            k = 0
            while n % p == 0:
                n //= p
                k += 1
            return (p, k) if n == 1 else None
    return (n, 1)


def _require_odd_prime(q: int, name: str = "q") -> None:
    if not isinstance(q, int) or q < 3 or not is_prime(q):
        raise ParameterError(f"{name}={q!r} must be an odd prime")


def legendre_symbol(a: int, q: int) -> int:
    """Legendre symbol (a/q) by Euler's criterion.

    Returns 0 if q divides a, +1 for a nonzero quadratic residue and -1
    otherwise.
    """
    _require_odd_prime(q)
    a %= q
    if a == 0:
        return 0
    r = pow(a, (q - 1) // 2, q)
    return 1 if r == 1 else -1


def solve_circle(q: int) -> tuple[int, int]:
    """Lexicographically smallest (x, y) in F_q^2 with x^2 + y^2 + 1 = 0."""
    _require_odd_prime(q)
    # sqrt table: value -> smallest root
    roots: dict[int, int] = {}
    for y in range(q):
        roots.setdefault(y * y % q, y)
    for x in range(q):
        target = (-1 - x * x) % q
        if target in roots:
            return x, roots[target]
    raise AssertionError("x^2 + y^2 = -1 always has a solution mod an odd prime")


class QuaternionSolution(NamedTuple):
    a0: int
    a1: int
    a2: int
    a3: int


def _admissible(a0: int, a1: int, p: int) -> bool:
    if p % 4 == 1:
        return a0 > 0 and a0 % 2 == 1
    return (a0 > 0 and a0 % 2 == 0) or (a0 == 0 and a1 > 0)


def enumerate_quaternions(p: int) -> list[QuaternionSolution]:
    """All integer 4-tuples of norm p satisfying the LPS sign/parity rule.

    The last coordinate is solved for rather than looped over, so this scans
    the box ``|a_i| <= floor(sqrt(p))`` in three nested loops. By Jacobi's
    four-square theorem the result always has p + 1 entries.
    """
    _require_odd_prime(p, "p")
    b = math.isqrt(p)
    rng = range(-b, b + 1)
    out = []
    for a0 in range(0, b + 1):
        for a1 in rng:
            if not _admissible(a0, a1, p):
                continue
            for a2 in rng:
                rest = p - a0 * a0 - a1 * a1 - a2 * a2
                if rest < 0:
                    continue
                a3 = math.isqrt(rest)
                if a3 * a3 != rest:
                    continue
                out.append(QuaternionSolution(a0, a1, a2, a3))
                if a3:
                    out.append(QuaternionSolution(a0, a1, a2, -a3))
    out.sort()
    if len(out) != p + 1:
        raise ConstructionError(f"found {len(out)} quaternions of norm {p}, expected {p + 1}")
    return out


def det(m: Matrix, q: int) -> int:
    return (m[0] * m[3] - m[1] * m[2]) % q


def canonicalize(m00: int, m01: int, m10: int, m11: int, q: int) -> Matrix:
    """Canonical coset representative: scale so the first nonzero entry is 1."""
    m = (m00 % q, m01 % q, m10 % q, m11 % q)
    if det(m, q) == 0:
        raise ParameterError(f"matrix {m} is singular mod {q}")
    lead = next(v for v in m if v)
    inv = pow(lead, -1, q)
    return (m[0] * inv % q, m[1] * inv % q, m[2] * inv % q, m[3] * inv % q)


def mat_mul(a: Matrix, b: Matrix, q: int) -> Matrix:
    """Product of canonical representatives, canonicalized."""
    return canonicalize(
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
        q,
    )


def mat_inv(a: Matrix, q: int) -> Matrix:
    # adjugate is a scalar multiple of the inverse, which is all a coset needs
    return canonicalize(a[3], -a[1], -a[2], a[0], q)


IDENTITY: Matrix = (1, 0, 0, 1)


def in_psl(e: Matrix, q: int) -> bool:
    """True iff det(e) is a nonzero square mod q, i.e. e lies in PSL(2, q)."""
    return legendre_symbol(det(e, q), q) == 1


class GroupKind(str, Enum):
    PSL = "PSL"
    PGL = "PGL"


@dataclass(frozen=True)
class PrimePair:
    """Validated LPS parameters (p, q); radix is p + 1.

    q > 2 sqrt(p) is required unless ``allow_small_q``; below that bound the
    graph may still be a simple Cayley graph but is not guaranteed Ramanujan.
    """

    p: int
    q: int
    allow_small_q: bool = False

    def __post_init__(self):
        _require_odd_prime(self.p, "p")
        _require_odd_prime(self.q, "q")
        if self.p == self.q:
            raise ParameterError(f"p and q must be distinct (got p = q = {self.p})")
        if self.q > MAX_MODULUS:
            raise ParameterError(f"q={self.q} exceeds supported modulus {MAX_MODULUS}")
        if self.q * self.q <= 4 * self.p and not self.allow_small_q:
            raise ParameterError(f"q <= 2*sqrt(p) for (p, q) = ({self.p}, {self.q})")

    @property
    def kind(self) -> GroupKind:
        return GroupKind.PSL if legendre_symbol(self.p, self.q) == 1 else GroupKind.PGL

    @property
    def order(self) -> int:
        """Vertex count (3 - (p/q)) (q^3 - q) / 4."""
        return (3 - legendre_symbol(self.p, self.q)) * (self.q**3 - self.q) // 4

    @property
    def radix(self) -> int:
        return self.p + 1


def quaternion_matrix(a: QuaternionSolution, x: int, y: int, q: int) -> Matrix:
    a0, a1, a2, a3 = a
    return canonicalize(
        a0 + a1 * x + a3 * y,
        -a1 * y + a2 + a3 * x,
        -a1 * y - a2 + a3 * x,
        a0 - a1 * x - a3 * y,
        q,
    )


def generator_set(pair: PrimePair) -> list[Matrix]:
    """The p + 1 LPS generators as canonical matrices, in quaternion order.

    Raises ConstructionError if two quaternions collapse to the same coset,
    a generator is trivial, or the set is not closed under inversion.
    """
    x, y = solve_circle(pair.q)
    gens = [quaternion_matrix(a, x, y, pair.q) for a in enumerate_quaternions(pair.p)]
    uniq = set(gens)
    if len(uniq) != len(gens):
        raise ConstructionError(f"duplicate generators for {pair}")
    if IDENTITY in uniq:
        raise ConstructionError(f"identity among generators for {pair}")
    if any(mat_inv(g, pair.q) not in uniq for g in gens):
        raise ConstructionError(f"generator set for {pair} is not inverse-closed")
    return gens


def group_elements(q: int, psl: bool) -> list[Matrix]:
    """All canonical elements of PGL(2, q), or of PSL(2, q) if ``psl``, sorted."""
    out = []
    for m01 in range(q):
        for m10 in range(q):
            for m11 in range(q):
                if (m11 - m01 * m10) % q:
                    out.append((1, m01, m10, m11))
    for m10 in range(1, q):
        for m11 in range(q):
            out.append((0, 1, m10, m11))
    if psl:
        out = [m for m in out if in_psl(m, q)]
    out.sort()
    return out
