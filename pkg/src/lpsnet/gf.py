"""Table-driven arithmetic in GF(q) for small prime powers q."""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from .algebra import prime_power
from .errors import ParameterError


class GaloisField:
    """GF(q) with elements encoded as integers 0..q-1.

    For q = p^k an element is the base-p digit vector of its polynomial
    coefficients; addition is digit-wise mod p. Multiplication uses a
    primitive polynomial, so ``generator`` (the class of x) is a primitive
    element. Only meant for the q of a few hundred that topologies use.
    """

    def __init__(self, q: int):
        pk = prime_power(q)
        if pk is None:
            raise ParameterError(f"q={q} is not a prime power")
        self.q = q
        self.p, self.k = pk
        if self.k == 1:
            idx = np.arange(q)
            self.add = (idx[:, None] + idx[None, :]) % q
            self.mul = (idx[:, None] * idx[None, :]) % q
            self.generator = _prime_primitive_root(q)
        else:
            self.add = self._digit_add()
            self.mul, self.generator = self._poly_mul()
        self.neg = np.array([int(np.flatnonzero(self.add[a] == 0)[0]) for a in range(q)])
        # discrete exponent table: power[i] = g^i
        power = [1]
        for _ in range(q - 2):
            power.append(int(self.mul[power[-1], self.generator]))
        self.power = np.array(power)

    def sub(self, a, b):
        return self.add[a, self.neg[b]]

    def _digits(self, a: int) -> list[int]:
        return [(a // self.p**i) % self.p for i in range(self.k)]

    def _from_digits(self, d) -> int:
        return sum(int(c) * self.p**i for i, c in enumerate(d))

    def _digit_add(self) -> np.ndarray:
        q = self.q
        digits = np.array([self._digits(a) for a in range(q)])
        out = np.empty((q, q), dtype=np.int64)
        weights = self.p ** np.arange(self.k)
        for a in range(q):
            out[a] = ((digits[a] + digits) % self.p) @ weights
        return out

    def _poly_mul(self):
        p, k, q = self.p, self.k, self.q
        for tail in product(range(p), repeat=k):
            if tail[0] == 0:
                continue
            # x^k = -(tail[0] + tail[1] x + ... ); try whether x has order q - 1
            reduce_ = [(-c) % p for c in tail]
            powers = [self._times_x([1] + [0] * (k - 1), reduce_, 0)]
            seen = {tuple(powers[0])}
            cur = powers[0]
            for _ in range(q - 2):
                cur = self._times_x(cur, reduce_, 1)
                t = tuple(cur)
                if t in seen:
                    break
                seen.add(t)
                powers.append(cur)
            if len(powers) != q - 1:
                continue
            log = {self._from_digits(v): i for i, v in enumerate(powers)}
            exp = [self._from_digits(v) for v in powers]
            mul = np.zeros((q, q), dtype=np.int64)
            for a in range(1, q):
                for b in range(1, q):
                    mul[a, b] = exp[(log[a] + log[b]) % (q - 1)]
            return mul, exp[1]
        raise AssertionError(f"no primitive polynomial found for GF({q})")

    def _times_x(self, v, reduce_, times):
        v = list(v)
        for _ in range(times):
            top = v[-1]
            v = [0] + v[:-1]
            v = [(c + top * r) % self.p for c, r in zip(v, reduce_)]
        return v

    def is_square(self, a: int) -> bool:
        if a == 0:
            return False
        i = int(np.flatnonzero(self.power == a)[0])
        return i % 2 == 0


def _prime_primitive_root(p: int) -> int:
    if p == 2:
        return 1
    n, factors, f = p - 1, set(), 2
    while f * f <= n:
        while n % f == 0:
            factors.add(f)
            n //= f
        f += 1
    if n > 1:
        factors.add(n)
    for g in range(2, p):
        if all(pow(g, (p - 1) // r, p) != 1 for r in factors):
            return g
    raise AssertionError


@lru_cache(maxsize=None)
def field(q: int) -> GaloisField:
    return GaloisField(q)
