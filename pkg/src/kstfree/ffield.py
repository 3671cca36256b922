"""Exact arithmetic in GF(p^k).

Elements are handled internally as integer *ranks*: the element with
coefficient vector ``(c_0, ..., c_{k-1})`` (polynomial basis, low-to-high)
has rank ``sum(c_i * p**i)``.  Rank order is the canonical element order used
for point indexing, reports and tie-breaking everywhere downstream.

Scalar methods on :class:`FieldContext` take and return ranks.  The ``v*``
methods are the numpy-vectorised versions used by the scan kernels.
:class:`FieldElement` wraps a rank as a coefficient vector with operators,
for code that wants to read like algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DivisionByZero, NonPrimeCharacteristic, PreconditionFailed, ReducibleModulus

MAX_ORDER = 2**20
_ADD_TABLE_LIMIT = 2048


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


# --- coefficient-list polynomials over GF(p), low-to-high -----------------

def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_rem(a, m, p):
    """Remainder of a modulo the monic polynomial m."""
    a = _trim(a)
    dm = len(m) - 1
    while len(a) - 1 >= dm and a:
        c = a[-1]
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        a = _trim(a)
    return a


def _poly_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return out


def _digits(rank, p, k):
    out = []
    for _ in range(k):
        rank, r = divmod(rank, p)
        out.append(r)
    return out


def _undigits(coeffs, p):
    r = 0
    for c in reversed(coeffs):
        r = r * p + c
    return r


def is_irreducible(modulus, p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..k//2."""
    m = _trim([c % p for c in modulus])
    k = len(m) - 1
    if k < 1 or m[-1] != 1:
        return False
    if k == 1:
        return True
    for deg in range(1, k // 2 + 1):
        for low in range(p**deg):
            divisor = _digits(low, p, deg) + [1]
            if not _poly_rem(m, divisor, p):
                return False
    return True


def find_irreducible(p: int, k: int, seed: int = 0) -> list[int]:
    """Deterministic monic irreducible polynomial of degree k over GF(p).

    Candidates are the monic degree-k polynomials in rank order of their
    lower k coefficients, starting at ``seed mod p**k`` and wrapping around.
    For k = 1 the answer is always X.
    """
    if not is_prime(p):
        raise NonPrimeCharacteristic(f"{p} is not prime")
    if k < 1:
        raise PreconditionFailed("extension degree must be >= 1")
    if k == 1:
        return [0, 1]
    total = p**k
    start = seed % total
    for step in range(total):
        cand = _digits((start + step) % total, p, k) + [1]
        if is_irreducible(cand, p):
            return cand
    raise AssertionError("unreachable: irreducible polynomials exist in every degree")


def make_field(p: int, k: int = 1, modulus=None, seed: int = 0) -> "FieldContext":
    if not is_prime(p):
        raise NonPrimeCharacteristic(f"{p} is not prime")
    if k < 1:
        raise PreconditionFailed("extension degree must be >= 1")
    if p**k > MAX_ORDER:
        raise PreconditionFailed(f"field order {p}^{k} exceeds the cap {MAX_ORDER}")
    if modulus is None:
        modulus = find_irreducible(p, k, seed)
    else:
        modulus = [int(c) % p for c in modulus]
        if len(modulus) != k + 1 or modulus[-1] != 1:
            raise PreconditionFailed(f"modulus must be monic of degree {k}")
        if k == 1:
            if modulus != [0, 1]:
                raise PreconditionFailed("prime fields use the modulus X")
        elif not is_irreducible(modulus, p):
            raise ReducibleModulus(f"{modulus} factors over GF({p})")
    return FieldContext(p, k, tuple(modulus))


@dataclass(frozen=True)
class FieldContext:
    p: int
    k: int
    modulus: tuple
    q: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "q", self.p**self.k)

    def __repr__(self):
        return f"GF({self.p}^{self.k})" if self.k > 1 else f"GF({self.p})"

    @property
    def zero(self) -> int:
        return 0

    @property
    def one(self) -> int:
        return 1

    # --- conversion ------------------------------------------------------

    def coeffs(self, rank: int) -> tuple:
        return tuple(_digits(rank, self.p, self.k))

    def rank(self, value) -> int:
        if isinstance(value, FieldElement):
            return _undigits(value.coeffs, self.p)
        if isinstance(value, (tuple, list)):
            if len(value) != self.k:
                raise ValueError(f"expected {self.k} coefficients")
            return _undigits([int(c) % self.p for c in value], self.p)
        return int(value)

    def element(self, rank) -> "FieldElement":
        if isinstance(rank, FieldElement):
            return rank
        return FieldElement(self, self.coeffs(int(rank) % self.q))

    def from_coeffs(self, coeffs) -> "FieldElement":
        return self.element(self.rank(tuple(coeffs)))

    def enumerate(self) -> list["FieldElement"]:
        """All q elements in canonical rank order."""
        return [self.element(r) for r in range(self.q)]

    # --- scalar arithmetic on ranks ---------------------------------------

    def add(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a + b) % self.p
        da, db = _digits(a, self.p, self.k), _digits(b, self.p, self.k)
        return _undigits([(x + y) % self.p for x, y in zip(da, db)], self.p)

    def neg(self, a: int) -> int:
        if self.k == 1:
            return -a % self.p
        return _undigits([-x % self.p for x in _digits(a, self.p, self.k)], self.p)

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.k == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        exp, log = self._tables
        return int(exp[log[a] + log[b]])

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise DivisionByZero("zero has no inverse")
        if self.k == 1:
            return pow(a, -1, self.p)
        exp, log = self._tables
        return int(exp[(self.q - 1 - log[a]) % (self.q - 1)])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            raise ValueError("exponent must be nonnegative")
        if e == 0:
            return 1
        if a == 0:
            return 0
        if self.k == 1:
            return pow(a, e, self.p)
        exp, log = self._tables
        return int(exp[(int(log[a]) * e) % (self.q - 1)])

    def frobenius(self, a: int) -> int:
        """The map a -> a^p; fixes the prime subfield."""
        return self.pow(a, self.p)

    def in_prime_field(self, a: int) -> bool:
        return 0 <= a < self.p

    # --- vectorised arithmetic on rank arrays -----------------------------

    def vadd(self, a, b):
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.k == 1:
            return (a + b) % self.p
        if self.q <= _ADD_TABLE_LIMIT:
            return self._add_table[a, b]
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.int64)
        scale = 1
        for _ in range(self.k):
            out += ((a // scale + b // scale) % self.p) * scale
            scale *= self.p
        return out

    def vneg(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.k == 1:
            return -a % self.p
        return self._neg_table[a]

    def vsub(self, a, b):
        return self.vadd(a, self.vneg(b))

    def vmul(self, a, b):
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.k == 1:
            return a * b % self.p
        exp, log = self._tables
        out = exp[log[a] + log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def vpowers(self, a, max_e: int):
        """Stack of a**0 .. a**max_e along a new trailing axis."""
        a = np.asarray(a, dtype=np.int64)
        out = np.empty(a.shape + (max_e + 1,), dtype=np.int64)
        out[..., 0] = 1
        for e in range(1, max_e + 1):
            out[..., e] = self.vmul(out[..., e - 1], a)
        return out

    def dot(self, A, B):
        """Matrix product over the field for 2-D rank arrays."""
        A, B = np.asarray(A, dtype=np.int64), np.asarray(B, dtype=np.int64)
        inner = A.shape[1]
        if self.k == 1:
            # keep every partial sum below 2**62
            step = max(1, (2**62) // max(1, (self.p - 1) ** 2))
            out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
            for lo in range(0, inner, step):
                out = (out + A[:, lo:lo + step] @ B[lo:lo + step, :]) % self.p
            return out
        out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        for i in range(inner):
            out = self.vadd(out, self.vmul(A[:, i:i + 1], B[i:i + 1, :]))
        return out

    # --- lazily built tables ------------------------------------------------

    def _mul_coeffs(self, a, b):
        return _poly_rem(_poly_mul(list(a), list(b), self.p), list(self.modulus), self.p)

    def _coeff_pow(self, a, e):
        result, base = [1], list(a)
        while e:
            if e & 1:
                result = self._mul_coeffs(result, base)
            base = self._mul_coeffs(base, base)
            e >>= 1
        return result

    @cached_property
    def _tables(self):
        """(exp, log) tables for a primitive element; exp has length 2(q-1)."""
        q, p, k = self.q, self.p, self.k
        factors = prime_factors(q - 1)
        for g in range(2, q):
            gc = _digits(g, p, k)
            if all(_trim(self._coeff_pow(gc, (q - 1) // r)) != [1] for r in factors):
                break
        else:
            raise AssertionError("no primitive element found")
        exp = np.zeros(2 * (q - 1), dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        cur = [1]
        for i in range(q - 1):
            r = _undigits(_trim(cur) + [0] * (k - len(_trim(cur))), p)
            exp[i] = r
            log[r] = i
            cur = self._mul_coeffs(cur, gc)
        exp[q - 1:] = exp[:q - 1]
        return exp, log

    @cached_property
    def _add_table(self):
        r = np.arange(self.q, dtype=np.int64)
        out = np.zeros((self.q, self.q), dtype=np.int64)
        scale = 1
        for _ in range(self.k):
            da = (r // scale) % self.p
            out += ((da[:, None] + da[None, :]) % self.p) * scale
            scale *= self.p
        return out

    @cached_property
    def _neg_table(self):
        return np.array([self.neg(a) for a in range(self.q)], dtype=np.int64)


@dataclass(frozen=True)
class FieldElement:
    """An element of ``ctx`` as its length-k coefficient vector."""

    ctx: FieldContext = field(repr=False)
    coeffs: tuple

    @property
    def rank(self) -> int:
        return self.ctx.rank(self)

    def _other(self, other):
        if isinstance(other, FieldElement):
            if other.ctx != self.ctx:
                raise ValueError("elements from different fields")
            return other.rank
        return int(other) % self.ctx.q

    def __add__(self, other):
        return self.ctx.element(self.ctx.add(self.rank, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return self.ctx.element(self.ctx.sub(self.rank, self._other(other)))

    def __neg__(self):
        return self.ctx.element(self.ctx.neg(self.rank))

    def __mul__(self, other):
        return self.ctx.element(self.ctx.mul(self.rank, self._other(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.ctx.element(self.ctx.div(self.rank, self._other(other)))

    def __pow__(self, e: int):
        return self.ctx.element(self.ctx.pow(self.rank, e))

    def inverse(self):
        return self.ctx.element(self.ctx.inv(self.rank))

    def frobenius(self):
        return self.ctx.element(self.ctx.frobenius(self.rank))

    def is_zero(self) -> bool:
        return not any(self.coeffs)
