"""Arithmetic in the finite fields GF(p^n).

Elements are polynomials over Z_p reduced modulo a fixed monic irreducible
polynomial of degree n. Internally an element is stored as the integer whose
base-p digits are its coefficients, lowest degree first, so ``GF(4)`` has
elements ``0, 1, x, x+1`` encoded as ``0, 1, 2, 3``.

Fixed moduli (coefficients written highest degree first)::

    GF(2^1)  x
    GF(2^2)  x^2 + x + 1
    GF(2^3)  x^3 + x + 1
    GF(2^4)  x^4 + x + 1
    GF(3^2)  x^2 + 1
    GF(p^1)  x                       for every prime p

Any other ``(p, n)`` uses the lexicographically smallest monic irreducible
polynomial of degree n (coefficient tuples compared lowest degree first),
which is deterministic, so element encodings never change between runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

MAX_ORDER = 2**16

# Coefficients lowest degree first.
DEFAULT_MODULI: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (3, 2): (1, 0, 1),
}


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    k = 3
    while k * k <= p:
        if p % k == 0:
            return False
        k += 2
    return True


def prime_power(d: int) -> tuple[int, int] | None:
    """Return ``(p, n)`` with ``p**n == d``, or None if d is not a prime power."""
    if d < 2:
        return None
    for p in range(2, d + 1):
        if d % p == 0:
            if not is_prime(p):
                return None
            n = 0
            while d % p == 0:
                d //= p
                n += 1
            return (p, n) if d == 1 else None
    return None


def _trim(poly: list[int]) -> list[int]:
    while poly and poly[-1] == 0:
        poly.pop()
    return poly


def _poly_mod(num: Sequence[int], den: Sequence[int], p: int) -> list[int]:
    rem = _trim([c % p for c in num])
    den = _trim([c % p for c in den])
    inv_lead = pow(den[-1], p - 2, p)
    while len(rem) >= len(den):
        shift = len(rem) - len(den)
        factor = (rem[-1] * inv_lead) % p
        for i, c in enumerate(den):
            rem[shift + i] = (rem[shift + i] - factor * c) % p
        _trim(rem)
    return rem


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Brute-force irreducibility test over Z_p (polynomial lowest degree first)."""
    poly = _trim([c % p for c in poly])
    deg = len(poly) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    for k in range(1, deg // 2 + 1):
        for tail in itertools.product(range(p), repeat=k):
            divisor = list(tail) + [1]
            if not _poly_mod(poly, divisor, p):
                return False
    return True


def default_modulus(p: int, n: int) -> tuple[int, ...]:
    if n == 1:
        return (0, 1)
    if (p, n) in DEFAULT_MODULI:
        return DEFAULT_MODULI[(p, n)]
    for tail in itertools.product(range(p), repeat=n):
        cand = tuple(tail) + (1,)
        if cand[0] != 0 and is_irreducible(cand, p):
            return cand
    raise AssertionError(f"no irreducible polynomial of degree {n} over GF({p})")


class GaloisField:
    """The field GF(p^n) with a fixed modulus.

    >>> F = GaloisField(2, 2)
    >>> x = F.element([0, 1])
    >>> x * x == x + 1
    True
    """

    def __init__(self, p: int, n: int = 1, modulus: Sequence[int] | None = None):
        if not is_prime(p):
            raise ValueError(f"characteristic must be prime, got {p}")
        if n < 1:
            raise ValueError(f"degree must be positive, got {n}")
        if p**n > MAX_ORDER:
            raise ValueError(f"field order {p}**{n} exceeds {MAX_ORDER}")
        if modulus is None:
            modulus = default_modulus(p, n)
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != n + 1 or modulus[-1] != 1:
            raise ValueError(f"modulus must be monic of degree {n}: {modulus}")
        if not is_irreducible(modulus, p):
            raise ValueError(f"modulus {modulus} is reducible over GF({p})")
        self.p = p
        self.n = n
        self.order = p**n
        self.modulus = modulus

    def __repr__(self) -> str:
        return f"GaloisField(p={self.p}, n={self.n}, modulus={self.modulus})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, GaloisField)
            and (self.p, self.n, self.modulus) == (other.p, other.n, other.modulus)
        )

    def __hash__(self) -> int:
        return hash((self.p, self.n, self.modulus))

    def __len__(self) -> int:
        return self.order

    def __iter__(self) -> Iterator[FieldElement]:
        return (FieldElement(self, v) for v in range(self.order))

    # encoding helpers
    def coeffs(self, value: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.n):
            value, c = divmod(value, self.p)
            out.append(c)
        return tuple(out)

    def encode(self, coeffs: Sequence[int]) -> int:
        if len(coeffs) > self.n:
            raise ValueError(f"at most {self.n} coefficients expected, got {len(coeffs)}")
        value = 0
        for c in reversed(coeffs):
            value = value * self.p + (int(c) % self.p)
        return value

    def element(self, coeffs: Sequence[int] | int) -> FieldElement:
        if isinstance(coeffs, int):
            if not 0 <= coeffs < self.order:
                raise ValueError(f"element index {coeffs} outside [0, {self.order})")
            return FieldElement(self, coeffs)
        return FieldElement(self, self.encode(coeffs))

    @property
    def zero(self) -> FieldElement:
        return FieldElement(self, 0)

    @property
    def one(self) -> FieldElement:
        return FieldElement(self, 1)

    # raw integer-encoded arithmetic
    def add(self, a: int, b: int) -> int:
        if self.n == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        return self.encode([x + y for x, y in zip(self.coeffs(a), self.coeffs(b))])

    def neg(self, a: int) -> int:
        if self.p == 2:
            return a
        return self.encode([-x for x in self.coeffs(a)])

    def mul(self, a: int, b: int) -> int:
        if self.n == 1:
            return (a * b) % self.p
        ca, cb = self.coeffs(a), self.coeffs(b)
        prod = [0] * (2 * self.n - 1)
        for i, x in enumerate(ca):
            if x:
                for j, y in enumerate(cb):
                    prod[i + j] += x * y
        return self.encode(_poly_mod(prod, self.modulus, self.p))

    def pow(self, a: int, k: int) -> int:
        if k < 0:
            a, k = self.inv(a), -k
        result = 1
        while k:
            if k & 1:
                result = self.mul(result, a)
            a = self.mul(a, a)
            k >>= 1
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return self.pow(a, self.order - 2)

    def trace(self, a: int) -> int:
        """Absolute trace a + a^p + ... + a^(p^(n-1)), returned as an integer in [0, p)."""
        total, term = 0, a
        for _ in range(self.n):
            total = self.add(total, term)
            term = self.pow(term, self.p)
        if total >= self.p:
            raise AssertionError("trace left the prime subfield")
        return total


@dataclass(frozen=True)
class FieldElement:
    field: GaloisField
    value: int

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.field.coeffs(self.value)

    def _coerce(self, other: FieldElement | int) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("elements belong to different fields")
            return other.value
        if isinstance(other, int):
            return other % self.field.p
        raise TypeError(f"cannot combine FieldElement with {type(other).__name__}")

    def __add__(self, other):
        return FieldElement(self.field, self.field.add(self.value, self._coerce(other)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.value))

    def __sub__(self, other):
        return self + (-FieldElement(self.field, self._coerce(other)))

    def __rsub__(self, other):
        return FieldElement(self.field, self._coerce(other)) - self

    def __mul__(self, other):
        return FieldElement(self.field, self.field.mul(self.value, self._coerce(other)))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        return FieldElement(self.field, self.field.pow(self.value, k))

    def inverse(self) -> FieldElement:
        return FieldElement(self.field, self.field.inv(self.value))

    def __truediv__(self, other):
        return self * FieldElement(self.field, self._coerce(other)).inverse()

    def trace(self) -> int:
        return self.field.trace(self.value)

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        terms = [
            (f"{c}" if k == 0 else ("" if c == 1 else f"{c}*") + ("x" if k == 1 else f"x^{k}"))
            for k, c in reversed(list(enumerate(self.coeffs)))
            if c
        ]
        return f"GF({self.field.p}^{self.field.n})[{' + '.join(terms) or '0'}]"


@lru_cache(maxsize=None)
def finite_field(p: int, n: int = 1) -> GaloisField:
    """Cached field handle for GF(p^n) with its documented default modulus."""
    return GaloisField(p, n)
