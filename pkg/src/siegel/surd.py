"""Exact arithmetic in real quadratic fields Q(sqrt d).

A :class:`Surd` stores ``a + b*sqrt(d)`` with rational ``a``, ``b`` and a
squarefree ``d >= 2``.  Pure rationals use ``b == 0`` and ``d == 1`` and mix
freely with any field.  Ordering, ``floor`` and ``ceil`` are exact (integer
square roots), so fractional-part identities can be checked with no rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2


def squarefree_decompose(n: int) -> tuple[int, int]:
    """Return ``(k, d)`` with ``n == k*k*d`` and ``d`` squarefree."""
    if n <= 0:
        raise ValueError("n must be positive")
    k, d = 1, 1
    p = 2
    m = n
    while p * p <= m:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        k *= p ** (e // 2)
        if e % 2:
            d *= p
        p += 1 if p == 2 else 2
    return k, d * m


@dataclass(frozen=True, eq=False)
class Surd:
    a: Fraction
    b: Fraction = Fraction(0)
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.b == 0:
            object.__setattr__(self, "d", 1)
        elif self.d < 2:
            raise ValueError("irrational part needs d >= 2")

    # -- construction -------------------------------------------------

    @classmethod
    def sqrt(cls, n: int) -> "Surd":
        k, d = squarefree_decompose(n)
        if d == 1:
            return cls(Fraction(k))
        return cls(Fraction(0), Fraction(k), d)

    @classmethod
    def from_parts(cls, p: int, q: int, d: int, r: int) -> "Surd":
        """Build ``(p + q*sqrt(d))/r``; ``d`` need not be squarefree."""
        if r == 0:
            raise ZeroDivisionError("r must be nonzero")
        if q == 0:
            return cls(Fraction(p, r))
        k, sd = squarefree_decompose(d)
        if sd == 1:
            return cls(Fraction(p + q * k, r))
        return cls(Fraction(p, r), Fraction(q * k, r), sd)

    @staticmethod
    def coerce(x) -> "Surd":
        if isinstance(x, Surd):
            return x
        if isinstance(x, (int, Fraction)):
            return Surd(Fraction(x))
        return NotImplemented

    # -- canonical form -----------------------------------------------

    def parts(self) -> tuple[int, int, int, int]:
        """Canonical ``(p, q, d, r)`` with value ``(p + q*sqrt(d))/r``.

        gcd(p, q, r) == 1.  For irrationals ``q > 0`` and the sign lives in
        ``r``; for rationals ``q == 0``, ``d == 1`` and ``r > 0``.
        """
        r = math.lcm(self.a.denominator, self.b.denominator)
        p = int(self.a * r)
        q = int(self.b * r)
        g = math.gcd(math.gcd(p, q), r)
        p, q, r = p // g, q // g, r // g
        if q < 0:
            p, q, r = -p, -q, -r
        return p, q, self.d, r

    def is_rational(self) -> bool:
        return self.b == 0

    # -- field operations ---------------------------------------------

    def _field(self, other: "Surd") -> int:
        if self.b == 0:
            return other.d
        if other.b == 0 or other.d == self.d:
            return self.d
        raise ValueError(f"mixing Q(sqrt {self.d}) with Q(sqrt {other.d})")

    def __add__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return other
        return Surd(self.a + other.a, self.b + other.b, self._field(other))

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.a, -self.b, self.d)

    def __sub__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return other
        d = self._field(other)
        return Surd(self.a * other.a + self.b * other.b * d,
                    self.a * other.b + self.b * other.a, d)

    __rmul__ = __mul__

    def conjugate(self) -> "Surd":
        """Galois conjugate ``a - b*sqrt(d)``."""
        return Surd(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def reciprocal(self) -> "Surd":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero surd")
        c = self.conjugate()
        return Surd(c.a / n, c.b / n, self.d)

    def __truediv__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return Surd.coerce(other) * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.reciprocal() ** (-k)
        out, base = Surd(Fraction(1)), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- order ----------------------------------------------------------

    def sign(self) -> int:
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        sa, sb = (a > 0) - (a < 0), (b > 0) - (b < 0)
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: whichever of a^2, b^2 d is larger wins (never equal)
        return sa if a * a > b * b * self.d else sb

    def __eq__(self, other):
        other = Surd.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.a == other.a and self.b == other.b and (self.b == 0 or self.d == other.d)

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __floor__(self) -> int:
        p, q, d, r = self.parts()
        if r < 0:
            p, q, r = -p, -q, -r
        if q == 0:
            return p // r
        root = math.isqrt(q * q * d)  # floor(|q| sqrt d); never exact
        fq = root if q > 0 else -root - 1
        return (p + fq) // r

    def __ceil__(self) -> int:
        return -math.floor(-self)

    # -- conversion -----------------------------------------------------

    def to_mpfr(self, precision: int) -> gmpy2.mpfr:
        """Correctly-sized mpfr approximation; guard bits absorb cancellation."""
        p, q, d, r = self.parts()
        guard = 32 + max(abs(p).bit_length(), abs(q).bit_length(), 1)
        with gmpy2.context(precision=precision + guard):
            v = (gmpy2.mpz(p) + gmpy2.mpz(q) * gmpy2.sqrt(gmpy2.mpz(d))) / gmpy2.mpz(r)
        return gmpy2.mpfr(v, precision)

    def __float__(self) -> float:
        return float(self.to_mpfr(64))

    def __repr__(self):
        return f"Surd({self})"

    def __str__(self):
        p, q, d, r = self.parts()
        if q == 0:
            return str(Fraction(p, r))
        if r < 0:
            p, q, r = -p, -q, -r
        num = f"{p}+{q}*sqrt({d})" if p else f"{q}*sqrt({d})"
        num = num.replace("+-", "-").replace("-1*", "-").replace("+1*", "+")
        if num.startswith("1*"):
            num = num[2:]
        return f"({num})/{r}" if r != 1 else num
