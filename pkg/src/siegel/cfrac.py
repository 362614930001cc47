"""Preperiodic continued fractions, convergents and the rotation constant.

Angles live in (0, 1) with no integer part::

    theta = [a1, a2, a3, ...] = 1/(a1 + 1/(a2 + 1/(a3 + ...)))

Digits ``a_N, a_{N+1}, ...`` repeat with period ``s``; the preperiod holds
``a_1 .. a_{N-1}``.  Everything here is exact (see :mod:`siegel.surd`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import gmpy2

from .errors import CFParseError, InsufficientPrecisionError, InvalidDigitError, NotQuadraticError
from .surd import Surd


def _moebius(digits: Sequence[int]) -> tuple[int, int, int, int]:
    """Matrix of y -> 1/(d1 + 1/(... + 1/(dk + y))) written as (A*y + B)/(C*y + D)."""
    A, B, C, D = 1, 0, 0, 1
    for a in digits:
        # right-multiply by [[0, 1], [1, a]]
        A, B, C, D = B, A + a * B, D, C + a * D
    return A, B, C, D


def _apply(m: tuple[int, int, int, int], y: Surd) -> Surd:
    A, B, C, D = m
    return (A * y + B) / (C * y + D)


def _minimal_period(period: tuple[int, ...]) -> tuple[int, ...]:
    s = len(period)
    for k in range(1, s + 1):
        if s % k == 0 and period[:k] * (s // k) == period:
            return period[:k]
    return period


def canonical_digits(preperiod: Sequence[int], period: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Shortest period, then shortest preperiod (trailing digits rotated in)."""
    pre = tuple(preperiod)
    per = _minimal_period(tuple(period))
    while pre and pre[-1] == per[-1]:
        pre = pre[:-1]
        per = (per[-1],) + per[:-1]
    return pre, per


@dataclass(frozen=True)
class QuadraticIrrational:
    preperiod: tuple[int, ...]
    period: tuple[int, ...]
    surd: Surd = field(compare=False)

    @property
    def N(self) -> int:
        """Index of the first periodic digit (1-based)."""
        return len(self.preperiod) + 1

    @property
    def s(self) -> int:
        return len(self.period)

    def digit(self, i: int) -> int:
        if i < 1:
            raise IndexError("digits are 1-indexed")
        if i < self.N:
            return self.preperiod[i - 1]
        return self.period[(i - self.N) % self.s]

    def digits(self, start: int = 1) -> Iterator[int]:
        i = start
        while True:
            yield self.digit(i)
            i += 1

    def tail(self, i: int) -> Surd:
        """Exact value of ``theta_i = [a_i, a_{i+1}, ...]``; ``tail(1)`` is theta."""
        if i < 1:
            raise IndexError("tails are 1-indexed")
        if i == 1:
            return self.surd
        if i >= self.N:
            return _periodic_value(self.period[(i - self.N) % self.s:] + self.period[:(i - self.N) % self.s])
        return _apply(_moebius(self.preperiod[i - 1:]), _periodic_value(self.period))

    def to_mpfr(self, precision: int) -> gmpy2.mpfr:
        return self.surd.to_mpfr(precision)

    def __float__(self) -> float:
        return float(self.surd)

    @property
    def cf_text(self) -> str:
        return format_cf(self.preperiod, self.period)

    def __str__(self):
        return self.cf_text


def _periodic_value(period: Sequence[int]) -> Surd:
    """Positive fixed point of the period's Moebius map: x = [p1, ..., ps, p1, ...]."""
    A, B, C, D = _moebius(period)
    # C x^2 + (D - A) x - B = 0
    disc = (D - A) ** 2 + 4 * B * C
    return Surd.from_parts(A - D, 1, disc, 2 * C)


def parse_cf(preperiod: Iterable[int], period: Iterable[int]) -> QuadraticIrrational:
    """Build the exact quadratic irrational with the given digit blocks.

    >>> str(parse_cf([], [1]).surd)
    '(-1+sqrt(5))/2'
    """
    pre = tuple(preperiod)
    per = tuple(period)
    if not per:
        raise NotQuadraticError("period must be nonempty")
    for a in pre + per:
        if not isinstance(a, int) or isinstance(a, bool) or a < 1:
            raise InvalidDigitError(f"continued fraction digits must be integers >= 1, got {a!r}")
    pre, per = canonical_digits(pre, per)
    value = _apply(_moebius(pre), _periodic_value(per))
    return QuadraticIrrational(pre, per, value)


def expand_surd(x: Surd, max_terms: int = 10_000) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Exact CF digits of an irrational ``x`` in (0, 1), split into blocks.

    The first repeated complete quotient marks the period, so the result is
    already in canonical form.
    """
    if x.is_rational() or not (0 < x < 1):
        raise NotQuadraticError("need an irrational surd in (0, 1)")
    seen: dict[Surd, int] = {}
    digits: list[int] = []
    y = x
    while y not in seen:
        if len(digits) >= max_terms:
            raise NotQuadraticError("no period found within max_terms")
        seen[y] = len(digits)
        inv = y.reciprocal()
        a = math.floor(inv)
        digits.append(a)
        y = inv - a
    start = seen[y]
    return tuple(digits[:start]), tuple(digits[start:])


def format_cf(preperiod: Sequence[int], period: Sequence[int]) -> str:
    return "[" + ",".join(map(str, preperiod)) + ";" + ",".join(map(str, period)) + "]"


def parse_cf_text(text: str) -> QuadraticIrrational:
    """Parse ``[a1,...,ak;b1,...,bs]``.

    Grammar (whitespace allowed between tokens)::

        cf     := '[' [digits] ';' digits ']'
        digits := int (',' int)*
        int    := [0-9]+

    The block before ``;`` is the preperiod and may be empty.  Errors carry
    the byte offset into the UTF-8 encoding of ``text``.
    """
    data = text.encode("utf-8")
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(data) and data[pos] in b" \t\r\n":
            pos += 1

    def expect(ch: bytes):
        nonlocal pos
        skip_ws()
        if pos >= len(data) or data[pos:pos + 1] != ch:
            found = "end of input" if pos >= len(data) else repr(chr(data[pos]))
            raise CFParseError(f"expected {ch.decode()!r}, found {found}", pos)
        pos += 1

    def integer() -> int:
        nonlocal pos
        skip_ws()
        start = pos
        while pos < len(data) and 48 <= data[pos] <= 57:
            pos += 1
        if pos == start:
            found = "end of input" if pos >= len(data) else repr(chr(data[pos]))
            raise CFParseError(f"expected a digit, found {found}", pos)
        value = int(data[start:pos])
        if value < 1:
            raise CFParseError("continued fraction digits must be >= 1", start)
        return value

    def block(terminator: bytes) -> list[int]:
        nonlocal pos
        out: list[int] = []
        skip_ws()
        if pos < len(data) and data[pos:pos + 1] == terminator:
            return out
        out.append(integer())
        while True:
            skip_ws()
            if pos < len(data) and data[pos:pos + 1] == b",":
                pos += 1
                out.append(integer())
            else:
                return out

    expect(b"[")
    pre = block(b";")
    expect(b";")
    per_start = pos
    per = block(b"]")
    if not per:
        skip_ws()
        raise CFParseError("period must be nonempty", max(per_start, pos))
    expect(b"]")
    skip_ws()
    if pos != len(data):
        raise CFParseError("trailing characters after ']'", pos)
    return parse_cf(pre, per)


# -- convergents ------------------------------------------------------------


@dataclass(frozen=True)
class Convergent:
    n: int
    p: int
    q: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def convergents(theta: QuadraticIrrational, count: int) -> list[Convergent]:
    """``p_n/q_n = [a_1, ..., a_n]`` for n = 1..count.

    Seeds are p_{-1}=1, q_{-1}=0, p_0=0, q_0=1, so p_1/q_1 = 1/a_1.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for n, a in zip(range(1, count + 1), theta.digits()):
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append(Convergent(n, p, q))
    return out


def convergents_upto(theta: QuadraticIrrational, max_q: int) -> list[Convergent]:
    """All convergents with ``q_n <= max_q``."""
    out = []
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for n, a in enumerate(theta.digits(), start=1):
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        if q > max_q:
            return out
        out.append(Convergent(n, p, q))
    raise AssertionError("unreachable")


def denominator(theta: QuadraticIrrational, n: int) -> int:
    """q_n, with q_0 = 1."""
    if n == 0:
        return 1
    return convergents(theta, n)[-1].q


# -- the rotation constant --------------------------------------------------


@dataclass(frozen=True)
class SelfSimilarityConstant:
    alpha: Surd
    s: int
    N: int
    tails: tuple[Surd, ...]

    def __float__(self) -> float:
        return float(self.alpha)


def alpha(theta: QuadraticIrrational) -> SelfSimilarityConstant:
    """alpha = theta_{N+1} * ... * theta_{N+s}, an exact unit-interval surd."""
    tails = tuple(theta.tail(i) for i in range(theta.N + 1, theta.N + theta.s + 1))
    prod = Surd(Fraction(1))
    for t in tails:
        prod = prod * t
    return SelfSimilarityConstant(prod, theta.s, theta.N, tails)


def nearest_frac(x):
    """Representative of x mod 1 in ]-1/2, 1/2]; the tie goes to +1/2.

    Works for int, Fraction, :class:`Surd`, float and mpfr.
    """
    if isinstance(x, (int, Fraction, Surd)):
        return x - math.ceil(x - Fraction(1, 2))
    if isinstance(x, float):
        return x - math.ceil(x - 0.5)
    return x - gmpy2.ceil(x - gmpy2.mpfr(0.5, x.precision))


def alpha_from_identity(theta: QuadraticIrrational) -> Surd:
    """alpha recovered as (-1)^s {q_{N+s} theta} / {q_N theta}."""
    conv = convergents(theta, theta.N + theta.s)
    qN, qNs = conv[theta.N - 1].q, conv[-1].q
    ratio = nearest_frac(qNs * theta.surd) / nearest_frac(qN * theta.surd)
    return ratio if theta.s % 2 == 0 else -ratio


# Residual bound for floating checks is 2^-(P-40); q*theta carries ~q*2^-P
# absolute error, so q must stay well below 2^40.
_FLOAT_Q_BITS = 36


def verify_rotation_identity(theta: QuadraticIrrational, n_range: Iterable[int],
                             precision_bits: int | None = None) -> list[tuple[int, object]]:
    """Residuals ``|{q_{n+s} theta} - (-1)^s alpha {q_n theta}|`` for each n.

    The identity is guaranteed for n >= N; smaller n >= 1 are evaluated as
    well (it often holds there too, e.g. for s = 1 from n = N - 2 on).
    With ``precision_bits=None`` the check is exact and residuals are
    :class:`Surd` values, zero wherever the identity holds.  Otherwise it runs in mpfr at that precision and the
    residuals should sit below ``2**-(precision_bits - 40)``.
    """
    ns = list(n_range)
    if not ns:
        return []
    if min(ns) < 1:
        raise ValueError("n must be >= 1")
    s = theta.s
    sign = -1 if s % 2 else 1
    conv = convergents(theta, max(ns) + s)
    q = {c.n: c.q for c in conv}
    a = alpha(theta).alpha
    out: list[tuple[int, object]] = []
    if precision_bits is None:
        for n in ns:
            res = nearest_frac(q[n + s] * theta.surd) - sign * a * nearest_frac(q[n] * theta.surd)
            out.append((n, abs(res)))
        return out
    worst = q[max(ns) + s]
    if worst.bit_length() > _FLOAT_Q_BITS:
        raise InsufficientPrecisionError(
            f"q_{max(ns) + s} = {worst} cannot be resolved against tolerance 2^-(P-40)")
    with gmpy2.context(precision=precision_bits):
        th = theta.to_mpfr(precision_bits)
        af = a.to_mpfr(precision_bits)
        for n in ns:
            res = nearest_frac(q[n + s] * th) - sign * af * nearest_frac(q[n] * th)
            out.append((n, abs(res)))
    return out
