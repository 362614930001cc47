"""Iteration of P(z) = e^{2 pi i theta} z + z^2 at configurable binary precision.

Complex values are ``gmpy2.mpc`` (aliased :data:`HPComplex`); each carries its
own precision.  All loops run inside a ``gmpy2`` context at the parameter
precision so results are bit-reproducible.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .cfrac import Convergent, QuadraticIrrational, convergents_upto
from .errors import DivergenceError, InvalidConfigError, PrecisionExhaustedError

HPComplex = mpc

DEFAULT_PRECISION = 256
STREAM_LIMIT = 2_000_000
# closest returns below 2^-(P - EXHAUSTION_GUARD_BITS) abort the run
EXHAUSTION_GUARD_BITS = 20

Angle = Union[QuadraticIrrational, Fraction]


def hp(value, precision_bits: int) -> mpc:
    """Round ``value`` (complex, mpc or a (re, im) pair) to an mpc at the given precision."""
    if isinstance(value, tuple):
        return mpc(mpfr(value[0], precision_bits), mpfr(value[1], precision_bits),
                   precision=precision_bits)
    return mpc(value, precision=precision_bits)


def _ctx(precision_bits: int):
    return gmpy2.context(precision=precision_bits)


@dataclass(frozen=True)
class PolynomialParams:
    theta: Angle
    rotation: mpc
    critical_point: mpc
    precision_bits: int

    def __post_init__(self):
        if self.precision_bits < 53:
            raise InvalidConfigError("precision_bits must be >= 53")

    @property
    def cf_text(self) -> str:
        if isinstance(self.theta, QuadraticIrrational):
            return self.theta.cf_text
        return str(self.theta)

    def __call__(self, z: mpc) -> mpc:
        with _ctx(self.precision_bits):
            return z * (self.rotation + z)


def make_params(theta: Angle, precision_bits: int = DEFAULT_PRECISION) -> PolynomialParams:
    """Rotation e^{2 pi i theta} and critical point -rotation/2 at ``precision_bits``.

    ``theta`` is normally a :class:`QuadraticIrrational`; a ``Fraction`` is
    accepted as a test hook.
    """
    if precision_bits < 53:
        raise InvalidConfigError("precision_bits must be >= 53")
    work = precision_bits + 32
    if isinstance(theta, QuadraticIrrational):
        t = theta.to_mpfr(work)
    else:
        with _ctx(work):
            t = mpfr(Fraction(theta).numerator) / Fraction(theta).denominator
    with _ctx(work):
        angle = 2 * gmpy2.const_pi() * t
        s, c = gmpy2.sin_cos(angle)
    rotation = mpc(c, s, precision=precision_bits)
    with _ctx(precision_bits):
        critical = rotation * mpfr(-0.5)
    return PolynomialParams(theta, rotation, critical, precision_bits)


def iterate(params: PolynomialParams, z, count: int) -> mpc:
    """P^count(z) by repeated application."""
    if count < 0:
        raise ValueError("count must be >= 0")
    rot = params.rotation
    with _ctx(params.precision_bits):
        z = mpc(z)
        for k in range(1, count + 1):
            z = z * (rot + z)
            if not gmpy2.is_finite(z):
                raise DivergenceError(k)
    return z


def escape_time(params: PolynomialParams, z, max_iter: int = 10_000,
                escape_radius: float = 2.0) -> int | None:
    """First k in [0, max_iter) with |P^k(z)| > escape_radius, else None (bounded).

    The radius is tested before each application of P, so a point already
    outside escapes at step 0.
    """
    if escape_radius < 2:
        raise ValueError("escape_radius must be >= 2")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    rot = params.rotation
    with _ctx(params.precision_bits):
        r2 = mpfr(escape_radius) ** 2
        z = mpc(z)
        for k in range(max_iter):
            if gmpy2.norm(z) > r2:
                return k
            z = z * (rot + z)
    return None


@dataclass(frozen=True)
class ClosestReturn:
    n: int
    q: int
    delta: mpc

    @property
    def distance(self) -> mpfr:
        return abs(self.delta)


@dataclass
class OrbitRecord:
    """Critical orbit z_k = P^k(omega), k = 0..max_index.

    ``samples`` keeps full-precision points at ``sample_stride`` plus every
    closest-return index.  ``stream`` keeps offsets ``z_k - omega`` rounded to
    complex128 for k = 0, stream_stride, 2*stream_stride, ...; the subtraction
    happens at full precision first.
    """

    params: PolynomialParams
    max_index: int
    samples: list[tuple[int, mpc]]
    closest_returns: list[ClosestReturn]
    stream: np.ndarray
    stream_stride: int
    sample_stride: int
    records: list[int] = field(default_factory=list)
    verify_limit: int = 0
    expected_returns: list[int] = field(default_factory=list)

    @property
    def origin(self) -> mpc:
        return self.params.critical_point

    @property
    def returns_verified(self) -> bool:
        """Record minima of |z_k - omega| (k <= verify_limit) sit exactly at q_0=1 and the q_n."""
        return self.records == self.expected_returns

    def delta(self, n: int) -> mpc:
        for cr in self.closest_returns:
            if cr.n == n:
                return cr.delta
        raise KeyError(f"no closest return recorded for n={n}")

    @property
    def levels(self) -> list[int]:
        return [cr.n for cr in self.closest_returns]


def _expected_records(theta: Angle, limit: int) -> list[int]:
    if not isinstance(theta, QuadraticIrrational) or limit < 1:
        return []
    qs = {1} | {c.q for c in convergents_upto(theta, limit)}
    return sorted(qs)


def critical_orbit(params: PolynomialParams, max_index: int,
                   convergents: Sequence[Convergent] | None = None, *,
                   sample_stride: int | None = None,
                   stream_limit: int = STREAM_LIMIT,
                   verify_limit: int | None = None) -> OrbitRecord:
    """Iterate the critical point up to ``max_index`` recording closest returns.

    Every step is checked against the running minimum of |z_k - omega| up to
    ``verify_limit`` (default: the whole run) so the closest-return indices are
    brute-force confirmed.  Raises :class:`PrecisionExhaustedError` once a
    closest return is smaller than 2^-(P-20).
    """
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    if convergents is None:
        convergents = convergents_upto(params.theta, max_index)
    wanted = {c.q: c.n for c in convergents if c.q <= max_index}
    if sample_stride is None:
        sample_stride = max(1, max_index // 4096)
    stream_stride = max(1, math.ceil((max_index + 1) / stream_limit))
    if verify_limit is None:
        verify_limit = max_index
    verify_limit = min(verify_limit, max_index)

    P = params.precision_bits
    rot, w = params.rotation, params.critical_point
    floor2 = mpfr(2, 64) ** (-2 * (P - EXHAUSTION_GUARD_BITS))
    samples: list[tuple[int, mpc]] = [(0, w)]
    returns: list[ClosestReturn] = []
    stream: list[complex] = [0j]
    records: list[int] = []
    with _ctx(P):
        best = None
        z = w
        s_left, t_left = sample_stride, stream_stride
        for k in range(1, max_index + 1):
            z = z * (rot + z)
            u = z - w
            m = gmpy2.norm(u)
            if not m < 1e6:
                raise DivergenceError(k)
            if k <= verify_limit and (best is None or m < best):
                best = m
                records.append(k)
            t_left -= 1
            if t_left == 0:
                stream.append(complex(u))
                t_left = stream_stride
            s_left -= 1
            n = wanted.get(k)
            if n is not None:
                if m < floor2:
                    raise PrecisionExhaustedError(
                        f"|delta_{n}| fell below 2^-({P}-{EXHAUSTION_GUARD_BITS}) at q_{n}={k}; "
                        "raise precision_bits")
                # q_0 = q_1 = 1 when a_1 = 1; keep the larger index
                returns = [r for r in returns if r.q != k]
                returns.append(ClosestReturn(n, k, u))
            if s_left == 0 or n is not None:
                samples.append((k, z))
                if s_left == 0:
                    s_left = sample_stride
    return OrbitRecord(
        params=params,
        max_index=max_index,
        samples=samples,
        closest_returns=returns,
        stream=np.asarray(stream, dtype=np.complex128),
        stream_stride=stream_stride,
        sample_stride=sample_stride,
        records=records,
        verify_limit=verify_limit,
        expected_returns=_expected_records(params.theta, verify_limit),
    )


@dataclass(frozen=True)
class LadderResult:
    precision_bits: int
    extra_bits: int
    rel_change: dict[int, float]
    threshold: float = 2.0 ** -40

    @property
    def max_rel_change(self) -> float:
        return max(self.rel_change.values(), default=0.0)

    @property
    def reliable(self) -> bool:
        return self.max_rel_change < self.threshold


def precision_ladder(theta: QuadraticIrrational, max_index: int,
                     precision_bits: int = DEFAULT_PRECISION, extra_bits: int = 64,
                     base: OrbitRecord | None = None) -> LadderResult:
    """Compare |delta_n| at P and P+extra_bits bits."""
    if base is None:
        base = critical_orbit(make_params(theta, precision_bits), max_index, verify_limit=0)
    hi = critical_orbit(make_params(theta, precision_bits + extra_bits), max_index, verify_limit=0)
    change = {}
    for lo_cr in base.closest_returns:
        a = abs(lo_cr.delta)
        b = abs(hi.delta(lo_cr.n))
        change[lo_cr.n] = float(abs(a - b) / b)
    return LadderResult(precision_bits, extra_bits, change)


# -- orbit dump text format ---------------------------------------------------
#
#   # siegel-orbit v1
#   # theta <cf text>
#   # precision <bits>
#   # origin <re> <im>
#   <k> <re> <im>
#   ...
#
# Lines starting with '#' are headers/comments; numbers are decimal strings that
# round-trip at the stated precision.

DUMP_VERSION = "siegel-orbit v1"


def format_hp(x: mpfr) -> str:
    return str(x)


def write_orbit_dump(dest: Union[str, Path, IO[str]], points: Iterable[tuple[int, mpc]],
                     *, theta: str = "", precision_bits: int, origin) -> None:
    lines = [f"# {DUMP_VERSION}", f"# theta {theta}", f"# precision {precision_bits}"]
    o = mpc(origin, precision=precision_bits)
    lines.append(f"# origin {format_hp(o.real)} {format_hp(o.imag)}")
    for k, z in points:
        z = mpc(z, precision=precision_bits)
        lines.append(f"{k} {format_hp(z.real)} {format_hp(z.imag)}")
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="ascii")
    else:
        dest.write(text)


def read_orbit_dump(src: Union[str, Path, IO[str]]) -> tuple[dict, list[tuple[int, mpc]]]:
    """Inverse of :func:`write_orbit_dump`; returns (header, points)."""
    if isinstance(src, (str, Path)):
        text = Path(src).read_text(encoding="ascii")
    else:
        text = src.read()
    header: dict = {"precision": DEFAULT_PRECISION}
    points: list[tuple[int, mpc]] = []
    for raw in io.StringIO(text):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, rest = line[1:].strip().partition(" ")
            if key == "precision":
                header["precision"] = int(rest)
            elif key == "theta":
                header["theta"] = rest.strip()
            elif key == "origin":
                re_s, im_s = rest.split()
                header["origin"] = (re_s, im_s)
            continue
        k, re_s, im_s = line.split()
        prec = header["precision"]
        points.append((int(k), hp((re_s, im_s), prec)))
    if "origin" in header:
        prec = header["precision"]
        re_s, im_s = header["origin"]
        header["origin"] = hp((re_s, im_s), prec)
    return header, points


def dump_orbit(orbit: OrbitRecord, dest) -> None:
    write_orbit_dump(dest, orbit.samples, theta=orbit.params.cf_text,
                     precision_bits=orbit.params.precision_bits, origin=orbit.origin)
