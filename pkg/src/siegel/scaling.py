"""Scaling ratio of the Siegel boundary at the critical point, and the verdicts built on it.

The ratio is estimated from closest returns: with delta_n = P^{q_n}(omega) - omega,

    lambda_n = delta_{n+s} / delta_n          (s even)
    lambda_n = delta_{n+s} / conj(delta_n)    (s odd)

The modulus of the quotient annulus is M = -pi / log(alpha^2).  Every verdict is
tri-state so desk-precision runs never overclaim.
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import gmpy2
from gmpy2 import mpc, mpfr

from .cfrac import SelfSimilarityConstant
from .dynamics import OrbitRecord
from .errors import DomainError, NonConvergenceWarning, TooFewLevelsError
from .surd import Surd

DEFAULT_CONVERGENCE_TOL = 1e-3
DEFAULT_TOL_ARG = 1e-2
# absolute slack added to every |lambda| comparison (float-level noise)
NUMERIC_FLOOR = 2.0 ** -40


class Outcome(str, enum.Enum):
    TRUE = "true"
    FALSE = "false"
    INCONCLUSIVE = "inconclusive"
    NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    margin: Any = None
    note: str = ""
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        return self.outcome is Outcome.TRUE


def _to_mpfr(x, precision_bits: int) -> mpfr:
    if isinstance(x, SelfSimilarityConstant):
        x = x.alpha
    if isinstance(x, Surd):
        return x.to_mpfr(precision_bits)
    if isinstance(x, Fraction):
        with gmpy2.context(precision=precision_bits):
            return mpfr(x.numerator) / x.denominator
    return mpfr(x, precision_bits)


def modulus_M(alpha, precision_bits: int = 128) -> mpfr:
    """-pi / log(alpha^2) for 0 < alpha < 1."""
    a = _to_mpfr(alpha, precision_bits)
    if not (0 < a < 1):
        raise DomainError(f"alpha must lie in (0, 1), got {a}")
    with gmpy2.context(precision=precision_bits):
        return -gmpy2.const_pi() / gmpy2.log(a * a)


def triangle_criterion(M) -> Verdict:
    """True iff M > 1/2.  Below the threshold the criterion says nothing."""
    if not (M > 0) or not gmpy2.is_finite(mpfr(M)):
        raise DomainError("M must be finite and positive")
    margin = M - mpfr(0.5)
    if M > 0.5:
        return Verdict(Outcome.TRUE, margin, "triangle with vertex at the critical point")
    return Verdict(Outcome.FALSE, margin, "criterion inconclusive: M <= 1/2")


# -- lambda estimation ---------------------------------------------------------


@dataclass
class LambdaEstimate:
    levels: list[tuple[int, mpc]]
    lambda_est: mpc
    lambda_err: mpfr
    dispersions: list[mpfr]
    arg_dispersion: float
    converged: bool
    contracting: bool
    warnings: list[str] = field(default_factory=list)


def _dispersion(values: Sequence[mpc]) -> mpfr:
    return max(abs(a - b) for a, b in itertools.combinations(values, 2))


def _arg_dispersion(values: Sequence[mpc]) -> float:
    # phase of the quotient avoids branch-cut wraparound
    return max(abs(float(gmpy2.phase(a / b))) for a, b in itertools.combinations(values, 2))


def estimate_lambda(orbit: OrbitRecord, s: int, N: int, levels: int | None = None, *,
                    convergence_tol: float = DEFAULT_CONVERGENCE_TOL) -> LambdaEstimate:
    """Successive closest-return ratios lambda_n for n = N, N+1, ...

    ``levels`` counts the ratios used; ``None`` takes every n whose delta_{n+s}
    the orbit recorded.  ``lambda_est`` is the last ratio and ``lambda_err``
    the largest pairwise distance among the last three.
    """
    deltas = {cr.n: cr.delta for cr in orbit.closest_returns}
    if levels is None:
        ns = []
        n = N
        while n in deltas and n + s in deltas:
            ns.append(n)
            n += 1
    else:
        ns = list(range(N, N + levels))
        missing = [n + s for n in ns if n not in deltas or n + s not in deltas]
        if missing:
            raise TooFewLevelsError(
                f"orbit lacks closest returns up to n={max(missing)}; increase max_index")
    if len(ns) < 3:
        raise TooFewLevelsError(f"need at least 3 levels, have {len(ns)}")

    with gmpy2.context(precision=orbit.params.precision_bits):
        lams = []
        for n in ns:
            d0, d1 = deltas[n], deltas[n + s]
            lams.append((n, d1 / d0 if s % 2 == 0 else d1 / d0.conjugate()))
        vals = [v for _, v in lams]
        disps = [_dispersion(vals[i:i + 3]) for i in range(len(vals) - 2)]
        arg_disp = _arg_dispersion(vals[-3:])

    notes = []
    if len(disps) >= 2 and disps[-1] > 10 * disps[-2]:
        msg = (f"lambda_n dispersion jumped from {float(disps[-2]):.3g} "
               f"to {float(disps[-1]):.3g} over the last levels")
        notes.append(msg)
        warnings.warn(msg, NonConvergenceWarning, stacklevel=2)
    contracting = len(disps) == 1 or disps[-1] < disps[0]
    if not contracting:
        notes.append("lambda_n do not contract")
    return LambdaEstimate(
        levels=lams,
        lambda_est=vals[-1],
        lambda_err=disps[-1],
        dispersions=disps,
        arg_dispersion=arg_disp,
        converged=bool(disps[-1] < convergence_tol),
        contracting=contracting,
        warnings=notes,
    )


# -- verdicts -------------------------------------------------------------------


def check_bound(alpha, lambda_est, lambda_err=0) -> Verdict:
    """alpha + err < |lambda| < 1 - err, as a tri-state verdict.

    A clear violation of either side is FALSE (and means the pipeline is
    broken); overlap with the error margin is INCONCLUSIVE.  The margin always
    includes NUMERIC_FLOOR so float noise at exact equality stays inconclusive.
    """
    a = float(_to_mpfr(alpha, 64))
    r = float(abs(mpc(lambda_est)))
    e = float(lambda_err) + NUMERIC_FLOOR

    def side(gap: float) -> Outcome:
        if gap > e:
            return Outcome.TRUE
        if gap < -e:
            return Outcome.FALSE
        return Outcome.INCONCLUSIVE

    lower, upper = side(r - a), side(1.0 - r)
    if Outcome.FALSE in (lower, upper):
        outcome, note = Outcome.FALSE, "bound violated: pipeline error"
    elif Outcome.INCONCLUSIVE in (lower, upper):
        outcome, note = Outcome.INCONCLUSIVE, "margin within lambda_err"
    else:
        outcome, note = Outcome.TRUE, ""
    return Verdict(outcome, min(r - a, 1.0 - r), note, {"lower": lower.value, "upper": upper.value})


def _torus_rhs(x: mpfr) -> mpfr:
    """-2 pi / log(x^2), extended by 0 at x <= 0 and +inf at x >= 1."""
    if x <= 0:
        return mpfr(0)
    if x >= 1:
        return mpfr("inf")
    return -2 * gmpy2.const_pi() / gmpy2.log(x * x)


def torus_inequality(M, lambda_est, lambda_err=0, *, precision_bits: int = 128) -> Verdict:
    """2M <= -2 pi / log(|lambda|^2), the modulus form of the lower bound.

    The error interval |lambda| -/+ (lambda_err + NUMERIC_FLOOR) is pushed
    through the right-hand side, which is increasing, so the verdict matches
    the lower side of :func:`check_bound`.  An inequality that holds only
    inside the interval is TRUE with ``note == "boundary"``.
    """
    with gmpy2.context(precision=precision_bits):
        r = abs(mpc(lambda_est))
        two_m = 2 * mpfr(M)
        e = mpfr(lambda_err) + NUMERIC_FLOOR
        rhs = _torus_rhs(r)
        lo, hi = _torus_rhs(r - e), _torus_rhs(r + e)
        margin = rhs - two_m
    detail = {"rhs": rhs, "rhs_low": lo, "rhs_high": hi}
    if lo > two_m:
        return Verdict(Outcome.TRUE, margin, "", detail)
    if hi < two_m:
        return Verdict(Outcome.FALSE, margin, "", detail)
    return Verdict(Outcome.TRUE, margin, "boundary", detail)


def verdicts_agree(bound: Verdict, torus: Verdict) -> bool:
    """Torus verdict against the lower side of the bound verdict (boundary ~ inconclusive)."""
    lower = bound.detail.get("lower", bound.outcome.value)
    t = Outcome.INCONCLUSIVE.value if torus.note == "boundary" else torus.outcome.value
    return lower == t


@dataclass(frozen=True)
class SpiralVerdict:
    kind: str  # "not-applicable" | "real-within-tol" | "nonreal"
    arg: float | None = None
    arg_dispersion: float | None = None
    distance_from_real: float | None = None


def spiral_test(lambda_est, s: int, tol_arg: float = DEFAULT_TOL_ARG,
                arg_dispersion: float = 0.0) -> SpiralVerdict:
    """Is lambda nonreal?  Only meaningful for even period.

    For odd s the square of the scaling map has the positive real ratio
    |lambda|^2 and the boundary cannot spiral.
    """
    arg = float(gmpy2.phase(mpc(lambda_est)))
    off_real = min(abs(arg), math.pi - abs(arg))
    if s % 2:
        return SpiralVerdict("not-applicable", arg, arg_dispersion, off_real)
    if off_real > tol_arg and off_real > 3 * arg_dispersion:
        return SpiralVerdict("nonreal", arg, arg_dispersion, off_real)
    return SpiralVerdict("real-within-tol", arg, arg_dispersion, off_real)


@dataclass
class ScalingReport:
    alpha: mpfr
    alpha_exact: Surd
    s: int
    N: int
    M: mpfr
    lambda_levels: list[tuple[int, mpc]]
    lambda_est: mpc | None
    lambda_err: mpfr | None
    bound_ok: Verdict
    triangle_ok: Verdict
    torus_ineq_ok: Verdict
    spiral: SpiralVerdict
    diagnostics: dict = field(default_factory=dict)
