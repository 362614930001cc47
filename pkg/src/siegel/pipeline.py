"""End-to-end analysis of one angle: cfrac -> dynamics -> scaling -> geometry."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

from .cfrac import QuadraticIrrational, alpha, convergents_upto
from .dynamics import DEFAULT_PRECISION, LadderResult, OrbitRecord, critical_orbit, make_params, precision_ladder
from .errors import InsufficientSamplesError, InvalidConfigError, NonConvergenceWarning, TooFewLevelsError
from .geometry import DecayFit, decay_experiment
from .scaling import (DEFAULT_CONVERGENCE_TOL, DEFAULT_TOL_ARG, LambdaEstimate, Outcome, ScalingReport,
                      SpiralVerdict, Verdict, check_bound, estimate_lambda, modulus_M, spiral_test,
                      torus_inequality, triangle_criterion, verdicts_agree)

log = logging.getLogger(__name__)

DEFAULT_MAX_Q = 2_000_000
DEFAULT_DECAY_LEVELS = 4


@dataclass
class AnalysisConfig:
    theta_cf: str
    precision_bits: int = DEFAULT_PRECISION
    max_q: int = DEFAULT_MAX_Q
    lambda_levels: int | None = None
    decay_levels: int = DEFAULT_DECAY_LEVELS
    ladder: bool = False
    convergence_tol: float = DEFAULT_CONVERGENCE_TOL
    tol_arg: float = DEFAULT_TOL_ARG

    def __post_init__(self):
        if self.precision_bits < 53:
            raise InvalidConfigError("precision must be >= 53 bits")
        if self.max_q < 1:
            raise InvalidConfigError("max_q must be positive")
        if self.lambda_levels is not None and self.lambda_levels < 3:
            raise InvalidConfigError("levels must be >= 3")
        if self.decay_levels < 0:
            raise InvalidConfigError("decay levels must be >= 0")


@dataclass
class Analysis:
    theta: QuadraticIrrational
    config: AnalysisConfig
    report: ScalingReport
    orbit: OrbitRecord
    estimate: LambdaEstimate | None
    decay: DecayFit | None = None
    ladder: LadderResult | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.estimate is not None and self.estimate.converged


def orbit_length(theta: QuadraticIrrational, max_q: int, levels: int | None) -> int:
    """Iterations needed for ``levels`` ratios (or every ratio allowed by ``max_q``)."""
    N, s = theta.N, theta.s
    if levels is None:
        conv = convergents_upto(theta, max_q)
        if not conv or conv[-1].n < N + 2 + s:
            need = N + 2 + s
            raise TooFewLevelsError(f"max_q={max_q} does not reach q_{need}; at least 3 levels are needed")
        return conv[-1].q
    need = N + levels - 1 + s
    conv = convergents_upto(theta, max_q)
    if not conv or conv[-1].n < need:
        raise InvalidConfigError(f"{levels} levels need q_{need} <= max_q={max_q}")
    return conv[need - 1].q


def analyze(theta: QuadraticIrrational, config: AnalysisConfig) -> Analysis:
    P = config.precision_bits
    const = alpha(theta)
    M = modulus_M(const.alpha, max(P, 128))
    triangle = triangle_criterion(M)

    max_index = orbit_length(theta, config.max_q, config.lambda_levels)
    params = make_params(theta, P)
    log.info("iterating %s to %d at %d bits", theta.cf_text, max_index, P)
    orbit = critical_orbit(params, max_index)

    notes: list[str] = []
    if not orbit.returns_verified:
        notes.append("closest-return indices differ from the convergent denominators")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergenceWarning)
        est = estimate_lambda(orbit, theta.s, theta.N, config.lambda_levels,
                              convergence_tol=config.convergence_tol)
    notes.extend(str(w.message) for w in caught)

    if est.converged:
        bound = check_bound(const.alpha, est.lambda_est, est.lambda_err)
        torus = torus_inequality(M, est.lambda_est, est.lambda_err, precision_bits=max(P, 128))
        spiral = spiral_test(est.lambda_est, theta.s, config.tol_arg, est.arg_dispersion)
    else:
        notes.append(f"lambda_err={float(est.lambda_err):.3g} exceeds tolerance {config.convergence_tol}")
        bound = Verdict(Outcome.INCONCLUSIVE, None, "lambda estimate not converged")
        torus = Verdict(Outcome.INCONCLUSIVE, None, "lambda estimate not converged")
        raw = spiral_test(est.lambda_est, theta.s, config.tol_arg, est.arg_dispersion)
        spiral = raw if raw.kind == "not-applicable" else SpiralVerdict(
            "inconclusive", raw.arg, raw.arg_dispersion, raw.distance_from_real)

    ladder = None
    if config.ladder:
        ladder = precision_ladder(theta, max_index, P, 64, base=orbit)
        if not ladder.reliable:
            notes.append(f"precision ladder: |delta_n| moved by {ladder.max_rel_change:.3g} relative at +64 bits")

    decay = None
    if config.decay_levels > 0 and est.converged:
        try:
            decay = decay_experiment(orbit, est.lambda_est, theta.s, config.decay_levels, N=theta.N,
                                     lambda_err=float(est.lambda_err))
        except InsufficientSamplesError as exc:
            notes.append(str(exc))

    report = ScalingReport(
        alpha=const.alpha.to_mpfr(P),
        alpha_exact=const.alpha,
        s=theta.s,
        N=theta.N,
        M=M,
        lambda_levels=est.levels,
        lambda_est=est.lambda_est,
        lambda_err=est.lambda_err,
        bound_ok=bound,
        triangle_ok=triangle,
        torus_ineq_ok=torus,
        spiral=spiral,
        diagnostics={
            "converged": est.converged,
            "contracting": est.contracting,
            "verdicts_agree": verdicts_agree(bound, torus),
            "returns_verified": orbit.returns_verified,
        },
    )
    return Analysis(theta, config, report, orbit, est, decay, ladder, notes)
