"""JSON serialization of analysis results.

All numbers are emitted as decimal strings at the precision they were
computed in, so consumers never see a 64-bit float truncation.  Complex
values become {"re": ..., "im": ...}.  SCHEMA_VERSION bumps on any change to
field names or structure.
"""

from __future__ import annotations

import enum
import json
import math
import os
import tempfile
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import gmpy2
from gmpy2 import mpc, mpfr

from . import __version__
from .errors import OutputError
from .surd import Surd

SCHEMA_VERSION = "siegel-report/1"
SWEEP_SCHEMA_VERSION = "siegel-sweep/1"


def num(x) -> str | None:
    """Decimal string for a real number; None passes through."""
    if x is None:
        return None
    if isinstance(x, mpfr):
        if gmpy2.is_nan(x) or gmpy2.is_infinite(x):
            return str(float(x))
        return str(x)
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, Fraction)):
        return str(x)
    x = float(x)
    return repr(x) if math.isfinite(x) else str(x)


def cnum(z) -> dict | None:
    if z is None:
        return None
    if isinstance(z, mpc):
        return {"re": num(z.real), "im": num(z.imag)}
    z = complex(z)
    return {"re": num(z.real), "im": num(z.imag)}


def to_jsonable(obj: Any) -> Any:
    """Recursive conversion used for verdict details and diagnostics."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (mpc, complex)):
        return cnum(obj)
    if isinstance(obj, Surd):
        return str(obj)
    if isinstance(obj, (mpfr, float, int, Fraction)):
        return num(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return to_jsonable(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def verdict_json(v) -> dict:
    return {
        "outcome": v.outcome.value,
        "margin": to_jsonable(v.margin),
        "note": v.note,
        "detail": to_jsonable(v.detail),
    }


def spiral_json(sp) -> dict:
    return {
        "kind": sp.kind,
        "arg": num(sp.arg),
        "arg_dispersion": num(sp.arg_dispersion),
        "distance_from_real": num(sp.distance_from_real),
    }


def scaling_report_json(report) -> dict:
    return {
        "alpha": num(report.alpha),
        "alpha_exact": str(report.alpha_exact),
        "s": report.s,
        "N": report.N,
        "M": num(report.M),
        "lambda_levels": [{"n": n, "lambda": cnum(lam)} for n, lam in report.lambda_levels],
        "lambda_est": cnum(report.lambda_est),
        "lambda_err": num(report.lambda_err),
        "bound_ok": verdict_json(report.bound_ok),
        "triangle_ok": verdict_json(report.triangle_ok),
        "torus_ineq_ok": verdict_json(report.torus_ineq_ok),
        "spiral": spiral_json(report.spiral),
        "diagnostics": to_jsonable(report.diagnostics),
    }


def decay_json(fit) -> dict | None:
    if fit is None:
        return None
    return {
        "distances": [{"n": n, "d": num(d)} for n, d in fit.distances],
        "slope": num(fit.slope),
        "intercept": num(fit.intercept),
        "residual": num(fit.residual),
        "residual_cap": num(fit.residual_cap),
        "decay_ok": verdict_json(fit.decay_ok),
        "window": num(fit.window),
        "samples_per_level": list(fit.samples_per_level),
        "lambda_err": num(fit.lambda_err),
        "metric": fit.metric_note,
    }


def config_json(config) -> dict:
    return {
        "theta_cf": config.theta_cf,
        "precision_bits": config.precision_bits,
        "max_q": config.max_q,
        "lambda_levels": config.lambda_levels,
        "decay_levels": config.decay_levels,
        "ladder": config.ladder,
        "convergence_tol": num(config.convergence_tol),
        "tol_arg": num(config.tol_arg),
    }


def analysis_json(analysis) -> dict:
    orbit = analysis.orbit
    ladder = analysis.ladder
    return {
        "schema": SCHEMA_VERSION,
        "artifact_version": __version__,
        "theta": {
            "cf": analysis.theta.cf_text,
            "value": str(analysis.theta.surd),
            "preperiod": list(analysis.theta.preperiod),
            "period": list(analysis.theta.period),
        },
        "config": config_json(analysis.config),
        "report": scaling_report_json(analysis.report),
        "orbit": {
            "max_index": orbit.max_index,
            "origin": cnum(orbit.origin),
            "closest_returns": [{"n": c.n, "q": c.q, "delta": cnum(c.delta)} for c in orbit.closest_returns],
            "records": list(orbit.records),
            "verify_limit": orbit.verify_limit,
            "returns_verified": orbit.returns_verified,
            "stream_samples": int(orbit.stream.size),
            "stream_stride": orbit.stream_stride,
        },
        "decay": decay_json(analysis.decay),
        "ladder": None if ladder is None else {
            "precision_bits": ladder.precision_bits,
            "extra_bits": ladder.extra_bits,
            "max_rel_change": num(ladder.max_rel_change),
            "reliable": ladder.reliable,
        },
        "warnings": list(analysis.warnings),
    }


def sweep_json(rows) -> dict:
    return {
        "schema": SWEEP_SCHEMA_VERSION,
        "artifact_version": __version__,
        "rows": [{"a": r.a, "alpha": r.alpha, "alpha_exact": r.alpha_exact, "M": r.M,
                  "triangle": r.triangle, "margin": r.margin} for r in rows],
    }


def load_schema(name: str = "report.schema.json") -> dict:
    return json.loads(resources.files("siegel").joinpath(name).read_text())


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def write_json(path, doc: dict) -> Path:
    """Atomic write (temp file in the target directory, then rename)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(dumps(doc))
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path
