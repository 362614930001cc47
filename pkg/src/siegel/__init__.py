"""Self-similarity quantities of Siegel disks of P(z) = exp(2 pi i theta) z + z^2."""

__version__ = "0.1.0"

from .cfrac import QuadraticIrrational, alpha, convergents, parse_cf, parse_cf_text  # noqa: E402
from .dynamics import critical_orbit, escape_time, make_params  # noqa: E402
from .errors import SiegelError  # noqa: E402
from .scaling import check_bound, estimate_lambda, modulus_M, spiral_test, torus_inequality, triangle_criterion  # noqa: E402

__all__ = [
    "__version__", "QuadraticIrrational", "alpha", "convergents", "parse_cf", "parse_cf_text",
    "critical_orbit", "escape_time", "make_params", "SiegelError", "check_bound", "estimate_lambda",
    "modulus_M", "spiral_test", "torus_inequality", "triangle_criterion",
]
