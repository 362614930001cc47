"""Blow-ups of boundary samples about the critical point and their Hausdorff decay.

Clouds are stored as complex128 offsets from the origin omega: after k blow-ups
a point sits at omega + offset.  Offsets come from the orbit stream, which is
already ``z - omega`` computed at full precision, so no cancellation is lost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Union

import numpy as np
from scipy.spatial import cKDTree

from .dynamics import OrbitRecord, hp, read_orbit_dump, write_orbit_dump
from .errors import InsufficientSamplesError
from .scaling import Outcome, Verdict

DEFAULT_MIN_SAMPLES = 64
DEFAULT_RESIDUAL_CAP = 0.5
DEFAULT_MAX_POINTS = 100_000
_CHUNK = 2048


@dataclass
class PointCloud:
    offsets: np.ndarray
    origin: complex
    level: int = 0

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.complex128).ravel()
        if self.offsets.size == 0:
            raise ValueError("point cloud must be nonempty")
        if not np.all(np.isfinite(self.offsets)):
            raise ValueError("point cloud has non-finite coordinates")

    @property
    def points(self) -> np.ndarray:
        return self.origin + self.offsets

    def __len__(self):
        return self.offsets.size

    def within(self, radius: float) -> "PointCloud":
        keep = self.offsets[np.abs(self.offsets) <= radius]
        return PointCloud(keep, self.origin, self.level)

    @classmethod
    def from_orbit(cls, orbit: OrbitRecord) -> "PointCloud":
        return cls(orbit.stream, complex(orbit.origin), 0)


def spherical_dist(x, y, origin) -> float:
    """min(|x - y|, 1/|x - origin| + 1/|y - origin|).

    Upper-bound proxy for the spherical distance with the pole moved to
    ``origin``.  A point at the origin makes the second term infinite.
    """
    x, y, origin = complex(x), complex(y), complex(origin)
    direct = abs(x - y)
    rx, ry = abs(x - origin), abs(y - origin)
    if rx == 0 or ry == 0:
        return direct
    return min(direct, 1.0 / rx + 1.0 / ry)


def _inv_radius(u: np.ndarray) -> np.ndarray:
    r = np.abs(u)
    with np.errstate(divide="ignore"):
        return np.where(r > 0, 1.0 / r, np.inf)


def _directed_brute(src: np.ndarray, dst: np.ndarray) -> float:
    """sup over src of inf over dst of the proxy distance (offset coordinates)."""
    inv_dst = _inv_radius(dst)
    inv_src = _inv_radius(src)
    worst = 0.0
    for i in range(0, src.size, _CHUNK):
        s = src[i:i + _CHUNK, None]
        direct = np.abs(s - dst[None, :])
        d = np.minimum(direct, inv_src[i:i + _CHUNK, None] + inv_dst[None, :])
        worst = max(worst, float(d.min(axis=1).max()))
    return worst


def _xy(u: np.ndarray) -> np.ndarray:
    return np.column_stack([u.real, u.imag])


def _directed_tree(src: np.ndarray, dst: np.ndarray, decimate: int = 32, batch: int = 256) -> float:
    """Exact directed distance with pruning.

    inf_y min(a(y), b(y)) = min(inf_y a, inf_y b), and the far term is
    minimised by the dst point farthest from the origin.  A tree on every
    ``decimate``-th dst point gives cheap upper bounds; exact nearest-neighbour
    queries then run in decreasing bound order until no remaining bound can
    beat the running maximum.  Far-away nearest neighbours make k-d queries
    slow on curve-like clouds, hence the pruning.
    """
    far = _inv_radius(src) + float(_inv_radius(dst).min())
    coarse = dst[::decimate]
    _, cidx = cKDTree(_xy(coarse)).query(_xy(src), k=1)
    upper = np.minimum(np.abs(src - coarse[cidx]), far)
    order = np.argsort(-upper, kind="stable")
    tree = cKDTree(_xy(dst))
    best = -np.inf
    for start in range(0, order.size, batch):
        chunk = order[start:start + batch]
        if upper[chunk[0]] <= best:
            break
        _, idx = tree.query(_xy(src[chunk]), k=1)
        exact = np.minimum(np.abs(src[chunk] - dst[idx]), far[chunk])
        best = max(best, float(exact.max()))
    return float(best)


def hausdorff(a: PointCloud, b: PointCloud, *, window: float | None = None,
              method: str = "tree") -> float:
    """Hausdorff distance under :func:`spherical_dist` between two finite clouds.

    With ``window`` set, only source points with |z - omega| <= window enter the
    sup of each directed distance while the inf still ranges over the whole
    other cloud, which keeps the window edge from creating spurious gaps.
    ``method`` is "tree" (k-d tree on the Euclidean term) or "brute".
    """
    if a.origin != b.origin:
        raise ValueError("clouds must share the origin")
    directed = {"tree": _directed_tree, "brute": _directed_brute}[method]
    sa, sb = a.offsets, b.offsets
    if window is not None:
        sa, sb = sa[np.abs(sa) <= window], sb[np.abs(sb) <= window]
    out = 0.0
    if sa.size:
        out = max(out, directed(sa, b.offsets))
    if sb.size:
        out = max(out, directed(sb, a.offsets))
    return out


def _inverse_step(u: np.ndarray, lam: complex, s: int) -> np.ndarray:
    return u / lam if s % 2 == 0 else np.conj(u / lam)


def _forward_step(u: np.ndarray, lam: complex, s: int) -> np.ndarray:
    return lam * u if s % 2 == 0 else lam * np.conj(u)


def blow_up(cloud: PointCloud, lambda_est, s: int, steps: int = 1) -> PointCloud:
    """Apply the inverse scaling map ``steps`` times.

    The scaling map is z -> omega + lambda (z - omega) for even s and
    z -> omega + lambda conj(z - omega) for odd s.
    """
    lam = complex(lambda_est)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    u = cloud.offsets
    for _ in range(steps):
        u = _inverse_step(u, lam, s)
    return PointCloud(u, cloud.origin, cloud.level + steps)


def scale(cloud: PointCloud, lambda_est, s: int, steps: int = 1) -> PointCloud:
    """Forward scaling map, the inverse of :func:`blow_up`."""
    lam = complex(lambda_est)
    u = cloud.offsets
    for _ in range(steps):
        u = _forward_step(u, lam, s)
    return PointCloud(u, cloud.origin, cloud.level - steps)


@dataclass
class DecayFit:
    distances: list[tuple[int, float]]
    slope: float | None
    intercept: float | None
    residual: float | None
    decay_ok: Verdict
    window: float
    samples_per_level: list[int] = field(default_factory=list)
    lambda_err: float = 0.0
    residual_cap: float = DEFAULT_RESIDUAL_CAP
    metric_note: str = "proxy min(|x-y|, 1/|x-w|+1/|y-w|); triangle inequality not guaranteed"


def fit_decay(distances: list[tuple[int, float]], residual_cap: float = DEFAULT_RESIDUAL_CAP):
    """Least-squares line through (n, log d); residual is the RMS misfit in log d."""
    if len(distances) < 2:
        return None, None, None, Verdict(Outcome.INCONCLUSIVE, None, "fewer than two distances")
    n = np.array([k for k, _ in distances], dtype=float)
    d = np.array([v for _, v in distances], dtype=float)
    if np.any(d <= 0):
        return None, None, None, Verdict(Outcome.INCONCLUSIVE, None, "zero distance in fit")
    y = np.log(d)
    slope, intercept = np.polyfit(n, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * n + intercept)) ** 2)))
    if slope < 0 and resid < residual_cap:
        verdict = Verdict(Outcome.TRUE, float(slope))
    elif slope >= 0 and resid < residual_cap:
        verdict = Verdict(Outcome.FALSE, float(slope), "no geometric decay")
    else:
        verdict = Verdict(Outcome.INCONCLUSIVE, float(slope), "log-linear fit residual above cap")
    return float(slope), float(intercept), resid, verdict


def decay_experiment(orbit: OrbitRecord, lambda_est, s: int, max_level: int, *,
                     N: int = 1, window: float | None = None, lambda_err: float = 0.0,
                     min_samples: int = DEFAULT_MIN_SAMPLES,
                     residual_cap: float = DEFAULT_RESIDUAL_CAP,
                     max_points: int | None = DEFAULT_MAX_POINTS) -> DecayFit:
    """d_H(S_n, S_{n+1}) for n < max_level, S_n the n-fold blow-up of the orbit.

    Distances are measured inside |z - omega| <= window; the default window is
    |delta_N| / |lambda|.  Streams longer than ``max_points`` are thinned by a
    uniform stride first (None keeps everything).
    """
    lam = complex(lambda_est)
    if window is None:
        window = float(abs(orbit.delta(N))) / abs(lam)
    base = PointCloud.from_orbit(orbit)
    if max_points is not None and len(base) > max_points:
        stride = -(-len(base) // max_points)
        base = PointCloud(base.offsets[::stride], base.origin, 0)
    if max_level <= 0:
        _, _, _, verdict = fit_decay([], residual_cap)
        return DecayFit([], None, None, None, verdict, window, [int(np.sum(np.abs(base.offsets) <= window))],
                        lambda_err, residual_cap)
    clouds = [base]
    for _ in range(max_level):
        clouds.append(blow_up(clouds[-1], lam, s, 1))
    counts = [int(np.sum(np.abs(c.offsets) <= window)) for c in clouds]
    if counts[-1] < min_samples:
        raise InsufficientSamplesError(
            f"only {counts[-1]} samples inside the window at level {max_level} (need {min_samples})")
    distances = [(n, hausdorff(clouds[n], clouds[n + 1], window=window)) for n in range(max_level)]
    slope, intercept, resid, verdict = fit_decay(distances, residual_cap)
    return DecayFit(distances, slope, intercept, resid, verdict, window, counts, lambda_err, residual_cap)


# -- text import / export (orbit dump format) ----------------------------------


def export_cloud(cloud: PointCloud, dest: Union[str, Path, IO[str]], theta: str = "") -> None:
    pts = [(k, complex(z)) for k, z in enumerate(cloud.points)]
    write_orbit_dump(dest, pts, theta=theta, precision_bits=53, origin=cloud.origin)


def import_cloud(src: Union[str, Path, IO[str]], level: int = 0) -> PointCloud:
    header, points = read_orbit_dump(src)
    origin = header.get("origin", hp(0, 53))
    offsets = [complex(z - origin) for _, z in points]
    return PointCloud(np.asarray(offsets), complex(origin), level)
