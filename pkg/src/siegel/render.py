"""Deterministic raster figures: filled Julia sets, orbit plots, log charts, blow-up overlays.

Canonical output is binary PPM (P6).  The header carries one comment line with
the regeneration metadata as compact, key-sorted JSON::

    P6
    # {"kind": "filled-julia", ...}
    <width> <height>
    255
    <RGB bytes, row-major, top row first>

Pixel (i, j) samples the window at its centre; row 0 is the top edge.  Points
map to pixels by flooring the affine transform, so the window centre lands on
(width // 2, height // 2).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dynamics import OrbitRecord, PolynomialParams
from .errors import InvalidConfigError, OutputError
from .geometry import PointCloud

PALETTE_VERSION = "palette-v1"
FILL = (0, 0, 0)
BACKGROUND = (255, 255, 255)
MARK = (0, 0, 0)
# escape shades keep blue at 255, so none can equal FILL
ESCAPE_PALETTE = np.array([(255 - i // 2, 255 - i, 255) for i in range(256)], dtype=np.uint8)
LEVEL_PALETTE = np.array([
    (0, 0, 0), (220, 20, 60), (30, 144, 255), (34, 139, 34),
    (255, 140, 0), (148, 0, 211), (0, 206, 209), (139, 69, 19),
], dtype=np.uint8)


@dataclass(frozen=True)
class Window:
    center: complex
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0) or not all(
                math.isfinite(v) for v in (self.width, self.height, self.center.real, self.center.imag)):
            raise InvalidConfigError(f"window needs finite positive width/height, got {self.width}x{self.height}")

    @classmethod
    def parse(cls, text: str) -> "Window":
        try:
            cx, cy, w, h = (float(v) for v in text.split(","))
        except ValueError:
            raise InvalidConfigError(f"window must be cx,cy,w,h; got {text!r}") from None
        return cls(complex(cx, cy), w, h)

    def meta(self) -> dict:
        return {"center": [repr(self.center.real), repr(self.center.imag)],
                "width": repr(self.width), "height": repr(self.height)}

    def pixel_centers(self, width_px: int, height_px: int) -> np.ndarray:
        left = self.center.real - self.width / 2
        top = self.center.imag + self.height / 2
        xs = left + (np.arange(width_px) + 0.5) * (self.width / width_px)
        ys = top - (np.arange(height_px) + 0.5) * (self.height / height_px)
        return xs[None, :] + 1j * ys[:, None]

    def to_pixels(self, rel: np.ndarray, width_px: int, height_px: int):
        """Pixel indices of points given relative to the window centre; off-window points dropped."""
        px = np.floor((rel.real + self.width / 2) / self.width * width_px)
        py = np.floor((self.height / 2 - rel.imag) / self.height * height_px)
        ok = (px >= 0) & (px < width_px) & (py >= 0) & (py < height_px)
        return px[ok].astype(np.int64), py[ok].astype(np.int64)


def _check_resolution(resolution) -> tuple[int, int]:
    w, h = (int(v) for v in resolution)
    if w < 1 or h < 1:
        raise InvalidConfigError(f"resolution must be at least 1x1, got {w}x{h}")
    return w, h


def parse_resolution(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return _check_resolution((int(w), int(h)))
    except ValueError:
        raise InvalidConfigError(f"resolution must look like 640x480, got {text!r}") from None


@dataclass
class RasterImage:
    width_px: int
    height_px: int
    pixels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.pixels.shape != (self.height_px, self.width_px, 3) or self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be a (height, width, 3) uint8 array")

    def to_ppm_bytes(self) -> bytes:
        comment = json.dumps(self.meta, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        header = f"P6\n# {comment}\n{self.width_px} {self.height_px}\n255\n".encode("ascii")
        return header + np.ascontiguousarray(self.pixels).tobytes()

    def write_ppm(self, path) -> Path:
        return _atomic_write(Path(path), self.to_ppm_bytes())

    def write_png(self, path) -> Path:
        """PNG export with the metadata in a ``siegel-meta`` text chunk (needs Pillow)."""
        from PIL import Image
        from PIL.PngImagePlugin import PngInfo

        info = PngInfo()
        info.add_text("siegel-meta", json.dumps(self.meta, sort_keys=True, separators=(",", ":")))
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        try:
            Image.fromarray(self.pixels, "RGB").save(tmp, format="PNG", pnginfo=info)
            os.replace(tmp, path)
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
        return path

    def marked(self, color=None) -> np.ndarray:
        """Boolean mask of pixels differing from the background (or equal to ``color``)."""
        if color is None:
            return np.any(self.pixels != np.array(BACKGROUND, dtype=np.uint8), axis=2)
        return np.all(self.pixels == np.array(color, dtype=np.uint8), axis=2)


def _atomic_write(path: Path, data: bytes) -> Path:
    try:
        fd, tmp = tempfile.mkstemp(prefix=path.name + ".", dir=path.parent or ".")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_ppm(path) -> RasterImage:
    data = Path(path).read_bytes()
    if not data.startswith(b"P6\n"):
        raise ValueError("not a P6 file")
    pos = 3
    meta: dict = {}
    tokens: list[int] = []
    while len(tokens) < 3:
        nl = data.index(b"\n", pos)
        line = data[pos:nl]
        pos = nl + 1
        if line.startswith(b"#"):
            meta = json.loads(line[1:].decode("ascii"))
        else:
            tokens.extend(int(t) for t in line.split())
    w, h, _ = tokens
    pixels = np.frombuffer(data[pos:pos + 3 * w * h], dtype=np.uint8).reshape(h, w, 3).copy()
    return RasterImage(w, h, pixels, meta)


def _base_meta(kind: str, params: PolynomialParams | None, window: Window, resolution) -> dict:
    meta = {
        "kind": kind,
        "window": window.meta(),
        "resolution": [int(resolution[0]), int(resolution[1])],
        "palette": PALETTE_VERSION,
        "artifact_version": __version__,
    }
    if params is not None:
        meta["theta"] = params.cf_text
        meta["precision"] = params.precision_bits
    return meta


# -- filled Julia set -------------------------------------------------------------


def escape_steps(rotation: complex, z0: np.ndarray, max_iter: int, escape_radius: float = 2.0) -> np.ndarray:
    """Vectorised complex128 escape time, same convention as :func:`siegel.dynamics.escape_time`.

    Returns the escape step per point, -1 where bounded.
    """
    z0 = np.asarray(z0, dtype=np.complex128)
    flat = z0.ravel().copy()
    steps = np.full(flat.shape, -1, dtype=np.int64)
    idx = np.arange(flat.size)
    z = flat
    r2 = float(escape_radius) ** 2
    for k in range(max_iter):
        out = (z.real * z.real + z.imag * z.imag) > r2
        if out.any():
            steps[idx[out]] = k
            keep = ~out
            idx, z = idx[keep], z[keep]
            if idx.size == 0:
                break
        z = z * (rotation + z)
    return steps.reshape(z0.shape)


def palette_index(steps: np.ndarray, max_iter: int) -> np.ndarray:
    """Monotone map of escape step k in [0, max_iter) to 0..255 (integer arithmetic)."""
    k = np.asarray(steps, dtype=np.int64)
    scaled = (k * 65536) // max_iter
    return np.floor(np.sqrt(scaled.astype(np.float64))).astype(np.int64).clip(0, 255)


def render_filled_julia(params: PolynomialParams, window: Window, resolution=(256, 256),
                        max_iter: int = 10_000, escape_radius: float = 2.0,
                        threads: int = 1) -> RasterImage:
    """Escape-time picture; bounded pixels get FILL, escaped ones an ESCAPE_PALETTE shade."""
    w, h = _check_resolution(resolution)
    if max_iter < 1:
        raise InvalidConfigError("max_iter must be >= 1")
    rot = complex(params.rotation)
    grid = window.pixel_centers(w, h)
    steps = np.empty((h, w), dtype=np.int64)
    bands = np.array_split(np.arange(h), max(1, min(threads, h)))

    def work(rows):
        if rows.size:
            steps[rows] = escape_steps(rot, grid[rows], max_iter, escape_radius)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bands))
    else:
        for rows in bands:
            work(rows)

    pixels = np.empty((h, w, 3), dtype=np.uint8)
    bounded = steps < 0
    pixels[bounded] = FILL
    pixels[~bounded] = ESCAPE_PALETTE[palette_index(steps[~bounded], max_iter)]
    meta = _base_meta("filled-julia", params, window, (w, h))
    meta.update(max_iter=max_iter, escape_radius=repr(float(escape_radius)),
                bounded_fraction=repr(float(bounded.mean())))
    return RasterImage(w, h, pixels, meta)


# -- orbit plots --------------------------------------------------------------------


def _blank(w: int, h: int) -> np.ndarray:
    pixels = np.empty((h, w, 3), dtype=np.uint8)
    pixels[:] = BACKGROUND
    return pixels


def _plot_offsets(pixels, offsets, origin: complex, window: Window, color) -> int:
    h, w = pixels.shape[:2]
    rel = offsets - (window.center - origin)
    px, py = window.to_pixels(rel, w, h)
    pixels[py, px] = color
    return int(px.size)


def render_boundary_orbit(params: PolynomialParams, orbit: OrbitRecord, window: Window,
                          resolution=(256, 256)) -> RasterImage:
    """Mark every pixel hit by a critical-orbit sample."""
    w, h = _check_resolution(resolution)
    pixels = _blank(w, h)
    plotted = _plot_offsets(pixels, orbit.stream, complex(params.critical_point), window, MARK)
    meta = _base_meta("boundary", params, window, (w, h))
    meta.update(max_index=orbit.max_index, stream_stride=orbit.stream_stride, samples_plotted=plotted)
    return RasterImage(w, h, pixels, meta)


def log_chart(offsets: np.ndarray):
    """chi = log(z - omega) with Im chi in (-pi, pi]; zero offsets are dropped.

    Returns (chi values, number skipped).
    """
    offsets = np.asarray(offsets, dtype=np.complex128)
    nz = offsets != 0
    u = offsets[nz]
    ang = np.angle(u)
    ang = np.where(ang <= -np.pi, np.pi, ang)
    return np.log(np.abs(u)) + 1j * ang, int((~nz).sum())


def arg_coverage(angles: np.ndarray) -> float:
    """Length of the smallest arc of the circle containing all angles (2 pi minus the largest gap)."""
    a = np.sort(np.mod(np.asarray(angles, dtype=float), 2 * np.pi))
    if a.size == 0:
        return 0.0
    gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
    return float(2 * np.pi - gaps.max())


def chi_spread(offsets: np.ndarray, radius: float | None = None) -> dict:
    """Im chi statistics for samples with |z - omega| <= radius."""
    offsets = np.asarray(offsets, dtype=np.complex128)
    if radius is not None:
        offsets = offsets[np.abs(offsets) <= radius]
    chi, skipped = log_chart(offsets)
    im = chi.imag
    occupied = arg_coverage(im)
    return {
        "count": int(im.size),
        "skipped_at_origin": skipped,
        "im_min": float(im.min()) if im.size else None,
        "im_max": float(im.max()) if im.size else None,
        "occupied": occupied,
        "margin": float(2 * np.pi - occupied),
        "radius": None if radius is None else float(radius),
    }


def render_log_chart(params: PolynomialParams, orbit: OrbitRecord, band_window: Window,
                     resolution=(256, 256), radius: float | None = None) -> RasterImage:
    """Orbit samples pushed through chi(z) = log(z - omega), principal branch.

    No unwrapping along the orbit (orbit order is not boundary order).
    ``radius`` restricts the samples used for the Im chi spread in the metadata.
    """
    w, h = _check_resolution(resolution)
    chi, skipped = log_chart(orbit.stream)
    pixels = _blank(w, h)
    plotted = _plot_offsets(pixels, chi, 0j, band_window, MARK)
    meta = _base_meta("log-chart", params, band_window, (w, h))
    meta.update(max_index=orbit.max_index, samples_plotted=plotted, skipped_at_origin=skipped,
                im_chi_spread=chi_spread(orbit.stream, radius))
    return RasterImage(w, h, pixels, meta)


def render_blowup_overlay(clouds: Sequence[PointCloud], window: Window,
                          resolution=(256, 256), params: PolynomialParams | None = None) -> RasterImage:
    """Each cloud in its own LEVEL_PALETTE colour; later clouds paint over earlier ones."""
    if not clouds:
        raise InvalidConfigError("need at least one cloud")
    w, h = _check_resolution(resolution)
    pixels = _blank(w, h)
    masks = []
    legend = []
    for i, cloud in enumerate(clouds):
        color = LEVEL_PALETTE[i % len(LEVEL_PALETTE)]
        mask = np.zeros((h, w), dtype=bool)
        rel = cloud.offsets - (window.center - cloud.origin)
        px, py = window.to_pixels(rel, w, h)
        mask[py, px] = True
        pixels[mask] = color
        masks.append(mask)
        legend.append({"level": cloud.level, "palette_index": i % len(LEVEL_PALETTE),
                       "color": [int(c) for c in color], "pixels": int(mask.sum())})
    jaccard = []
    for a, b in zip(masks, masks[1:]):
        union = np.logical_or(a, b).sum()
        jaccard.append(float(np.logical_and(a, b).sum() / union) if union else 1.0)
    meta = _base_meta("blowup-overlay", params, window, (w, h))
    meta.update(legend=legend, jaccard=jaccard)
    return RasterImage(w, h, pixels, meta)
