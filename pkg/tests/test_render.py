import json

import numpy as np
import pytest

from siegel.cfrac import parse_cf
from siegel.dynamics import OrbitRecord, critical_orbit, escape_time, make_params
from siegel.errors import InvalidConfigError, OutputError
from siegel.geometry import PointCloud, blow_up
from siegel.pipeline import orbit_length
from siegel.render import (BACKGROUND, ESCAPE_PALETTE, FILL, MARK, PALETTE_VERSION, RasterImage, Window,
                           arg_coverage, chi_spread, escape_steps, log_chart, palette_index, parse_resolution,
                           read_ppm, render_blowup_overlay, render_boundary_orbit, render_filled_julia,
                           render_log_chart)
from siegel.scaling import estimate_lambda

GOLDEN = parse_cf([], [1])


@pytest.fixture(scope="module")
def params():
    return make_params(GOLDEN, 128)


@pytest.fixture(scope="module")
def golden_orbit(params):
    return critical_orbit(params, orbit_length(GOLDEN, 50_000, None), verify_limit=0)


def _orbit_with(params, offsets):
    return OrbitRecord(params, 1, [], [], np.asarray(offsets, dtype=complex), 1, 1)


def test_window_validation():
    for w, h in [(0, 1), (1, -1), (float("inf"), 1)]:
        with pytest.raises(InvalidConfigError):
            Window(0j, w, h)
    with pytest.raises(InvalidConfigError):
        Window.parse("1,2,3")
    assert Window.parse("0.5,-1,2,3") == Window(0.5 - 1j, 2.0, 3.0)
    assert parse_resolution("64x32") == (64, 32)
    with pytest.raises(InvalidConfigError):
        parse_resolution("0x4")


def test_pixel_centers_and_mapping():
    win = Window(0j, 4, 2)
    grid = win.pixel_centers(4, 2)
    assert grid[0, 0] == -1.5 + 0.5j
    assert grid[1, 3] == 1.5 - 0.5j
    px, py = win.to_pixels(grid.ravel() - win.center, 4, 2)
    assert list(zip(py, px)) == [(j, i) for j in range(2) for i in range(4)]


def test_palette_properties():
    k = np.arange(1000)
    idx = palette_index(k, 1000)
    assert np.all(np.diff(idx) >= 0)
    assert idx[0] == 0 and idx[-1] <= 255
    assert not np.any(np.all(ESCAPE_PALETTE == np.array(FILL, dtype=np.uint8), axis=1))
    shade = ESCAPE_PALETTE.astype(int).sum(axis=1)
    assert np.all(np.diff(shade) <= 0)


def test_escape_steps_match_scalar(params):
    rng = np.random.default_rng(0)
    z = rng.uniform(-2, 2, 200) + 1j * rng.uniform(-2, 2, 200)
    vec = escape_steps(complex(params.rotation), z, 60)
    lo = make_params(GOLDEN, 53)
    for zi, si in zip(z, vec):
        ref = escape_time(lo, complex(zi), 60)
        assert si == (-1 if ref is None else ref)


def test_far_window_all_escape_at_zero(params):
    img = render_filled_julia(params, Window(10 + 10j, 1, 1), (8, 8), max_iter=50)
    assert np.all(img.pixels == ESCAPE_PALETTE[0])


def test_origin_pixel_is_filled(params):
    img = render_filled_julia(params, Window(0j, 0.5, 0.5), (5, 5), max_iter=200)
    assert tuple(img.pixels[2, 2]) == FILL


def test_filled_julia_deterministic(params, tmp_path):
    win = Window(complex(params.critical_point), 2.4, 2.4)
    a = render_filled_julia(params, win, (48, 40), max_iter=300, threads=1)
    b = render_filled_julia(params, win, (48, 40), max_iter=300, threads=5)
    assert a.to_ppm_bytes() == b.to_ppm_bytes()
    frac = float(a.meta["bounded_fraction"])
    assert 0.05 < frac < 0.95
    assert a.meta["palette"] == PALETTE_VERSION
    for key in ("theta", "window", "resolution", "max_iter", "precision", "artifact_version"):
        assert key in a.meta


def test_ppm_round_trip(params, tmp_path):
    img = render_filled_julia(params, Window(0j, 3, 3), (7, 5), max_iter=20)
    path = img.write_ppm(tmp_path / "x.ppm")
    back = read_ppm(path)
    assert back.meta == json.loads(json.dumps(img.meta))
    assert np.array_equal(back.pixels, img.pixels)
    assert path.read_bytes().split(b"\n")[2] == b"7 5"


def test_png_export(params, tmp_path):
    from PIL import Image
    img = render_filled_julia(params, Window(0j, 3, 3), (6, 6), max_iter=20)
    path = img.write_png(tmp_path / "x.png")
    with Image.open(path) as im:
        assert json.loads(im.text["siegel-meta"]) == json.loads(json.dumps(img.meta))
        assert np.array_equal(np.asarray(im), img.pixels)


def test_unwritable_output(params, tmp_path):
    img = render_filled_julia(params, Window(0j, 3, 3), (2, 2), max_iter=5)
    with pytest.raises(OutputError):
        img.write_ppm(tmp_path / "missing" / "x.ppm")


def test_raster_shape_check():
    with pytest.raises(ValueError):
        RasterImage(2, 2, np.zeros((2, 3, 3), dtype=np.uint8))


def test_boundary_empty_and_single(params):
    w = complex(params.critical_point)
    far = render_boundary_orbit(params, _orbit_with(params, [5 + 5j]), Window(w, 0.1, 0.1), (9, 9))
    assert not far.marked().any()
    one = render_boundary_orbit(params, _orbit_with(params, [0j]), Window(w, 1, 1), (10, 7))
    ys, xs = np.nonzero(one.marked())
    assert list(zip(ys, xs)) == [(3, 5)]


def test_boundary_passes_through_omega(params, golden_orbit):
    # The boundary crosses omega with two branches, one heading into the
    # upper-left quadrant and one into the lower-right.  The other two
    # quadrants stay empty because there is no spiralling.
    d3 = abs(complex(golden_orbit.delta(3)))
    img = render_boundary_orbit(params, golden_orbit, Window(complex(params.critical_point), d3, d3), (64, 64))
    m = img.marked()
    upper_left, upper_right, lower_left, lower_right = m[:32, :32], m[:32, 32:], m[32:, :32], m[32:, 32:]
    assert upper_left.any() and lower_right.any()
    assert not upper_right.any() and not lower_left.any()


def test_log_chart_examples():
    chi, skipped = log_chart(np.array([1, 0.5, 0.25, 0]))
    assert skipped == 1
    assert np.all(chi.imag == 0) and chi[0] == 0
    chi, _ = log_chart(np.array([-1.0 + 0j, -1.0 - 0j]))
    assert np.all(chi.imag == np.pi)


def test_log_chart_image_origin(params):
    img = render_log_chart(params, _orbit_with(params, [1 + 0j]), Window(0j, 2, 2), (8, 8))
    ys, xs = np.nonzero(img.marked())
    assert list(zip(ys, xs)) == [(4, 4)]


def test_arg_coverage():
    assert arg_coverage(np.array([0.0])) == 0
    assert arg_coverage(np.array([-3.0, 3.0])) == pytest.approx(2 * np.pi - 6)
    assert arg_coverage(np.linspace(-np.pi, np.pi, 1000, endpoint=False)) > 6.2


def test_golden_log_chart_spread(params, golden_orbit):
    d2 = abs(complex(golden_orbit.delta(2)))
    img = render_log_chart(params, golden_orbit, Window(-3 + 0j, 8, 7), (64, 64), radius=d2)
    spread = img.meta["im_chi_spread"]
    assert spread == chi_spread(golden_orbit.stream, d2)
    assert spread["margin"] > 0.5


def test_overlay_single_and_identical(params, golden_orbit):
    w = complex(params.critical_point)
    win = Window(w, 0.8, 0.8)
    cloud = PointCloud.from_orbit(golden_orbit)
    single = render_blowup_overlay([cloud], win, (40, 40), params)
    boundary = render_boundary_orbit(params, golden_orbit, win, (40, 40))
    assert np.array_equal(single.marked(), boundary.marked())
    twin = render_blowup_overlay([cloud, PointCloud(cloud.offsets, cloud.origin, 1)], win, (40, 40))
    assert twin.meta["jaccard"] == [1.0]
    assert len({tuple(e["color"]) for e in twin.meta["legend"]}) == 2


def test_overlay_jaccard_recorded(params, golden_orbit):
    est = estimate_lambda(golden_orbit, 1, 1)
    clouds = [PointCloud.from_orbit(golden_orbit)]
    for _ in range(3):
        clouds.append(blow_up(clouds[-1], est.lambda_est, 1))
    r = 2 * abs(complex(golden_orbit.delta(1))) / abs(complex(est.lambda_est))
    img = render_blowup_overlay(clouds, Window(complex(params.critical_point), r, r), (96, 96), params)
    jac = img.meta["jaccard"]
    assert len(jac) == 3 and all(0 < j <= 1 for j in jac)
    assert jac[-1] > jac[0]
