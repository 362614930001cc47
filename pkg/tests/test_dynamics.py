import io
from fractions import Fraction

import gmpy2
import mpmath
import numpy as np
import pytest
from gmpy2 import mpc, mpfr

from siegel import dynamics
from siegel.cfrac import convergents, parse_cf, parse_cf_text
from siegel.dynamics import (critical_orbit, dump_orbit, escape_time, hp, iterate, make_params, precision_ladder,
                             read_orbit_dump, write_orbit_dump)
from siegel.errors import DivergenceError, InvalidConfigError, PrecisionExhaustedError

GOLDEN = parse_cf([], [1])
SILVER = parse_cf([], [2])


def test_quarter_turn_hook():
    params = make_params(Fraction(1, 4), 128)
    w = params.critical_point
    assert abs(w.real) < 2 ** -120
    assert abs(w.imag + mpfr("0.5")) < 2 ** -120


def test_golden_omega_against_mpmath():
    mpmath.mp.prec = 200
    theta = (mpmath.sqrt(5) - 1) / 2
    expected = -mpmath.exp(2j * mpmath.pi * theta) / 2
    params = make_params(GOLDEN, 53)
    w = complex(params.critical_point)
    assert abs(w - complex(expected)) < 1e-15
    # the six-digit value quoted for this example is off in the 5th digit
    assert abs(w - complex(0.368744, 0.337732)) < 1e-4
    assert abs(w - complex(0.3686844, 0.3377451)) < 1e-7
    hi = make_params(GOLDEN, 192).critical_point
    assert abs(mpmath.mpc(str(hi.real), str(hi.imag)) - expected) < mpmath.mpf(2) ** -185


@pytest.mark.parametrize("cf", ["[;1]", "[;2]", "[3;1,4]", "[;24]"])
def test_params_invariants(cf):
    P = 160
    params = make_params(parse_cf_text(cf), P)
    with gmpy2.context(precision=P):
        assert abs(abs(params.rotation) - 1) < mpfr(2) ** -(P - 4)
        assert abs(abs(params.critical_point) - mpfr("0.5")) < mpfr(2) ** -(P - 4)
        assert params.critical_point == -params.rotation / 2


def test_low_precision_rejected():
    with pytest.raises(InvalidConfigError):
        make_params(GOLDEN, 32)


def test_iterate_fixed_point_and_first_step():
    params = make_params(GOLDEN, 128)
    assert iterate(params, 0, 50) == 0
    w = params.critical_point
    with gmpy2.context(precision=128):
        expected = -params.rotation ** 2 / 4
        assert abs(iterate(params, w, 1) - expected) < mpfr(2) ** -120
    assert iterate(params, w, 0) == w


def test_iterate_divergence():
    params = make_params(GOLDEN, 64)
    with pytest.raises(DivergenceError) as info:
        iterate(params, 1e100, 40)
    assert info.value.index > 1


def test_escape_time_examples():
    params = make_params(GOLDEN, 64)
    assert escape_time(params, 0, 100) is None
    assert escape_time(params, 10, 100) == 0
    assert escape_time(params, 1.9, 100) >= 1
    with pytest.raises(ValueError):
        escape_time(params, 0, 10, escape_radius=1.5)


def test_escape_time_omega_bounded():
    params = make_params(GOLDEN, 64)
    assert escape_time(params, params.critical_point, 100_000) is None


def test_golden_closest_returns_fibonacci():
    orbit = critical_orbit(make_params(GOLDEN), 89)
    assert [cr.q for cr in orbit.closest_returns] == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    assert orbit.records == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    assert orbit.returns_verified


def test_silver_closest_returns():
    orbit = critical_orbit(make_params(SILVER), 169)
    assert [cr.q for cr in orbit.closest_returns] == [2, 5, 12, 29, 70, 169]
    assert orbit.records == [1, 2, 5, 12, 29, 70, 169]


def test_first_return_is_minimum_before_q1():
    params = make_params(parse_cf_text("[;5]"), 128)
    orbit = critical_orbit(params, 5)
    w = params.critical_point
    d1 = abs(orbit.delta(1))
    z = w
    for _ in range(5):
        z = params(z)
        assert d1 <= abs(z - w)


def test_golden_deltas_strictly_decrease():
    q15 = convergents(GOLDEN, 15)[-1].q
    orbit = critical_orbit(make_params(GOLDEN), q15)
    d = [abs(orbit.delta(n)) for n in range(1, 16)]
    assert all(b < a for a, b in zip(d, d[1:]))
    # iterate() reaches the same point as the streaming orbit
    with gmpy2.context(precision=orbit.params.precision_bits):
        assert iterate(orbit.params, orbit.origin, q15) - orbit.origin == orbit.delta(15)


def test_orbit_stays_bounded_and_is_deterministic():
    params = make_params(parse_cf_text("[;2,1]"), 128)
    a = critical_orbit(params, 5000)
    b = critical_orbit(params, 5000)
    assert np.array_equal(a.stream, b.stream)
    assert [cr.delta for cr in a.closest_returns] == [cr.delta for cr in b.closest_returns]
    assert np.all(np.abs(a.stream + complex(a.origin)) <= 2)


def test_stream_stride_limit():
    orbit = critical_orbit(make_params(GOLDEN, 64), 10_000, stream_limit=1000)
    assert orbit.stream.size <= 1001
    assert orbit.stream_stride == 11


def test_precision_exhaustion(monkeypatch):
    # with 45 guard bits the floor at 53 bits is 2^-8, reached after a few returns
    monkeypatch.setattr(dynamics, "EXHAUSTION_GUARD_BITS", 45)
    with pytest.raises(PrecisionExhaustedError):
        critical_orbit(make_params(GOLDEN, 53), 10_000)


def test_precision_ladder_reliable():
    lad = precision_ladder(GOLDEN, 10_000, 128)
    assert lad.reliable
    assert lad.max_rel_change < 2 ** -40


def test_orbit_dump_round_trip(tmp_path):
    orbit = critical_orbit(make_params(GOLDEN, 200), 500)
    path = tmp_path / "orbit.txt"
    dump_orbit(orbit, path)
    header, points = read_orbit_dump(path)
    assert header["precision"] == 200
    assert header["theta"] == "[;1]"
    assert header["origin"] == orbit.origin
    assert points == orbit.samples


def test_orbit_dump_stream_objects():
    buf = io.StringIO()
    write_orbit_dump(buf, [(0, hp(0.5 + 0.25j, 64))], theta="t", precision_bits=64, origin=0j)
    text = buf.getvalue()
    assert text.splitlines()[0] == "# siegel-orbit v1"
    assert text.splitlines()[-1].split()[0] == "0"
    header, points = read_orbit_dump(io.StringIO(text))
    assert points == [(0, mpc("0.5+0.25j", precision=64))]
