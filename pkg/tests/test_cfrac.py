from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siegel.cfrac import (alpha, alpha_from_identity, canonical_digits, convergents, convergents_upto,
                          denominator, expand_surd, nearest_frac, parse_cf, parse_cf_text,
                          verify_rotation_identity)
from siegel.errors import CFParseError, InsufficientPrecisionError, InvalidDigitError, NotQuadraticError
from siegel.surd import Surd

GOLDEN = (Surd.sqrt(5) - 1) / 2

digit_lists = st.lists(st.integers(1, 40), max_size=4)
periods = st.lists(st.integers(1, 40), min_size=1, max_size=4)


def finite_cf(digits) -> Fraction:
    """Exact value of [a1, ..., an] evaluated from the bottom up."""
    x = Fraction(0)
    for a in reversed(digits):
        x = 1 / (a + x)
    return x


@pytest.mark.parametrize("pre,per,expected", [
    ((), (1,), GOLDEN),
    ((), (2,), Surd.sqrt(2) - 1),
    ((), (23,), (Surd.sqrt(533) - 23) / 2),
    ((), (24,), (Surd.sqrt(580) - 24) / 2),
])
def test_parse_cf_values(pre, per, expected):
    assert parse_cf(pre, per).surd == expected


def test_surd_string_form():
    assert str(parse_cf([], [1]).surd) == "(-1+sqrt(5))/2"
    assert str(parse_cf([], [23]).surd) == "(-23+sqrt(533))/2"


@pytest.mark.parametrize("pre,per,exc", [((), (), NotQuadraticError), ((0,), (1,), InvalidDigitError),
                                         ((), (1, -2), InvalidDigitError)])
def test_parse_cf_errors(pre, per, exc):
    with pytest.raises(exc):
        parse_cf(pre, per)


def test_canonical_digits():
    assert canonical_digits((), (1, 1)) == ((), (1,))
    assert canonical_digits((2,), (1, 2)) == ((), (2, 1))
    assert canonical_digits((3, 3), (3,)) == ((), (3,))
    assert canonical_digits((1, 2), (3,)) == ((1, 2), (3,))


@pytest.mark.parametrize("text,pre,per", [
    ("[;1]", (), (1,)), (" [ 1 , 2 ; 3 ] ", (1, 2), (3,)), ("[;2,1]", (), (2, 1)), ("[5;50,50,1]", (5,), (50, 50, 1)),
])
def test_parse_cf_text(text, pre, per):
    th = parse_cf_text(text)
    assert (th.preperiod, th.period) == (pre, per)


@pytest.mark.parametrize("text,offset", [
    ("", 0), ("(;1]", 0), ("[1]", 2), ("[;]", 2), ("[;1", 3), ("[;1]x", 4), ("[;1,]", 4), ("[;0]", 2),
    ("[é;1]", 1),
])
def test_parse_cf_text_offsets(text, offset):
    with pytest.raises(CFParseError) as info:
        parse_cf_text(text)
    assert info.value.offset == offset


def test_cf_text_round_trip():
    th = parse_cf_text("[1,2;3]")
    assert parse_cf_text(th.cf_text) == th
    assert th.N == 3 and th.s == 1


def test_convergents_golden():
    conv = convergents(parse_cf([], [1]), 5)
    assert [(c.p, c.q) for c in conv] == [(1, 1), (1, 2), (2, 3), (3, 5), (5, 8)]


def test_convergents_silver():
    conv = convergents(parse_cf([], [2]), 3)
    assert [c.value for c in conv] == [Fraction(1, 2), Fraction(2, 5), Fraction(5, 12)]


@settings(max_examples=60, deadline=None)
@given(digit_lists, periods)
def test_convergents_match_truncated_cf(pre, per):
    th = parse_cf(pre, per)
    conv = convergents(th, 12)
    digits = [th.digit(i) for i in range(1, 13)]
    assert conv[0].value == Fraction(1, digits[0])
    for c in conv:
        assert c.value == finite_cf(digits[:c.n])
        assert Fraction(c.p, c.q).denominator == c.q
        # |theta - p/q| < 1/q^2
        assert abs(th.surd - c.value) < Fraction(1, c.q * c.q)
    qs = [c.q for c in conv]
    assert all(b > a for a, b in zip(qs[1:], qs[2:]))
    gaps = [abs(c.q * th.surd - c.p) for c in conv]
    assert all(b < a for a, b in zip(gaps[1:], gaps[2:]))


def test_convergents_upto_and_denominator():
    th = parse_cf([], [1])
    assert [c.q for c in convergents_upto(th, 100)][-1] == 89
    assert denominator(th, 0) == 1
    assert denominator(th, 12) == 233


@settings(max_examples=60, deadline=None)
@given(digit_lists, periods)
def test_expand_round_trip(pre, per):
    th = parse_cf(pre, per)
    assert expand_surd(th.surd) == (th.preperiod, th.period)
    assert 0 < th.surd < 1


def test_expand_rejects_rational():
    with pytest.raises(NotQuadraticError):
        expand_surd(Surd(Fraction(1, 3)))


@pytest.mark.parametrize("pre,per,expected", [
    ((), (1,), GOLDEN), ((), (23,), (Surd.sqrt(533) - 23) / 2), ((), (7,), parse_cf([], [7]).surd),
])
def test_alpha_examples(pre, per, expected):
    assert alpha(parse_cf(pre, per)).alpha == expected


@settings(max_examples=60, deadline=None)
@given(digit_lists, periods)
def test_alpha_two_formulas_agree(pre, per):
    th = parse_cf(pre, per)
    a = alpha(th)
    assert 0 < a.alpha < 1
    assert a.alpha == alpha_from_identity(th)


def test_tails():
    th = parse_cf([1, 2], [3])
    assert th.tail(1) == th.surd
    assert th.tail(2) == 1 / (2 + th.tail(3))
    assert th.tail(3) == th.tail(4) == parse_cf([], [3]).surd


def test_nearest_frac():
    assert nearest_frac(0.25) == 0.25
    assert nearest_frac(1.5) == 0.5
    assert nearest_frac(Fraction(-1, 2)) == Fraction(1, 2)
    assert nearest_frac(gmpy2.mpfr("2.75")) == gmpy2.mpfr("-0.25")
    g = GOLDEN
    f1, f2 = nearest_frac(g), nearest_frac(2 * g)
    assert abs(float(f1) + 0.381966) < 1e-6
    assert abs(float(f2) - 0.236068) < 1e-6
    assert f2 == -g * f1


def test_identity_exact_examples():
    for pre, per, ns in [((), (2,), range(1, 11)), ((1, 2), (3,), range(2, 9))]:
        res = verify_rotation_identity(parse_cf(pre, per), ns)
        assert all(r == 0 for _, r in res)


def test_identity_below_N_reports_nonzero_residual():
    th = parse_cf([5, 1, 4], [2, 3])
    assert th.N == 4
    res = dict(verify_rotation_identity(th, range(1, 9)))
    assert all(res[n] == 0 for n in range(4, 9))
    assert res[1] != 0
    with pytest.raises(ValueError):
        verify_rotation_identity(th, [0])


def test_identity_floating():
    th = parse_cf([], [1])
    res = verify_rotation_identity(th, range(1, 11), precision_bits=128)
    assert all(r < gmpy2.mpfr(2) ** -(128 - 40) for _, r in res)


def test_identity_floating_refuses_unresolvable():
    with pytest.raises(InsufficientPrecisionError):
        verify_rotation_identity(parse_cf([], [1]), range(1, 80), precision_bits=128)
