import math
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siegel.surd import Surd, squarefree_decompose

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=40)


@pytest.mark.parametrize("n,expected", [(1, (1, 1)), (8, (2, 2)), (580, (2, 145)), (533, (1, 533)), (72, (6, 2))])
def test_squarefree_decompose(n, expected):
    assert squarefree_decompose(n) == expected


def test_sqrt_normalizes():
    s = Surd.sqrt(580)
    assert (s.a, s.b, s.d) == (0, 2, 145)
    assert Surd.sqrt(49) == 7


def test_str_and_parts():
    golden = (Surd.sqrt(5) - 1) / 2
    assert str(golden) == "(-1+sqrt(5))/2"
    assert golden.parts() == (-1, 1, 5, 2)
    assert str(Surd.sqrt(2) - 1) == "-1+sqrt(2)"
    x = (5 - Surd.sqrt(5)) / 10
    p, q, d, r = x.parts()
    assert q > 0 and math.gcd(math.gcd(p, q), r) == 1
    assert str(x) == "(5-sqrt(5))/10"


def test_mixed_fields_rejected():
    with pytest.raises(ValueError):
        Surd.sqrt(2) + Surd.sqrt(3)


def test_rational_mixes_with_any_field():
    assert Surd.sqrt(3) + Fraction(1, 2) - Fraction(1, 2) == Surd.sqrt(3)
    assert Surd(Fraction(3)) * Surd.sqrt(7) == Surd(0, 3, 7)


@given(fracs, fracs, fracs, fracs)
def test_field_axioms(a, b, c, e):
    x, y = Surd(a, b, 5), Surd(c, e, 5)
    assert x + y == y + x
    assert x * y == y * x
    assert (x - y) + y == x
    if y:
        assert (x / y) * y == x


@given(fracs, fracs)
def test_norm_and_conjugate(a, b):
    x = Surd(a, b, 3)
    assert x * x.conjugate() == x.norm()


@given(fracs, fracs)
def test_order_matches_high_precision(a, b):
    x = Surd(a, b, 2)
    v = x.to_mpfr(200)
    assert x.sign() == (v > 0) - (v < 0)
    assert math.floor(x) == int(gmpy2.floor(v))
    assert math.ceil(x) == int(gmpy2.ceil(v))


def test_pow():
    g = (Surd.sqrt(5) - 1) / 2
    assert g ** 2 == 1 - g
    assert g ** -1 == g + 1
    assert g ** 0 == 1


def test_floor_negative_irrational():
    x = Surd(0, -1, 2)  # -1.414...
    assert math.floor(x) == -2
    assert math.ceil(x) == -1


def test_hash_consistent_with_eq():
    assert hash(Surd(Fraction(1, 2))) == hash(Surd(Fraction(2, 4)))
    assert len({Surd.sqrt(8), 2 * Surd.sqrt(2)}) == 1


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        Surd.sqrt(2) / Surd(0)
