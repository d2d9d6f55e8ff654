"""Field arithmetic in Q(sqrt2) + i Q(sqrt2)."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transdirac.exact import (I, ONE, SQRT2, ZERO, Scalar, format_scalar,
                              parse_imaginary, parse_real, rational)

small = st.integers(-6, 6)
den = st.integers(1, 4)


def scalars():
    return st.builds(
        lambda a, b, c, d, da, db, dc, dd: Scalar(
            Fraction(a, da), Fraction(b, db), Fraction(c, dc), Fraction(d, dd)),
        small, small, small, small, den, den, den, den)


@given(scalars(), scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_ring_laws(x, y, z):
    assert (x + y) * z == x * z + y * z
    assert x * (y * z) == (x * y) * z
    assert x * y == y * x
    assert x + (-x) == ZERO


@given(scalars())
@settings(max_examples=60, deadline=None)
def test_inverse(x):
    if x.is_zero():
        with pytest.raises(ZeroDivisionError):
            x.inverse()
    else:
        assert x * x.inverse() == ONE


@given(scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_complex_embedding(x, y):
    assert abs(complex(x * y) - complex(x) * complex(y)) < 1e-9
    assert abs(complex(x + y) - (complex(x) + complex(y))) < 1e-12
    assert complex(x.conjugate()) == complex(x).conjugate()


def test_constants():
    assert SQRT2 * SQRT2 == rational(2)
    assert I * I == rational(-1)
    assert (ONE + SQRT2) * (SQRT2 - ONE) == ONE


@given(st.integers(-20, 20), st.integers(1, 9), st.integers(-5, 5), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_sqrt_roundtrip(a, da, b, db):
    x = Scalar(Fraction(a, da), Fraction(b, db))
    sq = x * x
    r = sq.sqrt()
    assert r * r == sq
    assert r.sign() >= 0


def test_sqrt_not_in_field():
    with pytest.raises(ValueError):
        rational(3).sqrt()
    with pytest.raises(ValueError):
        SQRT2.sqrt()


def test_real_ordering():
    # 3/2 - 1/2 sqrt2 > 0 but 1 - sqrt2 < 0: mixed-sign branches
    assert Scalar(Fraction(3, 2), Fraction(-1, 2)).sign() == 1
    assert (ONE - SQRT2).sign() == -1
    assert (SQRT2 - ONE).sign() == 1
    assert ZERO.sign() == 0
    assert SQRT2 > rational(7, 5)
    assert SQRT2 < rational(3, 2)
    with pytest.raises(ValueError):
        I.sign()


@pytest.mark.parametrize("text, value", [
    ("0", ZERO),
    ("3", rational(3)),
    ("-1/2", rational(-1, 2)),
    ("1/2+1/4√2", Scalar(Fraction(1, 2), Fraction(1, 4))),
    ("-√2", -SQRT2),
    ("2√2", SQRT2 * 2),
    ("1-√2", ONE - SQRT2),
    ("3/2-5/4√2", Scalar(Fraction(3, 2), Fraction(-5, 4))),
])
def test_parse_real(text, value):
    assert parse_real(text) == value


@pytest.mark.parametrize("text, value", [
    ("0", ZERO),
    ("-1i", -I),
    ("1/2i", I * rational(1, 2)),
    ("-2i", I * rational(-2)),
    ("1/2+1/4√2i", I * Scalar(Fraction(1, 2), Fraction(1, 4))),
])
def test_parse_imaginary(text, value):
    assert parse_imaginary(text) == value


def test_parse_rejects_garbage():
    for bad in ("", "x", "1//2", "√3", "1+?"):
        with pytest.raises(ValueError):
            parse_real(bad)
    with pytest.raises(ValueError):
        parse_imaginary("2")  # missing i suffix


@given(scalars())
@settings(max_examples=60, deadline=None)
def test_format_parse_roundtrip_real(x):
    r = x.real()
    assert parse_real(format_scalar(r)) == r
