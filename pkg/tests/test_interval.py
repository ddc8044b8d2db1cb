import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rkcp.interval import EMPTY, Box, Interval, arith, format_interval, parse_interval

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw):
    a, b = draw(finite), draw(finite)
    return Interval(min(a, b), max(a, b))


def point_in(iv, u):
    return min(max(iv.lo + u * (iv.hi - iv.lo), iv.lo), iv.hi)


def test_add_exact():
    assert arith("add", Interval(1, 2), Interval(3, 4)) == Interval(4, 6)


def test_sqr_symmetry():
    assert arith("sqr", Interval(-1, 2)) == Interval(0, 4)


def test_div_one_third_is_tight():
    r = arith("div", Interval(1, 1), Interval(3, 3))
    third = Fraction(1, 3)
    assert Fraction(r.lo) < third < Fraction(r.hi)
    assert r.hi - r.lo <= 2 * math.ulp(1 / 3)


def test_div_by_zero_containing_interval_is_hull():
    r = Interval(1, 2) / Interval(-1, 1)
    assert r.lo == -math.inf and r.hi == math.inf
    pieces = Interval(1, 2).div_pieces(Interval(-1, 1))
    assert pieces == [Interval(-math.inf, -1.0), Interval(1.0, math.inf)]


def test_sqrt_of_negative_is_empty():
    assert Interval(-2, -1).sqrt().is_empty
    assert Interval(-4, 4).sqrt() == Interval(0, 2)


def test_empty_propagates():
    assert (EMPTY + Interval(1, 2)).is_empty
    assert (Interval(1, 2) * EMPTY).is_empty


def test_intersection():
    assert Interval(1, 2).intersect(Interval(3, 4)).is_empty
    assert Interval(1, 3).intersect(Interval(2, 5)) == Interval(2, 3)
    x = Interval(-0.5, 7.25)
    assert x.intersect(x) == x


def test_measures():
    assert Interval(1, 4).width == 3
    assert Interval(0, 1).midpoint == 0.5
    assert Interval(2.5, 2.5).midpoint == 2.5
    with pytest.raises(ValueError, match="unbounded"):
        Interval.entire().midpoint


def test_invalid_bounds_rejected():
    with pytest.raises(ValueError):
        Interval(2, 1)
    with pytest.raises(ValueError):
        Interval(math.nan, 1)


def test_from_fraction_is_tightest():
    for q in [Fraction(1, 3), Fraction(-2, 7), Fraction(1, 10), Fraction(5, 4)]:
        iv = Interval.from_fraction(q)
        assert Fraction(iv.lo) <= q <= Fraction(iv.hi)
        assert iv.hi - iv.lo <= math.ulp(float(q))


@pytest.mark.parametrize("fn", ["sin", "cos"])
def test_transcendentals_against_mpmath(fn, rng):
    mpmath.mp.prec = 200
    f = getattr(mpmath, fn)
    for _ in range(300):
        a = rng.uniform(-50, 50)
        w = rng.choice([0.0, 1e-9, 1e-3, 0.5, 4.0])
        iv = getattr(Interval(a, a + w), fn)()
        for t in np.linspace(a, a + w, 7):
            v = f(mpmath.mpf(float(t)))
            assert mpmath.mpf(iv.lo) <= v <= mpmath.mpf(iv.hi)


def test_containment_random_points(rng):
    # 10^5 point pairs, evaluated in round-to-nearest, must land inside.
    ops = {"add": np.add, "sub": np.subtract, "mul": np.multiply, "div": np.divide}
    for name, f in ops.items():
        for _ in range(50):
            a = sorted(rng.uniform(-10, 10, 2))
            b = sorted(rng.uniform(-10, 10, 2))
            if name == "div" and b[0] <= 0 <= b[1]:
                b = sorted([abs(b[0]) + 0.1, abs(b[1]) + 0.2])
            A, B = Interval(*a), Interval(*b)
            r = arith(name, A, B)
            x = rng.uniform(a[0], a[1], 500)
            y = rng.uniform(b[0], b[1], 500)
            v = f(x, y)
            assert np.all((v >= r.lo) & (v <= r.hi))


def test_degenerate_dyadic_width(rng):
    for _ in range(2000):
        x = float(rng.integers(-2**20, 2**20)) / 2**10
        y = float(rng.integers(-2**20, 2**20)) / 2**7
        for name, exact in [("add", Fraction(x) + Fraction(y)), ("sub", Fraction(x) - Fraction(y)),
                            ("mul", Fraction(x) * Fraction(y))]:
            r = arith(name, Interval(x, x), Interval(y, y))
            assert Fraction(r.lo) <= exact <= Fraction(r.hi)
            assert r.hi - r.lo <= 2 * math.ulp(float(exact))


@given(intervals(), intervals(), st.floats(0, 1), st.floats(0, 1),
       st.sampled_from(["add", "sub", "mul"]))
def test_inclusion_monotonicity(a, b, u, v, op):
    # a sub-interval built from two points of a
    p, q = sorted([point_in(a, u), point_in(a, v)])
    sub = Interval(p, q)
    assert arith(op, a, b).contains(arith(op, sub, b))


@given(intervals(), st.integers(0, 5))
def test_power_contains_points(a, n):
    r = a**n
    for u in (0.0, 0.3, 1.0):
        x = point_in(a, u)
        assert Fraction(r.lo) <= Fraction(x) ** n <= Fraction(r.hi)


@given(intervals())
def test_format_parse_round_trip(a):
    assert parse_interval(format_interval(a)) == a


def test_round_trip_irrational_bounds():
    a = Interval(0.1, 0.30000000000000004)
    assert parse_interval(format_interval(a)) == a
    r3 = Interval.point(3.0).sqrt()
    assert parse_interval(format_interval(r3)) == r3


def test_parse_compressed_notation():
    iv = parse_interval("0.21132486540[5,6]")
    assert Fraction(iv.lo) <= Fraction("0.211324865405") and Fraction(iv.hi) >= Fraction("0.211324865406")
    assert iv.hi - iv.lo <= 1e-12 + 4 * math.ulp(0.2)
    neg = parse_interval("-0.117419482[69,58]")
    assert neg.lo < -0.11741948268 < -0.11741948259 < neg.hi


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_interval("[2,1]")
    with pytest.raises(ValueError):
        parse_interval("abc")


def test_box_basics():
    b = Box.from_intervals({"x": Interval(0, 1), "y": Interval(2, 4)})
    assert b["y"] == Interval(2, 4)
    left, right = b.bisect(1)
    assert left["y"].hi == right["y"].lo == 3
    assert b.contains(left) and not left.contains(b)
    with pytest.raises(KeyError):
        b["z"]
    with pytest.raises(ValueError):
        Box(["x", "x"], [0, 0], [1, 1])
    e = b.with_interval("x", EMPTY)
    assert e.is_empty
