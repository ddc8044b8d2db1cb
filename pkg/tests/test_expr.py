import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randexpr import NAMES, is_feasible, random_case, random_expr, sub_box
from rkcp.expr import (
    Const,
    Var,
    differentiate,
    eq,
    evaluate,
    hc4_revise,
    le,
    newton_contract,
    parse_sexpr,
    point_evaluator,
    sqr,
    to_sexpr,
    variables,
)
from rkcp.interval import Box, Interval

x, y, z = Var("x"), Var("y"), Var("z")


def box(**kw):
    return Box.from_intervals({n: Interval(*v) for n, v in kw.items()})


def test_evaluate_sum():
    assert evaluate(x + y, box(x=(0, 1), y=(2, 3))) == Interval(2, 4)


def test_evaluate_dependency_effect():
    assert evaluate(x * x, box(x=(-1, 1))) == Interval(-1, 1)
    assert evaluate(sqr(x), box(x=(-1, 1))) == Interval(0, 1)


def test_evaluate_unknown_variable():
    with pytest.raises(KeyError, match="unknown variable"):
        evaluate(x + y, box(x=(0, 1)))


def test_hc4_linear_projection():
    out = hc4_revise(eq(x + y - z), box(x=(0, 10), y=(0, 10), z=(0, 5)))
    assert out["x"] == Interval(0, 5) and out["y"] == Interval(0, 5) and out["z"] == Interval(0, 5)


def test_hc4_tautology_keeps_box():
    b = box(x=(-3, 4))
    out = hc4_revise(eq(x - x), b)
    assert out["x"] == b["x"]


def test_hc4_infeasible_is_empty():
    assert hc4_revise(le(sqr(x) + 1), box(x=(-5, 5))).is_empty


def test_newton_quadratic_contracts_around_root():
    out = newton_contract([eq(sqr(x) - 4)], box(x=(1, 3)))
    assert out["x"].contains(2.0)
    assert out["x"].width < 2.0


def test_newton_quadratic_no_root():
    assert newton_contract([eq(sqr(x) - 4)], box(x=(5, 6))).is_empty


def test_newton_linear_exact():
    out = newton_contract([eq(x - 1)], box(x=(0, 9)))
    assert out["x"].contains(1.0)
    assert out["x"].width <= np.spacing(1.0)


def test_newton_square_system():
    sys_ = [eq(sqr(x) + sqr(y) - 1), eq(x - y)]
    out = newton_contract(sys_, box(x=(0.5, 0.9), y=(0.5, 0.9)))
    r = np.sqrt(0.5)
    assert out["x"].contains(r) and out["y"].contains(r)
    assert out["x"].width < 0.4 and out["y"].width < 0.4


def test_sexpr_round_trip():
    e = x * y + Const(Interval(1, 2)) - sqr(z) / (x + 3)
    text = to_sexpr(e)
    assert to_sexpr(parse_sexpr(text)) == text
    assert set(variables(e)) == {"x", "y", "z"}


def test_jacobian_matches_finite_differences(rng):
    done = 0
    while done < 200:
        e = random_expr(rng)
        x0 = rng.uniform(0.3, 2.0, 3)
        f = point_evaluator([e], NAMES)
        fx = np.ravel(f(x0))
        if not np.all(np.isfinite(fx)):
            continue
        for i, n in enumerate(NAMES):
            d = evaluate(differentiate(e, n), Box(NAMES, x0, x0))
            if not d.is_bounded:
                continue
            h = 1e-6 * max(1.0, abs(x0[i]))
            xp, xm = x0.copy(), x0.copy()
            xp[i] += h
            xm[i] -= h
            fd = (np.ravel(f(xp))[0] - np.ravel(f(xm))[0]) / (2 * h)
            if not np.isfinite(fd):
                continue
            assert abs(d.midpoint - fd) <= 1e-6 * max(1.0, abs(fd))
        done += 1


@given(st.integers(0, 2**32 - 1))
def test_hc4_contracting_and_conservative(seed):
    rng = np.random.default_rng(seed)
    c, b, x0 = random_case(rng)
    out = hc4_revise(c, b)
    assert out.is_empty or b.contains(out)
    assert is_feasible(c, b.names, x0)
    assert not out.is_empty and out.contains(Box(b.names, x0, x0))


@given(st.integers(0, 2**32 - 1))
def test_hc4_monotone(seed):
    rng = np.random.default_rng(seed)
    c, b, _ = random_case(rng)
    small = sub_box(rng, b)
    big_out, small_out = hc4_revise(c, b), hc4_revise(c, small)
    if small_out.is_empty:
        return
    assert not big_out.is_empty and big_out.contains(small_out)
