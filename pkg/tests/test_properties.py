import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rkcp import catalog
from rkcp.expr import Var, evaluate, mul
from rkcp.interval import Box, Interval
from rkcp.properties import (
    algebraic_stability_check,
    explicit_step,
    m_matrix,
    pave_stability,
    read_stability_csv,
    stability_constraint,
    stability_polynomial,
    symplecticity_check,
)
from rkcp.tableau import ButcherTableau

EXPLICIT = [n for n in catalog.names() if catalog.get(n).is_explicit]


def R(coeffs, z):
    return sum(mpmath.mpf(c) * z**k for k, c in enumerate(coeffs))


def test_rk4_polynomial():
    coeffs = stability_polynomial(catalog.get("rk4"))
    for c, q in zip(coeffs, [1, 1, Fraction(1, 2), Fraction(1, 6), Fraction(1, 24)]):
        assert Fraction(c.lo) <= q <= Fraction(c.hi)
    assert len(coeffs) == 5


def test_euler_polynomial():
    assert stability_polynomial(catalog.get("euler")) == [Interval(1, 1), Interval(1, 1)]


@pytest.mark.parametrize("name", EXPLICIT)
def test_leading_coefficients_are_inverse_factorials(name):
    t = catalog.get(name)
    coeffs = stability_polynomial(t)
    for k in range(t.order + 1):
        assert coeffs[k].contains(1 / math.factorial(k)) or (
            Fraction(coeffs[k].lo) <= Fraction(1, math.factorial(k)) <= Fraction(coeffs[k].hi)
        )


def test_polynomial_requires_explicit():
    with pytest.raises(ValueError, match="stability polynomial requires explicit method"):
        stability_polynomial(catalog.get("gauss2"))


@pytest.mark.parametrize("name", ["rk4", "heun", "kutta33", "erk33"])
def test_constraint_matches_complex_evaluation(name, rng):
    # |R(x+iy)|^2 - 1 from direct complex arithmetic must lie in the interval value.
    t = catalog.get(name)
    mid = [c.midpoint for c in stability_polynomial(t)]
    g = stability_constraint(t).body
    mpmath.mp.prec = 120
    for _ in range(200):
        x, y = rng.uniform(-5, 2), rng.uniform(-4, 4)
        v = evaluate(g, Box(["x", "y"], [x, y], [x, y]))
        ref = abs(R(mid, mpmath.mpc(x, y))) ** 2 - 1
        slack = 1e-9 * (1 + abs(float(ref))) if name == "erk33" else 0.0
        assert v.lo - slack <= float(ref) <= v.hi + slack


@pytest.fixture(scope="module")
def rk4_paving():
    return pave_stability(catalog.get("rk4"))


def test_rk4_paving_classifies_reference_points(rk4_paving):
    assert rk4_paving.classify(-1.0, 0.0) == "inside"
    assert rk4_paving.classify(-3.0, 0.0) == "outside"


def test_paving_soundness_sampling(rk4_paving, rng):
    coeffs = [1, 1, 0.5, 1 / 6, 1 / 24]
    for cls, check in (("inside", lambda m: m <= 1 + 1e-12), ("outside", lambda m: m > 1 - 1e-12)):
        boxes = rk4_paving.of_class(cls)
        picks = rng.integers(len(boxes), size=5000)
        for k in picks:
            bx, by = boxes[k]
            z = complex(rng.uniform(bx.lo, bx.hi), rng.uniform(by.lo, by.hi))
            assert check(abs(np.polyval(coeffs[::-1], z)))


def test_degraded_rk4_paving_differs(rk4_paving):
    h = Fraction(1, 2)
    crude = ButcherTableau.from_values(
        [[0, 0, 0, 0], [h, 0, 0, 0], [0, h, 0, 0], [0, 0, 1, 0]],
        [Fraction(1, 10), Fraction(3, 10), Fraction(3, 10), Fraction(1, 10)],
        order=1,
        flags=("explicit",),
    )
    other = pave_stability(crude)
    assert abs(other.area("inside") - rk4_paving.area("inside")) > 0.5


def test_euler_paving_is_unit_disk():
    pav = pave_stability(catalog.get("euler"))
    for bx, by in pav.of_class("inside"):
        far = max(abs(complex(x, y) + 1) for x in (bx.lo, bx.hi) for y in (by.lo, by.hi))
        assert far <= 1 + 1e-12
    for bx, by in pav.of_class("outside"):
        nx = min(max(-1.0, bx.lo), bx.hi)
        ny = min(max(0.0, by.lo), by.hi)
        assert abs(complex(nx, ny) + 1) >= 1 - 1e-12
    assert abs(pav.area("inside") - math.pi) < 2 * math.pi * 0.05 * 2


def test_coarse_epsilon_gives_boundary_only():
    pav = pave_stability(catalog.get("rk4"), epsilon=100.0)
    assert [c for _, _, c in pav.boxes] == ["boundary"]


def test_stability_csv_round_trip(rk4_paving):
    back = read_stability_csv(rk4_paving.to_csv())
    assert back.boxes == rk4_paving.boxes
    assert rk4_paving.to_csv().splitlines()[0] == "x_lo,x_hi,y_lo,y_hi,class"


def test_gauss3_symplectic():
    rep = symplecticity_check(catalog.get("gauss3"))
    assert rep.verdict
    assert max(v.width for row in rep.M for v in row) <= 1e-14


def test_rounded_gauss3_loses_symplecticity():
    # a01 rounded to single precision; m01 then equals b0 * (rounded - exact)
    mpmath.mp.prec = 200
    exact = mpmath.mpf(2) / 9 - mpmath.sqrt(15) / 15
    a01 = float(np.float32(float(exact)))
    rep = symplecticity_check(catalog.get("gauss3").replace_entry("a01", Interval(a01, a01)))
    expect = mpmath.mpf(5) / 18 * (mpmath.mpf(a01) - exact)
    assert not rep.verdict and not rep.M[0][1].contains(0.0)
    assert mpmath.mpf(rep.M[0][1].lo) <= expect <= mpmath.mpf(rep.M[0][1].hi)


def test_double_rounding_is_below_resolution():
    a01 = 2.0 / 9.0 - math.sqrt(15.0) / 15.0
    rep = symplecticity_check(catalog.get("gauss3").replace_entry("a01", Interval(a01, a01)))
    assert rep.M[0][1].contains(0.0)


def test_euler_m_matrix():
    rep = symplecticity_check(catalog.get("euler"))
    assert rep.M[0][0] == Interval(-1, -1) and not rep.verdict


@pytest.mark.parametrize("name", catalog.names())
def test_m_matrix_symmetric(name):
    M = m_matrix(catalog.get(name))
    s = len(M)
    for i in range(s):
        for j in range(s):
            assert M[i][j] is M[j][i] or M[i][j] == M[j][i]
            assert (M[i][j].lo, M[i][j].hi) == (M[j][i].lo, M[j][i].hi)


def test_algebraic_stability_reference_methods():
    assert algebraic_stability_check(catalog.get("lobatto3c")).verdict == "stable"
    assert algebraic_stability_check(catalog.get("gauss2")).verdict == "stable"
    assert algebraic_stability_check(catalog.get("radau2a")).verdict == "stable"
    v = algebraic_stability_check(catalog.get("lobatto3a"))
    assert v.verdict == "notStable"
    assert any(v.witness.contains(float(e)) for e in _exact_eigenvalues("lobatto3a"))


def _exact_eigenvalues(name):
    mpmath.mp.prec = 120
    t = catalog.get(name)
    A = [[mpmath.mpf(a.midpoint) for a in row] for row in t.A]
    b = [mpmath.mpf(x.midpoint) for x in t.b]
    s = t.s
    M = mpmath.matrix(s, s)
    for i in range(s):
        for j in range(s):
            M[i, j] = b[i] * A[i][j] + b[j] * A[j][i] - b[i] * b[j]
    return mpmath.eigsy(M)[0]


def test_negative_weight_is_not_stable():
    t = catalog.get("kutta33").replace_entry("b0", Interval(-0.1, -0.1))
    assert algebraic_stability_check(t).verdict == "notStable"


def test_stage_cap():
    t = ButcherTableau.from_values([[0] * 5 for _ in range(5)], [Fraction(1, 5)] * 5)
    with pytest.raises(ValueError, match="unsupported stage count"):
        algebraic_stability_check(t)


def _det_sign_changes(M, lams):
    mid = np.array([[v.midpoint for v in row] for row in M])
    d = [np.linalg.det(mid - lam * np.eye(len(mid))) for lam in lams]
    return any(np.sign(a) != np.sign(b) for a, b in zip(d, d[1:]) if a != 0 and b != 0)


def test_stable_verdict_never_contradicted_by_sampling(rng):
    lams = -np.concatenate([np.logspace(-12, 8, 400)[::-1]])
    names = ["lobatto3c", "lobatto3a", "gauss2", "gauss3", "radau2a", "s3o4", "rk4"]
    for name in names:
        base = catalog.get(name)
        for trial in range(4):
            t = base
            if trial:
                i, j = rng.integers(base.s, size=2)
                v = base.A[i][j].midpoint + rng.normal() * 10.0 ** -rng.integers(2, 10)
                t = base.replace_entry(f"a{i}{j}", Interval(v, v))
            verdict = algebraic_stability_check(t)
            if verdict.verdict == "stable":
                assert not _det_sign_changes(m_matrix(t), lams)


def test_euler_step_exact():
    y = explicit_step(catalog.get("euler"), [Var("y")], Interval(0, 0),
                      Box.from_intervals({"y": Interval(1, 1)}), Interval(0.1, 0.1))
    assert y["y"].contains(1.1) and y["y"].width <= 2 * math.ulp(1.1)


def test_rk4_step_matches_polynomial():
    y = explicit_step(catalog.get("rk4"), [Var("y")], Interval(0, 0),
                      Box.from_intervals({"y": Interval(1, 1)}), Interval(0.1, 0.1))
    mpmath.mp.prec = 100
    ref = sum(mpmath.mpf(0.1) ** k / mpmath.factorial(k) for k in range(5))
    assert mpmath.mpf(y["y"].lo) <= ref <= mpmath.mpf(y["y"].hi)


def test_zero_step_is_identity():
    y0 = Box.from_intervals({"u": Interval(1, 2), "v": Interval(-1, 0)})
    f = [Var("v"), mul(-1, Var("u"))]
    out = explicit_step(catalog.get("rk4"), f, Interval(0, 0), y0, Interval(0, 0))
    assert out["u"] == y0["u"] and out["v"] == y0["v"]


def test_step_requires_explicit():
    with pytest.raises(ValueError):
        explicit_step(catalog.get("gauss2"), [Var("y")], Interval(0, 0),
                      Box.from_intervals({"y": Interval(1, 1)}), Interval(0.1, 0.1))


@given(st.floats(-2, 2), st.floats(0, 1), st.floats(0, 0.5), st.floats(0, 0.5))
def test_step_inclusion_monotone(y0, w, h0, dh):
    t = catalog.get("rk4")
    f = [mul(Var("y"), Var("t")) - Var("y")]
    small = explicit_step(t, f, Interval(0, 0), Box.from_intervals({"y": Interval(y0, y0)}), Interval(h0, h0))
    big = explicit_step(
        t, f, Interval(0, 0), Box.from_intervals({"y": Interval(y0, y0 + w)}), Interval(h0, h0 + dh)
    )
    assert big["y"].contains(small["y"])
