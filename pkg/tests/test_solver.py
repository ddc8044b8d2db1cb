import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rkcp.expr import Const, Constraint, Var, cos, evaluate, point_evaluator, sin, sqr
from rkcp.interval import Box, Interval
from rkcp.solver import (
    CSP,
    OptProblem,
    SolveConfig,
    branch_and_prune,
    contract_fixpoint,
    minimize,
    pin,
    read_paving_csv,
    refine,
)
from rkcp.tableau import MethodSpec, build_cost, build_csp, opt_problem

SQ3 = math.sqrt(3.0)


def example1():
    x, y, z, t = (Var(n) for n in "xyzt")
    dom = Box.from_intervals(
        {"x": Interval(0, 1000), "y": Interval(0, 1000), "z": Interval(0, 3.1416), "t": Interval(0, 3.1416)}
    )
    cs = [
        Constraint(x * y + t - 2 * z - 4, "="),
        Constraint(x * sin(z) + y * cos(t), "="),
        Constraint(x - y + sqr(cos(z)) - sqr(sin(t)), "="),
        Constraint(x * y * z - 2 * t, "="),
    ]
    return CSP(dom, cs)


def in_union(boxes, point, names):
    p = np.array([point[n] for n in names])
    return any(np.all((b.lo <= p) & (p <= b.hi)) for b in boxes)


def test_csp_rejects_unknown_variable():
    with pytest.raises(ValueError):
        CSP(Box.from_intervals({"x": Interval(0, 1)}), [Constraint(Var("x") + Var("y"), "=")])


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(box_epsilon=0)
    with pytest.raises(ValueError):
        SolveConfig(contractors=("simplex",))
    with pytest.raises(ValueError):
        SolveConfig(bisector="random")


def test_fixpoint_example1_contracts_strictly():
    csp = example1()
    out = contract_fixpoint(csp, csp.domains)
    assert csp.domains.contains(out)
    assert np.any(out.lo > csp.domains.lo) or np.any(out.hi < csp.domains.hi)


def test_fixpoint_tautology_unchanged():
    x = Var("x")
    dom = Box.from_intervals({"x": Interval(-2, 3)})
    out = contract_fixpoint(CSP(dom, [Constraint(x - x, "=")]), dom)
    assert out["x"] == dom["x"]


def test_fixpoint_infeasible_pair():
    x = Var("x")
    dom = Box.from_intervals({"x": Interval(-10, 10)})
    csp = CSP(dom, [Constraint(x + 1, "<="), Constraint(1 - x, "<=")])
    assert contract_fixpoint(csp, dom).is_empty


def test_example1_solution_enclosed():
    # The root is singular (rank-deficient Jacobian), so it stays undecided.
    pav = branch_and_prune(example1(), SolveConfig(box_epsilon=1e-6))
    boxes = pav.solutions + pav.undecided
    assert boxes
    root = {"x": 2.0, "y": 2.0, "z": math.pi / 2, "t": math.pi}
    assert in_union(boxes, root, pav.names)
    lo = np.min([b.lo for b in boxes], axis=0)
    hi = np.max([b.hi for b in boxes], axis=0)
    expect = [(1.999, 2.001), (1.999, 2.001), (1.57, 1.571), (3.14159, 3.1416)]
    for (a, b), l, h in zip(expect, lo, hi):
        assert a <= l and h <= b


def _gl_point():
    r = SQ3 / 6
    return {"b0": 0.5, "b1": 0.5, "c0": 0.5 - r, "c1": 0.5 + r,
            "a00": 0.25, "a01": 0.25 - r, "a10": 0.25 + r, "a11": 0.25}


def _sdirk_point(lam):
    # two-stage order-3 SDIRK with diagonal lam
    c0, c1 = lam, 1 - lam
    b0 = (0.5 - c1) / (c0 - c1)
    return {"b0": b0, "b1": 1 - b0, "c0": c0, "c1": c1, "a00": lam, "a01": 0.0, "a10": 1 - 2 * lam, "a11": lam}


def test_soundness_gauss_legendre_seed():
    pav = branch_and_prune(build_csp(MethodSpec(2, 4)))
    assert len(pav.solutions) == 1
    assert in_union(pav.solutions + pav.undecided, _gl_point(), pav.names)


@pytest.mark.parametrize("sign", [-1, 1])
def test_soundness_sdirk_seeds(sign):
    spec = MethodSpec(2, 3, sdirk=True, c_order="none")
    pav = branch_and_prune(build_csp(spec))
    point = {k: v for k, v in _sdirk_point(0.5 + sign * SQ3 / 6).items() if k in pav.names}
    assert in_union(pav.solutions + pav.undecided, point, pav.names)


@pytest.mark.parametrize("bisector", ["largest", "smear"])
def test_bisectors_agree_on_gauss_legendre(bisector):
    pav = branch_and_prune(build_csp(MethodSpec(2, 4)), SolveConfig(bisector=bisector))
    assert len(pav.solutions) == 1 and not pav.undecided
    assert in_union(pav.solutions, _gl_point(), pav.names)


def test_shaving_keeps_both_sdirk_roots():
    spec = MethodSpec(2, 3, sdirk=True, c_order="none")
    pav = branch_and_prune(build_csp(spec), SolveConfig(contractors=("hc4", "3b", "newton")))
    assert len(pav.solutions) == 2
    for sign in (-1, 1):
        point = {k: v for k, v in _sdirk_point(0.5 + sign * SQ3 / 6).items() if k in pav.names}
        assert in_union(pav.solutions, point, pav.names)


def test_shaving_contracts_no_less_than_hc4():
    csp = example1()
    plain = contract_fixpoint(csp, csp.domains, SolveConfig(contractors=("hc4",)))
    shaved = contract_fixpoint(csp, csp.domains, SolveConfig(contractors=("hc4", "3b")))
    assert plain.contains(shaved)
    root = {"x": 2.0, "y": 2.0, "z": math.pi / 2, "t": math.pi}
    assert in_union([shaved], root, csp.names)


def test_unsat_certificate_survives_sampling(rng):
    csp = build_csp(MethodSpec(2, 5))
    pav = branch_and_prune(csp)
    assert pav.is_unsat
    names = list(csp.names)
    f = point_evaluator([c.body for c in csp.equalities], names)
    lo, hi = csp.domains.lo, csp.domains.hi
    best = np.inf
    for _ in range(10):
        X = rng.uniform(lo, hi, (100_000, len(names)))
        R = np.abs(np.asarray(f(X)))
        best = min(best, float(np.min(np.max(R.reshape(len(csp.equalities), -1), axis=0))))
    # no sampled point comes anywhere near satisfying all conditions
    assert best > 1e-3


def test_determinism():
    csp = build_csp(MethodSpec(2, 3, sdirk=True, c_order="none"))
    a, b = branch_and_prune(csp), branch_and_prune(csp)
    assert a.to_csv() == b.to_csv()


def test_parallel_matches_serial():
    csp = build_csp(MethodSpec(2, 3, sdirk=True, c_order="none"))
    serial = branch_and_prune(csp)
    par = branch_and_prune(csp, SolveConfig(workers=2))
    key = lambda p: sorted(tuple(np.round(b.lo, 9)) for b in p.solutions)  # noqa: E731
    assert key(serial) == key(par)


def test_budget_exhaustion_flag():
    pav = branch_and_prune(build_csp(MethodSpec(2, 4)), SolveConfig(max_nodes=5))
    assert pav.budget_exhausted and not pav.is_unsat


def test_unbounded_domain_rejected():
    x = Var("x")
    dom = Box.from_intervals({"x": Interval(0, math.inf)})
    with pytest.raises(ValueError):
        branch_and_prune(CSP(dom, [Constraint(x - 1, "=")]))


def test_paving_csv_round_trip():
    pav = branch_and_prune(build_csp(MethodSpec(2, 3, sdirk=True, c_order="none")))
    text = pav.to_csv()
    header = text.splitlines()[0].split(",")
    assert header[0] == f"{pav.names[0]}_lo" and header[-1] == "status"
    back = read_paving_csv(text)
    assert back.names == pav.names
    assert len(back.solutions) == len(pav.solutions)
    for a, b in zip(back.solutions, pav.solutions):
        assert np.array_equal(a.lo, b.lo) and np.array_equal(a.hi, b.hi)


def test_paving_boxes_disjoint_interiors():
    pav = branch_and_prune(example1(), SolveConfig(box_epsilon=1e-4))
    boxes = [b for b, _ in pav.boxes()]
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            a, b = boxes[i], boxes[j]
            overlap = np.minimum(a.hi, b.hi) - np.maximum(a.lo, b.lo)
            assert np.any(overlap <= 0)


def test_refine_pinned_to_known_point():
    spec = MethodSpec(2, 4)
    p = _gl_point()
    pins = []
    for n in ("b0", "c0"):
        pins += pin(n, p[n] - 1e-12, p[n] + 1e-12)
    pav = refine(build_csp(spec), pins)
    assert len(pav.solutions) == 1 and not pav.undecided
    assert np.all(pav.solutions[0].hi - pav.solutions[0].lo < 1e-10)


def test_refine_unsat_when_pins_exclude_solutions():
    pav = refine(build_csp(MethodSpec(2, 4)), pin("b0", 0.6, 0.7))
    assert pav.is_unsat


def test_minimize_constant_zero_cost():
    x = Var("x")
    dom = Box.from_intervals({"x": Interval(0, 1)})
    res = minimize(OptProblem(CSP(dom, [Constraint(x - 2, "<=")]), Const(Interval(0, 0))))
    assert res.cost_bounds == Interval(0, 0)
    assert dom.contains(res.incumbent)


def test_minimize_simple_quadratic():
    x, y = Var("x"), Var("y")
    dom = Box.from_intervals({"x": Interval(-2, 2), "y": Interval(-2, 2)})
    cost = sqr(x - 0.5) + sqr(y + 0.25)
    res = minimize(OptProblem(CSP(dom, [Constraint(x + y - 0.25, "=")]), cost))
    assert res.cost_bounds.lo <= 0.0 <= res.cost_bounds.hi + 1e-12
    assert abs(res.incumbent["x"].midpoint - 0.5) < 1e-4


def test_minimize_infeasible():
    x = Var("x")
    dom = Box.from_intervals({"x": Interval(0, 1)})
    with pytest.raises(RuntimeError, match="infeasible under relaxation"):
        minimize(OptProblem(CSP(dom, [Constraint(x - 5, "=")]), sqr(x)))


def test_minimize_lower_bound_below_sampled_costs(rng):
    spec = MethodSpec(2, 2, explicit=True)
    prob = opt_problem(spec, 3)
    res = minimize(prob, SolveConfig(max_nodes=3000))
    # sample the one-parameter explicit family exactly on the constraint set
    names = list(prob.csp.names)
    cost = build_cost(spec, 3)
    for alpha in rng.uniform(0.05, 1.0, 200):
        vals = {"b0": 1 - 1 / (2 * alpha), "b1": 1 / (2 * alpha), "c0": 0.0, "c1": alpha, "a10": alpha}
        if not all(abs(vals[n]) <= 1 for n in ("b0", "b1")):
            continue
        box = Box(names, [vals[n] for n in names], [vals[n] for n in names])
        assert res.cost_bounds.lo <= evaluate(cost, box).hi


@given(st.floats(0.05, 0.95), st.floats(1e-6, 1e-2))
def test_contract_fixpoint_conservative_on_circle(x0, w):
    x, y = Var("x"), Var("y")
    y0 = math.sqrt(1 - x0 * x0)
    dom = Box.from_intervals({"x": Interval(x0 - w, x0 + w), "y": Interval(y0 - w, y0 + w)})
    csp = CSP(dom, [Constraint(sqr(x) + sqr(y) - 1, "=")])
    out = contract_fixpoint(csp, dom)
    assert out["x"].contains(x0) and out["y"].contains(y0)
