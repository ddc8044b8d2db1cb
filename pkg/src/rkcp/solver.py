"""Branch-and-prune solving and relaxed branch-and-bound minimisation.

The solver works on a :class:`CSP` (named domains plus constraints).  Boxes
are contracted with HC4 propagation and, once small enough, with a
Hansen-Sengupta interval Newton step on a square subsystem of the
equalities.  A box is reported as a solution only when that Newton step
proves existence of a zero; everything else that survives down to the
width floor is reported as undecided.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .expr import (
    Binary,
    Const,
    Constraint,
    ConstraintSystem,
    EqualitySystem,
    Expr,
    Var,
    add,
    compile_tape,
    neg,
    sub,
    variables,
)
from .interval import Box, Interval

CONTRACTORS = ("hc4", "3b", "newton")
BISECTORS = ("largest", "smear")


@dataclass
class CSP:
    domains: Box
    constraints: list[Constraint]

    def __post_init__(self):
        self.constraints = list(self.constraints)
        for c in self.constraints:
            for v in variables(c):
                if v not in self.domains:
                    raise ValueError(f"constraint mentions unknown variable {v!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return self.domains.names

    @property
    def equalities(self) -> list[Constraint]:
        return [c for c in self.constraints if c.is_equality]

    def with_constraints(self, extra: Sequence[Constraint]) -> CSP:
        return CSP(self.domains.copy(), self.constraints + list(extra))

    def with_domains(self, domains: Box) -> CSP:
        return CSP(domains, self.constraints)


@dataclass(frozen=True)
class SolveConfig:
    """Search parameters.

    ``box_epsilon`` is the bisection floor: a box stops being split once
    every variable's width is below ``box_epsilon * max(1, |x|)``.
    ``newton_width`` is the relative width below which interval Newton is
    applied.  ``shrink_ratio`` is the propagation re-queue threshold.
    ``shave_slices`` is the number of slices per variable bound tried by
    the ``3b`` contractor.  ``bisector`` picks the split variable:
    ``largest`` takes the widest (relative to its domain), ``smear`` the
    one with the largest row-normalised |J_ij| * width_j summed over the
    equations.  Smear suits isolated solutions; on solution families it
    leaves parameters wide and certification suffers.
    ``residual_tol`` bounds the equations left out of the Newton block of
    an overdetermined system: a box is certified only when each of them
    encloses zero within ``[-residual_tol, residual_tol]``.
    """

    box_epsilon: float = 1e-12
    max_nodes: int = 1_000_000
    contractors: tuple[str, ...] = ("hc4", "newton")
    shrink_ratio: float = 0.01
    newton_width: float = 0.05
    workers: int = 1
    opt_abs_tol: float = 1e-20
    opt_rel_tol: float = 1e-15
    residual_tol: float = 1e-10
    bisector: str = "largest"
    shave_slices: int = 8

    def __post_init__(self):
        if not self.box_epsilon > 0:
            raise ValueError("box_epsilon must be positive")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be positive")
        for c in self.contractors:
            if c not in CONTRACTORS:
                raise ValueError(f"unknown contractor {c!r}")
        if self.bisector not in BISECTORS:
            raise ValueError(f"unknown bisector {self.bisector!r}")


@dataclass
class Paving:
    names: tuple[str, ...]
    solutions: list[Box] = field(default_factory=list)
    undecided: list[Box] = field(default_factory=list)
    witnesses: list[Box] = field(default_factory=list)
    pending: list[Box] = field(default_factory=list)
    budget_exhausted: bool = False
    nodes: int = 0

    @property
    def is_unsat(self) -> bool:
        """True when the search proved that no solution exists."""
        return not (self.solutions or self.undecided or self.pending or self.budget_exhausted)

    def boxes(self):
        for b in self.solutions:
            yield b, "solution"
        for b in self.undecided:
            yield b, "undecided"
        for b in self.pending:
            yield b, "undecided"

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out)
        header = []
        for n in self.names:
            header += [f"{n}_lo", f"{n}_hi"]
        w.writerow(header + ["status"])
        for b, status in self.boxes():
            row = []
            for n in self.names:
                row += [repr(float(b[n].lo)), repr(float(b[n].hi))]
            w.writerow(row + [status])
        return out.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def read_paving_csv(text: str) -> Paving:
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    names = tuple(h[:-3] for h in header[:-1:2])
    pav = Paving(names)
    for r in rows[1:]:
        vals = [float(x) for x in r[:-1]]
        b = Box(names, vals[0::2], vals[1::2])
        (pav.solutions if r[-1] == "solution" else pav.undecided).append(b)
    return pav


# ---------------------------------------------------------------------------
# the search engine


def _select_block(Jlo, Jhi, widths=None, tol=1e-9):
    """Pick a well-conditioned square block of the midpoint Jacobian.

    Columns are weighted by the box widths so that narrow variables end up
    as parameters.  Rows come from a pivoted QR of the weighted J^T,
    columns from a pivoted QR of the selected rows.  Returns
    ``(rows, cols)`` or None.
    """
    mid = 0.5 * Jlo + 0.5 * Jhi
    if not np.all(np.isfinite(mid)) or mid.size == 0:
        return None
    if widths is not None:
        top = float(np.max(widths, initial=0.0))
        w = np.maximum(widths, 1e-6 * top) if top > 0.0 else np.ones_like(widths)
        mid = mid * w[None, :]
    _, r1, p1 = scipy.linalg.qr(mid.T, mode="economic", pivoting=True)
    d1 = np.abs(np.diag(r1))
    if d1.size == 0 or d1[0] == 0.0:
        return None
    rank = int(np.sum(d1 > tol * d1[0]))
    rows = np.sort(p1[:rank])
    _, r2, p2 = scipy.linalg.qr(mid[rows], mode="economic", pivoting=True)
    cols = np.sort(p2[:rank])
    return rows, cols


class _Engine:
    def __init__(self, csp: CSP, config: SolveConfig, slack: float = 0.0, extra: Sequence[Constraint] = ()):
        self.csp = csp
        self.config = config
        self.names = csp.names
        self.n = len(self.names)
        self.slack = slack
        self.use_hc4 = "hc4" in config.contractors
        self.use_newton = "newton" in config.contractors
        self.use_shave = "3b" in config.contractors
        eq_bodies = [c.body for c in csp.constraints if c.is_equality]
        if slack > 0.0:
            cons = [c for c in csp.constraints if not c.is_equality]
            for body in eq_bodies:
                cons.append(Constraint(sub(body, slack), "<="))
                cons.append(Constraint(sub(neg(body), slack), "<="))
        else:
            cons = list(csp.constraints)
        self.constraints = cons + list(extra)
        self.system = ConstraintSystem(self.constraints, self.names)
        self.eqs = EqualitySystem(eq_bodies, self.names) if eq_bodies else None
        self.ineqs = [c for c in csp.constraints if not c.is_equality]
        self.ineq_tape = compile_tape([c.body for c in self.ineqs], {n: i for i, n in enumerate(self.names)}) if self.ineqs else None
        self.dom_lo = csp.domains.lo.copy()
        self.dom_hi = csp.domains.hi.copy()
        w = self.dom_hi - self.dom_lo
        self.scale = np.where(np.isfinite(w) & (w > 0), w, 1.0)

    # measures ---------------------------------------------------------------

    def rel_widths(self, lo, hi):
        return (hi - lo) / np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))

    def below_eps(self, lo, hi) -> bool:
        return bool(np.all(self.rel_widths(lo, hi) <= self.config.box_epsilon))

    def newton_ready(self, lo, hi) -> bool:
        return bool(np.max(self.rel_widths(lo, hi), initial=0.0) <= self.config.newton_width)

    def choose(self, lo, hi) -> int:
        w = hi - lo
        largest = int(np.argmax(w / self.scale))
        if self.config.bisector != "smear" or self.eqs is None:
            return largest
        Jlo, Jhi = self.eqs.eval_jacobian(lo, hi)
        impact = np.maximum(np.abs(Jlo), np.abs(Jhi)) * w[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            impact = impact / impact.sum(axis=1, keepdims=True)
        score = np.where(self.rel_widths(lo, hi) > self.config.box_epsilon, np.nansum(impact, axis=0), -1.0)
        if not np.all(np.isfinite(score)) or score.max() <= 0.0:
            return largest
        return int(np.argmax(score))

    # contraction ------------------------------------------------------------

    def _newton(self, lo, hi) -> bool:
        jac = self.eqs.eval_jacobian(lo, hi)
        sel = _select_block(*jac, hi - lo)
        if sel is None:
            return True
        rows, cols = sel
        status, nlo, nhi = self.eqs.newton_step(lo, hi, rows, cols, jac=jac, slack=self.slack)
        if status == "empty":
            return False
        lo[:] = nlo
        hi[:] = nhi
        return True

    def _refuted(self, lo, hi, j, a, b) -> bool:
        tlo, thi = lo.copy(), hi.copy()
        tlo[j], thi[j] = a, b
        return not self.system.propagate(tlo, thi, self.config.shrink_ratio)

    def _shave(self, lo, hi) -> bool:
        """Cut bound slices of each variable that HC4 alone proves empty."""
        k = self.config.shave_slices
        widths = self.rel_widths(lo, hi)
        for j in np.argsort(-widths):
            if widths[j] <= self.config.box_epsilon:
                break
            step = (hi[j] - lo[j]) / k
            for _ in range(k):
                cut = min(lo[j] + step, hi[j])
                if not self._refuted(lo, hi, j, lo[j], cut):
                    break
                if cut >= hi[j]:
                    return False
                lo[j] = cut
            for _ in range(k):
                cut = max(hi[j] - step, lo[j])
                if not self._refuted(lo, hi, j, cut, hi[j]):
                    break
                if cut <= lo[j]:
                    return False
                hi[j] = cut
        return True

    def contract(self, lo, hi) -> bool:
        """Fixpoint of the configured contractors, in place."""
        ratio = self.config.shrink_ratio
        for _ in range(50):
            before = hi - lo
            if self.use_hc4 and not self.system.propagate(lo, hi, ratio):
                return False
            if self.use_shave and not self._shave(lo, hi):
                return False
            if self.use_newton and self.eqs is not None and self.newton_ready(lo, hi):
                if not self._newton(lo, hi):
                    return False
            if not np.all(lo <= hi):
                return False
            after = hi - lo
            with np.errstate(invalid="ignore", divide="ignore"):
                shrink = np.where(before > 0, (before - after) / before, 0.0)
            if not np.any(shrink > ratio):
                break
        return True

    # certification ----------------------------------------------------------

    def _ineq_status(self, lo, hi) -> str:
        if self.ineq_tape is None:
            return "holds"
        vlo, vhi = self.ineq_tape.eval(lo, hi)
        status = "holds"
        for c, a, b in zip(self.ineqs, vlo, vhi):
            v = Interval(a, b) if a <= b else Interval(math.inf, -math.inf)
            if not c.possibly_holds(v):
                return "violated"
            if not c.certainly_holds(v):
                status = "unknown"
        return status

    def _tighten(self, lo, hi, rows, cols):
        for _ in range(40):
            w0 = float(np.max(hi[cols] - lo[cols]))
            status, nlo, nhi = self.eqs.newton_step(lo, hi, rows, cols)
            if status in ("empty", "singular"):
                break
            lo, hi = nlo, nhi
            w1 = float(np.max(hi[cols] - lo[cols]))
            if not w1 < 0.99 * w0:
                break
        return lo, hi

    def certify(self, lo, hi):
        """Try to prove a zero near the box.

        Returns ``("empty",)``, ``("solution", Zlo, Zhi, Wlo, Whi)`` or None.
        ``Z`` encloses every solution in the box; ``W`` is a thin box proved
        to contain one solution (parameters fixed at their midpoints).
        """
        if self.eqs is None:
            st = self._ineq_status(lo, hi)
            if st == "holds":
                return ("solution", lo.copy(), hi.copy(), lo.copy(), hi.copy())
            return ("empty",) if st == "violated" else None
        jac = self.eqs.eval_jacobian(lo, hi)
        sel = _select_block(*jac, hi - lo)
        if sel is None:
            return None
        rows, cols = sel
        ylo, yhi = lo.copy(), hi.copy()
        proved = None
        for _ in range(8):
            status, nlo, nhi = self.eqs.newton_step(ylo, yhi, rows, cols)
            if status == "empty":
                return ("empty",)
            if status == "singular":
                return None
            if status == "proved":
                proved = (nlo, nhi)
                break
            rad = 0.5 * (nhi[cols] - nlo[cols])
            mid = 0.5 * (nhi[cols] + nlo[cols])
            delta = 1.5 * rad + 1e-15 * (1.0 + np.abs(mid))
            ylo[cols] = np.minimum(lo[cols], np.nextafter(mid - delta, -np.inf))
            yhi[cols] = np.maximum(hi[cols], np.nextafter(mid + delta, np.inf))
        if proved is None:
            return None
        zlo, zhi = self._tighten(proved[0], proved[1], rows, cols)
        if np.any(np.maximum(zlo, lo) > np.minimum(zhi, hi)):
            return ("empty",)
        others = np.setdiff1d(np.arange(self.eqs.m), rows)
        if len(others):
            flo, fhi = self.eqs.eval_f(zlo, zhi)
            if np.any((flo[others] > 0.0) | (fhi[others] < 0.0)):
                return ("empty",)
            tol = self.config.residual_tol
            if np.any((flo[others] < -tol) | (fhi[others] > tol)):
                return None
        st = self._ineq_status(zlo, zhi)
        if st == "violated":
            return ("empty",)
        if st != "holds":
            return None
        wlo, whi = zlo, zhi
        params = np.setdiff1d(np.arange(self.n), cols)
        if len(params):
            plo, phi = zlo.copy(), zhi.copy()
            pm = np.array([Interval(zlo[j], zhi[j]).midpoint for j in params])
            plo[params] = pm
            phi[params] = pm
            status, qlo, qhi = self.eqs.newton_step(plo, phi, rows, cols)
            if status == "proved":
                wlo, whi = self._tighten(qlo, qhi, rows, cols)
        return ("solution", zlo, zhi, wlo, whi)

    # search -----------------------------------------------------------------

    def search(self, roots, max_nodes) -> dict:
        sols, wits, und = [], [], []
        stack = [(lo.copy(), hi.copy()) for lo, hi in reversed(roots)]
        nodes = 0
        certify = self.use_newton
        while stack:
            if nodes >= max_nodes:
                break
            lo, hi = stack.pop()
            nodes += 1
            if not self.contract(lo, hi):
                continue
            small = self.below_eps(lo, hi)
            if certify and (small or self.newton_ready(lo, hi)):
                res = self.certify(lo, hi)
                if res is not None:
                    if res[0] == "solution":
                        sols.append((res[1], res[2]))
                        wits.append((res[3], res[4]))
                    continue
            elif self.eqs is None and not certify:
                st = self._ineq_status(lo, hi)
                if st == "holds":
                    sols.append((lo, hi))
                    wits.append((lo, hi))
                    continue
            if small:
                und.append((lo, hi))
                continue
            j = self.choose(lo, hi)
            m = Interval(lo[j], hi[j]).midpoint
            if not (lo[j] < m < hi[j]):
                und.append((lo, hi))
                continue
            left = (lo.copy(), hi.copy())
            right = (lo.copy(), hi.copy())
            left[1][j] = m
            right[0][j] = m
            stack.append(right)
            stack.append(left)
        return {
            "solutions": sols,
            "witnesses": wits,
            "undecided": und,
            "pending": list(reversed(stack)),
            "nodes": nodes,
        }


def _merge_solutions(sols, wits):
    """Merge overlapping solution boxes (the same zero found twice)."""
    merged: list[list] = []
    for (lo, hi), w in zip(sols, wits):
        lo, hi = lo.copy(), hi.copy()
        changed = True
        while changed:
            changed = False
            for k, (mlo, mhi, mw) in enumerate(merged):
                if np.all(np.maximum(lo, mlo) <= np.minimum(hi, mhi)):
                    lo = np.minimum(lo, mlo)
                    hi = np.maximum(hi, mhi)
                    w = mw
                    merged.pop(k)
                    changed = True
                    break
        merged.append([lo, hi, w])
    return merged


def _paving_from(names, parts) -> Paving:
    sols, wits, und, pend = [], [], [], []
    nodes = 0
    exhausted = False
    for p in parts:
        sols += p["solutions"]
        wits += p["witnesses"]
        und += p["undecided"]
        pend += p["pending"]
        nodes += p["nodes"]
        exhausted |= bool(p["pending"])
    merged = _merge_solutions(sols, wits)
    pav = Paving(tuple(names))
    pav.solutions = [Box(names, lo, hi) for lo, hi, _ in merged]
    pav.witnesses = [Box(names, w[0], w[1]) for _, _, w in merged]
    pav.undecided = [Box(names, lo, hi) for lo, hi in und]
    pav.pending = [Box(names, lo, hi) for lo, hi in pend]
    pav.budget_exhausted = exhausted
    pav.nodes = nodes
    return pav


_WORKER_ENGINE: _Engine | None = None


def _worker_search(args):
    lo, hi, budget = args
    return _WORKER_ENGINE.search([(lo, hi)], budget)


def _split_roots(engine: _Engine, lo, hi, count: int):
    """Breadth-first bisection of the root box into about ``count`` boxes."""
    boxes = [(lo.copy(), hi.copy())]
    while len(boxes) < count:
        nxt = []
        for blo, bhi in boxes:
            if not engine.contract(blo, bhi):
                continue
            j = engine.choose(blo, bhi)
            m = Interval(blo[j], bhi[j]).midpoint
            left = (blo.copy(), bhi.copy())
            right = (blo.copy(), bhi.copy())
            left[1][j] = m
            right[0][j] = m
            nxt += [left, right]
        if not nxt or len(nxt) == len(boxes):
            boxes = nxt
            break
        boxes = nxt
    return boxes


def _sorted_paving(pav: Paving) -> Paving:
    key = lambda b: tuple(b.lo) + tuple(b.hi)  # noqa: E731
    order = sorted(range(len(pav.solutions)), key=lambda k: key(pav.solutions[k]))
    pav.solutions = [pav.solutions[k] for k in order]
    pav.witnesses = [pav.witnesses[k] for k in order]
    pav.undecided.sort(key=key)
    pav.pending.sort(key=key)
    return pav


def branch_and_prune(csp: CSP, config: SolveConfig | None = None) -> Paving:
    """Enclose every solution of ``csp`` inside its domains."""
    config = config or SolveConfig()
    dom = csp.domains
    if not np.all(np.isfinite(dom.lo)) or not np.all(np.isfinite(dom.hi)):
        raise ValueError("branch_and_prune needs bounded domains")
    engine = _Engine(csp, config)
    if dom.is_empty:
        return Paving(csp.names)
    root = (dom.lo.copy(), dom.hi.copy())
    if config.workers <= 1:
        return _paving_from(csp.names, [engine.search([root], config.max_nodes)])
    global _WORKER_ENGINE
    roots = _split_roots(engine, *root, 4 * config.workers)
    budget = max(1, config.max_nodes // max(1, len(roots)))
    _WORKER_ENGINE = engine
    try:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(config.workers, mp_context=ctx) as ex:
            parts = list(ex.map(_worker_search, [(lo, hi, budget) for lo, hi in roots]))
    finally:
        _WORKER_ENGINE = None
    return _sorted_paving(_paving_from(csp.names, parts))


def contract_fixpoint(csp: CSP, box: Box, config: SolveConfig | None = None) -> Box:
    """Apply the configured contractors until the box stops shrinking."""
    config = config or SolveConfig()
    if box.is_empty:
        return Box.empty(box.names)
    engine = _Engine(csp, config)
    b = box.reorder(csp.names)
    lo, hi = b.lo.copy(), b.hi.copy()
    if not engine.contract(lo, hi):
        return Box.empty(csp.names)
    return Box(csp.names, lo, hi)


# ---------------------------------------------------------------------------
# pinning and refinement


def pin(name: str, lo: float | None = None, hi: float | None = None, strict: bool = False) -> list[Constraint]:
    """Bound constraints ``lo <= name <= hi`` (``<`` when ``strict``)."""
    rel = "<" if strict else "<="
    out = []
    if lo is not None:
        out.append(Constraint(sub(Const(Interval(lo, lo)), Var(name)), rel))
    if hi is not None:
        out.append(Constraint(sub(Var(name), Const(Interval(hi, hi))), rel))
    return out


def _pin_bound(c: Constraint):
    """Recognise ``x - k`` / ``k - x`` bodies; returns (name, lo, hi)."""
    b = c.body
    if isinstance(b, Binary) and b.op == "sub":
        if isinstance(b.left, Var) and isinstance(b.right, Const):
            return b.left.name, None, b.right.value.hi
        if isinstance(b.left, Const) and isinstance(b.right, Var):
            return b.right.name, b.left.value.lo, None
    if isinstance(b, Var):
        return b.name, None, 0.0
    raise ValueError(f"pinning constraint is not a bound on a single variable: {c}")


def apply_pins(csp: CSP, pinning: Sequence[Constraint]) -> CSP:
    dom = csp.domains.copy()
    for c in pinning:
        if c.is_equality:
            raise ValueError("pinning constraints must be inequalities")
        name, lo, hi = _pin_bound(c)
        i = dom.index(name)
        if lo is not None:
            dom.lo[i] = max(dom.lo[i], lo)
        if hi is not None:
            dom.hi[i] = min(dom.hi[i], hi)
    return CSP(dom, csp.constraints + list(pinning))


def refine(csp: CSP, pinning: Sequence[Constraint], config: SolveConfig | None = None) -> Paving:
    """Branch-and-prune on the unrelaxed CSP restricted by bound pins."""
    pinned = apply_pins(csp, pinning)
    if pinned.domains.is_empty:
        return Paving(csp.names)
    return branch_and_prune(pinned, config)


# ---------------------------------------------------------------------------
# relaxed minimisation


@dataclass
class OptProblem:
    csp: CSP
    cost: Expr
    relax_eps: float = 1e-9


@dataclass
class OptResult:
    incumbent: Box
    cost_bounds: Interval
    region: Box | None = None
    nodes: int = 0
    budget_exhausted: bool = False

    @property
    def cost_upper(self) -> float:
        return self.cost_bounds.hi


def split_constant(cost: Expr) -> tuple[Interval, Expr]:
    """Separate constant summands of a top-level sum from the rest."""
    const = Interval(0.0, 0.0)
    rest: list[Expr] = []
    stack = [cost]
    while stack:
        e = stack.pop()
        if isinstance(e, Binary) and e.op == "add":
            stack += [e.right, e.left]
        elif isinstance(e, Const):
            const = const + e.value
        else:
            rest.append(e)
    body: Expr = Const(Interval(0.0, 0.0))
    for r in rest:
        body = add(body, r)
    return const, body


class _Optimizer:
    def __init__(self, problem: OptProblem, config: SolveConfig):
        self.problem = problem
        self.config = config
        csp = problem.csp
        self.names = csp.names
        self.const, self.g = split_constant(problem.cost)
        self.bound = Const(Interval(math.inf, math.inf))
        cut = Constraint(sub(self.g, self.bound), "<=")
        self.engine = _Engine(csp, config, slack=problem.relax_eps, extra=[cut])
        index = {n: i for i, n in enumerate(self.names)}
        self.g_tape = compile_tape([self.g], index)
        relaxed = self.engine.constraints[:-1]
        self.check = ConstraintSystem(relaxed, self.names)
        self.relaxed = relaxed

    def cost_range(self, lo, hi) -> Interval:
        a, b = self.g_tape.eval(lo, hi)
        return Interval(a[0], b[0]) if a[0] <= b[0] else Interval(math.inf, -math.inf)

    def feasible_point(self, x) -> bool:
        if not (np.all(self.engine.dom_lo <= x) and np.all(x <= self.engine.dom_hi)):
            return False
        vals = self.check.values(x, x)
        return all(c.certainly_holds(v) for c, v in zip(self.relaxed, vals))

    def probe(self, lo, hi):
        """Relaxed-feasible point near the box midpoint, or None."""
        x = np.array([Interval(a, b).midpoint for a, b in zip(lo, hi)])
        if self.feasible_point(x):
            return x
        eqs = self.engine.eqs
        if eqs is None:
            return None
        for _ in range(12):
            f = eqs.point_residual(x)
            J = eqs.point_jacobian(x)
            if not (np.all(np.isfinite(f)) and np.all(np.isfinite(J))):
                return None
            step = np.linalg.lstsq(J, f, rcond=None)[0]
            x = np.clip(x - step, self.engine.dom_lo, self.engine.dom_hi)
            if self.feasible_point(x):
                return x
            if np.max(np.abs(step)) < 1e-17:
                break
        return None

    def run(self) -> OptResult:
        cfg = self.config
        eng = self.engine
        lo, hi = eng.dom_lo.copy(), eng.dom_hi.copy()
        ub = math.inf
        best = None
        heap: list = []
        leaves: list[float] = []
        tick = 0
        nodes = 0
        if eng.contract(lo, hi):
            heapq.heappush(heap, (self.cost_range(lo, hi).lo, tick, lo, hi))
        while heap:
            lb = heap[0][0]
            if ub < math.inf and ub - lb <= max(cfg.opt_abs_tol, cfg.opt_rel_tol * abs(ub + self.const.hi)):
                break
            if nodes >= cfg.max_nodes:
                break
            lb, _, lo, hi = heapq.heappop(heap)
            if lb > ub:
                continue
            nodes += 1
            x = self.probe(lo, hi)
            if x is not None:
                val = self.cost_range(x, x).hi
                if val < ub:
                    ub = val
                    best = x
                    self.engine.system.set_const(self.bound, Interval(ub, ub))
            if eng.below_eps(lo, hi):
                leaves.append(lb)
                continue
            j = eng.choose(lo, hi)
            m = Interval(lo[j], hi[j]).midpoint
            left = (lo.copy(), hi.copy())
            right = (lo.copy(), hi.copy())
            left[1][j] = m
            right[0][j] = m
            for clo, chi in (left, right):
                if not eng.contract(clo, chi):
                    continue
                r = self.cost_range(clo, chi)
                if r.is_empty or r.lo > ub:
                    continue
                tick += 1
                heapq.heappush(heap, (r.lo, tick, clo, chi))
        if best is None:
            raise RuntimeError("infeasible under relaxation")
        remaining = [h[0] for h in heap] + leaves
        glb = min(remaining) if remaining else ub
        glb = min(glb, ub)
        region = None
        if heap:
            rlo = np.min([h[2] for h in heap], axis=0)
            rhi = np.max([h[3] for h in heap], axis=0)
            region = Box(self.names, rlo, rhi)
        bounds = Interval(glb, ub) + self.const
        return OptResult(
            incumbent=Box(self.names, best, best),
            cost_bounds=bounds,
            region=region,
            nodes=nodes,
            budget_exhausted=nodes >= cfg.max_nodes and bool(heap),
        )


def minimize(problem: OptProblem, config: SolveConfig | None = None) -> OptResult:
    """Interval branch-and-bound over the relaxed feasible set.

    Equalities ``f = 0`` become ``f - eps <= 0`` and ``-f - eps <= 0``.
    The returned bounds enclose the minimum of the cost over that relaxed
    set; the incumbent is the best relaxed-feasible point found.
    """
    config = config or SolveConfig()
    if not set(variables(problem.cost)) <= set(problem.csp.names):
        raise ValueError("cost mentions variables outside the CSP")
    return _Optimizer(problem, config).run()


__all__ = [
    "CSP", "SolveConfig", "Paving", "OptProblem", "OptResult",
    "branch_and_prune", "contract_fixpoint", "minimize", "refine",
    "pin", "apply_pins", "split_constant", "read_paving_csv", "replace",
]
