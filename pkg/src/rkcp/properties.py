"""Interval verification of stability and symplecticity properties."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .expr import (
    Const,
    Constraint,
    Expr,
    Var,
    add,
    compile_tape,
    differentiate,
    evaluate,
    mul,
    sqr,
    sub,
)
from .interval import Box, Interval
from .solver import CSP, SolveConfig, branch_and_prune
from .tableau import ButcherTableau

ONE = Interval(1.0, 1.0)


def _require_explicit(t: ButcherTableau, what: str) -> None:
    if not t.is_explicit:
        raise ValueError(f"{what} requires explicit method")


# ---------------------------------------------------------------------------
# linear stability


def stability_polynomial(t: ButcherTableau) -> list[Interval]:
    """Coefficients of R(z); coefficient k is b^T A^(k-1) 1."""
    _require_explicit(t, "stability polynomial")
    s = t.s
    coeffs = [ONE]
    v = [ONE] * s
    for _ in range(s):
        acc = Interval(0.0, 0.0)
        for bi, vi in zip(t.b, v):
            acc = acc + bi * vi
        coeffs.append(acc)
        nv = []
        for i in range(s):
            acc = Interval(0.0, 0.0)
            for j in range(i):
                acc = acc + t.A[i][j] * v[j]
            nv.append(acc)
        v = nv
    while len(coeffs) > 2 and coeffs[-1] == Interval(0.0, 0.0):
        coeffs.pop()
    return coeffs


def stability_parts(coeffs: Sequence[Interval], x: Expr | None = None, y: Expr | None = None) -> tuple[Expr, Expr]:
    """Real and imaginary parts of R(x + iy) by complex Horner evaluation."""
    x = Var("x") if x is None else x
    y = Var("y") if y is None else y
    re: Expr = Const(coeffs[-1])
    im: Expr = Const(Interval(0.0, 0.0))
    for c in reversed(coeffs[:-1]):
        re, im = add(sub(mul(re, x), mul(im, y)), Const(c)), add(mul(re, y), mul(im, x))
    return re, im


def stability_constraint(t: ButcherTableau) -> Constraint:
    """``Re(R)^2 + Im(R)^2 - 1 <= 0`` over variables ``x`` and ``y``."""
    re, im = stability_parts(stability_polynomial(t))
    return Constraint(sub(add(sqr(re), sqr(im)), Const(ONE)), "<=")


CLASSES = ("inside", "outside", "boundary")


@dataclass
class StabilityPaving:
    x: Interval
    y: Interval
    epsilon: float
    boxes: list[tuple[Interval, Interval, str]] = field(default_factory=list)

    def of_class(self, cls: str) -> list[tuple[Interval, Interval]]:
        return [(bx, by) for bx, by, c in self.boxes if c == cls]

    def classify(self, x: float, y: float) -> str | None:
        """Class of a box holding the point; decided classes win ties on faces."""
        found = None
        for bx, by, c in self.boxes:
            if bx.contains(x) and by.contains(y):
                if c != "boundary":
                    return c
                found = c
        return found

    def area(self, cls: str) -> float:
        return sum(bx.width * by.width for bx, by in self.of_class(cls))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out)
        w.writerow(["x_lo", "x_hi", "y_lo", "y_hi", "class"])
        for bx, by, c in self.boxes:
            w.writerow([repr(bx.lo), repr(bx.hi), repr(by.lo), repr(by.hi), c])
        return out.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def read_stability_csv(text: str) -> StabilityPaving:
    rows = list(csv.reader(io.StringIO(text)))[1:]
    boxes = [(Interval(float(r[0]), float(r[1])), Interval(float(r[2]), float(r[3])), r[4]) for r in rows]
    if boxes:
        xs = Interval(min(b[0].lo for b in boxes), max(b[0].hi for b in boxes))
        ys = Interval(min(b[1].lo for b in boxes), max(b[1].hi for b in boxes))
    else:
        xs = ys = Interval(0.0, 0.0)
    return StabilityPaving(xs, ys, 0.0, boxes)


def pave_stability(
    t: ButcherTableau,
    x: Interval = Interval(-5.0, 2.0),
    y: Interval = Interval(-4.0, 4.0),
    epsilon: float = 0.05,
) -> StabilityPaving:
    """Classify boxes of the complex plane against |R(z)| <= 1.

    ``g = Re^2 + Im^2 - 1`` is bounded on each box by the natural interval
    extension intersected with the mean-value form.  Boxes are bisected
    along their wider side until decided or narrower than ``epsilon``.
    """
    if not (x.is_bounded and y.is_bounded):
        raise ValueError("stability region must be bounded")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    g = stability_constraint(t).body
    dg = [differentiate(g, "x"), differentiate(g, "y")]
    index = {"x": 0, "y": 1}
    tape = compile_tape([g] + dg, index)
    pav = StabilityPaving(x, y, epsilon)
    stack = [(x.lo, x.hi, y.lo, y.hi)]
    lo = np.empty(2)
    hi = np.empty(2)
    while stack:
        x0, x1, y0, y1 = stack.pop()
        lo[:] = (x0, y0)
        hi[:] = (x1, y1)
        vlo, vhi = tape.eval(lo, hi)
        gx = Interval(vlo[0], vhi[0])
        mx = Interval(x0, x1).midpoint
        my = Interval(y0, y1).midpoint
        lo[:] = (mx, my)
        hi[:] = (mx, my)
        clo, chi = tape.eval(lo, hi)
        mv = (
            Interval(clo[0], chi[0])
            + Interval(vlo[1], vhi[1]) * (Interval(x0, x1) - Interval(mx, mx))
            + Interval(vlo[2], vhi[2]) * (Interval(y0, y1) - Interval(my, my))
        )
        bound = gx & mv if gx.overlaps(mv) else gx
        bx, by = Interval(x0, x1), Interval(y0, y1)
        if bound.hi <= 0.0:
            pav.boxes.append((bx, by, "inside"))
        elif bound.lo > 0.0:
            pav.boxes.append((bx, by, "outside"))
        elif max(x1 - x0, y1 - y0) <= epsilon:
            pav.boxes.append((bx, by, "boundary"))
        elif x1 - x0 >= y1 - y0:
            stack += [(mx, x1, y0, y1), (x0, mx, y0, y1)]
        else:
            stack += [(x0, x1, my, y1), (x0, x1, y0, my)]
    return pav


# ---------------------------------------------------------------------------
# symplecticity and algebraic stability


def m_matrix(t: ButcherTableau) -> tuple[tuple[Interval, ...], ...]:
    """m_ij = b_i a_ij + b_j a_ji - b_i b_j, each entry computed once and mirrored."""
    s = t.s
    M = [[Interval(0.0, 0.0)] * s for _ in range(s)]
    for i in range(s):
        for j in range(i, s):
            v = t.b[i] * t.A[i][j] + t.b[j] * t.A[j][i] - t.b[i] * t.b[j]
            M[i][j] = v
            M[j][i] = v
    return tuple(tuple(r) for r in M)


@dataclass(frozen=True)
class SymplecticReport:
    M: tuple[tuple[Interval, ...], ...]
    verdict: bool


def symplecticity_check(t: ButcherTableau) -> SymplecticReport:
    M = m_matrix(t)
    return SymplecticReport(M, all(v.contains(0.0) for row in M for v in row))


def det_expr(rows: Sequence[Sequence[Expr]]) -> Expr:
    """Determinant by cofactor expansion along the first row."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    out: Expr | None = None
    for j in range(n):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        term = mul(rows[0][j], det_expr(minor))
        out = term if out is None else (add(out, term) if j % 2 == 0 else sub(out, term))
    return out


def characteristic_expr(M: Sequence[Sequence[Interval]], lam: Var | None = None) -> Expr:
    """det(M - lam I) with symmetric entries sharing one constant node."""
    lam = Var("lam") if lam is None else lam
    s = len(M)
    consts = {}
    for i in range(s):
        for j in range(i, s):
            consts[i, j] = consts[j, i] = Const(M[i][j])
    rows = [[sub(consts[i, j], lam) if i == j else consts[i, j] for j in range(s)] for i in range(s)]
    return det_expr(rows)


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: str
    witness: Interval | None = None
    tolerance: float = 0.0
    reason: str = ""


def _spectral_norm_bound(M) -> float:
    """Upper bound on the 2-norm of the radius matrix (its Frobenius norm)."""
    acc = Interval(0.0, 0.0)
    for row in M:
        for v in row:
            acc = acc + Interval(v.radius, v.radius).sqr()
    return acc.sqrt().hi


def _positive_definite(mid: np.ndarray, shift: float) -> bool:
    """Exact rational LDL^T test of ``mid + shift*I``."""
    n = mid.shape[0]
    A = [[Fraction(float(mid[i, j])) for j in range(n)] for i in range(n)]
    for i in range(n):
        A[i][i] += Fraction(shift)
    for k in range(n):
        if A[k][k] <= 0:
            return False
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            for j in range(k + 1, n):
                A[i][j] -= f * A[k][j]
    return True


def _rayleigh_witness(M) -> Interval | None:
    """Negative eigenvalue certificate from an approximate eigenvector.

    If the interval Rayleigh quotient of ``x`` is negative every matrix in
    ``M`` has a negative eigenvalue; for symmetric matrices one lies within
    ``|Mx - mu x| / |x|`` of ``mu``.
    """
    s = len(M)
    mid = np.array([[v.midpoint for v in row] for row in M])
    w, V = np.linalg.eigh(mid)
    if not w[0] < 0:
        return None
    mu = float(w[0])
    x = V[:, 0]
    xi = [Interval(float(v), float(v)) for v in x]
    Mx = []
    for i in range(s):
        acc = Interval(0.0, 0.0)
        for j in range(s):
            acc = acc + M[i][j] * xi[j]
        Mx.append(acc)
    num = Interval(0.0, 0.0)
    den = Interval(0.0, 0.0)
    res = Interval(0.0, 0.0)
    for i in range(s):
        num = num + xi[i] * Mx[i]
        den = den + xi[i].sqr()
        res = res + (Mx[i] - xi[i] * Interval(mu, mu)).sqr()
    if not (num / den).hi < 0.0:
        return None
    r = (res.sqrt() / den.sqrt()).hi
    wit = Interval(mu, mu) + Interval(-r, r)
    return Interval(wit.lo, min(wit.hi, (num / den).hi))


def algebraic_stability_check(
    t: ButcherTableau, tolerance: float = 1e-12, config: SolveConfig | None = None
) -> StabilityVerdict:
    """Decide whether b >= 0 and M is positive semidefinite.

    ``stable`` means: every b_i >= 0 and no matrix in the interval M has an
    eigenvalue below ``-tolerance`` (reported tolerance includes the width
    of M).  ``notStable`` carries an interval proved to contain a negative
    eigenvalue, or names a negative weight.
    """
    s = t.s
    if s > 4:
        raise ValueError("unsupported stage count")
    for i, bi in enumerate(t.b):
        if bi.hi < 0.0:
            return StabilityVerdict("notStable", None, 0.0, f"b{i} < 0")
    if any(bi.lo < 0.0 for bi in t.b):
        return StabilityVerdict("unknown", None, 0.0, "sign of some b_i undecided")
    M = m_matrix(t)
    mid = np.array([[v.midpoint for v in row] for row in M])
    rad = _spectral_norm_bound(M)
    if _positive_definite(mid, tolerance):
        return StabilityVerdict("stable", None, tolerance + rad, "M + tol*I positive definite")
    det = characteristic_expr(M)
    config = config or SolveConfig(box_epsilon=1e-12, max_nodes=20000)
    csp = CSP(Box.from_intervals({"lam": Interval(-1e8, -tolerance)}), [Constraint(det, "=")])
    pav = branch_and_prune(csp, config)
    if pav.solutions:
        return StabilityVerdict("notStable", pav.solutions[0]["lam"], 0.0, "certified negative root of det(M - lam I)")
    wit = _rayleigh_witness(M)
    if wit is not None:
        return StabilityVerdict("notStable", wit, 0.0, "negative Rayleigh quotient")
    if pav.is_unsat:
        return StabilityVerdict("stable", None, tolerance, "det(M - lam I) has no root below -tol")
    return StabilityVerdict("unknown", None, 0.0, "undecided")


# ---------------------------------------------------------------------------
# explicit stepping


def explicit_step(
    t: ButcherTableau, f: Sequence[Expr], t0: Interval, y: Box, h: Interval, time_name: str = "t"
) -> Box:
    """One explicit Runge-Kutta step evaluated in interval arithmetic.

    This encloses the image of the discrete map for every coefficient in
    the tableau's intervals; it does not bound the truncation error.
    """
    _require_explicit(t, "explicit step")
    if len(f) != len(y.names):
        raise ValueError("vector field and state have different dimensions")
    ks: list[list[Interval]] = []
    for i in range(t.s):
        env = {time_name: t0 + t.c[i] * h}
        for d, name in enumerate(y.names):
            acc = y[name]
            for j in range(i):
                acc = acc + h * (t.A[i][j] * ks[j][d])
            env[name] = acc
        ks.append([evaluate(fd, env) for fd in f])
    out = {}
    for d, name in enumerate(y.names):
        acc = Interval(0.0, 0.0)
        for i in range(t.s):
            acc = acc + t.b[i] * ks[i][d]
        out[name] = y[name] + h * acc
    return Box.from_intervals(out)


__all__ = [
    "stability_polynomial", "stability_parts", "stability_constraint", "StabilityPaving",
    "pave_stability", "read_stability_csv", "m_matrix", "symplecticity_check", "SymplecticReport",
    "characteristic_expr", "det_expr", "algebraic_stability_check", "StabilityVerdict", "explicit_step",
]
