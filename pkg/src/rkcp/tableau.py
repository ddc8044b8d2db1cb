"""Method specifications, CSP assembly and the Butcher tableau data model.

Variables are named ``b0..``, ``c0..`` and ``a{i}{j}`` with 0-based
indices.  Entries of ``A`` that the structure forces to zero are removed
from the CSP altogether rather than kept as ``a_ij = 0`` equalities.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .expr import Const, Constraint, EqualitySystem, Expr, Var, compile_tape, sqr, sqrt, sub, total
from .interval import Box, Interval, format_number, parse_interval
from .solver import CSP, OptProblem, OptResult, Paving, SolveConfig, _select_block, pin, refine
from .trees import RootedTree, WeightBuilder, enumerate_trees, tableau_names, trees_up_to

C_ORDERS = ("strict", "weak", "none")
FLAGS = ("explicit", "dirk", "sdirk", "singly", "explicit-first-line", "stiffly-accurate")
ZERO = Interval(0.0, 0.0)


@dataclass(frozen=True)
class MethodSpec:
    """Structure of the method sought.

    ``singly`` only asks for equal diagonal entries; ``sdirk`` is the
    lower-triangular case and implies both ``dirk`` and ``singly``.
    """

    s: int
    p: int
    explicit: bool = False
    dirk: bool = False
    sdirk: bool = False
    singly: bool = False
    explicit_first_line: bool = False
    stiffly_accurate: bool = False
    c_order: str = "strict"
    a_domain: tuple[float, float] = (-1.0, 1.0)
    b_domain: tuple[float, float] = (-1.0, 1.0)
    c_domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("number of stages must be at least 1")
        if self.p < 1:
            raise ValueError("order must be at least 1")
        if self.c_order not in C_ORDERS:
            raise ValueError(f"c ordering must be one of {C_ORDERS}, got {self.c_order!r}")
        if self.explicit and self.sdirk:
            raise ValueError("an explicit method cannot be singly diagonally implicit")
        if self.sdirk:
            object.__setattr__(self, "dirk", True)
            object.__setattr__(self, "singly", True)
        for name in ("a_domain", "b_domain", "c_domain"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} is empty")

    @property
    def flags(self) -> tuple[str, ...]:
        on = [
            self.explicit, self.dirk, self.sdirk, self.singly,
            self.explicit_first_line, self.stiffly_accurate,
        ]
        return tuple(f for f, v in zip(FLAGS, on) if v)

    def with_order(self, p: int) -> MethodSpec:
        return replace(self, p=p)

    def is_zero(self, i: int, j: int) -> bool:
        """Whether the structure forces ``a_ij = 0``."""
        if self.explicit and j >= i:
            return True
        if self.dirk and j > i:
            return True
        return self.explicit_first_line and i == 0

    def free_a(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.s) for j in range(self.s) if not self.is_zero(i, j)]

    def variable_names(self) -> list[str]:
        names = tableau_names(self.s)
        return names["b"] + names["c"] + [names["a"][i][j] for i, j in self.free_a()]


def _coeff_map(spec: MethodSpec) -> dict[str, Expr]:
    names = tableau_names(spec.s)
    coeffs: dict[str, Expr] = {}
    for i in range(spec.s):
        for j in range(spec.s):
            n = names["a"][i][j]
            coeffs[n] = Const(ZERO) if spec.is_zero(i, j) else Var(n)
    return coeffs


def structural_constraints(spec: MethodSpec) -> list[Constraint]:
    """Structure constraints with every ``a_ij`` kept as a variable.

    Forced zeros appear as ``a_ij = 0`` equalities here; :func:`build_csp`
    substitutes them instead.
    """
    names = tableau_names(spec.s)
    A = [[Var(n) for n in row] for row in names["a"]]
    b = [Var(n) for n in names["b"]]
    c = [Var(n) for n in names["c"]]
    s = spec.s
    out = [Constraint(A[i][j], "=") for i in range(s) for j in range(s) if spec.is_zero(i, j)]
    return out + _shape_constraints(spec, A, b, c)


def _shape_constraints(spec: MethodSpec, A, b, c) -> list[Constraint]:
    s = spec.s
    out = []
    if spec.singly:
        out += [Constraint(sub(A[i][i], A[i + 1][i + 1]), "=") for i in range(s - 1)]
    if spec.stiffly_accurate:
        out += [Constraint(sub(A[s - 1][j], b[j]), "=") for j in range(s)]
    out += [Constraint(sub(c[i], total(A[i])), "=") for i in range(s)]
    if spec.c_order != "none":
        rel = "<" if spec.c_order == "strict" else "<="
        out += [Constraint(sub(c[i], c[i + 1]), rel) for i in range(s - 1)]
    return out


def _builder(spec: MethodSpec) -> WeightBuilder:
    return WeightBuilder(spec.s, True, _coeff_map(spec))


def build_csp(spec: MethodSpec, order: int | None = None) -> CSP:
    """Order conditions plus structure constraints over the free coefficients."""
    p = spec.p if order is None else order
    wb = _builder(spec)
    cons = [
        Constraint(sub(wb.weight(t), Const(Interval.from_fraction(Fraction(1, t.gamma)))), "=")
        for t in trees_up_to(p)
    ]
    A = [[wb.a[i][j] for j in range(spec.s)] for i in range(spec.s)]
    shape = _shape_constraints(spec, A, wb.b, wb.c)
    cons += [c for c in shape if not _trivial(c)]
    if spec.stiffly_accurate:
        # implied by the last row equal to b and sum(b) = 1; HC4 cannot see it
        cons.append(Constraint(sub(wb.c[spec.s - 1], Const(Interval(1.0, 1.0))), "="))
    names = tableau_names(spec.s)
    dom = {}
    for n in names["b"]:
        dom[n] = Interval(*spec.b_domain)
    for n in names["c"]:
        dom[n] = Interval(*spec.c_domain)
    for i, j in spec.free_a():
        dom[names["a"][i][j]] = Interval(*spec.a_domain)
    return CSP(Box.from_intervals(dom), cons)


def _trivial(c: Constraint) -> bool:
    """Constraints that folded to a constant zero body (e.g. 0 - 0 = 0)."""
    return isinstance(c.body, Const) and c.body.value == ZERO and c.relation != "<"


def build_cost(spec: MethodSpec, target: int | None = None) -> Expr:
    """Sum of squared residuals of the order conditions beyond ``p``.

    Trees with ``p < r <= target`` contribute; ``target`` defaults to
    ``p + 1``.
    """
    q = spec.p + 1 if target is None else target
    if q <= spec.p:
        raise ValueError("target order must exceed the method order")
    wb = _builder(spec)
    terms = []
    for r in range(spec.p + 1, q + 1):
        for t in enumerate_trees(r):
            terms.append(sqr(sub(wb.weight(t), Const(Interval.from_fraction(Fraction(1, t.gamma))))))
    return total(terms)


def opt_problem(spec: MethodSpec, target: int | None = None, relax_eps: float = 1e-9) -> OptProblem:
    return OptProblem(build_csp(spec), build_cost(spec, target), relax_eps)


# ---------------------------------------------------------------------------
# tableaux


@dataclass(frozen=True)
class ButcherTableau:
    A: tuple[tuple[Interval, ...], ...]
    b: tuple[Interval, ...]
    c: tuple[Interval, ...]
    order: int = 0
    flags: tuple[str, ...] = ()
    note: str = ""

    def __post_init__(self):
        A = tuple(tuple(_iv(x) for x in row) for row in self.A)
        b = tuple(_iv(x) for x in self.b)
        c = tuple(_iv(x) for x in self.c)
        s = len(b)
        if len(c) != s or len(A) != s or any(len(row) != s for row in A):
            raise ValueError("tableau dimensions are inconsistent")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def s(self) -> int:
        return len(self.b)

    @property
    def is_explicit(self) -> bool:
        return all(self.A[i][j] == ZERO for i in range(self.s) for j in range(i, self.s))

    def coefficients(self) -> dict[str, Interval]:
        names = tableau_names(self.s)
        out = dict(zip(names["b"], self.b))
        out.update(zip(names["c"], self.c))
        for i in range(self.s):
            for j in range(self.s):
                out[names["a"][i][j]] = self.A[i][j]
        return out

    def replace_entry(self, name: str, value: Interval) -> ButcherTableau:
        """Copy with one coefficient (``b0``, ``c1``, ``a01``...) replaced."""
        coeffs = self.coefficients()
        if name not in coeffs:
            raise KeyError(f"unknown tableau coefficient {name!r}")
        coeffs[name] = value
        return ButcherTableau.from_coefficients(self.s, coeffs, self.order, self.flags, self.note)

    @staticmethod
    def from_coefficients(s, coeffs: Mapping[str, Interval], order=0, flags=(), note="") -> ButcherTableau:
        names = tableau_names(s)
        get = lambda n: _iv(coeffs.get(n, ZERO))  # noqa: E731
        return ButcherTableau(
            tuple(tuple(get(n) for n in row) for row in names["a"]),
            tuple(get(n) for n in names["b"]),
            tuple(get(n) for n in names["c"]),
            order,
            flags,
            note,
        )

    @staticmethod
    def from_box(box: Box, spec: MethodSpec, note: str = "") -> ButcherTableau:
        coeffs = {n: box[n] for n in box.names}
        return ButcherTableau.from_coefficients(spec.s, coeffs, spec.p, spec.flags, note)

    @staticmethod
    def from_values(A, b, c=None, order=0, flags=(), note="") -> ButcherTableau:
        """Build from numbers; ``Fraction``/``int`` entries get tight enclosures.

        ``c`` defaults to the row sums of ``A``.
        """
        A = [[_iv(x) for x in row] for row in A]
        if c is None:
            c = []
            for row in A:
                acc = ZERO
                for x in row:
                    acc = acc + x
                c.append(acc)
        return ButcherTableau(A, b, c, order, flags, note)

    def to_text(self) -> str:
        return serialize(self)

    def __str__(self) -> str:
        return serialize(self)


def _iv(x) -> Interval:
    if isinstance(x, Interval):
        return x
    if isinstance(x, (Fraction, int)):
        return Interval.from_fraction(Fraction(x))
    if isinstance(x, str):
        return parse_interval(x)
    return Interval(float(x), float(x))


# ---------------------------------------------------------------------------
# order verification


@dataclass(frozen=True)
class OrderRow:
    tree: RootedTree
    value: Interval
    rhs: Fraction

    @property
    def order(self) -> int:
        return self.tree.order

    @property
    def holds(self) -> bool:
        return self.value.contains(Interval.from_fraction(self.rhs))


@dataclass(frozen=True)
class OrderReport:
    order: int
    rows: tuple[OrderRow, ...]
    row_sums: tuple[Interval, ...]
    distance: Interval

    @property
    def passed(self) -> bool:
        return all(r.holds for r in self.rows) and self.row_sums_ok

    @property
    def row_sums_ok(self) -> bool:
        return all(r.contains(0.0) for r in self.row_sums)

    @property
    def achieved_order(self) -> int:
        """Largest q <= order whose conditions all hold by inclusion."""
        q = 0
        for r in range(1, self.order + 1):
            if all(row.holds for row in self.rows if row.order == r):
                q = r
            else:
                break
        return q

    def table(self) -> str:
        lines = [f"{'order':>5}  {'tree':<20} {'weight':<48} {'condition':<22} status"]
        for r in self.rows:
            ok = "ok" if r.holds else "FAIL"
            rhs = f"{r.rhs.numerator}/{r.rhs.denominator}" if r.rhs.denominator != 1 else str(r.rhs.numerator)
            lines.append(f"{r.order:>5}  {str(r.tree):<20} {format_number(r.value):<48} {rhs:<22} {ok}")
        for i, v in enumerate(self.row_sums):
            ok = "ok" if v.contains(0.0) else "FAIL"
            lines.append(f"{'':>5}  {'row sum c' + str(i):<20} {format_number(v):<48} {'0':<22} {ok}")
        lines.append(f"distance to order {self.order + 1}: {format_number(self.distance)}")
        return "\n".join(lines)


def _const_builder(t: ButcherTableau) -> WeightBuilder:
    return WeightBuilder(t.s, True, {k: Const(v) for k, v in t.coefficients().items()})


def _evaluate_all(exprs: Sequence[Expr]) -> list[Interval]:
    tape = compile_tape(list(exprs), {})
    lo, hi = tape.eval(np.zeros(0), np.zeros(0))
    return [Interval(a, b) if a <= b else Interval(math.inf, -math.inf) for a, b in zip(lo, hi)]


def order_distance(t: ButcherTableau, q: int) -> Interval:
    """Euclidean norm of the residuals of all order-``q`` conditions."""
    wb = _const_builder(t)
    terms = [sqr(sub(wb.weight(tr), Const(Interval.from_fraction(Fraction(1, tr.gamma))))) for tr in enumerate_trees(q)]
    return _evaluate_all([sqrt(total(terms))])[0]


def verify_order(t: ButcherTableau, p: int) -> OrderReport:
    """Inclusion test of every condition with at most ``p`` nodes."""
    wb = _const_builder(t)
    trees = trees_up_to(p)
    vals = _evaluate_all([wb.weight(tr) for tr in trees])
    rows = tuple(OrderRow(tr, v, Fraction(1, tr.gamma)) for tr, v in zip(trees, vals))
    sums = _evaluate_all([sub(wb.c[i], total(wb.a[i])) for i in range(t.s)])
    return OrderReport(p, rows, tuple(sums), order_distance(t, p + 1))


# ---------------------------------------------------------------------------
# interchange format


class TableauParseError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_TOKEN = re.compile(r"[^\s\[]*\[[^\]]*\]|[^\s|]+|\|")


def serialize(t: ButcherTableau) -> str:
    lines = ["rk-tableau v1", f"stages {t.s}", f"order {t.order}", "flags" + "".join(" " + f for f in t.flags)]
    if t.note:
        lines.append(f"note {t.note}")
    for i in range(t.s):
        lines.append(format_number(t.c[i]) + " | " + " ".join(format_number(x) for x in t.A[i]))
    lines.append("---")
    lines.append(" ".join(format_number(x) for x in t.b))
    return "\n".join(lines) + "\n"


def _tokens(text: str, lineno: int):
    for m in _TOKEN.finditer(text):
        yield m.group(0), m.start() + 1


def _number(tok: str, lineno: int, col: int) -> Interval:
    try:
        return parse_interval(tok)
    except ValueError as exc:
        raise TableauParseError(lineno, col, str(exc)) from None


def parse_tableau(text: str) -> ButcherTableau:
    lines = []
    for k, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if body.strip():
            lines.append((k, body))
    pos = 0

    def expect(keyword: str):
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 1
            raise TableauParseError(last + 1, 1, f"missing '{keyword}' line")
        k, body = lines[pos]
        parts = body.split(None, 1)
        if not parts or parts[0] != keyword:
            col = len(body) - len(body.lstrip()) + 1
            raise TableauParseError(k, col, f"expected '{keyword}'")
        pos += 1
        return k, body, (parts[1].strip() if len(parts) > 1 else "")

    k, body, rest = expect("rk-tableau")
    if rest != "v1":
        raise TableauParseError(k, body.index("rk-tableau") + 11, f"unsupported format version {rest!r}")
    k, body, rest = expect("stages")
    try:
        s = int(rest)
        if s < 1:
            raise ValueError
    except ValueError:
        raise TableauParseError(k, body.index("stages") + 8, f"invalid stage count {rest!r}") from None
    k, body, rest = expect("order")
    try:
        order = int(rest)
    except ValueError:
        raise TableauParseError(k, body.index("order") + 7, f"invalid order {rest!r}") from None
    k, body, rest = expect("flags")
    flags = tuple(rest.split())
    for f in flags:
        if f not in FLAGS:
            raise TableauParseError(k, body.index(f) + 1, f"unknown flag {f!r}")
    note = ""
    if pos < len(lines) and lines[pos][1].split(None, 1)[0] == "note":
        note = lines[pos][1].split(None, 1)[1].strip() if len(lines[pos][1].split(None, 1)) > 1 else ""
        pos += 1
    A, c = [], []
    for i in range(s):
        if pos >= len(lines):
            raise TableauParseError(lines[-1][0] + 1, 1, f"expected {s} tableau rows, found {i}")
        k, body = lines[pos]
        pos += 1
        toks = list(_tokens(body, k))
        if len(toks) < 2 or toks[1][0] != "|":
            raise TableauParseError(k, toks[0][1] if toks else 1, "expected 'c_i | a_i1 ... a_is'")
        entries = toks[2:]
        if len(entries) != s:
            col = entries[-1][1] if entries else toks[1][1]
            raise TableauParseError(k, col, f"expected {s} entries in row {i}, found {len(entries)}")
        c.append(_number(toks[0][0], k, toks[0][1]))
        A.append([_number(tk, k, col) for tk, col in entries])
    if pos >= len(lines) or lines[pos][1].strip() != "---":
        k = lines[pos][0] if pos < len(lines) else lines[-1][0] + 1
        raise TableauParseError(k, 1, "expected separator '---'")
    pos += 1
    if pos >= len(lines):
        raise TableauParseError(lines[-1][0] + 1, 1, "missing weights line")
    k, body = lines[pos]
    pos += 1
    toks = list(_tokens(body, k))
    if len(toks) != s:
        raise TableauParseError(k, toks[-1][1] if toks else 1, f"expected {s} weights, found {len(toks)}")
    b = [_number(tk, k, col) for tk, col in toks]
    if pos < len(lines):
        raise TableauParseError(lines[pos][0], 1, "unexpected trailing content")
    return ButcherTableau(A, b, c, order, flags, note)


def read_tableau(path) -> ButcherTableau:
    with open(path) as fh:
        return parse_tableau(fh.read())


def write_tableau(t: ButcherTableau, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(t))


# ---------------------------------------------------------------------------
# second pass after relaxed optimisation


_PIN_LINE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(<=|>=|<|>|=|in)\s*(.+?)\s*$")


def parse_pins(text: str) -> list[Constraint]:
    """Pin file: one bound per line, ``x > 0.1``, ``x <= 2``, ``x in [lo,hi]``, ``x = v``."""
    out: list[Constraint] = []
    for k, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip().rstrip(";")
        if not body:
            continue
        m = _PIN_LINE.match(body)
        if not m:
            raise TableauParseError(k, 1, f"cannot parse pin {body!r}")
        name, op, val = m.groups()
        try:
            v = parse_interval(val)
        except ValueError as exc:
            raise TableauParseError(k, m.start(3) + 1, str(exc)) from None
        if op in (">", ">="):
            out += pin(name, lo=v.lo, strict=op == ">")
        elif op in ("<", "<="):
            out += pin(name, hi=v.hi, strict=op == "<")
        else:
            out += pin(name, lo=v.lo, hi=v.hi)
    return out


def auto_pins(spec: MethodSpec, incumbent: Box, halfwidth: float = 1e-9) -> list[Constraint]:
    """Pin the parametric coefficients of the order-``p`` system near a point.

    The equality Jacobian at the incumbent picks a square pivot block; the
    remaining coefficients parametrise the solution family and are pinned
    to ``x +- halfwidth * max(1, |x|)``.
    """
    csp = build_csp(spec)
    eqs = EqualitySystem([c.body for c in csp.equalities], csp.names)
    x = np.array([incumbent[n].midpoint for n in csp.names])
    J = eqs.point_jacobian(x)
    sel = _select_block(J, J)
    cols = set() if sel is None else set(int(j) for j in sel[1])
    pins: list[Constraint] = []
    for k, n in enumerate(csp.names):
        if k in cols:
            continue
        r = halfwidth * max(1.0, abs(x[k]))
        pins += pin(n, lo=x[k] - r, hi=x[k] + r)
    return pins


def validate(
    spec: MethodSpec,
    result: OptResult,
    target: int,
    pins: Sequence[Constraint] | None = None,
    config: SolveConfig | None = None,
    zero_tol: float = 1e-8,
) -> tuple[Paving, int]:
    """Second, unrelaxed solve near an optimiser result.

    When the relaxed cost can be zero the target order is reachable and the
    order-``target`` system is refined; otherwise the order-``p`` system is.
    Without explicit ``pins`` the parametric coefficients are pinned around
    the incumbent.  Returns the paving and the order of the system solved.
    """
    order = target if result.cost_bounds.lo <= zero_tol else spec.p
    solve_spec = spec.with_order(order)
    if pins is None:
        pins = auto_pins(solve_spec, result.incumbent)
    return refine(build_csp(solve_spec), pins, config), order


__all__ = [
    "MethodSpec", "ButcherTableau", "OrderRow", "OrderReport", "TableauParseError",
    "structural_constraints", "build_csp", "build_cost", "opt_problem", "verify_order",
    "order_distance", "serialize", "parse_tableau", "read_tableau", "write_tableau",
    "parse_pins", "auto_pins", "validate",
]
