"""Symbolic expressions over named variables.

Expressions are immutable DAG nodes (:class:`Var`, :class:`Const`,
:class:`Unary`, :class:`Binary`).  Nodes compare by identity, so sharing a
sub-expression object means it is evaluated once.  Python operators build
nodes and fold exact constants (``x + 0 -> x``, ``x * 1 -> x``) but never
rewrite ``x * x`` into ``sqr(x)``.

For speed the solver flattens expressions into a :class:`Tape`, a
topologically ordered opcode array consumed by the compiled kernels in
:mod:`rkcp._kernel`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernel as K
from .interval import Box, Interval, as_interval, format_number, parse_interval

# ---------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)

    def __str__(self):
        return to_sexpr(self)


@dataclass(frozen=True, eq=False, slots=True)
class Var(Expr):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, eq=False, slots=True)
class Const(Expr):
    value: Interval

    def __repr__(self):
        return f"Const({self.value})"


UNARY_OPS = ("neg", "sqr", "pow", "sqrt", "sin", "cos", "abs")
BINARY_OPS = ("add", "sub", "mul", "div")


@dataclass(frozen=True, eq=False, slots=True)
class Unary(Expr):
    op: str
    child: Expr
    exponent: int = 0

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operation {self.op!r}")

    def __repr__(self):
        return f"Unary({self.op!r}, {self.child!r})"


@dataclass(frozen=True, eq=False, slots=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operation {self.op!r}")

    def __repr__(self):
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return Var(x)
    return Const(as_interval(x))


def const(x) -> Const:
    return Const(as_interval(x))


def _const_value(e: Expr) -> Interval | None:
    return e.value if isinstance(e, Const) else None


def _is_exact(e: Expr, x: float) -> bool:
    return isinstance(e, Const) and e.value.lo == x and e.value.hi == x


def add(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_exact(a, 0.0):
        return b
    if _is_exact(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("add", a, b)


def sub(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_exact(b, 0.0):
        return a
    if _is_exact(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("sub", a, b)


def mul(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_exact(a, 0.0) or _is_exact(b, 0.0):
        return Const(Interval(0.0, 0.0))
    if _is_exact(a, 1.0):
        return b
    if _is_exact(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("mul", a, b)


def div(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if _is_exact(b, 1.0):
        return a
    if _is_exact(a, 0.0) and not (isinstance(b, Const) and b.value.contains(0.0)):
        return Const(Interval(0.0, 0.0))
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value / b.value)
    return Binary("div", a, b)


def neg(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Const):
        return Const(-a.value)
    return Unary("neg", a)


def sqr(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Const):
        return Const(a.value.sqr())
    return Unary("sqr", a)


def power(a, n: int) -> Expr:
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError("only non-negative integer powers are supported")
    n = int(n)
    a = as_expr(a)
    if n == 0:
        return Const(Interval(1.0, 1.0))
    if n == 1:
        return a
    if n == 2:
        return sqr(a)
    if isinstance(a, Const):
        return Const(a.value**n)
    return Unary("pow", a, n)


def sqrt(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Const):
        return Const(a.value.sqrt())
    return Unary("sqrt", a)


def sin(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Const):
        return Const(a.value.sin())
    return Unary("sin", a)


def cos(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Const):
        return Const(a.value.cos())
    return Unary("cos", a)


def absolute(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Const):
        return Const(abs(a.value))
    return Unary("abs", a)


def total(terms: Iterable) -> Expr:
    """Left-folded sum; the empty sum is the constant 0."""
    out: Expr = Const(Interval(0.0, 0.0))
    for t in terms:
        out = add(out, t)
    return out


def product(factors: Iterable) -> Expr:
    out: Expr = Const(Interval(1.0, 1.0))
    for f in factors:
        out = mul(out, f)
    return out


# ---------------------------------------------------------------------------
# constraints

RELATIONS = {"=": K.REL_EQ, "<=": K.REL_LE, "<": K.REL_LT}


@dataclass(frozen=True, eq=False, slots=True)
class Constraint:
    """``body = 0``, ``body <= 0`` or ``body < 0``.

    Strict inequalities are contracted like their closure; they only differ
    when a box is certified to satisfy the constraint.
    """

    body: Expr
    relation: str = "="

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def is_equality(self) -> bool:
        return self.relation == "="

    def certainly_holds(self, value: Interval) -> bool:
        """True when every point of ``value`` satisfies the relation."""
        if value.is_empty:
            return False
        if self.relation == "=":
            return value.lo == 0.0 and value.hi == 0.0
        if self.relation == "<=":
            return value.hi <= 0.0
        return value.hi < 0.0

    def possibly_holds(self, value: Interval) -> bool:
        if value.is_empty:
            return False
        if self.relation == "=":
            return value.contains(0.0)
        if self.relation == "<=":
            return value.lo <= 0.0
        return value.lo < 0.0

    def __str__(self):
        return f"{to_sexpr(self.body)} {self.relation} 0"


def eq(lhs, rhs=0) -> Constraint:
    return Constraint(sub(lhs, rhs), "=")


def le(lhs, rhs=0) -> Constraint:
    return Constraint(sub(lhs, rhs), "<=")


def lt(lhs, rhs=0) -> Constraint:
    return Constraint(sub(lhs, rhs), "<")


def ge(lhs, rhs=0) -> Constraint:
    return Constraint(sub(rhs, lhs), "<=")


def gt(lhs, rhs=0) -> Constraint:
    return Constraint(sub(rhs, lhs), "<")


# ---------------------------------------------------------------------------
# traversal helpers


def _children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Unary):
        return (e.child,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    return ()


def topological(roots: Sequence[Expr]) -> list[Expr]:
    """Nodes reachable from ``roots``, children before parents."""
    order: list[Expr] = []
    seen: set[int] = set()
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for ch in reversed(_children(node)):
                if id(ch) not in seen:
                    stack.append((ch, False))
    return order


def variables(e: Expr | Constraint | Iterable) -> list[str]:
    """Variable names in first-occurrence order."""
    if isinstance(e, Constraint):
        roots = [e.body]
    elif isinstance(e, Expr):
        roots = [e]
    else:
        roots = [c.body if isinstance(c, Constraint) else c for c in e]
    names: dict[str, None] = {}
    for node in topological(roots):
        if isinstance(node, Var):
            names.setdefault(node.name)
    return list(names)


def node_count(e: Expr) -> int:
    return len(topological([e]))


# ---------------------------------------------------------------------------
# evaluation


def _lookup(box, name: str) -> Interval:
    try:
        return box[name]
    except KeyError:
        raise KeyError(f"unknown variable {name!r}") from None


def evaluate(e: Expr, box: Box | Mapping[str, Interval]) -> Interval:
    """Natural interval extension of ``e`` over ``box``."""
    if isinstance(box, Mapping):
        box = {k: as_interval(v) for k, v in box.items()}
    vals: dict[int, Interval] = {}
    for node in topological([e]):
        if isinstance(node, Var):
            if node.name not in box:
                raise KeyError(f"unknown variable {node.name!r}")
            v = _lookup(box, node.name)
        elif isinstance(node, Const):
            v = node.value
        elif isinstance(node, Unary):
            x = vals[id(node.child)]
            if node.op == "neg":
                v = -x
            elif node.op == "sqr":
                v = x.sqr()
            elif node.op == "pow":
                v = x**node.exponent
            elif node.op == "sqrt":
                v = x.sqrt()
            elif node.op == "sin":
                v = x.sin()
            elif node.op == "cos":
                v = x.cos()
            else:
                v = abs(x)
        else:
            a = vals[id(node.left)]
            b = vals[id(node.right)]
            if node.op == "add":
                v = a + b
            elif node.op == "sub":
                v = a - b
            elif node.op == "mul":
                v = a * b
            else:
                v = a / b
        vals[id(node)] = v
    return vals[id(e)]


def point_evaluator(exprs: Sequence[Expr], names: Sequence[str]):
    """Vectorised float evaluator: ``f(X)`` with ``X`` of shape (N, len(names)).

    Returns an array of shape (N, len(exprs)) computed in ordinary
    round-to-nearest arithmetic.  Intended for sampling-based checks.
    """
    index = {n: i for i, n in enumerate(names)}
    order = topological(list(exprs))
    for node in order:
        if isinstance(node, Var) and node.name not in index:
            raise KeyError(f"unknown variable {node.name!r}")

    def f(X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        vals: dict[int, np.ndarray] = {}
        with np.errstate(all="ignore"):
            for node in order:
                if isinstance(node, Var):
                    v = X[:, index[node.name]]
                elif isinstance(node, Const):
                    v = np.full(X.shape[0], node.value.midpoint if node.value.is_bounded else node.value.lo)
                elif isinstance(node, Unary):
                    x = vals[id(node.child)]
                    v = {
                        "neg": np.negative,
                        "sqr": np.square,
                        "sqrt": np.sqrt,
                        "sin": np.sin,
                        "cos": np.cos,
                        "abs": np.abs,
                    }[node.op](x) if node.op != "pow" else x**node.exponent
                else:
                    a = vals[id(node.left)]
                    b = vals[id(node.right)]
                    v = {"add": np.add, "sub": np.subtract, "mul": np.multiply, "div": np.divide}[node.op](a, b)
                vals[id(node)] = v
        return np.stack([vals[id(e)] for e in exprs], axis=1) if exprs else np.zeros((X.shape[0], 0))

    return f


# ---------------------------------------------------------------------------
# symbolic differentiation (internal)


def _diff_all(e: Expr, name: str, memo: dict[int, Expr]) -> Expr:
    zero = Const(Interval(0.0, 0.0))
    for node in topological([e]):
        key = id(node)
        if key in memo:
            continue
        if isinstance(node, Var):
            d = Const(Interval(1.0, 1.0)) if node.name == name else zero
        elif isinstance(node, Const):
            d = zero
        elif isinstance(node, Unary):
            x = node.child
            dx = memo[id(x)]
            if _is_exact(dx, 0.0):
                d = zero
            elif node.op == "neg":
                d = neg(dx)
            elif node.op == "sqr":
                d = mul(mul(2, x), dx)
            elif node.op == "pow":
                d = mul(mul(node.exponent, power(x, node.exponent - 1)), dx)
            elif node.op == "sqrt":
                d = div(dx, mul(2, node))
            elif node.op == "sin":
                d = mul(cos(x), dx)
            elif node.op == "cos":
                d = neg(mul(sin(x), dx))
            else:
                raise ValueError("abs is not differentiable")
        else:
            a, b = node.left, node.right
            da, db = memo[id(a)], memo[id(b)]
            if node.op == "add":
                d = add(da, db)
            elif node.op == "sub":
                d = sub(da, db)
            elif node.op == "mul":
                d = add(mul(da, b), mul(a, db))
            else:
                d = div(sub(mul(da, b), mul(a, db)), sqr(b))
        memo[key] = d
    return memo[id(e)]


def differentiate(e: Expr, name: str) -> Expr:
    """Partial derivative of ``e`` with respect to variable ``name``."""
    return _diff_all(e, name, {})


# ---------------------------------------------------------------------------
# tapes

_UNARY_CODES = {
    "neg": K.OP_NEG,
    "sqr": K.OP_SQR,
    "pow": K.OP_POW,
    "sqrt": K.OP_SQRT,
    "sin": K.OP_SIN,
    "cos": K.OP_COS,
    "abs": K.OP_ABS,
}
_BINARY_CODES = {"add": K.OP_ADD, "sub": K.OP_SUB, "mul": K.OP_MUL, "div": K.OP_DIV}


@dataclass
class Tape:
    """Flattened DAG: node ``k`` reads its operands from nodes with smaller index."""

    op: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    clo: np.ndarray
    chi: np.ndarray
    roots: np.ndarray
    const_ids: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return int(self.op.shape[0])

    def work(self):
        return np.empty(self.size), np.empty(self.size)

    def eval(self, lo: np.ndarray, hi: np.ndarray):
        vlo, vhi = self.work()
        outlo = np.empty(len(self.roots))
        outhi = np.empty(len(self.roots))
        K.eval_roots(self.op, self.a1, self.a2, self.clo, self.chi, self.roots, lo, hi, vlo, vhi, outlo, outhi)
        return outlo, outhi


def compile_tape(roots: Sequence[Expr], index: Mapping[str, int]) -> Tape:
    order = topological(list(roots))
    pos: dict[int, int] = {}
    op = np.zeros(len(order), np.int64)
    a1 = np.zeros(len(order), np.int64)
    a2 = np.zeros(len(order), np.int64)
    clo: list[float] = []
    chi: list[float] = []
    const_ids: list[int] = []
    for k, node in enumerate(order):
        pos[id(node)] = k
        if isinstance(node, Var):
            if node.name not in index:
                raise KeyError(f"unknown variable {node.name!r}")
            op[k] = K.OP_VAR
            a1[k] = index[node.name]
        elif isinstance(node, Const):
            op[k] = K.OP_CONST
            a1[k] = len(clo)
            const_ids.append(id(node))
            clo.append(node.value.lo)
            chi.append(node.value.hi)
        elif isinstance(node, Unary):
            op[k] = _UNARY_CODES[node.op]
            a1[k] = pos[id(node.child)]
            a2[k] = node.exponent
        else:
            op[k] = _BINARY_CODES[node.op]
            a1[k] = pos[id(node.left)]
            a2[k] = pos[id(node.right)]
    return Tape(
        op,
        a1,
        a2,
        np.array(clo, dtype=np.float64),
        np.array(chi, dtype=np.float64),
        np.array([pos[id(r)] for r in roots], dtype=np.int64),
        tuple(const_ids),
    )


class ConstraintSystem:
    """Constraints compiled into one segmented tape for HC4 propagation.

    Each constraint occupies a contiguous segment whose last node is its
    root, so the kernel can revise constraints one at a time.
    """

    def __init__(self, constraints: Sequence[Constraint], names: Sequence[str]):
        self.constraints = list(constraints)
        self.names = tuple(names)
        index = {n: i for i, n in enumerate(self.names)}
        ops, a1s, a2s, clos, chis = [], [], [], [], []
        cstart, cend, cvars = [], [], []
        self.const_slots: dict[int, list[int]] = {}
        offset = 0
        coffset = 0
        for c in self.constraints:
            t = compile_tape([c.body], index)
            ops.append(t.op)
            a1 = t.a1.copy()
            a2 = t.a2.copy()
            a1[t.op >= K.OP_ADD] += offset
            is_bin = (t.op == K.OP_ADD) | (t.op == K.OP_SUB) | (t.op == K.OP_MUL) | (t.op == K.OP_DIV)
            a2[is_bin] += offset
            a1[t.op == K.OP_CONST] += coffset
            for k, cid in enumerate(t.const_ids):
                self.const_slots.setdefault(cid, []).append(coffset + k)
            a1s.append(a1)
            a2s.append(a2)
            clos.append(t.clo)
            chis.append(t.chi)
            cstart.append(offset)
            offset += t.size
            coffset += len(t.clo)
            cend.append(offset)
            cvars.append(sorted({index[v] for v in variables(c)}))
        cat = lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt)  # noqa: E731
        self.op = cat(ops, np.int64)
        self.a1 = cat(a1s, np.int64)
        self.a2 = cat(a2s, np.int64)
        self.clo = cat(clos, np.float64)
        self.chi = cat(chis, np.float64)
        self.cstart = np.array(cstart, np.int64)
        self.cend = np.array(cend, np.int64)
        self.crel = np.array([RELATIONS[c.relation] for c in self.constraints], np.int64)
        self.cvptr = np.array([0] + list(np.cumsum([len(v) for v in cvars])), np.int64)
        self.cvars = np.array([v for vs in cvars for v in vs], np.int64)
        n = len(self.names)
        per_var: list[list[int]] = [[] for _ in range(n)]
        for ci, vs in enumerate(cvars):
            for v in vs:
                per_var[v].append(ci)
        self.vcptr = np.array([0] + list(np.cumsum([len(v) for v in per_var])), np.int64)
        self.vcons = np.array([c for cs in per_var for c in cs], np.int64)
        self._vlo = np.empty(max(offset, 1))
        self._vhi = np.empty(max(offset, 1))

    def set_const(self, node: Const, value: Interval) -> None:
        """Overwrite a compiled constant, e.g. a moving cost bound."""
        for k in self.const_slots.get(id(node), []):
            self.clo[k] = value.lo
            self.chi[k] = value.hi

    def revise(self, ci: int, lo: np.ndarray, hi: np.ndarray) -> bool:
        """HC4-revise constraint ``ci`` in place.  False when infeasible."""
        return bool(
            K.hc4(
                self.op, self.a1, self.a2, self.clo, self.chi,
                self.cstart[ci], self.cend[ci], self.crel[ci],
                lo, hi, self._vlo, self._vhi,
            )
        )

    def propagate(self, lo: np.ndarray, hi: np.ndarray, ratio: float = 0.01, max_revise: int | None = None) -> bool:
        if not self.constraints:
            return bool(np.all(lo <= hi))
        if max_revise is None:
            max_revise = 50 * len(self.constraints) + 100
        return bool(
            K.propagate(
                self.op, self.a1, self.a2, self.clo, self.chi,
                self.cstart, self.cend, self.crel, self.cvptr, self.cvars,
                self.vcptr, self.vcons, lo, hi, self._vlo, self._vhi,
                ratio, max_revise,
            )
        )

    def values(self, lo: np.ndarray, hi: np.ndarray) -> list[Interval]:
        """Interval value of every constraint body over the box."""
        K.forward(self.op, self.a1, self.a2, self.clo, self.chi, 0, self.op.shape[0], lo, hi, self._vlo, self._vhi)
        return [Interval(self._vlo[e - 1], self._vhi[e - 1]) for e in self.cend]


def _box_arrays(box: Box, names: Sequence[str]):
    b = box.reorder(names) if tuple(names) != box.names else box
    return b.lo.copy(), b.hi.copy()


def hc4_revise(c: Constraint, box: Box) -> Box:
    """Forward-backward contraction of ``box`` by one constraint."""
    if box.is_empty:
        return Box.empty(box.names)
    for v in variables(c):
        if v not in box:
            raise KeyError(f"unknown variable {v!r}")
    system = ConstraintSystem([c], box.names)
    lo, hi = box.lo.copy(), box.hi.copy()
    if not system.revise(0, lo, hi):
        return Box.empty(box.names)
    return Box(box.names, lo, hi)


# ---------------------------------------------------------------------------
# interval Newton


class EqualitySystem:
    """Equalities ``f(x) = 0`` with an interval Jacobian for Newton steps."""

    def __init__(self, bodies: Sequence[Expr], names: Sequence[str]):
        self.bodies = list(bodies)
        self.names = tuple(names)
        index = {n: i for i, n in enumerate(self.names)}
        self.f_tape = compile_tape(self.bodies, index)
        rows, cols, derivs = [], [], []
        for i, body in enumerate(self.bodies):
            for name in variables(body):
                d = differentiate(body, name)
                if _is_exact(d, 0.0):
                    continue
                rows.append(i)
                cols.append(index[name])
                derivs.append(d)
        self.j_rows = np.array(rows, np.int64)
        self.j_cols = np.array(cols, np.int64)
        self.j_tape = compile_tape(derivs, index) if derivs else None
        self.m = len(self.bodies)
        self.n = len(self.names)

    def eval_f(self, lo, hi):
        return self.f_tape.eval(lo, hi)

    def eval_jacobian(self, lo, hi):
        Jlo = np.zeros((self.m, self.n))
        Jhi = np.zeros((self.m, self.n))
        if self.j_tape is not None:
            vlo, vhi = self.j_tape.eval(lo, hi)
            Jlo[self.j_rows, self.j_cols] = vlo
            Jhi[self.j_rows, self.j_cols] = vhi
        return Jlo, Jhi

    def point_jacobian(self, x: np.ndarray) -> np.ndarray:
        Jlo, Jhi = self.eval_jacobian(x, x)
        return 0.5 * Jlo + 0.5 * Jhi

    def point_residual(self, x: np.ndarray) -> np.ndarray:
        flo, fhi = self.eval_f(x, x)
        return 0.5 * flo + 0.5 * fhi

    def newton_step(self, lo, hi, rows=None, cols=None, center=None, jac=None, slack=0.0):
        """One preconditioned Hansen-Sengupta step on the selected block.

        ``rows`` picks equations and ``cols`` the variables solved for; other
        variables act as interval parameters.  Returns ``(status, lo, hi)``
        where status is ``"empty"``, ``"proved"`` (unique zero of the block
        for every parameter value), ``"contracted"`` or ``"singular"``.
        A positive ``slack`` solves ``|f| <= slack`` instead of ``f = 0``.
        """
        rows = np.arange(self.m) if rows is None else np.asarray(rows, np.int64)
        cols = np.arange(self.n) if cols is None else np.asarray(cols, np.int64)
        if jac is None:
            jac = self.eval_jacobian(lo, hi)
        Jlo = jac[0][np.ix_(rows, cols)]
        Jhi = jac[1][np.ix_(rows, cols)]
        with np.errstate(invalid="ignore"):  # unbounded entries give nan, handled below
            mid = 0.5 * Jlo + 0.5 * Jhi
        if not np.all(np.isfinite(mid)):
            return "singular", lo, hi
        try:
            Y = np.linalg.inv(mid)
        except np.linalg.LinAlgError:
            return "singular", lo, hi
        if not np.all(np.isfinite(Y)):
            return "singular", lo, hi
        xs = np.array([Interval(lo[j], hi[j]).midpoint for j in cols]) if center is None else center
        clo, chi = lo.copy(), hi.copy()
        clo[cols] = xs
        chi[cols] = xs
        flo, fhi = self.eval_f(clo, chi)
        if slack > 0.0:
            flo = np.nextafter(flo - slack, -np.inf)
            fhi = np.nextafter(fhi + slack, np.inf)
        Alo, Ahi, blo, bhi = K.precondition(Y, Jlo, Jhi, flo[rows], fhi[rows])
        xlo = lo[cols].copy()
        xhi = hi[cols].copy()
        ok, inner = K.gauss_seidel(Alo, Ahi, blo, bhi, xs, xlo, xhi)
        if not ok:
            return "empty", lo, hi
        nlo, nhi = lo.copy(), hi.copy()
        nlo[cols] = xlo
        nhi[cols] = xhi
        return ("proved" if inner else "contracted"), nlo, nhi


def newton_contract(system: Sequence[Constraint], box: Box) -> Box:
    """One interval Newton (Gauss-Seidel) contraction of a square system."""
    bodies = [c.body if isinstance(c, Constraint) else c for c in system]
    if len(bodies) != len(box.names):
        raise ValueError("newton_contract needs as many equations as variables")
    if box.is_empty:
        return Box.empty(box.names)
    eqs = EqualitySystem(bodies, box.names)
    status, lo, hi = eqs.newton_step(box.lo.copy(), box.hi.copy())
    if status == "empty":
        return Box.empty(box.names)
    if status == "singular":
        return box.copy()
    return Box(box.names, lo, hi)


# ---------------------------------------------------------------------------
# s-expressions

_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
_FROM_SYMBOL = {v: k for k, v in _SYMBOL.items()}


def to_sexpr(e: Expr) -> str:
    """Prefix text form, e.g. ``(+ (* b0 c0) (* b1 c1))``."""
    out: dict[int, str] = {}
    for node in topological([e]):
        if isinstance(node, Var):
            s = node.name
        elif isinstance(node, Const):
            s = format_number(node.value)
        elif isinstance(node, Unary):
            ch = out[id(node.child)]
            s = f"(pow {ch} {node.exponent})" if node.op == "pow" else f"({node.op} {ch})"
        else:
            s = f"({_SYMBOL[node.op]} {out[id(node.left)]} {out[id(node.right)]})"
        out[id(node)] = s
    return out[id(e)]


_TOKEN = re.compile(r"\s*(\(|\)|\[[^\]]*\]|[^\s()]+)")


def parse_sexpr(text: str) -> Expr:
    """Inverse of :func:`to_sexpr`.  Repeated variable names share one node."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected character at offset {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    var_nodes: dict[str, Var] = {}

    def atom(tok: str) -> Expr:
        if tok.startswith("[") or re.match(r"^[+-]?(\d|\.\d|inf)", tok) or "/" in tok[1:]:
            try:
                return Const(parse_interval(tok))
            except ValueError:
                pass
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", tok):
            raise ValueError(f"bad token {tok!r}")
        return var_nodes.setdefault(tok, Var(tok))

    def parse(i: int) -> tuple[Expr, int]:
        if i >= len(tokens):
            raise ValueError("unexpected end of expression")
        tok = tokens[i]
        if tok != "(":
            if tok == ")":
                raise ValueError("unexpected ')'")
            return atom(tok), i + 1
        head = tokens[i + 1]
        args = []
        j = i + 2
        while j < len(tokens) and tokens[j] != ")":
            if head == "pow" and len(args) == 1:
                args.append(int(tokens[j]))
                j += 1
                continue
            a, j = parse(j)
            args.append(a)
        if j >= len(tokens):
            raise ValueError("missing ')'")
        if head in _FROM_SYMBOL:
            if len(args) != 2:
                raise ValueError(f"{head} takes two arguments")
            return Binary(_FROM_SYMBOL[head], args[0], args[1]), j + 1
        if head == "pow":
            return Unary("pow", args[0], args[1]), j + 1
        if head in UNARY_OPS:
            if len(args) != 1:
                raise ValueError(f"{head} takes one argument")
            return Unary(head, args[0]), j + 1
        raise ValueError(f"unknown operator {head!r}")

    e, end = parse(0)
    if end != len(tokens):
        raise ValueError("trailing tokens after expression")
    return e


def rational(num: int, den: int = 1) -> Const:
    """Tight constant enclosing ``num/den``."""
    return Const(Interval.from_fraction(Fraction(num, den)))


def pi_const() -> Const:
    return Const(Interval(3.141592653589793, K.up(3.141592653589793)))


__all__ = [
    "Expr", "Var", "Const", "Unary", "Binary", "Constraint",
    "add", "sub", "mul", "div", "neg", "sqr", "power", "sqrt", "sin", "cos", "absolute",
    "total", "product", "const", "rational", "as_expr",
    "eq", "le", "lt", "ge", "gt",
    "evaluate", "point_evaluator", "differentiate", "variables", "topological",
    "hc4_revise", "newton_contract", "to_sexpr", "parse_sexpr",
    "Tape", "compile_tape", "ConstraintSystem", "EqualitySystem",
]
