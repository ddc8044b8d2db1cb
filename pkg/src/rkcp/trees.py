"""Rooted trees and Runge-Kutta order conditions.

A tree is stored canonically: its children are sorted by ``(order, level
sequence)`` where the level sequence lists node depths in preorder.  Two
trees are equal exactly when they are isomorphic, and sorting trees by the
same key reproduces the usual textbook row order (bushy before tall).

The order conditions are ``phi(t) = 1/gamma(t)`` for every tree with at
most ``p`` nodes, where ``phi`` is the elementary weight of the tableau.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from .expr import Constraint, Const, Expr, Var, mul, power, rational, sub, total
from .interval import Interval

MAX_ORDER = 10


@dataclass(frozen=True, eq=False)
class RootedTree:
    children: tuple[RootedTree, ...] = ()
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kids = tuple(sorted(self.children, key=lambda t: t.key))
        object.__setattr__(self, "children", kids)
        levels = [0]
        for ch in kids:
            levels.extend(d + 1 for d in ch.level_sequence)
        object.__setattr__(self, "_key", (len(levels), tuple(levels)))

    @staticmethod
    def leaf() -> RootedTree:
        return RootedTree(())

    @staticmethod
    def chain(n: int) -> RootedTree:
        t = RootedTree(())
        for _ in range(n - 1):
            t = RootedTree((t,))
        return t

    @staticmethod
    def star(n: int) -> RootedTree:
        return RootedTree(tuple(RootedTree(()) for _ in range(n - 1)))

    @property
    def key(self) -> tuple:
        return self._key

    @property
    def level_sequence(self) -> tuple[int, ...]:
        return self._key[1]

    @property
    def order(self) -> int:
        return self._key[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, RootedTree) and self._key == other._key

    def __lt__(self, other: RootedTree) -> bool:
        return self._key < other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __str__(self) -> str:
        return "[" + ",".join(str(c) for c in self.children) + "]"

    def __repr__(self) -> str:
        return f"RootedTree({self})"

    # combinatorial coefficients ----------------------------------------------

    @cached_property
    def gamma(self) -> int:
        """Density: r(t) times the product of the children's densities."""
        g = self.order
        for ch in self.children:
            g *= ch.gamma
        return g

    @cached_property
    def symmetry(self) -> int:
        s = 1
        for ch, m in Counter(self.children).items():
            s *= ch.symmetry**m * math.factorial(m)
        return s

    @cached_property
    def alpha(self) -> Fraction:
        """Number of monotonic labellings, r!/(symmetry * gamma)."""
        return Fraction(math.factorial(self.order), self.symmetry * self.gamma)


def parse_tree(text: str) -> RootedTree:
    """Inverse of ``str(tree)``: ``[]`` is a leaf, ``[[],[[]]]`` etc."""
    pos = 0
    t = text.replace(" ", "")

    def node() -> RootedTree:
        nonlocal pos
        if pos >= len(t) or t[pos] != "[":
            raise ValueError(f"expected '[' at column {pos + 1} in {text!r}")
        pos += 1
        kids = []
        while pos < len(t) and t[pos] != "]":
            kids.append(node())
            if pos < len(t) and t[pos] == ",":
                pos += 1
        if pos >= len(t):
            raise ValueError(f"unbalanced brackets in {text!r}")
        pos += 1
        return RootedTree(tuple(kids))

    tree = node()
    if pos != len(t):
        raise ValueError(f"trailing characters in {text!r}")
    return tree


_ENUM_CACHE: dict[int, list[RootedTree]] = {}


def _grow(t: RootedTree) -> set[RootedTree]:
    """All trees obtained by attaching one new leaf somewhere in ``t``."""
    out = {RootedTree(t.children + (RootedTree(()),))}
    for i, ch in enumerate(t.children):
        for g in _grow(ch):
            out.add(RootedTree(t.children[:i] + (g,) + t.children[i + 1 :]))
    return out


def enumerate_trees(p: int) -> list[RootedTree]:
    """All rooted trees with exactly ``p`` nodes, in canonical order."""
    if not isinstance(p, int) or p < 1 or p > MAX_ORDER:
        raise ValueError(f"tree order must be an integer in 1..{MAX_ORDER}, got {p!r}")
    if p not in _ENUM_CACHE:
        if p == 1:
            _ENUM_CACHE[1] = [RootedTree(())]
        else:
            found: set[RootedTree] = set()
            for t in enumerate_trees(p - 1):
                found |= _grow(t)
            _ENUM_CACHE[p] = sorted(found)
    return list(_ENUM_CACHE[p])


def trees_up_to(p: int) -> list[RootedTree]:
    out: list[RootedTree] = []
    for q in range(1, p + 1):
        out.extend(enumerate_trees(q))
    return out


def coefficients(t: RootedTree) -> dict:
    return {"r": t.order, "gamma": Fraction(t.gamma), "alpha": t.alpha}


# ---------------------------------------------------------------------------
# tableau variables and elementary weights


def a_name(i: int, j: int, s: int) -> str:
    return f"a{i}{j}" if s <= 10 else f"a{i}_{j}"


def tableau_names(s: int) -> dict[str, list]:
    return {
        "b": [f"b{i}" for i in range(s)],
        "c": [f"c{i}" for i in range(s)],
        "a": [[a_name(i, j, s) for j in range(s)] for i in range(s)],
    }


class WeightBuilder:
    """Builds elementary weights for one tableau, sharing sub-expressions.

    ``coeffs`` maps tableau variable names to expressions; missing names
    become :class:`Var` nodes.  Mapping an ``a`` entry to the constant 0
    removes it from every sum, which is how structural zeros are applied.
    """

    def __init__(self, s: int, c_substitution: bool = True, coeffs: Mapping[str, Expr] | None = None):
        if s < 1:
            raise ValueError("number of stages must be at least 1")
        self.s = s
        self.c_substitution = c_substitution
        names = tableau_names(s)
        coeffs = dict(coeffs or {})
        get = lambda n: coeffs[n] if n in coeffs else coeffs.setdefault(n, Var(n))  # noqa: E731
        self.b = [get(n) for n in names["b"]]
        self.c = [get(n) for n in names["c"]]
        self.a = [[get(n) for n in row] for row in names["a"]]
        self._g: dict[tuple[RootedTree, int], Expr] = {}
        self._rowsum: dict[int, Expr] = {}
        self._prod: dict[tuple[RootedTree, int], Expr] = {}

    def _leaf(self, i: int) -> Expr:
        if self.c_substitution:
            return self.c[i]
        if i not in self._rowsum:
            self._rowsum[i] = total(self.a[i][j] for j in range(self.s))
        return self._rowsum[i]

    def _product(self, t: RootedTree, i: int) -> Expr:
        key = (t, i)
        if key not in self._prod:
            out: Expr = Const(Interval(1.0, 1.0))
            for ch, m in Counter(t.children).items():
                out = mul(out, power(self.g(ch, i), m))
            self._prod[key] = out
        return self._prod[key]

    def g(self, t: RootedTree, i: int) -> Expr:
        """Stage-``i`` internal weight of subtree ``t``."""
        key = (t, i)
        if key not in self._g:
            if not t.children:
                val = self._leaf(i)
            else:
                val = total(mul(self.a[i][j], self._product(t, j)) for j in range(self.s))
            self._g[key] = val
        return self._g[key]

    def weight(self, t: RootedTree) -> Expr:
        return total(mul(self.b[i], self._product(t, i)) for i in range(self.s))


def elementary_weight(t: RootedTree, s: int, c_substitution: bool = True, coeffs=None) -> Expr:
    """The polynomial phi(t) in the tableau variables b_i, a_ij, c_i."""
    return WeightBuilder(s, c_substitution, coeffs).weight(t)


@dataclass(frozen=True, eq=False)
class OrderCondition:
    tree: RootedTree
    weight: Expr
    rhs: Fraction

    @property
    def residual(self) -> Expr:
        return sub(self.weight, rational(self.rhs.numerator, self.rhs.denominator))

    def constraint(self) -> Constraint:
        return Constraint(self.residual, "=")


def order_conditions(
    s: int, p: int, c_substitution: bool = True, coeffs=None, builder: WeightBuilder | None = None
) -> list[OrderCondition]:
    """One condition per tree with at most ``p`` nodes."""
    if p < 1 or p > 8:
        raise ValueError("order must be in 1..8")
    wb = builder or WeightBuilder(s, c_substitution, coeffs)
    return [OrderCondition(t, wb.weight(t), Fraction(1, t.gamma)) for t in trees_up_to(p)]


__all__ = [
    "RootedTree", "parse_tree", "enumerate_trees", "trees_up_to", "coefficients",
    "elementary_weight", "order_conditions", "OrderCondition", "WeightBuilder",
    "tableau_names", "a_name",
]
