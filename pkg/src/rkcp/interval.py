"""Outward-rounded intervals and named boxes.

An :class:`Interval` is an immutable pair of binary64 bounds.  All
arithmetic delegates to the compiled primitives in :mod:`rkcp._kernel`, so
the Python objects and the tape kernels share one rounding implementation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import _kernel as K

INF = math.inf


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo = float(self.lo)
        hi = float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval bound is NaN")
        if lo > hi and not (lo == INF and hi == -INF):
            raise ValueError(f"invalid interval: lo={lo!r} > hi={hi!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    # construction -----------------------------------------------------------

    @staticmethod
    def point(x: float) -> Interval:
        return Interval(x, x)

    @staticmethod
    def hull_of(values: Iterable[float]) -> Interval:
        vals = list(values)
        return Interval(min(vals), max(vals))

    @staticmethod
    def from_fraction(q: Fraction | int) -> Interval:
        """Tightest binary64 enclosure of an exact rational."""
        q = Fraction(q)
        x = float(q)
        fx = Fraction(x)
        if fx == q:
            return Interval(x, x)
        if fx < q:
            return Interval(x, K.up(x))
        return Interval(K.dn(x), x)

    @staticmethod
    def entire() -> Interval:
        return Interval(-INF, INF)

    # predicates -------------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, x: float | Interval) -> bool:
        if isinstance(x, Interval):
            return x.is_empty or (self.lo <= x.lo and x.hi <= self.hi)
        return self.lo <= x <= self.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def interior_contains(self, x: Interval) -> bool:
        return self.lo < x.lo and x.hi < self.hi

    def overlaps(self, other: Interval) -> bool:
        return max(self.lo, other.lo) <= min(self.hi, other.hi)

    # measures ---------------------------------------------------------------

    @property
    def width(self) -> float:
        if self.is_empty:
            return 0.0
        return K.add_ru(self.hi, -self.lo)

    @property
    def midpoint(self) -> float:
        if self.is_empty:
            raise ValueError("midpoint of empty interval")
        if not self.is_bounded:
            raise ValueError("unbounded")
        if self.lo == self.hi:
            return self.lo
        m = 0.5 * self.lo + 0.5 * self.hi
        return min(max(m, self.lo), self.hi)

    @property
    def radius(self) -> float:
        m = self.midpoint
        return max(K.add_ru(m, -self.lo), K.add_ru(self.hi, -m))

    @property
    def magnitude(self) -> float:
        if self.is_empty:
            return 0.0
        return max(abs(self.lo), abs(self.hi))

    @property
    def mignitude(self) -> float:
        if self.is_empty or self.contains(0.0):
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    # set operations ---------------------------------------------------------

    def intersect(self, other: Interval) -> Interval:
        lo, hi = K.meet(self.lo, self.hi, other.lo, other.hi)
        return Interval(lo, hi)

    def __and__(self, other: Interval) -> Interval:
        return self.intersect(other)

    def hull(self, other: Interval) -> Interval:
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __or__(self, other: Interval) -> Interval:
        return self.hull(other)

    def inflate(self, abs_eps: float, rel_eps: float = 0.0) -> Interval:
        r = abs_eps + rel_eps * self.magnitude
        return Interval(K.add_rd(self.lo, -r), K.add_ru(self.hi, r))

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        o = as_interval(other)
        return Interval(*K.i_add(self.lo, self.hi, o.lo, o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = as_interval(other)
        return Interval(*K.i_sub(self.lo, self.hi, o.lo, o.hi))

    def __rsub__(self, other):
        return as_interval(other) - self

    def __mul__(self, other):
        o = as_interval(other)
        return Interval(*K.i_mul(self.lo, self.hi, o.lo, o.hi))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_interval(other)
        return Interval(*K.i_div(self.lo, self.hi, o.lo, o.hi))

    def __rtruediv__(self, other):
        return as_interval(other) / self

    def __neg__(self):
        return Interval(*K.i_neg(self.lo, self.hi))

    def __pos__(self):
        return self

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        return Interval(*K.i_pow(self.lo, self.hi, int(n)))

    def sqr(self) -> Interval:
        return Interval(*K.i_sqr(self.lo, self.hi))

    def sqrt(self) -> Interval:
        return Interval(*K.i_sqrt(self.lo, self.hi))

    def sin(self) -> Interval:
        return Interval(*K.i_sin(self.lo, self.hi))

    def cos(self) -> Interval:
        return Interval(*K.i_cos(self.lo, self.hi))

    def __abs__(self) -> Interval:
        return Interval(*K.i_abs(self.lo, self.hi))

    def div_pieces(self, other: Interval) -> list[Interval]:
        """Relational division split into at most two disjoint pieces."""
        n, l1, h1, l2, h2 = K.i_div_pieces(self.lo, self.hi, other.lo, other.hi)
        return [Interval(l1, h1), Interval(l2, h2)][:n]

    # text -------------------------------------------------------------------

    def __str__(self) -> str:
        return format_interval(self)

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


EMPTY = Interval(INF, -INF)


def as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    if isinstance(x, Fraction):
        return Interval.from_fraction(x)
    if isinstance(x, (int, np.integer)) and abs(int(x)) > 2**53:
        return Interval.from_fraction(Fraction(int(x)))
    return Interval(float(x), float(x))


def arith(op: str, a: Interval, b: Interval | int | None = None) -> Interval:
    """Apply a named interval operation (``add``, ``sub``, ``mul``, ...)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "neg":
        return -a
    if op == "sqr":
        return a.sqr()
    if op == "pow":
        return a ** int(b)
    if op == "sqrt":
        return a.sqrt()
    if op == "sin":
        return a.sin()
    if op == "cos":
        return a.cos()
    if op == "abs":
        return abs(a)
    raise ValueError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# text form


def _fmt(x: float) -> str:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _fmt_bound(x: float, upward: bool) -> str:
    """Shortest decimal that parses back to ``x`` under outward rounding.

    A lower bound needs a decimal in ``[x, next float up)``, an upper bound
    one in ``(next float down, x]``.
    """
    if not math.isfinite(x) or (x == int(x) and abs(x) < 1e16):
        return _fmt(x)
    text = repr(x)
    exact = Fraction(x)
    if Fraction(text) == exact:
        return text
    dx = Decimal(x)
    rounding = ROUND_FLOOR if upward else ROUND_CEILING
    for digits in range(17, 30):
        with localcontext() as ctx:
            ctx.prec = digits
            ctx.rounding = rounding
            cand = +dx
        q = Fraction(cand)
        if upward and Fraction(K.dn(x)) < q <= exact:
            break
        if not upward and exact <= q < Fraction(K.up(x)):
            break
    out = format(cand, "f") if -5 <= cand.adjusted() < 16 else format(cand, "e")
    return out


def format_interval(a: Interval) -> str:
    if a.is_empty:
        return "[empty]"
    if a.lo == a.hi and math.isfinite(a.lo):
        # exact expansion keeps the printed bounds ordered
        x = _fmt(a.lo) if Fraction(repr(a.lo)) == Fraction(a.lo) else str(Decimal(a.lo))
        return f"[{x},{x}]"
    return f"[{_fmt_bound(a.lo, False)},{_fmt_bound(a.hi, True)}]"


def format_number(a: Interval) -> str:
    """Scalar text for degenerate intervals, ``[lo,hi]`` otherwise."""
    if not a.is_empty and a.lo == a.hi:
        return _fmt(a.lo)
    return format_interval(a)


_BRACKET = re.compile(r"^\s*\[\s*([^,\]]+?)\s*,\s*([^\]]+?)\s*\]\s*$")
_COMPRESSED = re.compile(r"^\s*([+-]?\d*\.?\d*)\[(\d+),(\d+)\]((?:[eE][+-]?\d+)?)\s*$")


def _parse_float(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return INF
    if t in ("-inf", "-infinity"):
        return -INF
    return float(t)


def _parse_bound(text: str, upward: bool) -> float:
    """Parse a decimal bound, rounding outward when it is not representable."""
    t = text.strip()
    if "/" in t:
        iv = Interval.from_fraction(Fraction(t))
        return iv.hi if upward else iv.lo
    x = _parse_float(t)
    if not math.isfinite(x):
        return x
    exact = Fraction(t)
    fx = Fraction(x)
    if fx == exact:
        return x
    if upward:
        return x if fx > exact else K.up(x)
    return x if fx < exact else K.dn(x)


def parse_interval(text: str) -> Interval:
    """Parse ``[lo,hi]``, ``prefix[d1,d2]``, a scalar or a ``p/q`` rational.

    Bounds that are not exactly representable are rounded outward.  A plain
    scalar denotes the degenerate interval at the nearest binary64 value,
    which round-trips the output of :func:`format_number`.
    """
    t = text.strip()
    if t == "[empty]":
        return EMPTY
    m = _BRACKET.match(t)
    if m:
        lo = _parse_bound(m.group(1), upward=False)
        hi = _parse_bound(m.group(2), upward=True)
        if lo > hi:
            raise ValueError(f"interval lower bound exceeds upper bound in {t!r}")
        return Interval(lo, hi)
    m = _COMPRESSED.match(t)
    if m:
        prefix, d1, d2, exp = m.groups()
        if len(d1) != len(d2):
            raise ValueError(f"compressed interval digits differ in length: {t!r}")
        a, b = prefix + d1 + exp, prefix + d2 + exp
        if Fraction(a) > Fraction(b):
            a, b = b, a
        lo = _parse_bound(a, upward=False)
        hi = _parse_bound(b, upward=True)
        return Interval(lo, hi)
    if "/" in t:
        return Interval.from_fraction(Fraction(t))
    try:
        x = _parse_float(t)
    except ValueError:
        raise ValueError(f"cannot parse interval from {text!r}") from None
    return Interval(x, x)


# ---------------------------------------------------------------------------
# boxes


class Box:
    """An ordered mapping from variable names to intervals.

    Bounds are stored in two float arrays so that solver kernels can work on
    them directly.  A box with any empty component is empty.
    """

    __slots__ = ("names", "lo", "hi", "_index")

    def __init__(self, names: Sequence[str], lo, hi):
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise ValueError("box variable names must be unique")
        self.lo = np.array(lo, dtype=np.float64).reshape(len(self.names))
        self.hi = np.array(hi, dtype=np.float64).reshape(len(self.names))
        self._index = {n: i for i, n in enumerate(self.names)}

    @classmethod
    def from_intervals(cls, items: Mapping[str, Interval] | Iterable[tuple[str, Interval]]):
        pairs = list(items.items()) if isinstance(items, Mapping) else list(items)
        names = [n for n, _ in pairs]
        ivs = [as_interval(v) if not isinstance(v, tuple) else Interval(*v) for _, v in pairs]
        return cls(names, [v.lo for v in ivs], [v.hi for v in ivs])

    @classmethod
    def empty(cls, names: Sequence[str]) -> Box:
        n = len(names)
        return cls(names, np.full(n, INF), np.full(n, -INF))

    def copy(self) -> Box:
        return Box(self.names, self.lo.copy(), self.hi.copy())

    # mapping protocol -------------------------------------------------------

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def __getitem__(self, key) -> Interval:
        i = key if isinstance(key, (int, np.integer)) else self.index(key)
        if self.is_empty:
            return EMPTY
        return Interval(self.lo[i], self.hi[i])

    def __contains__(self, name) -> bool:
        return name in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def items(self):
        return [(n, self[n]) for n in self.names]

    def with_interval(self, name: str, value: Interval) -> Box:
        b = self.copy()
        i = b.index(name)
        b.lo[i] = value.lo
        b.hi[i] = value.hi
        return b

    # geometry ---------------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return bool(np.any(~(self.lo <= self.hi)))

    @property
    def widths(self) -> np.ndarray:
        if self.is_empty:
            return np.zeros(len(self.names))
        return self.hi - self.lo

    @property
    def max_width(self) -> float:
        w = self.widths
        return float(w.max()) if len(w) else 0.0

    @property
    def midpoint(self) -> np.ndarray:
        return np.array([self[i].midpoint for i in range(len(self.names))])

    def contains(self, other) -> bool:
        if isinstance(other, Box):
            if other.is_empty:
                return True
            return all(self[n].contains(other[n]) for n in other.names)
        pt = np.asarray(other, dtype=float)
        return bool(np.all(self.lo <= pt) and np.all(pt <= self.hi))

    def intersect(self, other: Box) -> Box:
        if other.names != self.names:
            other = other.reorder(self.names)
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return Box.empty(self.names)
        return Box(self.names, lo, hi)

    def hull(self, other: Box) -> Box:
        if self.is_empty:
            return other.copy()
        if other.is_empty:
            return self.copy()
        return Box(self.names, np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def overlaps(self, other: Box) -> bool:
        return not self.intersect(other).is_empty

    def reorder(self, names: Sequence[str]) -> Box:
        idx = [self.index(n) for n in names]
        return Box(names, self.lo[idx], self.hi[idx])

    def bisect(self, i: int) -> tuple[Box, Box]:
        m = self[i].midpoint
        left = self.copy()
        right = self.copy()
        left.hi[i] = m
        right.lo[i] = m
        return left, right

    # comparisons / text -----------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Box) or other.names != self.names:
            return False
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty
        return bool(np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi))

    def __hash__(self):
        return hash((self.names, self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self) -> str:
        if self.is_empty:
            return "Box(empty)"
        body = ", ".join(f"{n}: {self[n]}" for n in self.names)
        return "Box{" + body + "}"
