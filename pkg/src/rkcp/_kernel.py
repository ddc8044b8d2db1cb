"""Compiled interval primitives and expression-tape kernels.

Every scalar routine takes interval bounds as plain floats and returns a
``(lo, hi)`` tuple.  The empty interval is encoded as ``lo > hi`` (by
convention ``(inf, -inf)``).

Addition, subtraction, multiplication, division and square root use
error-free transformations (TwoSum / Dekker product) to find the exact
rounding direction of the round-to-nearest result, so their enclosures are
as tight as true directed rounding.  When an operand is outside the range
where those transformations are exact the code falls back to widening by
one ulp.  Transcendentals are widened by two ulps.

The tape kernels evaluate and contract expressions that were flattened
into topologically ordered opcode arrays by :mod:`rkcp.expr`.
"""

import math

import numpy as np
from numba import njit

INF = math.inf

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_SQR = 7
OP_POW = 8
OP_SQRT = 9
OP_SIN = 10
OP_COS = 11
OP_ABS = 12

REL_EQ = 0
REL_LE = 1
REL_LT = 2

_SPLIT = 134217729.0  # 2**27 + 1
_EFT_MAX = 1e300
_EFT_MIN = 1e-280
_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


@njit(cache=True)
def dn(x):
    return np.nextafter(x, -INF)


@njit(cache=True)
def up(x):
    return np.nextafter(x, INF)


@njit(cache=True)
def is_empty(lo, hi):
    return not (lo <= hi)


# ---------------------------------------------------------------------------
# directed scalar operations


@njit(cache=True)
def _two_sum_err(a, b, s):
    bp = s - a
    ap = s - bp
    return (a - ap) + (b - bp)


@njit(cache=True)
def add_rd(a, b):
    s = a + b
    if a == 0.0:
        return b
    if b == 0.0:
        return a
    if not math.isfinite(s):
        return s if s == -INF or (a == INF or b == INF) else dn(s)
    e = _two_sum_err(a, b, s)
    return s if e >= 0.0 else dn(s)


@njit(cache=True)
def add_ru(a, b):
    s = a + b
    if a == 0.0:
        return b
    if b == 0.0:
        return a
    if not math.isfinite(s):
        return s if s == INF or (a == -INF or b == -INF) else up(s)
    e = _two_sum_err(a, b, s)
    return s if e <= 0.0 else up(s)


@njit(cache=True)
def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True)
def _prod_err(a, b, p):
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


@njit(cache=True)
def _eft_ok(a, b, p):
    ap = abs(p)
    return (
        ap > _EFT_MIN and ap < _EFT_MAX and abs(a) < _EFT_MAX and abs(b) < _EFT_MAX
    )


@njit(cache=True)
def mul_rd(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if not math.isfinite(p):
        return p if p == -INF or math.isinf(a) or math.isinf(b) else dn(p)
    if not _eft_ok(a, b, p):
        return dn(p)
    e = _prod_err(a, b, p)
    return p if e >= 0.0 else dn(p)


@njit(cache=True)
def mul_ru(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if not math.isfinite(p):
        return p if p == INF or math.isinf(a) or math.isinf(b) else up(p)
    if not _eft_ok(a, b, p):
        return up(p)
    e = _prod_err(a, b, p)
    return p if e <= 0.0 else up(p)


@njit(cache=True)
def _div_sign(a, b, q):
    # sign of a/b - q, computed exactly through the residual a - q*b
    if not _eft_ok(q, b, q * b):
        return 2
    p = q * b
    e = _prod_err(q, b, p)
    r = (a - p) - e
    if r == 0.0:
        return 0
    if (r > 0.0) == (b > 0.0):
        return 1
    return -1


@njit(cache=True)
def div_rd(a, b):
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        return -INF if math.isinf(a) else 0.0
    q = a / b
    if not math.isfinite(q):
        return q if q == -INF or math.isinf(a) else dn(q)
    sg = _div_sign(a, b, q)
    if sg == 2:
        return dn(q)
    return q if sg >= 0 else dn(q)


@njit(cache=True)
def div_ru(a, b):
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        return INF if math.isinf(a) else 0.0
    q = a / b
    if not math.isfinite(q):
        return q if q == INF or math.isinf(a) else up(q)
    sg = _div_sign(a, b, q)
    if sg == 2:
        return up(q)
    return q if sg <= 0 else up(q)


@njit(cache=True)
def _sqrt_sign(a, s):
    # sign of sqrt(a) - s
    if s == 0.0 or not _eft_ok(s, s, s * s):
        return 2
    p = s * s
    e = _prod_err(s, s, p)
    r = (a - p) - e
    if r == 0.0:
        return 0
    return 1 if r > 0.0 else -1


@njit(cache=True)
def sqrt_rd(a):
    if a <= 0.0:
        return 0.0
    if a == INF:
        return INF
    s = math.sqrt(a)
    sg = _sqrt_sign(a, s)
    if sg == 2:
        return dn(s)
    return s if sg >= 0 else dn(s)


@njit(cache=True)
def sqrt_ru(a):
    if a <= 0.0:
        return 0.0
    if a == INF:
        return INF
    s = math.sqrt(a)
    sg = _sqrt_sign(a, s)
    if sg == 2:
        return up(s)
    return s if sg <= 0 else up(s)


@njit(cache=True)
def pow_rd(x, n):
    # lower bound of x**n for x >= 0
    r = 1.0
    for _ in range(n):
        r = mul_rd(r, x)
    return r


@njit(cache=True)
def pow_ru(x, n):
    # upper bound of x**n for x >= 0
    r = 1.0
    for _ in range(n):
        r = mul_ru(r, x)
    return r


@njit(cache=True)
def root_rd(y, n):
    # lower bound of the real n-th root of y >= 0
    if y <= 0.0:
        return 0.0
    if y == INF:
        return INF
    r = y ** (1.0 / n)
    for _ in range(4):
        r = dn(r)
    for _ in range(64):
        if r <= 0.0 or pow_ru(r, n) <= y:
            break
        r = dn(r)
    return max(r, 0.0)


@njit(cache=True)
def root_ru(y, n):
    # upper bound of the real n-th root of y >= 0
    if y <= 0.0:
        return 0.0
    if y == INF:
        return INF
    r = y ** (1.0 / n)
    for _ in range(4):
        r = up(r)
    for _ in range(64):
        if pow_rd(r, n) >= y:
            break
        r = up(r)
    return r


# ---------------------------------------------------------------------------
# interval operations


@njit(cache=True)
def i_add(alo, ahi, blo, bhi):
    if alo > ahi or blo > bhi:
        return INF, -INF
    return add_rd(alo, blo), add_ru(ahi, bhi)


@njit(cache=True)
def i_sub(alo, ahi, blo, bhi):
    if alo > ahi or blo > bhi:
        return INF, -INF
    return add_rd(alo, -bhi), add_ru(ahi, -blo)


@njit(cache=True)
def i_neg(alo, ahi):
    if alo > ahi:
        return INF, -INF
    return -ahi, -alo


@njit(cache=True)
def i_mul(alo, ahi, blo, bhi):
    if alo > ahi or blo > bhi:
        return INF, -INF
    lo = min(
        min(mul_rd(alo, blo), mul_rd(alo, bhi)),
        min(mul_rd(ahi, blo), mul_rd(ahi, bhi)),
    )
    hi = max(
        max(mul_ru(alo, blo), mul_ru(alo, bhi)),
        max(mul_ru(ahi, blo), mul_ru(ahi, bhi)),
    )
    return lo, hi


@njit(cache=True)
def i_mul_scalar(y, blo, bhi):
    # exact float times interval
    if blo > bhi:
        return INF, -INF
    if y >= 0.0:
        return mul_rd(y, blo), mul_ru(y, bhi)
    return mul_rd(y, bhi), mul_ru(y, blo)


@njit(cache=True)
def i_div_pieces(alo, ahi, blo, bhi):
    """Relational division {x : x*y in a for some y in b}.

    Returns ``(n, lo1, hi1, lo2, hi2)`` with ``n`` in {0, 1, 2} pieces.
    """
    if alo > ahi or blo > bhi:
        return 0, INF, -INF, INF, -INF
    if blo > 0.0 or bhi < 0.0:
        lo = min(
            min(div_rd(alo, blo), div_rd(alo, bhi)),
            min(div_rd(ahi, blo), div_rd(ahi, bhi)),
        )
        hi = max(
            max(div_ru(alo, blo), div_ru(alo, bhi)),
            max(div_ru(ahi, blo), div_ru(ahi, bhi)),
        )
        return 1, lo, hi, INF, -INF
    # zero lies in b
    if alo <= 0.0 <= ahi:
        return 1, -INF, INF, INF, -INF
    if blo == 0.0 and bhi == 0.0:
        return 0, INF, -INF, INF, -INF
    if alo > 0.0:
        if blo == 0.0:
            return 1, div_rd(alo, bhi), INF, INF, -INF
        if bhi == 0.0:
            return 1, -INF, div_ru(alo, blo), INF, -INF
        return 2, -INF, div_ru(alo, blo), div_rd(alo, bhi), INF
    # ahi < 0
    if blo == 0.0:
        return 1, -INF, div_ru(ahi, bhi), INF, -INF
    if bhi == 0.0:
        return 1, div_rd(ahi, blo), INF, INF, -INF
    return 2, -INF, div_ru(ahi, bhi), div_rd(ahi, blo), INF


@njit(cache=True)
def i_div(alo, ahi, blo, bhi):
    n, l1, h1, l2, h2 = i_div_pieces(alo, ahi, blo, bhi)
    if n == 0:
        return INF, -INF
    if n == 1:
        return l1, h1
    return min(l1, l2), max(h1, h2)


@njit(cache=True)
def i_sqr(alo, ahi):
    if alo > ahi:
        return INF, -INF
    if alo >= 0.0:
        return mul_rd(alo, alo), mul_ru(ahi, ahi)
    if ahi <= 0.0:
        return mul_rd(ahi, ahi), mul_ru(alo, alo)
    m = max(-alo, ahi)
    return 0.0, mul_ru(m, m)


@njit(cache=True)
def i_pow(alo, ahi, n):
    if alo > ahi:
        return INF, -INF
    if n == 0:
        return 1.0, 1.0
    if n == 1:
        return alo, ahi
    if n % 2 == 0:
        if alo >= 0.0:
            return pow_rd(alo, n), pow_ru(ahi, n)
        if ahi <= 0.0:
            return pow_rd(-ahi, n), pow_ru(-alo, n)
        return 0.0, pow_ru(max(-alo, ahi), n)
    lo = pow_rd(alo, n) if alo >= 0.0 else -pow_ru(-alo, n)
    hi = pow_ru(ahi, n) if ahi >= 0.0 else -pow_rd(-ahi, n)
    return lo, hi


@njit(cache=True)
def i_sqrt(alo, ahi):
    if alo > ahi or ahi < 0.0:
        return INF, -INF
    return sqrt_rd(max(alo, 0.0)), sqrt_ru(ahi)


@njit(cache=True)
def i_abs(alo, ahi):
    if alo > ahi:
        return INF, -INF
    if alo >= 0.0:
        return alo, ahi
    if ahi <= 0.0:
        return -ahi, -alo
    return 0.0, max(-alo, ahi)


@njit(cache=True)
def _widen2(lo, hi):
    return max(dn(dn(lo)), -1.0), min(up(up(hi)), 1.0)


@njit(cache=True)
def _hits(a, b, phase):
    # does [a, b] (slightly enlarged) contain phase + 2k*pi for some integer k
    tol = 1e-12 * (1.0 + max(abs(a), abs(b)))
    k = math.ceil((a - tol - phase) / _TWO_PI)
    return phase + k * _TWO_PI <= b + tol


@njit(cache=True)
def i_sin(alo, ahi):
    if alo > ahi:
        return INF, -INF
    if not (math.isfinite(alo) and math.isfinite(ahi)):
        return -1.0, 1.0
    if ahi - alo >= _TWO_PI or max(abs(alo), abs(ahi)) > 1e6:
        return -1.0, 1.0
    sa = math.sin(alo)
    sb = math.sin(ahi)
    lo, hi = _widen2(min(sa, sb), max(sa, sb))
    if _hits(alo, ahi, _HALF_PI):
        hi = 1.0
    if _hits(alo, ahi, -_HALF_PI):
        lo = -1.0
    return lo, hi


@njit(cache=True)
def i_cos(alo, ahi):
    if alo > ahi:
        return INF, -INF
    if not (math.isfinite(alo) and math.isfinite(ahi)):
        return -1.0, 1.0
    if ahi - alo >= _TWO_PI or max(abs(alo), abs(ahi)) > 1e6:
        return -1.0, 1.0
    ca = math.cos(alo)
    cb = math.cos(ahi)
    lo, hi = _widen2(min(ca, cb), max(ca, cb))
    if _hits(alo, ahi, 0.0):
        hi = 1.0
    if _hits(alo, ahi, math.pi):
        lo = -1.0
    return lo, hi


@njit(cache=True)
def meet(alo, ahi, blo, bhi):
    lo = max(alo, blo)
    hi = min(ahi, bhi)
    if lo > hi:
        return INF, -INF
    return lo, hi


@njit(cache=True)
def meet_pieces(xlo, xhi, n, l1, h1, l2, h2):
    """Intersect x with the union of up to two pieces and return the hull."""
    lo = INF
    hi = -INF
    if n >= 1:
        a, b = meet(xlo, xhi, l1, h1)
        if a <= b:
            lo = min(lo, a)
            hi = max(hi, b)
    if n >= 2:
        a, b = meet(xlo, xhi, l2, h2)
        if a <= b:
            lo = min(lo, a)
            hi = max(hi, b)
    return lo, hi


# ---------------------------------------------------------------------------
# tape kernels


@njit(cache=True)
def forward(op, a1, a2, clo, chi, start, end, xlo, xhi, vlo, vhi):
    for k in range(start, end):
        o = op[k]
        if o == OP_CONST:
            vlo[k] = clo[a1[k]]
            vhi[k] = chi[a1[k]]
        elif o == OP_VAR:
            vlo[k] = xlo[a1[k]]
            vhi[k] = xhi[a1[k]]
        else:
            i = a1[k]
            if o == OP_ADD:
                j = a2[k]
                vlo[k], vhi[k] = i_add(vlo[i], vhi[i], vlo[j], vhi[j])
            elif o == OP_SUB:
                j = a2[k]
                vlo[k], vhi[k] = i_sub(vlo[i], vhi[i], vlo[j], vhi[j])
            elif o == OP_MUL:
                j = a2[k]
                vlo[k], vhi[k] = i_mul(vlo[i], vhi[i], vlo[j], vhi[j])
            elif o == OP_DIV:
                j = a2[k]
                vlo[k], vhi[k] = i_div(vlo[i], vhi[i], vlo[j], vhi[j])
            elif o == OP_NEG:
                vlo[k], vhi[k] = i_neg(vlo[i], vhi[i])
            elif o == OP_SQR:
                vlo[k], vhi[k] = i_sqr(vlo[i], vhi[i])
            elif o == OP_POW:
                vlo[k], vhi[k] = i_pow(vlo[i], vhi[i], a2[k])
            elif o == OP_SQRT:
                vlo[k], vhi[k] = i_sqrt(vlo[i], vhi[i])
            elif o == OP_SIN:
                vlo[k], vhi[k] = i_sin(vlo[i], vhi[i])
            elif o == OP_COS:
                vlo[k], vhi[k] = i_cos(vlo[i], vhi[i])
            elif o == OP_ABS:
                vlo[k], vhi[k] = i_abs(vlo[i], vhi[i])


@njit(cache=True)
def eval_roots(op, a1, a2, clo, chi, roots, xlo, xhi, vlo, vhi, outlo, outhi):
    forward(op, a1, a2, clo, chi, 0, op.shape[0], xlo, xhi, vlo, vhi)
    for r in range(roots.shape[0]):
        outlo[r] = vlo[roots[r]]
        outhi[r] = vhi[roots[r]]


@njit(cache=True)
def _backward_node(k, op, a1, a2, vlo, vhi):
    """Project node k's value onto its children.  Returns False on EMPTY."""
    o = op[k]
    zlo = vlo[k]
    zhi = vhi[k]
    i = a1[k]
    if o == OP_ADD:
        j = a2[k]
        vlo[i], vhi[i] = meet(vlo[i], vhi[i], *i_sub(zlo, zhi, vlo[j], vhi[j]))
        if vlo[i] > vhi[i]:
            return False
        vlo[j], vhi[j] = meet(vlo[j], vhi[j], *i_sub(zlo, zhi, vlo[i], vhi[i]))
        return vlo[j] <= vhi[j]
    if o == OP_SUB:
        j = a2[k]
        vlo[i], vhi[i] = meet(vlo[i], vhi[i], *i_add(zlo, zhi, vlo[j], vhi[j]))
        if vlo[i] > vhi[i]:
            return False
        vlo[j], vhi[j] = meet(vlo[j], vhi[j], *i_sub(vlo[i], vhi[i], zlo, zhi))
        return vlo[j] <= vhi[j]
    if o == OP_MUL:
        j = a2[k]
        n, l1, h1, l2, h2 = i_div_pieces(zlo, zhi, vlo[j], vhi[j])
        vlo[i], vhi[i] = meet_pieces(vlo[i], vhi[i], n, l1, h1, l2, h2)
        if vlo[i] > vhi[i]:
            return False
        n, l1, h1, l2, h2 = i_div_pieces(zlo, zhi, vlo[i], vhi[i])
        vlo[j], vhi[j] = meet_pieces(vlo[j], vhi[j], n, l1, h1, l2, h2)
        return vlo[j] <= vhi[j]
    if o == OP_DIV:
        j = a2[k]
        vlo[i], vhi[i] = meet(vlo[i], vhi[i], *i_mul(zlo, zhi, vlo[j], vhi[j]))
        if vlo[i] > vhi[i]:
            return False
        n, l1, h1, l2, h2 = i_div_pieces(vlo[i], vhi[i], zlo, zhi)
        vlo[j], vhi[j] = meet_pieces(vlo[j], vhi[j], n, l1, h1, l2, h2)
        return vlo[j] <= vhi[j]
    if o == OP_NEG:
        vlo[i], vhi[i] = meet(vlo[i], vhi[i], -zhi, -zlo)
        return vlo[i] <= vhi[i]
    if o == OP_SQR or (o == OP_POW and a2[k] % 2 == 0 and a2[k] > 0):
        n = 2 if o == OP_SQR else a2[k]
        zlo = max(zlo, 0.0)
        if zlo > zhi:
            return False
        rhi = root_ru(zhi, n)
        rlo = root_rd(zlo, n)
        if rlo == 0.0:
            vlo[i], vhi[i] = meet(vlo[i], vhi[i], -rhi, rhi)
        else:
            vlo[i], vhi[i] = meet_pieces(vlo[i], vhi[i], 2, -rhi, -rlo, rlo, rhi)
        return vlo[i] <= vhi[i]
    if o == OP_POW:
        n = a2[k]
        if n == 0:
            return zlo <= 1.0 <= zhi
        if n == 1:
            vlo[i], vhi[i] = meet(vlo[i], vhi[i], zlo, zhi)
            return vlo[i] <= vhi[i]
        # odd power is monotone
        lo = root_rd(zlo, n) if zlo >= 0.0 else -root_ru(-zlo, n)
        hi = root_ru(zhi, n) if zhi >= 0.0 else -root_rd(-zhi, n)
        vlo[i], vhi[i] = meet(vlo[i], vhi[i], lo, hi)
        return vlo[i] <= vhi[i]
    if o == OP_SQRT:
        zlo = max(zlo, 0.0)
        if zlo > zhi:
            return False
        vlo[i], vhi[i] = meet(vlo[i], vhi[i], mul_rd(zlo, zlo), mul_ru(zhi, zhi))
        return vlo[i] <= vhi[i]
    if o == OP_ABS:
        zlo = max(zlo, 0.0)
        if zlo > zhi:
            return False
        vlo[i], vhi[i] = meet_pieces(vlo[i], vhi[i], 2, -zhi, -zlo, zlo, zhi)
        return vlo[i] <= vhi[i]
    # sin and cos: no projection
    return True


@njit(cache=True)
def hc4(op, a1, a2, clo, chi, start, end, rel, xlo, xhi, vlo, vhi):
    """HC4-revise of one constraint segment.  Returns False when infeasible."""
    forward(op, a1, a2, clo, chi, start, end, xlo, xhi, vlo, vhi)
    root = end - 1
    if rel == REL_EQ:
        vlo[root], vhi[root] = meet(vlo[root], vhi[root], 0.0, 0.0)
    else:
        vlo[root], vhi[root] = meet(vlo[root], vhi[root], -INF, 0.0)
    if vlo[root] > vhi[root]:
        return False
    for k in range(end - 1, start - 1, -1):
        o = op[k]
        if o == OP_CONST:
            if vlo[k] > vhi[k]:
                return False
        elif o == OP_VAR:
            v = a1[k]
            xlo[v], xhi[v] = meet(xlo[v], xhi[v], vlo[k], vhi[k])
            if xlo[v] > xhi[v]:
                return False
        else:
            if not _backward_node(k, op, a1, a2, vlo, vhi):
                return False
    return True


@njit(cache=True)
def _shrunk(old, new, ratio):
    if not (old > 0.0):
        return False
    if math.isinf(old):
        return new < old
    return (old - new) > ratio * old


@njit(cache=True)
def propagate(
    op, a1, a2, clo, chi, cstart, cend, crel, cvptr, cvars, vcptr, vcons,
    xlo, xhi, vlo, vhi, ratio, max_revise,
):
    """AC-3 style HC4 propagation over all constraints.

    Constraints are re-queued when a variable they mention shrinks by more
    than ``ratio`` of its width.  Returns False when some constraint is
    proved infeasible.
    """
    nc = cstart.shape[0]
    queue = np.empty(nc, np.int64)
    inq = np.ones(nc, np.bool_)
    for c in range(nc):
        queue[c] = c
    head = 0
    count = nc
    nrev = 0
    oldw = np.empty(xlo.shape[0], np.float64)
    while count > 0 and nrev < max_revise:
        c = queue[head]
        head = (head + 1) % nc
        count -= 1
        inq[c] = False
        nrev += 1
        for p in range(cvptr[c], cvptr[c + 1]):
            v = cvars[p]
            oldw[v] = xhi[v] - xlo[v]
        if not hc4(op, a1, a2, clo, chi, cstart[c], cend[c], crel[c], xlo, xhi, vlo, vhi):
            return False
        for p in range(cvptr[c], cvptr[c + 1]):
            v = cvars[p]
            if _shrunk(oldw[v], xhi[v] - xlo[v], ratio):
                for q in range(vcptr[v], vcptr[v + 1]):
                    c2 = vcons[q]
                    if c2 != c and not inq[c2]:
                        inq[c2] = True
                        queue[(head + count) % nc] = c2
                        count += 1
    return True


@njit(cache=True)
def precondition(Y, Jlo, Jhi, Flo, Fhi):
    """Interval products Y*J and Y*F for a float matrix Y."""
    n = Y.shape[0]
    m = Jlo.shape[1]
    k = Y.shape[1]
    Alo = np.zeros((n, m))
    Ahi = np.zeros((n, m))
    blo = np.zeros(n)
    bhi = np.zeros(n)
    for i in range(n):
        for j in range(m):
            slo = 0.0
            shi = 0.0
            for t in range(k):
                plo, phi = i_mul_scalar(Y[i, t], Jlo[t, j], Jhi[t, j])
                slo = add_rd(slo, plo)
                shi = add_ru(shi, phi)
            Alo[i, j] = slo
            Ahi[i, j] = shi
        slo = 0.0
        shi = 0.0
        for t in range(k):
            plo, phi = i_mul_scalar(Y[i, t], Flo[t], Fhi[t])
            slo = add_rd(slo, plo)
            shi = add_ru(shi, phi)
        blo[i] = slo
        bhi[i] = shi
    return Alo, Ahi, blo, bhi


@njit(cache=True)
def gauss_seidel(Alo, Ahi, blo, bhi, xs, xlo, xhi):
    """One Hansen-Sengupta sweep on A (x - xs) = -b, intersected with x.

    Returns ``(feasible, inner)`` where ``inner`` is True when every
    component of the Gauss-Seidel image lies strictly inside the input box,
    which proves existence and uniqueness of a zero.
    """
    n = xlo.shape[0]
    inner = True
    for i in range(n):
        slo = blo[i]
        shi = bhi[i]
        for j in range(n):
            if j == i:
                continue
            dlo = add_rd(xlo[j], -xs[j])
            dhi = add_ru(xhi[j], -xs[j])
            plo, phi = i_mul(Alo[i, j], Ahi[i, j], dlo, dhi)
            slo = add_rd(slo, plo)
            shi = add_ru(shi, phi)
        n_p, l1, h1, l2, h2 = i_div_pieces(-shi, -slo, Alo[i, i], Ahi[i, i])
        if n_p == 0:
            return False, False
        l1 = add_rd(l1, xs[i])
        h1 = add_ru(h1, xs[i])
        if n_p == 2:
            l2 = add_rd(l2, xs[i])
            h2 = add_ru(h2, xs[i])
        if n_p == 1 and l1 > xlo[i] and h1 < xhi[i]:
            pass
        else:
            inner = False
        lo, hi = meet_pieces(xlo[i], xhi[i], n_p, l1, h1, l2, h2)
        if lo > hi:
            return False, False
        xlo[i] = lo
        xhi[i] = hi
    return True, inner
