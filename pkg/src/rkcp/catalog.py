"""Built-in Butcher tableaux.

Rational coefficients are stored as their tightest binary64 enclosures and
irrational ones (square roots) are enclosed with outward-rounded interval
arithmetic.  S3O4, S3O5 and ERK33 are stored as the published enclosures
of the validated solver output.
"""

from __future__ import annotations

from fractions import Fraction as F

from .interval import Interval, parse_interval
from .tableau import ButcherTableau


def _q(num: int, den: int = 1) -> Interval:
    return Interval.from_fraction(F(num, den))


def _root(n: int) -> Interval:
    return Interval.point(float(n)).sqrt()


def euler() -> ButcherTableau:
    return ButcherTableau.from_values([[0]], [1], [0], order=1, flags=("explicit",), note="explicit Euler")


def heun() -> ButcherTableau:
    return ButcherTableau.from_values(
        [[0, 0], [1, 0]], [F(1, 2), F(1, 2)], order=2, flags=("explicit",), note="Heun"
    )


def midpoint() -> ButcherTableau:
    return ButcherTableau.from_values(
        [[0, 0], [F(1, 2), 0]], [0, 1], order=2, flags=("explicit",), note="explicit midpoint"
    )


def ralston() -> ButcherTableau:
    return ButcherTableau.from_values(
        [[0, 0], [F(2, 3), 0]], [F(1, 4), F(3, 4)], order=2, flags=("explicit",), note="Ralston"
    )


def kutta33() -> ButcherTableau:
    return ButcherTableau.from_values(
        [[0, 0, 0], [F(1, 2), 0, 0], [-1, 2, 0]],
        [F(1, 6), F(2, 3), F(1, 6)],
        order=3,
        flags=("explicit",),
        note="Kutta (3,3)",
    )


def rk4() -> ButcherTableau:
    h = F(1, 2)
    return ButcherTableau.from_values(
        [[0, 0, 0, 0], [h, 0, 0, 0], [0, h, 0, 0], [0, 0, 1, 0]],
        [F(1, 6), F(1, 3), F(1, 3), F(1, 6)],
        order=4,
        flags=("explicit",),
        note="classical RK4",
    )


def gauss_legendre2() -> ButcherTableau:
    r = _root(3) / 6
    q = _q(1, 4)
    half = _q(1, 2)
    return ButcherTableau(
        [[q, q - r], [q + r, q]],
        [half, half],
        [half - r, half + r],
        order=4,
        note="Gauss-Legendre s=2",
    )


def gauss_legendre3() -> ButcherTableau:
    r15 = _root(15)
    a, b, c = _q(5, 36), _q(2, 9), _q(5, 18)
    A = [
        [a, b - r15 / 15, a - r15 / 30],
        [a + r15 / 24, b, a - r15 / 24],
        [a + r15 / 30, b + r15 / 15, a],
    ]
    half = _q(1, 2)
    cs = [half - r15 / 10, half, half + r15 / 10]
    return ButcherTableau(A, [c, _q(4, 9), c], cs, order=6, note="Gauss-Legendre s=3")


def lobatto3a() -> ButcherTableau:
    return ButcherTableau.from_values(
        [[0, 0, 0], [F(5, 24), F(1, 3), F(-1, 24)], [F(1, 6), F(2, 3), F(1, 6)]],
        [F(1, 6), F(2, 3), F(1, 6)],
        [0, F(1, 2), 1],
        order=4,
        flags=("stiffly-accurate",),
        note="Lobatto IIIA s=3",
    )


def lobatto3c() -> ButcherTableau:
    return ButcherTableau.from_values(
        [[F(1, 6), F(-1, 3), F(1, 6)], [F(1, 6), F(5, 12), F(-1, 12)], [F(1, 6), F(2, 3), F(1, 6)]],
        [F(1, 6), F(2, 3), F(1, 6)],
        [0, F(1, 2), 1],
        order=4,
        flags=("stiffly-accurate",),
        note="Lobatto IIIC s=3",
    )


def radau2a() -> ButcherTableau:
    return ButcherTableau.from_values(
        [[F(5, 12), F(-1, 12)], [F(3, 4), F(1, 4)]],
        [F(3, 4), F(1, 4)],
        [F(1, 3), 1],
        order=3,
        flags=("stiffly-accurate",),
        note="Radau IIA s=2",
    )


def _table(rows, b, order, flags, note) -> ButcherTableau:
    c = [parse_interval(r[0]) for r in rows]
    A = [[parse_interval(x) for x in r[1:]] for r in rows]
    return ButcherTableau(A, [parse_interval(x) for x in b], c, order, flags, note)


def s3o4() -> ButcherTableau:
    d = "0.105662432[67,71]"
    b = ["0.3885453883[37,75]", "0.5057921789[56,65]", d]
    rows = [
        ["0.1610979566[59,62]", d, "0.172855006[54,67]", "-0.117419482[69,58]"],
        ["0.655889341[44,50]", "0.482099622[04,10]", d, "0.068127286[68,74]"],
        ["[1,1]"] + b,
    ]
    return _table(rows, b, 4, ("singly", "stiffly-accurate"), "S3O4")


def s3o5() -> ButcherTableau:
    rows = [
        ["0", "0", "0", "0"],
        ["0.355051025[64,86]", "0.152659863[17,33]", "0.220412414[50,61]", "-0.0180212520[53,23]"],
        ["0.844948974[23,34]", "0.087340136[65,87]", "0.57802125[20,21]", "0.179587585[44,52]"],
    ]
    b = ["0.111111111[03,26]", "0.512485826[00,36]", "0.376403062[61,80]"]
    return _table(rows, b, 5, ("explicit-first-line",), "S3O5")


def erk33() -> ButcherTableau:
    rows = [
        ["0", "0", "0", "0"],
        ["0.4659048[706,929]", "0.4659048[706,929]", "0", "0"],
        ["0.8006855[74,83]", "-0.154577[20,17]", "0.9552627[48,86]", "0"],
    ]
    b = ["0.19590[599,600]", "0.42961[399,400]", "0.3744800[0,1]"]
    return _table(rows, b, 3, ("explicit",), "ERK33")


CATALOG = {
    "euler": euler,
    "heun": heun,
    "midpoint": midpoint,
    "ralston": ralston,
    "kutta33": kutta33,
    "rk4": rk4,
    "gauss2": gauss_legendre2,
    "gauss3": gauss_legendre3,
    "lobatto3a": lobatto3a,
    "lobatto3c": lobatto3c,
    "radau2a": radau2a,
    "s3o4": s3o4,
    "s3o5": s3o5,
    "erk33": erk33,
}


def get(name: str) -> ButcherTableau:
    try:
        return CATALOG[name.lower()]()
    except KeyError:
        raise KeyError(f"unknown catalog method {name!r}; known: {', '.join(CATALOG)}") from None


def names() -> list[str]:
    return list(CATALOG)
