"""Command-line front end: ``rkcp derive|optimize|verify|pave|trees|step``.

Exit codes: 0 success, 1 search ended with only undecided boxes, 2 usage or
parse error, 3 proven UNSAT / infeasible, 4 node budget exhausted.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import catalog
from .expr import parse_sexpr, to_sexpr
from .interval import Box, Interval, format_number, parse_interval
from .properties import algebraic_stability_check, explicit_step, pave_stability, symplecticity_check
from .solver import SolveConfig, branch_and_prune, minimize
from .tableau import (
    ButcherTableau,
    MethodSpec,
    TableauParseError,
    build_csp,
    opt_problem,
    parse_pins,
    read_tableau,
    validate,
    verify_order,
    write_tableau,
)
from .trees import WeightBuilder, coefficients, trees_up_to

EXIT_OK = 0
EXIT_UNDECIDED = 1
EXIT_USAGE = 2
EXIT_UNSAT = 3
EXIT_BUDGET = 4

log = logging.getLogger("rkcp")


class UsageError(Exception):
    pass


def _structure_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--stages", "-s", type=int, required=True)
    p.add_argument("--order", "-p", type=int, required=True)
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--explicit", action="store_true")
    kind.add_argument("--dirk", action="store_true")
    kind.add_argument("--sdirk", action="store_true")
    p.add_argument("--singly", action="store_true", help="equal diagonal entries, A otherwise full")
    p.add_argument("--explicit-first-line", action="store_true")
    p.add_argument("--stiffly-accurate", action="store_true")
    p.add_argument("--c-order", choices=("strict", "weak", "none"), default="strict")
    p.add_argument("--a-domain", type=float, nargs=2, default=(-1.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--b-domain", type=float, nargs=2, default=(-1.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--c-domain", type=float, nargs=2, default=(0.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--eps", type=float, default=1e-12, help="bisection floor (relative box width)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--shave", action="store_true", help="add the 3B shaving contractor (stronger, slower per node)")
    p.add_argument("--bisector", choices=("largest", "smear"), default="largest")


def _spec(args) -> MethodSpec:
    try:
        return MethodSpec(
            args.stages,
            args.order,
            explicit=args.explicit,
            dirk=args.dirk,
            sdirk=args.sdirk,
            singly=args.singly,
            explicit_first_line=args.explicit_first_line,
            stiffly_accurate=args.stiffly_accurate,
            c_order=args.c_order,
            a_domain=tuple(args.a_domain),
            b_domain=tuple(args.b_domain),
            c_domain=tuple(args.c_domain),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config(args, max_nodes: int, eps: float | None = None) -> SolveConfig:
    eps = args.eps if eps is None else eps
    try:
        contractors = ("hc4", "3b", "newton") if args.shave else ("hc4", "newton")
        return SolveConfig(
            box_epsilon=eps, max_nodes=max_nodes, workers=args.workers,
            contractors=contractors, bisector=args.bisector,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _output_paths(out: str, k: int) -> list[Path]:
    path = Path(out)
    if k == 1:
        return [path]
    return [path.with_name(f"{path.stem}-{i}{path.suffix}") for i in range(1, k + 1)]


def _write_solutions(pav, spec: MethodSpec, out: str, note: str) -> list[Path]:
    paths = _output_paths(out, len(pav.solutions))
    for box, path in zip(pav.solutions, paths):
        write_tableau(ButcherTableau.from_box(box, spec, note), path)
        print(f"wrote {path}")
    return paths


def _paving_status(pav) -> int:
    if pav.budget_exhausted:
        return EXIT_BUDGET
    if pav.solutions:
        return EXIT_OK
    if pav.is_unsat:
        return EXIT_UNSAT
    return EXIT_UNDECIDED


def _report_paving(pav, elapsed: float) -> None:
    print(
        f"nodes {pav.nodes}  solutions {len(pav.solutions)}  undecided {len(pav.undecided)}"
        f"  pending {len(pav.pending)}  time {elapsed:.2f}s"
    )
    if pav.is_unsat:
        print("no solution: the constraint system is infeasible on the domain")
    if pav.budget_exhausted:
        print("node budget exhausted; the paving is partial")


def cmd_derive(args) -> int:
    spec = _spec(args)
    config = _config(args, args.max_nodes)
    t0 = time.perf_counter()
    pav = branch_and_prune(build_csp(spec), config)
    _report_paving(pav, time.perf_counter() - t0)
    _write_solutions(pav, spec, args.out, "validated solution")
    if args.csv:
        pav.write_csv(args.csv)
        print(f"wrote {args.csv}")
    return _paving_status(pav)


def cmd_optimize(args) -> int:
    spec = _spec(args)
    target = args.target_order if args.target_order is not None else spec.p + 1
    if target <= spec.p:
        raise UsageError("--target-order must exceed --order")
    config = _config(args, args.max_nodes)
    problem = opt_problem(spec, target, args.relax_eps)
    t0 = time.perf_counter()
    try:
        res = minimize(problem, config)
    except RuntimeError as exc:
        print(str(exc))
        return EXIT_UNSAT
    print(f"cost bounds {format_number(res.cost_bounds)}  nodes {res.nodes}  time {time.perf_counter() - t0:.2f}s")
    if res.budget_exhausted:
        print("node budget exhausted; cost bounds are from a partial search")
    print("incumbent " + " ".join(f"{n}={res.incumbent[n].lo!r}" for n in res.incumbent.names))
    if args.pin is None and not args.auto_pin:
        write_tableau(ButcherTableau.from_box(res.incumbent, spec, "relaxed"), args.out)
        print(f"wrote {args.out} (relaxed, not validated)")
        return EXIT_OK
    pins = None
    if args.pin is not None:
        try:
            pins = parse_pins(Path(args.pin).read_text())
        except (OSError, TableauParseError) as exc:
            raise UsageError(f"{args.pin}: {exc}") from None
    refine_config = _config(args, args.refine_nodes, args.refine_eps)
    t0 = time.perf_counter()
    pav, order = validate(spec, res, target, pins, refine_config)
    print(f"second pass on the order-{order} system")
    _report_paving(pav, time.perf_counter() - t0)
    _write_solutions(pav, spec.with_order(order), args.out, f"validated order-{order} system with pins")
    return _paving_status(pav)


def _load(path: str) -> ButcherTableau:
    if path.startswith("catalog:"):
        return catalog.get(path.split(":", 1)[1])
    try:
        return read_tableau(path)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    except TableauParseError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_verify(args) -> int:
    t = _load(args.file)
    p = args.order if args.order is not None else t.order
    if p < 1:
        raise UsageError("an order is required (--order or the file's order line)")
    ok = True
    report = verify_order(t, p)
    print(report.table())
    print(f"order {p}: {'pass' if report.passed else 'fail'} (achieved order {report.achieved_order})")
    ok &= report.passed
    if args.symplectic:
        sym = symplecticity_check(t)
        print("M matrix:")
        for row in sym.M:
            print("  " + "  ".join(format_number(v) for v in row))
        print(f"symplectic: {'pass' if sym.verdict else 'fail'}")
        ok &= sym.verdict
    if args.algebraic_stability:
        try:
            v = algebraic_stability_check(t)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        line = f"algebraic stability: {v.verdict} ({v.reason})"
        if v.witness is not None:
            line += f" witness {format_number(v.witness)}"
        print(line)
        ok &= v.verdict == "stable"
    return EXIT_OK if ok else EXIT_UNDECIDED


def cmd_pave(args) -> int:
    t = _load(args.file)
    if not t.is_explicit:
        raise UsageError("stability paving requires explicit method")
    try:
        pav = pave_stability(t, Interval(args.xmin, args.xmax), Interval(args.ymin, args.ymax), args.eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    pav.write_csv(args.out)
    counts = {c: len(pav.of_class(c)) for c in ("inside", "outside", "boundary")}
    print(" ".join(f"{k} {v}" for k, v in counts.items()) + f"  wrote {args.out}")
    return EXIT_OK


def cmd_trees(args) -> int:
    if not 1 <= args.max_order <= 8:
        raise UsageError("--max-order must be in 1..8")
    wb = WeightBuilder(args.stages)
    print("tree\tr\tgamma\talpha\tphi")
    for tr in trees_up_to(args.max_order):
        co = coefficients(tr)
        print(f"{tr}\t{co['r']}\t{co['gamma']}\t{co['alpha']}\t{to_sexpr(wb.weight(tr))}")
    return EXIT_OK


def cmd_step(args) -> int:
    t = _load(args.file)
    if not t.is_explicit:
        raise UsageError("explicit step requires explicit method")
    try:
        y0 = [parse_interval(v) for v in args.y0.split(";")]
        h = parse_interval(args.h)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    names = ["y"] if len(y0) == 1 else [f"y{i}" for i in range(len(y0))]
    fs = args.f or [n for n in names]
    if len(fs) != len(names):
        raise UsageError("need one --f expression per state component")
    try:
        field = [parse_sexpr(f) for f in fs]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    y = Box.from_intervals(dict(zip(names, y0)))
    tl = parse_interval(args.t0)
    print(f"0\t{format_number(tl)}\t" + "\t".join(format_number(y[n]) for n in names))
    for k in range(1, args.steps + 1):
        try:
            y = explicit_step(t, field, tl, y, h)
        except KeyError as exc:
            raise UsageError(f"unknown variable in vector field: {exc}") from None
        tl = tl + h
        print(f"{k}\t{format_number(tl)}\t" + "\t".join(format_number(y[n]) for n in names))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rkcp", description="Validated derivation of Runge-Kutta methods")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="solve the order conditions for a method structure")
    _structure_args(p)
    p.add_argument("--max-nodes", type=int, default=1_000_000)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also write the paving as CSV")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("optimize", help="relaxed optimisation towards a higher order")
    _structure_args(p)
    p.add_argument("--target-order", type=int)
    p.add_argument("--relax-eps", type=float, default=1e-9)
    p.add_argument("--pin", help="file of bound constraints for the validated second pass")
    p.add_argument("--auto-pin", action="store_true", help="second pass with pins around the incumbent")
    p.add_argument("--max-nodes", type=int, default=50_000)
    p.add_argument("--refine-nodes", type=int, default=1_000_000)
    p.add_argument(
        "--refine-eps", type=float, default=1e-8, help="bisection floor for the validated second pass"
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="check order conditions and properties of a tableau file")
    p.add_argument("file", help="tableau file, or catalog:NAME")
    p.add_argument("--order", type=int)
    p.add_argument("--symplectic", action="store_true")
    p.add_argument("--algebraic-stability", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("pave", help="pave the linear stability domain of an explicit method")
    p.add_argument("file", help="tableau file, or catalog:NAME")
    p.add_argument("--xmin", type=float, default=-5.0)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--ymin", type=float, default=-4.0)
    p.add_argument("--ymax", type=float, default=4.0)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pave)

    p = sub.add_parser("trees", help="list rooted trees and their order conditions")
    p.add_argument("--max-order", type=int, required=True)
    p.add_argument("--stages", type=int, default=2, help="stage count used for the phi column")
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("step", help="fixed-step interval integration with an explicit method")
    p.add_argument("--file", required=True, help="tableau file, or catalog:NAME")
    p.add_argument("--h", required=True)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--y0", required=True, help="initial state, components separated by ';'")
    p.add_argument("--t0", default="0")
    p.add_argument("--f", action="append", help="s-expression per component over t and y (default: y' = y)")
    p.set_defaults(func=cmd_step)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rkcp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
