"""Validated derivation and analysis of Runge-Kutta Butcher tableaux.

Order conditions are generated from rooted trees, solved with interval
branch-and-prune (or minimised with interval branch-and-bound) and the
resulting tableaux are checked for order, stability and symplecticity with
outward-rounded interval arithmetic.
"""

from . import catalog
from .interval import Box, Interval, format_interval, parse_interval
from .properties import (
    algebraic_stability_check,
    explicit_step,
    pave_stability,
    stability_polynomial,
    symplecticity_check,
)
from .solver import CSP, Paving, SolveConfig, branch_and_prune, minimize, refine
from .tableau import (
    ButcherTableau,
    MethodSpec,
    build_csp,
    opt_problem,
    parse_tableau,
    read_tableau,
    serialize,
    validate,
    verify_order,
    write_tableau,
)
from .trees import RootedTree, enumerate_trees, order_conditions, trees_up_to

__all__ = [
    "Interval", "Box", "format_interval", "parse_interval",
    "RootedTree", "enumerate_trees", "trees_up_to", "order_conditions",
    "CSP", "SolveConfig", "Paving", "branch_and_prune", "minimize", "refine",
    "MethodSpec", "ButcherTableau", "build_csp", "opt_problem", "validate", "verify_order",
    "serialize", "parse_tableau", "read_tableau", "write_tableau",
    "stability_polynomial", "pave_stability", "symplecticity_check",
    "algebraic_stability_check", "explicit_step", "catalog",
]
