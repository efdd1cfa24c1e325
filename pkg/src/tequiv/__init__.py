"""Automated program repair with on-the-fly test-equivalence partitioning."""

from .bundle import BundleError, DefectBundle, load_bundle
from .engine import EquivClass, RepairSession, eval_assign_class, eval_value_class, naive_explore, repair
from .lang import Program, Test, exec_program, parse_expr, parse_program, print_program, run_test
from .patches import CostFn, apply_patch, build_space, cost, parse_patch, pick

__all__ = [
    "BundleError",
    "CostFn",
    "DefectBundle",
    "EquivClass",
    "Program",
    "RepairSession",
    "Test",
    "apply_patch",
    "build_space",
    "cost",
    "eval_assign_class",
    "eval_value_class",
    "exec_program",
    "load_bundle",
    "naive_explore",
    "parse_expr",
    "parse_patch",
    "parse_program",
    "pick",
    "print_program",
    "repair",
    "run_test",
]
