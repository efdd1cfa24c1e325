"""Enumerative expression spaces and the value-projection operator."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .lang import (
    ARITH_OPS,
    BOOL_OPS,
    REL_OPS,
    Binary,
    BoolLit,
    EvalError,
    Num,
    Var,
    eval_expr,
    print_expr,
)

ARITH = "arith"
BOOL = "bool"

DEFAULT_CONSTANTS = (0, 1, 2)
DEFAULT_MAX_NODES = 7
DEFAULT_SPACE_CAP = 10**7


class SpaceTooLarge(Exception):
    pass


class ContradictorySpec(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    variables: tuple = ()
    constants: tuple = DEFAULT_CONSTANTS
    max_nodes: int = DEFAULT_MAX_NODES


@dataclass(frozen=True, eq=False)
class ExprSpace:
    """A finite, ordered, duplicate-free set of expressions of one result type."""

    exprs: tuple
    result_type: str
    config: GenConfig = field(default_factory=GenConfig)

    @cached_property
    def index(self) -> dict:
        return {e: i for i, e in enumerate(self.exprs)}

    def __post_init__(self):
        if len(self.index) != len(self.exprs):
            raise ValueError("duplicate expressions in space")

    def __len__(self):
        return len(self.exprs)

    def __iter__(self):
        return iter(self.exprs)

    def __contains__(self, e):
        return e in self.index

    def __eq__(self, other):
        if not isinstance(other, ExprSpace):
            return NotImplemented
        return self.result_type == other.result_type and self.exprs == other.exprs

    def __hash__(self):
        return hash((self.result_type, self.exprs))

    def subset(self, exprs) -> "ExprSpace":
        return ExprSpace(tuple(exprs), self.result_type, self.config)

    @cached_property
    def variables(self) -> frozenset:
        from .lang import expr_vars

        names = set()
        for e in self.exprs:
            names |= expr_vars(e)
        return frozenset(names)


def _count_table(n_leaves, max_nodes, n_bool_leaves=2):
    """Counts of expressions by (type, exact size)."""
    arith = [0] * (max_nodes + 1)
    boolean = [0] * (max_nodes + 1)
    if max_nodes >= 1:
        arith[1] = n_leaves
        boolean[1] = n_bool_leaves
    for size in range(3, max_nodes + 1, 2):
        for ls in range(1, size - 1):
            rs = size - 1 - ls
            arith[size] += len(ARITH_OPS) * arith[ls] * arith[rs]
            boolean[size] += len(REL_OPS) * arith[ls] * arith[rs]
            boolean[size] += len(BOOL_OPS) * boolean[ls] * boolean[rs]
    return arith, boolean


def count_exprs(variables, result_type, constants, max_nodes) -> int:
    leaves = len(set(variables)) + len(set(constants))
    arith, boolean = _count_table(leaves, max_nodes)
    return sum(arith if result_type == ARITH else boolean)


def enumerate_exprs(
    variables,
    result_type,
    constants=DEFAULT_CONSTANTS,
    max_nodes=DEFAULT_MAX_NODES,
    cap=DEFAULT_SPACE_CAP,
) -> ExprSpace:
    """All well-typed expressions with at most ``max_nodes`` nodes.

    Ordered by node count, then by canonical text.
    """
    if max_nodes < 1:
        raise ValueError("max_nodes must be at least 1")
    if result_type not in (ARITH, BOOL):
        raise ValueError(f"unknown result type {result_type!r}")
    variables = tuple(sorted(set(variables)))
    constants = tuple(sorted(set(constants)))
    config = GenConfig(variables, constants, max_nodes)
    total = count_exprs(variables, result_type, constants, max_nodes)
    if total > cap:
        raise SpaceTooLarge(f"{total} {result_type} expressions exceed the cap of {cap}")

    arith = {1: [Var(v) for v in variables] + [Num(c) for c in constants]}
    boolean = {1: [BoolLit(False), BoolLit(True)]}
    for size in range(2, max_nodes + 1):
        arith[size] = []
        boolean[size] = []
        if size % 2 == 0:
            continue
        for ls in range(1, size - 1):
            rs = size - 1 - ls
            for l, r in ((l, r) for l in arith[ls] for r in arith[rs]):
                for op in ARITH_OPS:
                    arith[size].append(Binary(op, l, r))
                if result_type == BOOL:
                    for op in REL_OPS:
                        boolean[size].append(Binary(op, l, r))
            if result_type == BOOL:
                for l, r in ((l, r) for l in boolean[ls] for r in boolean[rs]):
                    for op in BOOL_OPS:
                        boolean[size].append(Binary(op, l, r))

    table = arith if result_type == ARITH else boolean
    ordered = []
    for size in range(1, max_nodes + 1):
        ordered.extend(sorted(table[size], key=print_expr))
    return ExprSpace(tuple(ordered), result_type, config)


def evaluates_to(e, state, value) -> bool:
    try:
        return eval_expr(e, state) == value
    except EvalError:
        return False


def project_value(space: ExprSpace, state: dict, value) -> ExprSpace:
    """Members of ``space`` evaluating to ``value`` under ``state``; faulting members are dropped."""
    return space.subset(e for e in space.exprs if evaluates_to(e, state, value))


def project_fault(space: ExprSpace, state: dict) -> ExprSpace:
    """Members whose evaluation under ``state`` faults (of any kind)."""
    kept = []
    for e in space.exprs:
        try:
            eval_expr(e, state)
        except EvalError:
            kept.append(e)
    return space.subset(kept)


class SynthesisSpec:
    """Input-output pairs; contradictory pairs are rejected."""

    def __init__(self, pairs=()):
        self.pairs = []
        seen = {}
        for state, value in pairs:
            key = tuple(sorted(state.items()))
            if key in seen and seen[key] != value:
                raise ContradictorySpec(f"state {dict(key)} mapped to both {seen[key]} and {value}")
            if key not in seen:
                seen[key] = value
                self.pairs.append((dict(state), value))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def synthesize(space: ExprSpace, spec: SynthesisSpec):
    for state, value in spec:
        space = project_value(space, state, value)
        if not space:
            return None
    return space.exprs[0] if space.exprs else None
