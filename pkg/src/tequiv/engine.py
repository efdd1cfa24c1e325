"""Cost-ordered patch exploration with on-the-fly test-equivalence partitioning."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .equivalence import DepsAnalysisConfig, ValueAnalysisConfig, exec_composed, exec_value
from .lang import (
    DEFAULT_FUEL,
    SCAFFOLD_LOC,
    Interpreter,
    Program,
    check_assertion,
    run_test,
)
from .patches import (
    ASSIGNMENT,
    CostFn,
    InsertAssign,
    PatchSpace,
    Refine,
    ReplaceExpr,
    apply_patch,
    marked_path,
)

FIRST = "first"
FULL = "full"
PARTITION = "partition"
NAIVE = "naive"


class NoFailingTest(ValueError):
    pass


@dataclass(eq=False)
class EquivClass:
    test: str
    passing: bool
    kind: str
    executed: object
    members: dict  # group key -> frozenset of synthesized expressions
    covered: bool

    def __contains__(self, patch):
        m = self.members.get(patch.group_key)
        return m is not None and patch.expr in m

    def __len__(self):
        return sum(len(m) for m in self.members.values())

    def patches(self, space: PatchSpace):
        """Members in space order."""
        for key, exprs in self.members.items():
            group = space.groups[key]
            for e in group.exprs:
                if e in exprs:
                    yield group.make(e)


@dataclass(frozen=True)
class _Entry:
    passing: bool
    covered: bool


@dataclass
class RepairSession:
    space: PatchSpace
    tests: list  # in evaluation order
    strategy: str
    mode: str
    originally_failing: list
    passing: dict = field(default_factory=dict)  # test name -> [EquivClass]
    failing: dict = field(default_factory=dict)
    repairs: list = field(default_factory=list)
    executions: dict = field(default_factory=dict)  # test name -> count
    skipped_failing: int = 0  # candidates discarded through a failing class
    skipped_passing: dict = field(default_factory=dict)  # test name -> count
    wall_time: float = 0.0
    registry: dict = field(default_factory=dict)  # test name -> {group key: {expr: _Entry}}

    def __post_init__(self):
        for t in self.tests:
            self.passing.setdefault(t.name, [])
            self.failing.setdefault(t.name, [])
            self.executions.setdefault(t.name, 0)
            self.skipped_passing.setdefault(t.name, 0)
            self.registry.setdefault(t.name, {})

    def lookup(self, test_name, patch) -> Optional[_Entry]:
        return self.registry[test_name].get(patch.group_key, {}).get(patch.expr)

    def in_failing_class(self, patch) -> bool:
        for t in self.tests:
            entry = self.lookup(t.name, patch)
            if entry is not None and not entry.passing:
                return True
        return False

    def register(self, cls: EquivClass):
        (self.passing if cls.passing else self.failing)[cls.test].append(cls)
        reg = self.registry[cls.test]
        entry = _Entry(cls.passing, cls.covered)
        for key, exprs in cls.members.items():
            slot = reg.setdefault(key, {})
            for e in exprs:
                slot.setdefault(e, entry)

    @property
    def test_executions(self) -> int:
        return sum(self.executions.values())

    def classes_per_test(self) -> dict:
        return {t.name: len(self.passing[t.name]) + len(self.failing[t.name]) for t in self.tests}

    def is_explored(self, patch) -> bool:
        """Verdict known and the modification ran under every originally failing test it was checked on."""
        entries = [self.lookup(t.name, patch) for t in self.tests]
        known = [e for e in entries if e is not None]
        determined = any(not e.passing for e in known) or (
            len(known) == len(entries) and all(e.passing for e in known)
        )
        if not determined:
            return False
        on_failing = [self.lookup(name, patch) for name in self.originally_failing]
        on_failing = [e for e in on_failing if e is not None]
        return bool(on_failing) and all(e.covered for e in on_failing)

    def explored_count(self) -> int:
        return sum(1 for patch in self.space if self.is_explored(patch))


def order_tests(p: Program, tests, fuel=DEFAULT_FUEL):
    """Originally failing tests first, each group in the given order."""
    verdicts = [run_test(p, t, fuel) for t in tests]
    if all(verdicts):
        raise NoFailingTest("every test passes on the original program")
    failing = [t for t, ok in zip(tests, verdicts) if not ok]
    passing = [t for t, ok in zip(tests, verdicts) if ok]
    return failing + passing, [t.name for t in failing]


def eval_value_class(p_base, patch, t, space: PatchSpace, fuel=DEFAULT_FUEL, log=None):
    """Run ``patch`` on ``t`` and compute its class within the patch's group."""
    if isinstance(patch, InsertAssign):
        raise TypeError("insertions are evaluated with eval_assign_class")
    group = space.group_of(patch)
    patched = apply_patch(p_base, patch)
    cfg = ValueAnalysisConfig(marked_path(patch), group.exprs)
    result = exec_value(patched, t.input, cfg, fuel, log)
    verdict = check_assertion(result.outcome, t.assertion)
    cls = EquivClass(
        t.name, verdict, patch.kind, patch, {group.key: frozenset(result.surviving.exprs)}, result.covered
    )
    return verdict, cls


def eval_assign_class(p_base, patch, t, space: PatchSpace, fuel=DEFAULT_FUEL, log=None):
    """Run an insertion on ``t`` and compute its class over locations and right-hand sides."""
    if not isinstance(patch, InsertAssign):
        raise TypeError("eval_assign_class needs an insertion")
    family = space.families[patch.var]
    patched = apply_patch(p_base, patch)
    cfg = DepsAnalysisConfig(patch.loc, patch.var, family.pool, frozenset(family.locations))
    result = exec_composed(patched, t.input, cfg, fuel, log)
    verdict = check_assertion(result.outcome, t.assertion)
    members = {}
    for x in family.locations:
        group = space.groups[("insert", x, patch.var)]
        kept = frozenset(e for e in result.surviving[x].exprs if e in group.exprs)
        if kept:
            members[group.key] = kept
    return verdict, EquivClass(t.name, verdict, ASSIGNMENT, patch, members, result.covered)


def evaluate(p_base, patch, t, space, fuel=DEFAULT_FUEL, log=None):
    if isinstance(patch, InsertAssign):
        return eval_assign_class(p_base, patch, t, space, fuel, log)
    return eval_value_class(p_base, patch, t, space, fuel, log)


def _modified_loc(patch):
    if isinstance(patch, (ReplaceExpr, Refine)):
        return patch.path.loc
    return SCAFFOLD_LOC


def run_single(p_base, patch, t, fuel=DEFAULT_FUEL):
    """Plain run of one patched program: (verdict, modification executed)."""
    interp = Interpreter(fuel)
    outcome = interp.run(apply_patch(p_base, patch), t.input)
    return check_assertion(outcome, t.assertion), _modified_loc(patch) in interp.visited


def _remaining(members, removed):
    """Restrict a class to patches still in the space."""
    out = {}
    for key, exprs in members.items():
        gone = removed.get(key)
        kept = exprs - gone if gone else exprs
        if kept:
            out[key] = frozenset(kept)
    return out


def _explore(p, tests, space, costfn, mode, fuel, strategy, log):
    if mode not in (FIRST, FULL):
        raise ValueError(f"unknown mode {mode!r}")
    started = time.perf_counter()
    ordered, failing_names = order_tests(p, tests, fuel)
    session = RepairSession(space, ordered, strategy, mode, failing_names)
    removed = {}  # group key -> expressions already taken out of the space
    for patch in sorted(space, key=costfn.key):
        if session.in_failing_class(patch):
            session.skipped_failing += 1
            removed.setdefault(patch.group_key, set()).add(patch.expr)
            continue
        plausible = True
        for t in ordered:
            entry = session.lookup(t.name, patch)
            if entry is not None and entry.passing:
                session.skipped_passing[t.name] += 1
                continue
            if strategy == PARTITION:
                verdict, cls = evaluate(p, patch, t, space, fuel, log)
            else:
                verdict, covered = run_single(p, patch, t, fuel)
                group = space.group_of(patch)
                cls = EquivClass(
                    t.name, verdict, patch.kind, patch, {group.key: frozenset((patch.expr,))}, covered
                )
            session.executions[t.name] += 1
            cls.members = _remaining(cls.members, removed)
            session.register(cls)
            if not verdict:
                plausible = False
                break
        removed.setdefault(patch.group_key, set()).add(patch.expr)
        if plausible:
            session.repairs.append(patch)
            if mode == FIRST:
                break
    session.wall_time = time.perf_counter() - started
    return session.repairs, session


def repair(
    p: Program,
    tests,
    space: PatchSpace,
    costfn: CostFn,
    mode: str = FIRST,
    fuel: int = DEFAULT_FUEL,
    log: Optional[Callable] = None,
):
    """Explore ``space`` cheapest first, evaluating whole test-equivalence classes per run."""
    return _explore(p, tests, space, costfn, mode, fuel, PARTITION, log)


def naive_explore(p: Program, tests, space: PatchSpace, costfn: CostFn, mode: str = FIRST, fuel: int = DEFAULT_FUEL):
    """Baseline: every candidate is run individually on each test until its first failure."""
    return _explore(p, tests, space, costfn, mode, fuel, NAIVE, None)
