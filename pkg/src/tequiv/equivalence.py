"""Instrumented interpreters that compute test-equivalence classes in one run.

``exec_value`` tracks the values a marked expression takes and narrows a set
of alternative expressions to those producing the same values.  ``exec_deps``
and ``exec_composed`` run a program with one inserted assignment and narrow
the set of alternative insertion points (and, for the composed analysis,
alternative right-hand sides) whose effect cannot be told apart by the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .lang import (
    DEFAULT_FUEL,
    INSERTED_LOC,
    SCAFFOLD_LOC,
    Binary,
    BoolLit,
    EvalError,
    ExprPath,
    Fault,
    Final,
    FuelExhausted,
    Interpreter,
    Num,
    OutOfFuel,
    Program,
    Seq,
    eval_expr,
    expr_vars,
    iter_stmts,
    print_expr,
)
from .synthesis import ExprSpace, project_fault, project_value


@dataclass(frozen=True)
class ValueAnalysisConfig:
    modified: ExprPath
    candidates: ExprSpace


@dataclass(frozen=True)
class DepsAnalysisConfig:
    inserted_at: int
    left: str
    rhs_pool: ExprSpace
    candidate_locations: frozenset

    def __post_init__(self):
        if self.inserted_at not in self.candidate_locations:
            raise ValueError("inserted_at must be a candidate location")
        if self.left in self.rhs_pool.variables:
            raise ValueError(f"pool expressions must not read {self.left!r}")


@dataclass
class ValueResult:
    outcome: object
    surviving: ExprSpace
    trace: list  # (state, value) pairs; value is None for a faulting evaluation

    @property
    def covered(self) -> bool:
        return bool(self.trace)


@dataclass
class DepsResult:
    outcome: object
    surviving: dict  # location -> ExprSpace
    covered: bool  # the inserted assignment executed at least once


def _snapshot(state, names):
    return " ".join(f"{n}={state[n]}" for n in sorted(names) if n in state)


class ValueMachine(Interpreter):
    def __init__(self, cfg: ValueAnalysisConfig, fuel, log: Optional[Callable] = None):
        super().__init__(fuel)
        self.cfg = cfg
        self.c = cfg.candidates
        self.trace = []
        self.log = log

    def eval_owned(self, s, e, state):
        if s.loc != self.cfg.modified.loc:
            return super().eval_owned(s, e, state)
        self.charge(s)
        return self._eval_marked(e, self.cfg.modified.indices, state)

    def _eval_marked(self, e, indices, state):
        if indices:
            if not isinstance(e, Binary):
                raise KeyError(self.cfg.modified)
            if indices[0] == 0:
                a = self._eval_marked(e.left, indices[1:], state)
                b = eval_expr(e.right, state)
            else:
                a = eval_expr(e.left, state)
                b = self._eval_marked(e.right, indices[1:], state)
            return eval_expr(Binary(e.op, _const(a), _const(b)), {})
        try:
            value = eval_expr(e, state)
        except EvalError:
            self.trace.append((dict(state), None))
            self.c = project_fault(self.c, state)
            self._emit("fault", state)
            raise
        self.trace.append((dict(state), value))
        self.c = project_value(self.c, state, value)
        self._emit(f"project value={_show(value)}", state)
        return value

    def _emit(self, what, state):
        if self.log is not None:
            self.log(
                f"value {what} at={self.cfg.modified} "
                f"state=[{_snapshot(state, self.cfg.candidates.variables)}] survivors={len(self.c)}"
            )


def _const(v):
    return BoolLit(v) if isinstance(v, bool) else Num(v)


def _show(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def exec_value(p: Program, state_in: dict, cfg: ValueAnalysisConfig, fuel=DEFAULT_FUEL, log=None):
    """Run ``p`` narrowing ``cfg.candidates`` at every evaluation of the marked expression."""
    installed = p.expr_at(cfg.modified)
    if installed not in cfg.candidates:
        raise ValueError(f"installed expression {print_expr(installed)} is not a candidate")
    m = ValueMachine(cfg, fuel, log)
    outcome = m.run(p, state_in)
    return ValueResult(outcome, m.c, m.trace)


class DepsMachine(Interpreter):
    """Window machine over a program carrying one inserted assignment.

    Within a window (an execution segment with no read or foreign write of the
    inserted variable and no write of a variable read by the pool) the point
    at which the assignment runs is immaterial.  At each window boundary the
    surviving sets are intersected with the window when the inserted
    assignment ran inside it, and the reached locations are dropped otherwise.
    """

    def __init__(self, cfg: DepsAnalysisConfig, fuel, log=None):
        super().__init__(fuel)
        self.cfg = cfg
        self.boundary_vars = frozenset((cfg.left,)) | cfg.rhs_pool.variables
        self.surviving = {x: cfg.rhs_pool for x in cfg.candidate_locations}
        self.reached = []
        self.projected = None  # projected pool once the inserted assignment ran
        self.executed = False
        self.covered = False
        self.log = log
        self._reads_left = {}

    def _emit(self, what, state):
        if self.log is not None:
            count = sum(len(v) for v in self.surviving.values())
            reached = ",".join(str(x) for x in self.reached)
            self.log(
                f"deps {what} reached=[{reached}] "
                f"state=[{_snapshot(state, self.boundary_vars)}] survivors={count}"
            )

    def flush(self, state, why):
        if self.executed:
            reached = set(self.reached)
            for x, space in self.surviving.items():
                if x in reached:
                    if len(space):
                        keep = self.projected.index
                        self.surviving[x] = space.subset(e for e in space.exprs if e in keep)
                elif len(space):
                    self.surviving[x] = space.subset(())
        else:
            for x in self.reached:
                if len(self.surviving[x]):
                    self.surviving[x] = self.surviving[x].subset(())
        self._emit(f"flush({why}) executed={str(self.executed).lower()}", state)
        self.reached = []
        self.projected = None
        self.executed = False

    def visit(self, loc):
        if loc in self.surviving and loc not in self.reached:
            self.reached.append(loc)

    def exec_stmt(self, s, state):
        if s.loc == SCAFFOLD_LOC and type(s) is Seq and s.first.loc == INSERTED_LOC:
            if self.executed:
                self.flush(state, "reinsert")
            self.visit(s.second.loc)
            self._run_inserted(s.first, state)
            self._exec_unvisited(s.second, state)
            return
        if s.loc >= 0:
            self.visit(s.loc)
        super().exec_stmt(s, state)

    def _exec_unvisited(self, s, state):
        super().exec_stmt(s, state)

    def _run_inserted(self, s, state):
        self.covered = True
        self.executed = True
        try:
            value = eval_expr(s.expr, state)
        except EvalError:
            self.projected = project_fault(self.cfg.rhs_pool, state)
            self._emit("insert fault", state)
            raise
        self.projected = project_value(self.cfg.rhs_pool, state, value)
        state[s.var] = value
        self._emit(f"insert value={value}", state)

    def eval_owned(self, s, e, state):
        reads = self._reads_left.get(id(e))
        if reads is None:
            reads = self.cfg.left in expr_vars(e)
            self._reads_left[id(e)] = reads
        if reads:
            self.flush(state, f"read {self.cfg.left}")
        return super().eval_owned(s, e, state)

    def assign(self, s, value, state):
        state[s.var] = value
        if s.var in self.boundary_vars:
            self.flush(state, f"write {s.var}")

    def finish(self, state):
        self.flush(state, "end")


def _check_patched(p_patched: Program, cfg: DepsAnalysisConfig):
    wrappers = [
        s
        for s in iter_stmts(p_patched.body)
        if s.loc == SCAFFOLD_LOC and type(s) is Seq and s.first.loc == INSERTED_LOC
    ]
    if len(wrappers) != 1:
        raise ValueError("program must carry exactly one inserted assignment")
    w = wrappers[0]
    if w.second.loc != cfg.inserted_at or w.first.var != cfg.left:
        raise ValueError("inserted assignment does not match the analysis configuration")
    if w.first.expr not in cfg.rhs_pool:
        raise ValueError("inserted right-hand side is not in the pool")
    missing = set(cfg.candidate_locations) - set(p_patched.statements)
    if missing:
        raise ValueError(f"unknown candidate locations {sorted(missing)}")


def _run_deps(p_patched, state_in, cfg, fuel, log):
    _check_patched(p_patched, cfg)
    m = DepsMachine(cfg, fuel, log)
    state = dict(state_in)
    try:
        m.exec_stmt(p_patched.body, state)
        outcome = Final(state)
    except EvalError as err:
        outcome = Fault(err.kind)
    except OutOfFuel:
        outcome = FuelExhausted()
    m.finish(state)
    return DepsResult(outcome, m.surviving, m.covered)


def exec_deps(p_patched: Program, state_in: dict, cfg: DepsAnalysisConfig, fuel=DEFAULT_FUEL, log=None):
    """Dependency-based analysis; with a singleton pool this is the pure relation."""
    return _run_deps(p_patched, state_in, cfg, fuel, log)


def exec_composed(p_patched: Program, state_in: dict, cfg: DepsAnalysisConfig, fuel=DEFAULT_FUEL, log=None):
    """Composition of the dependency and value relations over a pool of right-hand sides."""
    return _run_deps(p_patched, state_in, cfg, fuel, log)
