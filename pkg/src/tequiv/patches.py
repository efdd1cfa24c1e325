"""Patches, transformation schemas, the edit-distance cost and candidate selection."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .lang import (
    GUARD_ELSE_LOC,
    INSERTED_LOC,
    SCAFFOLD_LOC,
    Assign,
    Binary,
    ExprPath,
    If,
    ParseError,
    Program,
    Seq,
    Skip,
    Var,
    While,
    expr_size,
    expr_vars,
    is_boolean,
    parse_expr,
    print_expr,
    print_expr_full,
    replace_subexpr,
    stmt_expr,
    subexpr,
)
from .synthesis import (
    ARITH,
    BOOL,
    DEFAULT_CONSTANTS,
    DEFAULT_MAX_NODES,
    DEFAULT_SPACE_CAP,
    ExprSpace,
    GenConfig,
    enumerate_exprs,
)

EXPRESSION = "expression"
REFINEMENT = "refinement"
GUARD = "guard"
ASSIGNMENT = "assignment"
ALL_SCHEMAS = (EXPRESSION, REFINEMENT, GUARD, ASSIGNMENT)


class AnchorNotFound(LookupError):
    pass


class EmptySpace(ValueError):
    pass


# ------------------------------------------------------------------- patches


@dataclass(frozen=True)
class ReplaceExpr:
    path: ExprPath
    new: object

    kind = EXPRESSION

    @property
    def expr(self):
        return self.new

    @property
    def group_key(self):
        return ("replace", self.path)

    def serialize(self):
        return f"REPLACE {self.path} WITH {print_expr_full(self.new)}"


@dataclass(frozen=True)
class Refine:
    path: ExprPath
    connective: str
    new: object

    kind = REFINEMENT

    @property
    def expr(self):
        return self.new

    @property
    def group_key(self):
        return ("refine", self.path, self.connective)

    def serialize(self):
        return f"REFINE {self.path} {self.connective.upper()} {print_expr_full(self.new)}"


@dataclass(frozen=True)
class Guard:
    loc: int
    cond: object

    kind = GUARD

    @property
    def expr(self):
        return self.cond

    @property
    def group_key(self):
        return ("guard", self.loc)

    def serialize(self):
        return f"GUARD {self.loc} IF {print_expr_full(self.cond)}"


@dataclass(frozen=True)
class InsertAssign:
    loc: int
    var: str
    rhs: object

    kind = ASSIGNMENT

    @property
    def expr(self):
        return self.rhs

    @property
    def group_key(self):
        return ("insert", self.loc, self.var)

    def serialize(self):
        return f"INSERT {self.loc} {self.var} := {print_expr_full(self.rhs)}"


Patch = Union[ReplaceExpr, Refine, Guard, InsertAssign]

_PATCH_RE = (
    (re.compile(r"REPLACE\s+(\S+)\s+WITH\s+(.+)"), lambda m: ReplaceExpr(ExprPath.parse(m[1]), parse_expr(m[2]))),
    (
        re.compile(r"REFINE\s+(\S+)\s+(AND|OR)\s+(.+)"),
        lambda m: Refine(ExprPath.parse(m[1]), m[2].lower(), parse_expr(m[3])),
    ),
    (re.compile(r"GUARD\s+(\d+)\s+IF\s+(.+)"), lambda m: Guard(int(m[1]), parse_expr(m[2]))),
    (
        re.compile(r"INSERT\s+(\d+)\s+([A-Za-z_]\w*)\s*:=\s*(.+)"),
        lambda m: InsertAssign(int(m[1]), m[2], parse_expr(m[3])),
    ),
)


def parse_patch(text: str) -> Patch:
    text = text.strip()
    for pattern, build in _PATCH_RE:
        m = pattern.fullmatch(text)
        if m:
            try:
                return build(m)
            except (ParseError, ValueError) as err:
                raise ValueError(f"bad patch {text!r}: {err}") from None
    raise ValueError(f"bad patch {text!r}")


# ------------------------------------------------------------------ applying


def _replace_stmt(node, loc, fn):
    if node.loc == loc:
        return fn(node)
    if isinstance(node, Seq):
        return Seq(_replace_stmt(node.first, loc, fn), _replace_stmt(node.second, loc, fn), node.loc)
    if isinstance(node, If):
        return If(node.cond, _replace_stmt(node.then, loc, fn), _replace_stmt(node.orelse, loc, fn), node.loc)
    if isinstance(node, While):
        return While(node.cond, _replace_stmt(node.body, loc, fn), node.loc)
    return node


def _with_expr(s, e):
    if isinstance(s, Assign):
        return Assign(s.var, e, s.loc)
    if isinstance(s, If):
        return If(e, s.then, s.orelse, s.loc)
    return While(e, s.body, s.loc)


def _anchor(p, loc):
    if loc < 0 or loc not in p.statements:
        raise AnchorNotFound(f"no statement at location {loc}")
    return p.statements[loc]


def _anchor_expr(p, path):
    s = _anchor(p, path.loc)
    e = stmt_expr(s)
    if e is None:
        raise AnchorNotFound(f"statement {path.loc} has no expression")
    try:
        return s, subexpr(e, path.indices)
    except KeyError:
        raise AnchorNotFound(f"no expression at {path}") from None


def apply_patch(p: Program, patch: Patch) -> Program:
    """The patched program; untouched statements keep their base locations."""
    if isinstance(patch, ReplaceExpr):
        s, old = _anchor_expr(p, patch.path)
        if is_boolean(old) != is_boolean(patch.new):
            raise TypeError(f"{patch.serialize()}: type mismatch")
        new_expr = replace_subexpr(stmt_expr(s), patch.path.indices, patch.new)
        return Program(_replace_stmt(p.body, s.loc, lambda n: _with_expr(n, new_expr)))
    if isinstance(patch, Refine):
        s, old = _anchor_expr(p, patch.path)
        if not isinstance(s, (If, While)) or not is_boolean(old) or not is_boolean(patch.new):
            raise TypeError(f"{patch.serialize()}: refinement needs boolean condition and expression")
        refined = Binary(patch.connective, old, patch.new)
        new_expr = replace_subexpr(s.cond, patch.path.indices, refined)
        return Program(_replace_stmt(p.body, s.loc, lambda n: _with_expr(n, new_expr)))
    if isinstance(patch, Guard):
        s = _anchor(p, patch.loc)
        if not isinstance(s, Assign) or not is_boolean(patch.cond):
            raise TypeError(f"{patch.serialize()}: guard needs an assignment and a boolean condition")
        return Program(
            _replace_stmt(p.body, s.loc, lambda n: If(patch.cond, n, Skip(GUARD_ELSE_LOC), SCAFFOLD_LOC))
        )
    if isinstance(patch, InsertAssign):
        s = _anchor(p, patch.loc)
        if is_boolean(patch.rhs):
            raise TypeError(f"{patch.serialize()}: assignment of a boolean expression")
        inserted = Assign(patch.var, patch.rhs, INSERTED_LOC)
        return Program(_replace_stmt(p.body, s.loc, lambda n: Seq(inserted, n, SCAFFOLD_LOC)))
    raise TypeError(f"not a patch: {patch!r}")


def marked_path(patch: Patch) -> ExprPath:
    """Occurrence of the synthesized expression inside the patched program."""
    if isinstance(patch, ReplaceExpr):
        return patch.path
    if isinstance(patch, Refine):
        return ExprPath(patch.path.loc, patch.path.indices + (1,))
    if isinstance(patch, Guard):
        return ExprPath(SCAFFOLD_LOC, ())
    raise TypeError("insertions have no marked expression")


# ---------------------------------------------------------------------- cost


def _same_label(a, b):
    if type(a) is not type(b):
        return False
    if isinstance(a, Binary):
        return a.op == b.op
    if isinstance(a, Var):
        return a.name == b.name
    return a.value == b.value


def common_prefix_size(a, b) -> int:
    """Nodes of the largest common top-down prefix of two trees."""
    if not _same_label(a, b):
        return 0
    if isinstance(a, Binary):
        return 1 + common_prefix_size(a.left, b.left) + common_prefix_size(a.right, b.right)
    return 1


def cost(patch: Patch, base: Program) -> int:
    """AST edit distance between the patched and the original program."""
    if isinstance(patch, ReplaceExpr):
        old = base.expr_at(patch.path)
        return expr_size(old) + expr_size(patch.new) - 2 * common_prefix_size(old, patch.new)
    if isinstance(patch, Refine):
        return 1 + expr_size(patch.new)
    if isinstance(patch, Guard):
        return 3 + expr_size(patch.cond)
    return 2 + expr_size(patch.rhs)


class CostFn:
    """Default edit-distance cost, optionally overridden by an explicit table.

    The table maps serialized patches to costs.  Ties are broken by the
    serialization, giving a strict total order.
    """

    def __init__(self, base: Program, table: Optional[dict] = None):
        self.base = base
        self.table = {k: Fraction(v) for k, v in (table or {}).items()}

    def __call__(self, patch) -> Fraction:
        text = patch.serialize()
        if text in self.table:
            return self.table[text]
        return Fraction(cost(patch, self.base))

    def key(self, patch):
        return (self(patch), patch.serialize())


def format_cost(c) -> str:
    c = Fraction(c)
    if c.denominator == 1:
        return str(c.numerator)
    return repr(float(c))


# ---------------------------------------------------------------------- space


@dataclass(frozen=True)
class SchemaConfig:
    schemas: tuple = ALL_SCHEMAS
    locations: Optional[frozenset] = None


@dataclass(frozen=True)
class SynthConfig:
    constants: tuple = DEFAULT_CONSTANTS
    max_nodes: int = DEFAULT_MAX_NODES
    cap: int = DEFAULT_SPACE_CAP


@dataclass(frozen=True, eq=False)
class PatchGroup:
    """Patches sharing one anchor; they differ only in the synthesized expression."""

    kind: str
    anchor: object  # ExprPath or location
    exprs: ExprSpace
    connective: Optional[str] = None
    var: Optional[str] = None

    @property
    def key(self):
        if self.kind == EXPRESSION:
            return ("replace", self.anchor)
        if self.kind == REFINEMENT:
            return ("refine", self.anchor, self.connective)
        if self.kind == GUARD:
            return ("guard", self.anchor)
        return ("insert", self.anchor, self.var)

    def make(self, e) -> Patch:
        if self.kind == EXPRESSION:
            return ReplaceExpr(self.anchor, e)
        if self.kind == REFINEMENT:
            return Refine(self.anchor, self.connective, e)
        if self.kind == GUARD:
            return Guard(self.anchor, e)
        return InsertAssign(self.anchor, self.var, e)

    def __len__(self):
        return len(self.exprs)

    def __iter__(self):
        return (self.make(e) for e in self.exprs)


@dataclass
class Family:
    """Insertion groups of one variable sharing a right-hand-side pool."""

    var: str
    pool: ExprSpace
    locations: list = field(default_factory=list)


class PatchSpace:
    def __init__(self, base: Program, groups=()):
        self.base = base
        self.groups = {}
        self.families = {}
        for g in groups:
            self.add(g)

    def add(self, group: PatchGroup, pool: Optional[ExprSpace] = None):
        if group.key in self.groups:
            raise ValueError(f"duplicate group {group.key}")
        if not len(group):
            return
        self.groups[group.key] = group
        if group.kind == ASSIGNMENT:
            fam = self.families.get(group.var)
            if fam is None:
                fam = self.families[group.var] = Family(group.var, pool or group.exprs)
            elif pool is not None and pool is not fam.pool and pool != fam.pool:
                raise ValueError(f"insertions of {group.var} use different pools")
            fam.locations.append(group.anchor)

    def __len__(self):
        return sum(len(g) for g in self.groups.values())

    @property
    def total_count(self):
        return len(self)

    def __iter__(self):
        for g in self.groups.values():
            yield from g

    def group_of(self, patch) -> PatchGroup:
        return self.groups[patch.group_key]

    def __contains__(self, patch):
        g = self.groups.get(patch.group_key)
        return g is not None and patch.expr in g.exprs


def visible_variables(p: Program, tests=()) -> tuple:
    """Variables bound by any test input plus all variables assigned in ``p``."""
    names = set(p.assigned)
    for t in tests:
        names |= set(t.input)
    return tuple(sorted(names))


def _sites(p: Program, schema_cfg: SchemaConfig):
    for loc in sorted(p.statements):
        s = p.statements[loc]
        if isinstance(s, Seq):
            continue
        if schema_cfg.locations is not None and loc not in schema_cfg.locations:
            continue
        yield s


def build_space(
    p: Program,
    schema_cfg: SchemaConfig = SchemaConfig(),
    synth_cfg: SynthConfig = SynthConfig(),
    variables=None,
) -> PatchSpace:
    """Apply every enabled schema at every admitted non-sequence statement."""
    if variables is None:
        variables = visible_variables(p)
    variables = tuple(sorted(set(variables)))
    cache = {}

    def space(vars_, rtype):
        key = (vars_, rtype)
        if key not in cache:
            cache[key] = enumerate_exprs(vars_, rtype, synth_cfg.constants, synth_cfg.max_nodes, synth_cfg.cap)
        return cache[key]

    result = PatchSpace(p)
    enabled = set(schema_cfg.schemas)
    for s in _sites(p, schema_cfg):
        if EXPRESSION in enabled and not isinstance(s, Skip):
            old = stmt_expr(s)
            full = space(variables, BOOL if is_boolean(old) else ARITH)
            exprs = full.subset(e for e in full.exprs if e != old)
            result.add(PatchGroup(EXPRESSION, ExprPath(s.loc), exprs))
        if REFINEMENT in enabled and isinstance(s, (If, While)):
            for conn in ("and", "or"):
                result.add(PatchGroup(REFINEMENT, ExprPath(s.loc), space(variables, BOOL), connective=conn))
        if GUARD in enabled and isinstance(s, Assign):
            result.add(PatchGroup(GUARD, s.loc, space(variables, BOOL)))
        if ASSIGNMENT in enabled:
            for v in variables:
                pool = space(tuple(x for x in variables if x != v), ARITH)
                result.add(PatchGroup(ASSIGNMENT, s.loc, pool, var=v), pool)
    return result


def _sort_exprs(exprs):
    return sorted(set(exprs), key=lambda e: (expr_size(e), print_expr(e)))


def space_from_patches(p: Program, patches) -> PatchSpace:
    """A space holding exactly the given patches (e.g. the entries of a cost table)."""
    by_group = {}
    for patch in patches:
        apply_patch(p, patch)  # validates anchors and types
        if isinstance(patch, InsertAssign) and patch.var in expr_vars(patch.rhs):
            raise ValueError(f"{patch.serialize()}: self-referential right-hand side")
        if isinstance(patch, ReplaceExpr) and p.expr_at(patch.path) == patch.new:
            raise ValueError(f"{patch.serialize()}: identical to the original code")
        by_group.setdefault(patch.group_key, []).append(patch)

    result = PatchSpace(p)
    pools = {}
    for key, members in by_group.items():
        if key[0] == "insert":
            pools.setdefault(key[2], []).extend(m.expr for m in members)
    pools = {
        v: ExprSpace(tuple(_sort_exprs(es)), ARITH, GenConfig()) for v, es in pools.items()
    }
    for key in sorted(by_group, key=lambda k: (k[0], str(k[1:]))):
        members = by_group[key]
        first = members[0]
        rtype = ARITH if isinstance(first, InsertAssign) or not is_boolean(first.expr) else BOOL
        exprs = ExprSpace(tuple(_sort_exprs(m.expr for m in members)), rtype, GenConfig())
        if isinstance(first, ReplaceExpr):
            result.add(PatchGroup(EXPRESSION, first.path, exprs))
        elif isinstance(first, Refine):
            result.add(PatchGroup(REFINEMENT, first.path, exprs, connective=first.connective))
        elif isinstance(first, Guard):
            result.add(PatchGroup(GUARD, first.loc, exprs))
        else:
            result.add(PatchGroup(ASSIGNMENT, first.loc, exprs, var=first.var), pools[first.var])
    return result


def pick(space: PatchSpace, costfn: CostFn, exclude=frozenset()) -> Patch:
    """Minimal remaining patch under (cost, serialization)."""
    best = None
    best_key = None
    for patch in space:
        if patch in exclude:
            continue
        k = costfn.key(patch)
        if best_key is None or k < best_key:
            best, best_key = patch, k
    if best is None:
        raise EmptySpace("no candidate left")
    return best
