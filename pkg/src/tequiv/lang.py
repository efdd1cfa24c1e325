"""The imperative language L: syntax trees, concrete syntax and big-step interpreter.

Programs are trees of frozen dataclasses.  Every statement carries ``loc``, its
pre-order index inside the program; statements introduced by a patch carry a
negative ``loc`` (see ``SCAFFOLD_LOC`` and friends) so analyses can recognise
them.  Expressions carry no identity of their own: an occurrence is addressed
by an :class:`ExprPath` (statement location plus child indices).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional, Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

DEFAULT_FUEL = 100_000

ARITH_OPS = ("+", "-", "*", "mod")
BOOL_OPS = ("and", "or")
REL_OPS = ("<", "<=", "=", "!=", ">", ">=")

# Locations of nodes synthesized by patches.
SCAFFOLD_LOC = -1  # guard `if` / sequence wrapping an inserted assignment
INSERTED_LOC = -2  # the inserted assignment itself
GUARD_ELSE_LOC = -3  # `skip` branch of a guard

KEYWORDS = frozenset(
    "skip if then else fi while do od and or mod true false".split()
)


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Var, Num, BoolLit, Binary]


def is_boolean(e: Expr) -> bool:
    if isinstance(e, BoolLit):
        return True
    if isinstance(e, Binary):
        return e.op in BOOL_OPS or e.op in REL_OPS
    return False


def expr_size(e: Expr) -> int:
    if isinstance(e, Binary):
        return 1 + expr_size(e.left) + expr_size(e.right)
    return 1


def expr_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Binary):
        return expr_vars(e.left) | expr_vars(e.right)
    return frozenset()


def subexpr(e: Expr, indices: tuple) -> Expr:
    for i in indices:
        if not isinstance(e, Binary) or i not in (0, 1):
            raise KeyError(indices)
        e = e.right if i else e.left
    return e


def replace_subexpr(e: Expr, indices: tuple, new: Expr) -> Expr:
    if not indices:
        return new
    if not isinstance(e, Binary) or indices[0] not in (0, 1):
        raise KeyError(indices)
    if indices[0] == 0:
        return Binary(e.op, replace_subexpr(e.left, indices[1:], new), e.right)
    return Binary(e.op, e.left, replace_subexpr(e.right, indices[1:], new))


# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    loc: int = 0


@dataclass(frozen=True)
class Skip:
    loc: int = 0


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"
    loc: int = 0


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    orelse: "Stmt"
    loc: int = 0


@dataclass(frozen=True)
class While:
    cond: Expr
    body: "Stmt"
    loc: int = 0


Stmt = Union[Assign, Skip, Seq, If, While]


def stmt_expr(s: Stmt) -> Optional[Expr]:
    """The single expression directly owned by a statement, if any."""
    if isinstance(s, Assign):
        return s.expr
    if isinstance(s, (If, While)):
        return s.cond
    return None


def iter_stmts(s: Stmt) -> Iterator[Stmt]:
    """Pre-order traversal."""
    stack = [s]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Seq):
            stack.append(node.second)
            stack.append(node.first)
        elif isinstance(node, If):
            stack.append(node.orelse)
            stack.append(node.then)
        elif isinstance(node, While):
            stack.append(node.body)


def renumber(s: Stmt, start: int = 0) -> Stmt:
    """Reassign pre-order locations starting at ``start``."""
    counter = [start]

    def go(node):
        loc = counter[0]
        counter[0] += 1
        if isinstance(node, Assign):
            return Assign(node.var, node.expr, loc)
        if isinstance(node, Skip):
            return Skip(loc)
        if isinstance(node, Seq):
            first = go(node.first)
            return Seq(first, go(node.second), loc)
        if isinstance(node, If):
            then = go(node.then)
            return If(node.cond, then, go(node.orelse), loc)
        return While(node.cond, go(node.body), loc)

    return go(s)


@dataclass(frozen=True)
class ExprPath:
    """An expression occurrence: statement location plus child indices."""

    loc: int
    indices: tuple = ()

    def __str__(self):
        return ".".join(str(i) for i in (self.loc, *self.indices))

    @classmethod
    def parse(cls, text: str) -> "ExprPath":
        try:
            parts = [int(p) for p in text.strip().split(".")]
        except ValueError:
            raise ValueError(f"bad expression path {text!r}") from None
        return cls(parts[0], tuple(parts[1:]))


@dataclass(frozen=True)
class Program:
    body: Stmt

    @cached_property
    def statements(self) -> dict:
        """Location -> statement for every non-synthetic statement."""
        return {s.loc: s for s in iter_stmts(self.body) if s.loc >= 0}

    @cached_property
    def _by_loc(self) -> dict:
        return {s.loc: s for s in iter_stmts(self.body)}

    def stmt_at(self, loc: int) -> Stmt:
        """Statement at ``loc``; scaffold locations resolve too (one patch per program)."""
        return self._by_loc[loc]

    def expr_at(self, path: ExprPath) -> Expr:
        e = stmt_expr(self.stmt_at(path.loc))
        if e is None:
            raise KeyError(path)
        return subexpr(e, path.indices)

    @cached_property
    def variables(self) -> frozenset:
        names = set()
        for s in iter_stmts(self.body):
            if isinstance(s, Assign):
                names.add(s.var)
            e = stmt_expr(s)
            if e is not None:
                names |= expr_vars(e)
        return frozenset(names)

    @cached_property
    def assigned(self) -> frozenset:
        return frozenset(s.var for s in iter_stmts(self.body) if isinstance(s, Assign))

    def __str__(self):
        return print_program(self)


@dataclass(frozen=True)
class Test:
    name: str
    input: dict
    assertion: Expr


# ------------------------------------------------------------------- parsing


class ParseError(Exception):
    def __init__(self, message, line=0, col=0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+|#[^\n]*)"
    r"|(?P<num>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>:=|<=|>=|!=|[-+*()<>=;])"
)


@dataclass
class _Token:
    kind: str  # num | ident | kw | op | eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


_BINARY_LEVELS = (("or",), ("and",), REL_OPS, ("+", "-"), ("*", "mod"))


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def accept(self, text):
        if self.tok.kind in ("kw", "op") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def end(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # statements
    def seq(self):
        first = self.stmt()
        if self.accept(";"):
            return Seq(first, self.seq())
        return first

    def stmt(self):
        tok = self.tok
        if self.accept("skip"):
            return Skip()
        if self.accept("if"):
            cond = self.expr()
            self.expect("then")
            then = self.seq()
            self.expect("else")
            orelse = self.seq()
            self.expect("fi")
            self._want_bool(cond, tok, "if condition")
            return If(cond, then, orelse)
        if self.accept("while"):
            cond = self.expr()
            self.expect("do")
            body = self.seq()
            self.expect("od")
            self._want_bool(cond, tok, "while condition")
            return While(cond, body)
        if tok.kind == "ident":
            self.i += 1
            self.expect(":=")
            rhs_tok = self.tok
            rhs = self.expr()
            if is_boolean(rhs):
                raise self.error("assignment of a boolean expression", rhs_tok)
            return Assign(tok.text, rhs)
        raise self.error(f"expected a statement, found {tok.text or 'end of input'!r}")

    def _want_bool(self, e, tok, what):
        if not is_boolean(e):
            raise self.error(f"{what} is not boolean", tok)

    # expressions
    def expr(self, level=0):
        if level == len(_BINARY_LEVELS):
            return self.primary()
        ops = _BINARY_LEVELS[level]
        left = self.expr(level + 1)
        while self.tok.kind in ("kw", "op") and self.tok.text in ops:
            op_tok = self.tok
            self.i += 1
            right = self.expr(level + 1)
            left = self._binary(op_tok, left, right)
            if ops is REL_OPS:
                # relational operators do not chain
                break
        return left

    def _binary(self, tok, left, right):
        op = tok.text
        if op in BOOL_OPS:
            if not (is_boolean(left) and is_boolean(right)):
                raise self.error(f"operands of {op!r} must be boolean", tok)
        elif is_boolean(left) or is_boolean(right):
            raise self.error(f"operands of {op!r} must be arithmetic", tok)
        return Binary(op, left, right)

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return _literal(int(tok.text), tok, self)
        if self.accept("-"):
            num = self.tok
            if num.kind != "num":
                raise self.error("expected an integer after unary '-'")
            self.i += 1
            return _literal(-int(num.text), num, self)
        if tok.kind == "ident":
            self.i += 1
            return Var(tok.text)
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")


def _literal(value, tok, parser):
    if not INT_MIN <= value <= INT_MAX:
        raise parser.error("integer literal out of 64-bit range", tok)
    return Num(value)


def parse_program(text: str) -> Program:
    p = _Parser(text)
    body = p.seq()
    p.end()
    return Program(renumber(body))


def parse_expr(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    p.end()
    return e


# ------------------------------------------------------------------ printing

_PREC = {"or": 1, "and": 2, **{op: 3 for op in REL_OPS}, "+": 4, "-": 4, "*": 5, "mod": 5}


def _atom(e):
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Num):
        return str(e.value)
    return "true" if e.value else "false"


def print_expr(e: Expr) -> str:
    """Canonical text with minimal parentheses."""
    if not isinstance(e, Binary):
        return _atom(e)
    prec = _PREC[e.op]
    left = print_expr(e.left)
    right = print_expr(e.right)
    if isinstance(e.left, Binary) and _PREC[e.left.op] < prec:
        left = f"({left})"
    if isinstance(e.right, Binary) and _PREC[e.right.op] <= prec:
        right = f"({right})"
    return f"{left} {e.op} {right}"


def print_expr_full(e: Expr) -> str:
    """Fully parenthesized text, used in patch serializations."""
    if not isinstance(e, Binary):
        return _atom(e)
    return f"({print_expr_full(e.left)} {e.op} {print_expr_full(e.right)})"


def _print_stmt(s, indent, out):
    pad = "  " * indent
    if isinstance(s, Seq):
        _print_stmt(s.first, indent, out)
        out[-1] += ";"
        _print_stmt(s.second, indent, out)
    elif isinstance(s, Assign):
        out.append(f"{pad}{s.var} := {print_expr(s.expr)}")
    elif isinstance(s, Skip):
        out.append(f"{pad}skip")
    elif isinstance(s, If):
        out.append(f"{pad}if {print_expr(s.cond)} then")
        _print_stmt(s.then, indent + 1, out)
        out.append(f"{pad}else")
        _print_stmt(s.orelse, indent + 1, out)
        out.append(f"{pad}fi")
    else:
        out.append(f"{pad}while {print_expr(s.cond)} do")
        _print_stmt(s.body, indent + 1, out)
        out.append(f"{pad}od")


def print_stmt(s: Stmt) -> str:
    out = []
    _print_stmt(s, 0, out)
    return "\n".join(out)


def print_program(p: Program) -> str:
    return print_stmt(p.body)


# ---------------------------------------------------------------- evaluation


class EvalError(Exception):
    """A runtime fault: ``kind`` is unbound-variable, mod-by-zero or arithmetic-overflow."""

    def __init__(self, kind, detail=""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind


class OutOfFuel(Exception):
    pass


def _checked(v):
    if v < INT_MIN or v > INT_MAX:
        raise EvalError("arithmetic-overflow", str(v))
    return v


def _mod(a, b):
    if b == 0:
        raise EvalError("mod-by-zero")
    r = abs(a) % abs(b)
    return -r if a < 0 else r


def eval_expr(e: Expr, state: dict):
    """Big-step value of ``e``; both operands are always evaluated, left first."""
    t = type(e)
    if t is Var:
        try:
            return state[e.name]
        except KeyError:
            raise EvalError("unbound-variable", e.name) from None
    if t is Num:
        return e.value
    if t is BoolLit:
        return e.value
    a = eval_expr(e.left, state)
    b = eval_expr(e.right, state)
    op = e.op
    if op == "+":
        return _checked(a + b)
    if op == "-":
        return _checked(a - b)
    if op == "*":
        return _checked(a * b)
    if op == "mod":
        return _mod(a, b)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "and":
        return a and b
    return a or b


@dataclass(frozen=True)
class Final:
    state: dict

    def __eq__(self, other):
        return isinstance(other, Final) and self.state == other.state

    __hash__ = None


@dataclass(frozen=True)
class Fault:
    kind: str


@dataclass(frozen=True)
class FuelExhausted:
    pass


RunOutcome = Union[Final, Fault, FuelExhausted]


class Interpreter:
    """Big-step interpreter with a step budget.

    One unit of fuel is charged per executed statement and per evaluation of a
    statement's expression.  Patch scaffolding (negative locations) runs for
    free so that programs differing only in where or how a patch is applied
    consume identical fuel along identical paths.

    Subclasses hook ``eval_owned`` (evaluation of a statement's expression),
    ``exec_stmt`` and ``assign``.
    """

    def __init__(self, fuel: int = DEFAULT_FUEL):
        if fuel <= 0:
            raise ValueError("fuel must be positive")
        self.fuel = fuel
        self.visited = set()

    def charge(self, s):
        if s.loc >= 0:
            self.fuel -= 1
            if self.fuel < 0:
                raise OutOfFuel()

    def eval_owned(self, s, e, state):
        self.charge(s)
        return eval_expr(e, state)

    def assign(self, s, value, state):
        state[s.var] = value

    def exec_stmt(self, s, state):
        self.charge(s)
        self.visited.add(s.loc)
        t = type(s)
        if t is Seq:
            self.exec_stmt(s.first, state)
            self.exec_stmt(s.second, state)
        elif t is Assign:
            self.assign(s, self.eval_owned(s, s.expr, state), state)
        elif t is If:
            if self.eval_owned(s, s.cond, state):
                self.exec_stmt(s.then, state)
            else:
                self.exec_stmt(s.orelse, state)
        elif t is While:
            while self.eval_owned(s, s.cond, state):
                self.exec_stmt(s.body, state)
        # Skip: nothing

    def run(self, p: Program, state: dict) -> RunOutcome:
        state = dict(state)
        try:
            self.exec_stmt(p.body, state)
        except EvalError as err:
            return Fault(err.kind)
        except OutOfFuel:
            return FuelExhausted()
        return Final(state)


def exec_program(p: Program, state: dict, fuel: int = DEFAULT_FUEL) -> RunOutcome:
    return Interpreter(fuel).run(p, state)


def check_assertion(outcome: RunOutcome, assertion: Expr) -> bool:
    if not isinstance(outcome, Final):
        return False
    try:
        return eval_expr(assertion, outcome.state) is True
    except EvalError:
        return False


def run_test(p: Program, t: Test, fuel: int = DEFAULT_FUEL) -> bool:
    return check_assertion(exec_program(p, t.input, fuel), t.assertion)
