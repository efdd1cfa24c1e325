"""Defect bundles: a program, its tests and the search configuration.

A bundle is a directory holding::

    program.imp   the buggy program
    tests.txt     test blocks (see ``parse_tests``)
    config.txt    optional ``key = value`` settings
    <cost table>  optional, named by the ``cost_table`` key

Test blocks look like::

    test t
      in i=4 c=0
      assert c = 2
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .lang import DEFAULT_FUEL, ParseError, Program, Test, expr_vars, is_boolean, parse_expr, parse_program, run_test
from .patches import (
    ALL_SCHEMAS,
    CostFn,
    PatchSpace,
    SchemaConfig,
    SynthConfig,
    build_space,
    parse_patch,
    space_from_patches,
    visible_variables,
)
from .synthesis import DEFAULT_CONSTANTS, DEFAULT_MAX_NODES, DEFAULT_SPACE_CAP, SpaceTooLarge


class BundleError(Exception):
    def __init__(self, kind, message):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


@dataclass
class BundleConfig:
    schemas: tuple = ALL_SCHEMAS
    locations: Optional[frozenset] = None
    max_expr_nodes: int = DEFAULT_MAX_NODES
    constants: tuple = DEFAULT_CONSTANTS
    fuel: int = DEFAULT_FUEL
    space_cap: int = DEFAULT_SPACE_CAP
    cost_table: Optional[str] = None
    space: str = "enumerated"  # or "cost_table": the table lists the whole space


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _positive(text):
    n = int(text)
    if n <= 0:
        raise ValueError("must be positive")
    return n


def _schemas(text):
    names = tuple(x.strip() for x in text.split(",") if x.strip())
    unknown = set(names) - set(ALL_SCHEMAS)
    if unknown:
        raise ValueError(f"unknown schemas {sorted(unknown)}")
    return tuple(s for s in ALL_SCHEMAS if s in names)


def _space_kind(text):
    if text not in ("enumerated", "cost_table"):
        raise ValueError("expected 'enumerated' or 'cost_table'")
    return text


_CONFIG_KEYS = {
    "schemas": _schemas,
    "locations": lambda t: frozenset(_int_list(t)),
    "max_expr_nodes": _positive,
    "constants": _int_list,
    "fuel": _positive,
    "space_cap": _positive,
    "cost_table": str,
    "space": _space_kind,
}


def parse_config(text: str, where="config.txt") -> BundleConfig:
    cfg = BundleConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise BundleError("bad-config", f"{where}:{lineno}: expected 'key = value'")
        if key not in _CONFIG_KEYS:
            raise BundleError("bad-config", f"{where}:{lineno}: unknown key {key!r}")
        try:
            setattr(cfg, key, _CONFIG_KEYS[key](value))
        except ValueError as err:
            raise BundleError("bad-config", f"{where}:{lineno}: {key}: {err}") from None
    return cfg


_BINDING_RE = re.compile(r"([A-Za-z_]\w*)=(-?\d+)")


def parse_tests(text: str, where="tests.txt") -> list:
    tests = []
    current = None

    def close():
        if current is None:
            return
        name, inputs, assertion, lineno = current
        if assertion is None:
            raise BundleError("parse-error", f"{where}:{lineno}: test {name!r} has no assertion")
        tests.append(Test(name, inputs, assertion))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if word == "test":
            close()
            if not rest or any(t.name == rest for t in tests):
                raise BundleError("parse-error", f"{where}:{lineno}: missing or duplicate test name")
            current = [rest, {}, None, lineno]
        elif current is None:
            raise BundleError("parse-error", f"{where}:{lineno}: expected 'test <name>'")
        elif word == "in":
            for item in rest.split():
                m = _BINDING_RE.fullmatch(item)
                if m is None:
                    raise BundleError("parse-error", f"{where}:{lineno}: bad binding {item!r}")
                current[1][m[1]] = int(m[2])
        elif word == "assert":
            if current[2] is not None:
                raise BundleError("parse-error", f"{where}:{lineno}: second assertion")
            try:
                e = parse_expr(rest)
            except ParseError as err:
                raise BundleError("parse-error", f"{where}:{lineno}: {err}") from None
            if not is_boolean(e):
                raise BundleError("parse-error", f"{where}:{lineno}: assertion is not boolean")
            current[2] = e
        else:
            raise BundleError("parse-error", f"{where}:{lineno}: unexpected {word!r}")
    close()
    if not tests:
        raise BundleError("parse-error", f"{where}: no tests")
    return tests


def parse_cost_table(text: str, where) -> dict:
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        value, _, patch_text = line.partition(" ")
        try:
            c = Fraction(value)
            patch = parse_patch(patch_text)
        except ValueError as err:
            raise BundleError("parse-error", f"{where}:{lineno}: {err}") from None
        if c < 0:
            raise BundleError("parse-error", f"{where}:{lineno}: negative cost")
        table[patch.serialize()] = c
    return table


@dataclass
class DefectBundle:
    name: str
    program: Program
    tests: list
    config: BundleConfig = field(default_factory=BundleConfig)
    cost_table: dict = field(default_factory=dict)

    def costfn(self) -> CostFn:
        return CostFn(self.program, self.cost_table)

    def variables(self):
        return visible_variables(self.program, self.tests)

    def build_space(self, locations=None) -> PatchSpace:
        cfg = self.config
        if cfg.space == "cost_table":
            patches = [parse_patch(text) for text in self.cost_table]
            if locations is not None:
                patches = [p for p in patches if _patch_loc(p) in locations]
            return space_from_patches(self.program, patches)
        locs = cfg.locations if locations is None else frozenset(locations)
        try:
            return build_space(
                self.program,
                SchemaConfig(cfg.schemas, locs),
                SynthConfig(cfg.constants, cfg.max_expr_nodes, cfg.space_cap),
                self.variables(),
            )
        except SpaceTooLarge as err:
            raise BundleError("space-too-large", str(err)) from None


def _patch_loc(patch):
    return patch.path.loc if hasattr(patch, "path") else patch.loc


def _read(path: Path, kind="missing-file"):
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise BundleError(kind, f"{path} not found") from None
    except OSError as err:
        raise BundleError("io-error", f"{path}: {err}") from None


def validate(program: Program, tests, fuel=DEFAULT_FUEL):
    needed = set(program.variables)
    for t in tests:
        missing = (needed | expr_vars(t.assertion)) - set(t.input)
        if missing:
            raise BundleError("unbound-variable", f"test {t.name!r} leaves {', '.join(sorted(missing))} unbound")
    if all(run_test(program, t, fuel) for t in tests):
        raise BundleError("no-failing-test", "the program passes every test")


def load_bundle(dir_path) -> DefectBundle:
    root = Path(dir_path)
    if not root.is_dir():
        raise BundleError("missing-file", f"{root} is not a directory")
    try:
        program = parse_program(_read(root / "program.imp"))
    except ParseError as err:
        raise BundleError("parse-error", f"{root / 'program.imp'}:{err}") from None
    tests = parse_tests(_read(root / "tests.txt"), str(root / "tests.txt"))
    config = BundleConfig()
    if (root / "config.txt").exists():
        config = parse_config(_read(root / "config.txt"), str(root / "config.txt"))
    table = {}
    if config.cost_table:
        table = parse_cost_table(_read(root / config.cost_table), str(root / config.cost_table))
    elif config.space == "cost_table":
        raise BundleError("bad-config", "space = cost_table needs a cost_table file")
    validate(program, tests, config.fuel)
    bundle = DefectBundle(root.name, program, tests, config, table)
    if config.space == "cost_table":
        try:
            bundle.build_space()
        except (ValueError, LookupError, TypeError) as err:
            raise BundleError("parse-error", f"cost table: {err}") from None
    return bundle
