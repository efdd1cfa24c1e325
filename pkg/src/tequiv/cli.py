"""Command-line interface: ``tequiv repair|partition|check <bundle>``."""

from __future__ import annotations

import argparse
import sys

from .bundle import BundleError, load_bundle
from .engine import FIRST, FULL, NAIVE, PARTITION, NoFailingTest, evaluate, naive_explore, repair
from .patches import format_cost, parse_patch
from .report import StatsReport, emit_stats, write_patches

EXIT_FOUND = 0
EXIT_NONE = 1
EXIT_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _locs(text):
    try:
        return frozenset(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad location list {text!r}") from None


def _fuel(text):
    try:
        n = int(text)
    except ValueError:
        n = 0
    if n <= 0:
        raise argparse.ArgumentTypeError(f"fuel must be a positive integer, got {text!r}")
    return n


def build_parser():
    parser = _Parser(prog="tequiv", description="Test-equivalence driven program repair.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    rp = sub.add_parser("repair", help="search for plausible patches")
    rp.add_argument("bundle")
    rp.add_argument("--mode", choices=(FIRST, FULL), default=FIRST)
    rp.add_argument("--strategy", choices=(PARTITION, NAIVE), default=PARTITION)
    rp.add_argument("--locs", type=_locs, help="comma-separated statement locations")
    rp.add_argument("--stats", help="write the stats CSV here")
    rp.add_argument("--patches", help="write plausible patches here, one per line")
    rp.add_argument("--fuel", type=_fuel)
    rp.add_argument("--trace", action="store_true", help="dump analysis events to stderr")
    rp.add_argument("--timing", action="store_true", help="record wall time in the stats file")

    pp = sub.add_parser("partition", help="compute one test-equivalence class")
    pp.add_argument("bundle")
    pp.add_argument("--test", required=True)
    pp.add_argument("--patch", required=True)
    pp.add_argument("--fuel", type=_fuel)
    pp.add_argument("--trace", action="store_true")

    cp = sub.add_parser("check", help="validate a bundle")
    cp.add_argument("bundle")
    return parser


def _trace_log(enabled):
    if not enabled:
        return None
    return lambda line: print(line, file=sys.stderr)


def cmd_repair(args):
    bundle = load_bundle(args.bundle)
    fuel = args.fuel or bundle.config.fuel
    space = bundle.build_space(args.locs)
    costfn = bundle.costfn()
    if args.strategy == NAIVE:
        repairs, session = naive_explore(bundle.program, bundle.tests, space, costfn, args.mode, fuel)
    else:
        repairs, session = repair(
            bundle.program, bundle.tests, space, costfn, args.mode, fuel, _trace_log(args.trace)
        )
    if args.stats:
        report = emit_stats(session, args.stats, bundle.name, costfn, timing=args.timing)
    else:
        report = StatsReport.from_session(bundle.name, session, costfn)
    if args.patches:
        write_patches(session, args.patches)
    for patch in repairs:
        print(f"{format_cost(costfn(patch))}\t{patch.serialize()}")
    print(
        f"# candidates={report.candidates_total} explored={report.candidates_explored} "
        f"executions={report.test_executions} plausible={report.plausible_count} "
        f"speed={report.exploration_speed:.2f}",
        file=sys.stderr,
    )
    return EXIT_FOUND if repairs else EXIT_NONE


def cmd_partition(args):
    bundle = load_bundle(args.bundle)
    fuel = args.fuel or bundle.config.fuel
    tests = {t.name: t for t in bundle.tests}
    if args.test not in tests:
        raise BundleError("usage", f"no test named {args.test!r}")
    try:
        patch = parse_patch(args.patch)
    except ValueError as err:
        raise BundleError("usage", str(err)) from None
    space = bundle.build_space()
    if patch not in space:
        raise BundleError("usage", f"{patch.serialize()} is not in the search space")
    verdict, cls = evaluate(bundle.program, patch, tests[args.test], space, fuel, _trace_log(args.trace))
    print(f"verdict={'pass' if verdict else 'fail'} covered={str(cls.covered).lower()} size={len(cls)}")
    for member in cls.patches(space):
        print(member.serialize())
    return EXIT_FOUND


def cmd_check(args):
    bundle = load_bundle(args.bundle)
    space = bundle.build_space()
    print(
        f"{bundle.name}: {len(bundle.program.statements)} statements, {len(bundle.tests)} tests, "
        f"{len(space)} candidates"
    )
    return EXIT_FOUND


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    handler = {"repair": cmd_repair, "partition": cmd_partition, "check": cmd_check}[args.command]
    try:
        return handler(args)
    except (BundleError, NoFailingTest) as err:
        print(f"tequiv: {err}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as err:
        print(f"tequiv: {err}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run_cli())
