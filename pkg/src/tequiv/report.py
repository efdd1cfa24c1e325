"""Exploration statistics and their file formats."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .patches import format_cost

STATS_HEADER = (
    "bundle",
    "strategy",
    "mode",
    "candidates_total",
    "candidates_explored",
    "test_executions",
    "plausible",
    "first_cost",
    "classes_failing_test",
    "wall_ms",
)


@dataclass
class StatsReport:
    bundle: str
    strategy: str
    mode: str
    candidates_total: int
    candidates_explored: int
    test_executions: int
    classes_per_test: dict
    classes_failing_test: int
    plausible_count: int
    first_repair_cost: object  # Fraction or None
    wall_time: float

    @property
    def exploration_speed(self) -> float:
        if not self.test_executions:
            return 0.0
        return self.candidates_explored / self.test_executions

    @classmethod
    def from_session(cls, bundle_name, session, costfn):
        first = session.repairs[0] if session.repairs else None
        return cls(
            bundle=bundle_name,
            strategy=session.strategy,
            mode=session.mode,
            candidates_total=len(session.space),
            candidates_explored=session.explored_count(),
            test_executions=session.test_executions,
            classes_per_test=session.classes_per_test(),
            classes_failing_test=sum(session.classes_per_test()[n] for n in session.originally_failing),
            plausible_count=len(session.repairs),
            first_repair_cost=costfn(first) if first is not None else None,
            wall_time=session.wall_time,
        )

    def row(self, timing=False):
        return (
            self.bundle,
            self.strategy,
            self.mode,
            self.candidates_total,
            self.candidates_explored,
            self.test_executions,
            self.plausible_count,
            "" if self.first_repair_cost is None else format_cost(self.first_repair_cost),
            self.classes_failing_test,
            f"{self.wall_time * 1000:.0f}" if timing else "",
        )


def render_stats(report: StatsReport, session, timing=False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STATS_HEADER)
    writer.writerow(report.row(timing))
    buf.write(f"# exploration_speed={report.exploration_speed:.3f}\n")
    buf.write(f"# skipped_via_failing_class={session.skipped_failing}\n")
    for t in session.tests:
        n = t.name
        buf.write(
            f"# test={n} originally_failing={str(n in session.originally_failing).lower()} "
            f"executions={session.executions[n]} skipped_via_passing_class={session.skipped_passing[n]} "
            f"passing_classes={len(session.passing[n])} failing_classes={len(session.failing[n])}\n"
        )
    if session.mode == "full":
        for t in session.tests:
            for cls in session.passing[t.name]:
                buf.write(f"# passing_class test={t.name} size={len(cls)} executed={cls.executed.serialize()}\n")
    return buf.getvalue()


def _write(path, text):
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as err:
        raise OSError(f"cannot write {path}: {err}") from err


def emit_stats(session, path, bundle_name, costfn, patches_path=None, timing=False) -> StatsReport:
    """Write the stats CSV (and optionally the patches file); returns the report."""
    report = StatsReport.from_session(bundle_name, session, costfn)
    _write(path, render_stats(report, session, timing))
    if patches_path is not None:
        write_patches(session, patches_path)
    return report


def write_patches(session, path):
    _write(path, "".join(p.serialize() + "\n" for p in session.repairs))
