"""Tab-separated report rendering, byte-stable for identical state."""

from __future__ import annotations

from . import adjudication as adj
from .errors import ValidationError
from .service import Platform

RADAR = "radar"
STRATEGY_TALLY = "strategy-tally"
CASES = "cases"
PROGRESS = "progress"
REPORT_NAMES = (RADAR, STRATEGY_TALLY, CASES, PROGRESS)


def render_radar(rows: list[tuple[str, str, str, int, bool]]) -> str:
    lines = ["lemma\tlabel\tsubstitute\tcount\twrite_in"]
    for lemma, label, text, count, write_in in rows:
        lines.append(f"{lemma}\t{label}\t{text}\t{count}\t{int(write_in)}")
    return "\n".join(lines) + "\n"


def render_strategy_tally(
    rows: dict[str, adj.StrategyTally], n_workers: int, n_instances: int
) -> str:
    lines = ["strategy\tvotes\tmajority"]
    ordered = [adj.NONE_OPTION] + sorted(n for n in rows if n != adj.NONE_OPTION)
    for name in ordered:
        row = rows[name]
        lines.append(f"{name}\t{row.votes}\t{row.majorities}")
    lines.append(f"Theoretical Maximum\t{n_workers * n_instances}\t{n_instances}")
    return "\n".join(lines) + "\n"


def render_cases(report: adj.CaseReport) -> str:
    lines = ["case\ttagger\tcrowd\tnone"]
    for case in (1, 2, 3, 4):
        row = report.rows[case]
        lines.append(
            f"{case}\t{row.tagger_correct}/{row.total}"
            f"\t{row.crowd_correct}/{row.total}\t{row.none_chosen}/{row.total}"
        )
    return "\n".join(lines) + "\n"


def render_progress(rows: list[tuple[str, int, int, int]]) -> str:
    lines = ["kind\ttasks\tclosed\tresponses"]
    for kind, total, closed, responses in rows:
        lines.append(f"{kind}\t{total}\t{closed}\t{responses}")
    return "\n".join(lines) + "\n"


def render_report(platform: Platform, which: str) -> str:
    """One named report as TSV text."""
    if which == RADAR:
        return render_radar(platform.radar_rows())
    if which == STRATEGY_TALLY:
        rows, workers, instances = platform.strategy_rows()
        return render_strategy_tally(rows, workers, instances)
    if which == CASES:
        return render_cases(platform.case_report())
    if which == PROGRESS:
        return render_progress(platform.progress_rows())
    raise ValidationError(f"unknown report {which!r}")
