"""Fixed-width comparison tables over evaluation reports.

Rows are labeled by descriptor (global / Part1 / Part2 / All) or by the
caller's run labels; columns are mAP and the rank-1/rank-5 match rates in
percent, matching the usual benchmark table layout.
"""

from __future__ import annotations

from pathlib import Path

from ccreid.errors import ValidationError
from ccreid.metrics import AP_DEFINITION, EvalReport

DESCRIPTOR_LABELS = {"global": "global", "part1": "Part1", "part2": "Part2", "all": "All"}


def _rank(report: EvalReport, k: int) -> float:
    if k <= len(report.cmc):
        return 100.0 * report.cmc[k - 1]
    return 100.0 * report.cmc[-1]


def format_table(reports: list[EvalReport], labels: list[str] | None = None) -> str:
    """Fixed-width table: Method | mAP | Rank1 | Rank5 (values in %)."""
    if not reports:
        raise ValidationError("no reports to tabulate")
    if labels is None:
        labels = [DESCRIPTOR_LABELS.get(r.descriptor, r.descriptor) for r in reports]
    protocols = {(r.protocol.get("protocol"), r.protocol.get("filter"),
                  r.protocol.get("trials")) for r in reports}
    if len(protocols) > 1:
        raise ValidationError(f"reports use incompatible protocols: {sorted(protocols)}")
    width = max(24, max(len(s) for s in labels) + 2)
    sep = "-" * (width + 3 * 9)
    lines = [
        f"{'Method':<{width}}{'mAP':>9}{'Rank1':>9}{'Rank5':>9}",
        sep,
    ]
    for report, label in zip(reports, labels):
        lines.append(
            f"{label:<{width}}{100.0 * report.map:>9.2f}"
            f"{_rank(report, 1):>9.2f}{_rank(report, 5):>9.2f}"
        )
    lines.append(sep)
    proto = reports[0].protocol
    lines.append(
        f"protocol={proto.get('protocol', '?')} filter={proto.get('filter', '?')} "
        f"trials={proto.get('trials', 1)} seed={proto.get('seed', '?')}"
    )
    lines.append(f"AP: {AP_DEFINITION}")
    return "\n".join(lines) + "\n"


def write_comparison(
    report_paths: list[str | Path],
    out_dir: str | Path,
    labels: list[str] | None = None,
) -> tuple[Path, Path]:
    """Render a table plus a CMC plot from saved report files.

    Returns (table_path, plot_path).
    """
    from ccreid.plots import plot_cmc

    if not report_paths:
        raise ValidationError("need at least one report file")
    reports = [EvalReport.load(p) for p in report_paths]
    if labels is not None and len(labels) != len(reports):
        raise ValidationError("label count does not match report count")
    used = labels or [DESCRIPTOR_LABELS.get(r.descriptor, r.descriptor) for r in reports]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = format_table(reports, used)
    table_path = out_dir / "comparison.txt"
    table_path.write_text(table)
    plot_path = plot_cmc(reports, used, out_dir / "cmc.png")
    return table_path, plot_path
