"""CMC curve plotting (PNG) with a CSV sidecar of the plotted values."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ccreid.metrics import EvalReport  # noqa: E402


def plot_cmc(reports: list[EvalReport], labels: list[str], out_png: str | Path) -> Path:
    """Plot one CMC curve per report; writes <out>.png and <out>.csv."""
    out_png = Path(out_png)
    out_png.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for report, label in zip(reports, labels):
        ranks = range(1, len(report.cmc) + 1)
        ax.plot(ranks, [100.0 * v for v in report.cmc], marker="o", label=label)
    ax.set_xlabel("rank")
    ax.set_ylabel("match rate (%)")
    ax.set_ylim(0, 102)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)

    with open(out_png.with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank"] + labels)
        max_len = max(len(r.cmc) for r in reports)
        for k in range(max_len):
            row = [k + 1]
            for report in reports:
                row.append(f"{report.cmc[k]:.6f}" if k < len(report.cmc) else "")
            writer.writerow(row)
    return out_png
