"""Result formatting: percent tables, mean±std cells, CSV and markdown emission.

Machine-readable CSV keeps raw fractions via ``repr`` (shortest round-trip, so
identical runs give byte-identical files). Human-readable tables show percent
with one decimal, the convention used throughout for retrieval results.
"""

from __future__ import annotations

from .retrieval import RECALL_KS, RecallReport
from .train import EpochMetrics, RunReport

NOT_CONVERGED = "n/c"

_DIRECTION_LABELS = (("t2a", "text-to-audio"), ("a2t", "audio-to-text"))


def format_percent(fraction: float) -> str:
    """0.1992 -> '19.9' (percent, one decimal)."""
    return "%.1f" % (fraction * 100.0)


def format_mean_std(mean_fraction: float, std_fraction: float) -> str:
    """Mean and spread as a percent cell: (0.1992, 0.00235) -> '19.9±0.2'."""
    return f"{format_percent(mean_fraction)}±{format_percent(std_fraction)}"


def recall_report_csv(report: RecallReport) -> str:
    lines = ["direction,r1,r5,r10"]
    vals = report.as_tuple()
    for i, (key, _) in enumerate(_DIRECTION_LABELS):
        r1, r5, r10 = vals[3 * i : 3 * i + 3]
        lines.append(f"{key},{r1!r},{r5!r},{r10!r}")
    return "\n".join(lines) + "\n"


def recall_report_table(report: RecallReport) -> str:
    """Aligned-column text table in percent."""
    header = ["Direction", "R@1", "R@5", "R@10"]
    rows = [header]
    vals = report.as_tuple()
    for i, (_, label) in enumerate(_DIRECTION_LABELS):
        rows.append([label] + [format_percent(v) for v in vals[3 * i : 3 * i + 3]])
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    out = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [
            row[c].rjust(widths[c]) for c in range(1, len(header))
        ]
        out.append("  ".join(cells).rstrip())
    return "\n".join(out) + "\n"


def epoch_metrics_csv(metrics) -> str:
    lines = ["epoch,train_loss,val_sum_of_recalls,lr"]
    for m in metrics:
        assert isinstance(m, EpochMetrics)
        lines.append(f"{m.epoch},{m.train_loss!r},{m.val_sum_of_recalls!r},{m.lr!r}")
    return "\n".join(lines) + "\n"


def comparison_csv(reports) -> str:
    """Raw-fraction CSV over RunReports, one row per (objective, direction)."""
    lines = [
        "batch_size,objective,direction,"
        "r1_mean,r1_std,r5_mean,r5_std,r10_mean,r10_std,seeds_ok,status"
    ]
    for rep in reports:
        assert isinstance(rep, RunReport)
        n_ok = sum(1 for r in rep.runs if r.ok)
        for i, (key, _) in enumerate(_DIRECTION_LABELS):
            if rep.aggregates is None:
                cells = [""] * 6
                status = NOT_CONVERGED
            else:
                pairs = rep.aggregates[3 * i : 3 * i + 3]
                cells = [repr(v) for pair in pairs for v in pair]
                status = "ok"
            lines.append(
                ",".join(
                    [str(rep.batch_size), rep.objective, key, *cells, str(n_ok), status]
                )
            )
    return "\n".join(lines) + "\n"


def comparison_markdown(reports) -> str:
    """Markdown tables, one section per batch size, mean±std percent cells."""
    by_batch: dict[int, list[RunReport]] = {}
    order: list[int] = []
    for rep in reports:
        if rep.batch_size not in by_batch:
            by_batch[rep.batch_size] = []
            order.append(rep.batch_size)
        by_batch[rep.batch_size].append(rep)

    chunks = []
    for bs in order:
        lines = [
            f"## Batch size {bs}",
            "",
            "| Objective | direction | R@1 | R@5 | R@10 |",
            "| --- | --- | --- | --- | --- |",
        ]
        for rep in by_batch[bs]:
            for i, (key, _) in enumerate(_DIRECTION_LABELS):
                if rep.aggregates is None:
                    cells = [NOT_CONVERGED] * 3
                else:
                    cells = [
                        format_mean_std(m, s) for m, s in rep.aggregates[3 * i : 3 * i + 3]
                    ]
                lines.append(
                    "| " + " | ".join([rep.objective, key, *cells]) + " |"
                )
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"
