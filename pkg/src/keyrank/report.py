"""CSV, Markdown and JSON renderings of sweep reports.

Numbers are percentages with four decimals, rounded half-to-even from the
exact binary value of each float, so CSV and Markdown always agree.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_HALF_EVEN, Decimal

from .bench import AVG_DATASET, SweepReport

_QUANTUM = Decimal("0.0001")
_METRICS = (("precision", "P"), ("recall", "R"), ("f1", "F1"))


def fmt_pct(value: float) -> str:
    return str((Decimal(value) * 100).quantize(_QUANTUM, rounding=ROUND_HALF_EVEN))


def _ks(report: SweepReport) -> list[int]:
    ks = sorted({k for row in report.rows for k in row.report.per_k})
    return ks


def _columns(ks) -> list[tuple[str, int, str]]:
    return [(attr, k, f"{short}@{k}") for k in ks for attr, short in _METRICS]


def to_csv(report: SweepReport) -> str:
    ks = _ks(report)
    cols = _columns(ks)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["prompt_id", "scorer", "dataset", "num_documents"] + [c[2] for c in cols])
    for row in report.rows:
        writer.writerow([row.prompt_id, row.scorer_label, row.dataset_id,
                         row.report.num_documents]
                        + [fmt_pct(getattr(row.report.per_k[k], attr)) for attr, k, _ in cols])
    return buf.getvalue()


def to_markdown(report: SweepReport) -> str:
    """One table per dataset (``Avg.`` last), best value per column in bold."""
    ks = _ks(report)
    cols = _columns(ks)
    datasets: list[str] = []
    for row in report.rows:
        if row.dataset_id not in datasets and row.dataset_id != AVG_DATASET:
            datasets.append(row.dataset_id)
    if any(r.dataset_id == AVG_DATASET for r in report.rows):
        datasets.append(AVG_DATASET)

    out: list[str] = []
    for ds in datasets:
        rows = [r for r in report.rows if r.dataset_id == ds]
        cells = [[fmt_pct(getattr(r.report.per_k[k], attr)) for attr, k, _ in cols] for r in rows]
        best = [max(Decimal(c[j]) for c in cells) for j in range(len(cols))]
        out.append(f"### {ds}")
        out.append("")
        out.append("| Prompt | Scorer | " + " | ".join(c[2] for c in cols) + " |")
        out.append("|---|---|" + "---:|" * len(cols))
        for r, row_cells in zip(rows, cells):
            shown = [f"**{v}**" if Decimal(v) == best[j] else v for j, v in enumerate(row_cells)]
            out.append(f"| {r.prompt_id} | {r.scorer_label} | " + " | ".join(shown) + " |")
        out.append("")
    return "\n".join(out)


def to_json(report: SweepReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"


def render(report: SweepReport, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(report)
    if fmt == "md":
        return to_markdown(report)
    if fmt == "json":
        return to_json(report)
    raise ValueError(f"unknown format {fmt!r}")
