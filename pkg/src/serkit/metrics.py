"""Evaluation metrics and experiment reports.

UAR (unweighted average recall) is the primary score: the mean of per-class
recalls, times 100. It weighs every class equally regardless of support,
which is what makes it robust to the heavy class imbalance typical of
real-world emotion data. Confusion matrices come in raw-count and
row-normalized views.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class MetricError(ValueError):
    pass


def uar(predictions, truth) -> float:
    """Unweighted average recall in percent.

    Averages per-class recall over the classes that actually occur in
    ``truth``. Classes absent from the truth are excluded from the mean.
    """
    preds = list(predictions)
    ys = list(truth)
    if len(preds) != len(ys):
        raise MetricError(f"length mismatch: {len(preds)} predictions vs {len(ys)} truths")
    if not ys:
        raise MetricError("empty input")
    recalls = []
    for label in sorted(set(ys), key=str):
        idx = [i for i, y in enumerate(ys) if y == label]
        hits = sum(1 for i in idx if preds[i] == label)
        recalls.append(hits / len(idx))
    return 100.0 * sum(recalls) / len(recalls)


@dataclass
class ConfusionMatrix:
    """k x k count matrix; rows are truth, columns are predictions."""

    labels: list
    counts: list[list[int]]

    def normalized(self) -> list[list[float]]:
        """Row-normalized view; all-zero rows stay all-zero."""
        out = []
        for row in self.counts:
            total = sum(row)
            out.append([c / total for c in row] if total else [0.0] * len(row))
        return out

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def confusion(predictions, truth, label_order) -> ConfusionMatrix:
    preds = list(predictions)
    ys = list(truth)
    if len(preds) != len(ys):
        raise MetricError(f"length mismatch: {len(preds)} predictions vs {len(ys)} truths")
    labels = list(label_order)
    index = {lab: i for i, lab in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for p, y in zip(preds, ys):
        if y not in index:
            raise MetricError(f"unknown truth label {y!r}")
        if p not in index:
            raise MetricError(f"unknown predicted label {p!r}")
        counts[index[y]][index[p]] += 1
    return ConfusionMatrix(labels=labels, counts=counts)


@dataclass
class ExperimentReport:
    """One evaluated configuration: method x source x feature x task."""

    method: str          # AL | CCG | DA
    task: str            # valence | arousal
    uar: float
    feature_kind: str = ""
    source: str = ""
    label_mode: str = ""     # cluster | medoid (AL only)
    variant: str = ""        # US | S-S (DA only)
    confusion_labels: list = field(default_factory=list)
    confusion_counts: list = field(default_factory=list)
    config_fingerprint: str = ""
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "task": self.task,
            "uar": self.uar,
            "feature_kind": self.feature_kind,
            "source": self.source,
            "label_mode": self.label_mode,
            "variant": self.variant,
            "confusion_labels": list(self.confusion_labels),
            "confusion_counts": [list(r) for r in self.confusion_counts],
            "config_fingerprint": self.config_fingerprint,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**d)


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=2)


def reports_from_json(text: str) -> list[ExperimentReport]:
    return [ExperimentReport.from_dict(d) for d in json.loads(text)]


def _sort_key(r: ExperimentReport):
    return (r.method, r.source, r.feature_kind, r.task, r.label_mode, r.variant)


def render_report(reports) -> str:
    """Aligned text table, one row per report, highest UAR per task starred.

    Rows are ordered by (method, source, feature, task) so repeated renders
    of the same report set are byte-identical.
    """
    rows = sorted(reports, key=_sort_key)
    best_by_task: dict[str, float] = {}
    for r in rows:
        best_by_task[r.task] = max(best_by_task.get(r.task, float("-inf")), r.uar)
    header = ["method", "source", "feature", "mode", "task", "UAR%"]
    table = [header]
    for r in rows:
        mode = r.label_mode or r.variant
        val = f"{r.uar:.1f}"
        if r.uar == best_by_task[r.task]:
            val = f"**{val}**"
        table.append([r.method, r.source or "-", r.feature_kind or "-", mode or "-", r.task, val])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = []
    for j, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if j == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(header))))
    return "\n".join(lines) + "\n"
