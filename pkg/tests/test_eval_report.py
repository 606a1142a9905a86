"""UAR, confusion matrices, and report rendering."""

import numpy as np
import pytest

from serkit.metrics import (
    ConfusionMatrix,
    ExperimentReport,
    MetricError,
    confusion,
    render_report,
    reports_from_json,
    reports_to_json,
    uar,
)


def labels_from_confusion(counts, labels):
    """Expand a count matrix into aligned (predictions, truth) lists."""
    preds, truth = [], []
    for i, row in enumerate(counts):
        for j, c in enumerate(row):
            preds.extend([labels[j]] * c)
            truth.extend([labels[i]] * c)
    return preds, truth


def test_uar_perfect_and_constant():
    truth = ["high"] * 6 + ["low"] * 3
    assert uar(truth, truth) == 100.0
    assert uar(["high"] * 9, truth) == 50.0


def test_uar_hand_value():
    preds, truth = labels_from_confusion([[8, 2], [3, 7]], ["neg", "pos"])
    assert abs(uar(preds, truth) - 75.0) < 1e-12


def test_uar_ignores_absent_classes_and_relabeling():
    # predictions may mention classes the truth never does
    assert uar(["a", "b", "c"], ["a", "b", "b"]) == 75.0
    preds, truth = labels_from_confusion([[5, 1], [2, 4]], ["x", "y"])
    swapped_p = ["y" if p == "x" else "x" for p in preds]
    swapped_t = ["y" if t == "x" else "x" for t in truth]
    assert uar(preds, truth) == uar(swapped_p, swapped_t)


def test_uar_of_truth_against_itself_is_always_100():
    rng = np.random.default_rng(0)
    for _ in range(5):
        truth = list(rng.choice(["a", "b", "c"], size=rng.integers(1, 30)))
        assert uar(truth, truth) == 100.0


def test_uar_validation():
    with pytest.raises(MetricError):
        uar([], [])
    with pytest.raises(MetricError):
        uar(["a"], ["a", "b"])


def test_confusion_counts_and_normalization():
    preds, truth = labels_from_confusion([[8, 2], [3, 7]], ["neg", "pos"])
    cm = confusion(preds, truth, ["neg", "pos"])
    assert cm.counts == [[8, 2], [3, 7]]
    assert cm.total() == 20
    norm = cm.normalized()
    assert np.allclose(norm, [[0.8, 0.2], [0.3, 0.7]])
    # row sums of counts recover the per-class truth support
    assert [sum(r) for r in cm.counts] == [10, 10]


def test_uar_equals_mean_normalized_diagonal():
    rng = np.random.default_rng(1)
    labels = ["a", "b", "c"]
    truth = list(rng.choice(labels, size=60))
    preds = list(rng.choice(labels, size=60))
    cm = confusion(preds, truth, labels)
    present = [i for i, row in enumerate(cm.counts) if sum(row)]
    diag = [cm.normalized()[i][i] for i in present]
    assert abs(uar(preds, truth) - 100.0 * np.mean(diag)) < 1e-9


def test_confusion_perfect_predictions_are_diagonal():
    truth = ["a"] * 4 + ["b"] * 2
    cm = confusion(truth, truth, ["a", "b"])
    assert cm.counts == [[4, 0], [0, 2]]
    empty_row = ConfusionMatrix(labels=["a", "b"], counts=[[0, 0], [1, 1]])
    assert empty_row.normalized()[0] == [0.0, 0.0]


def test_confusion_rejects_unknown_labels():
    with pytest.raises(MetricError):
        confusion(["a"], ["z"], ["a", "b"])
    with pytest.raises(MetricError):
        confusion(["z"], ["a"], ["a", "b"])
    with pytest.raises(MetricError):
        confusion(["a"], ["a", "b"], ["a", "b"])


def sample_reports():
    return [
        ExperimentReport(method="AL", task="valence", uar=61.0,
                         feature_kind="logmel_functionals", label_mode="medoid"),
        ExperimentReport(method="AL", task="valence", uar=66.5,
                         feature_kind="logmel_functionals", label_mode="cluster"),
        ExperimentReport(method="DA", task="arousal", uar=70.25,
                         source="src", variant="US"),
    ]


def test_report_json_round_trip():
    reports = sample_reports()
    assert reports_from_json(reports_to_json(reports)) == reports


def test_render_orders_rows_and_marks_the_best():
    text = render_report(sample_reports())
    lines = text.splitlines()
    assert len(lines) == 2 + 3     # header, rule, one row per report
    assert "**66.5**" in text and "**61.0**" not in text
    assert "**70.2**" in text      # sole arousal row is its task's best
    # deterministic: rendering twice gives identical bytes
    assert render_report(sample_reports()) == text


def test_render_single_report():
    text = render_report([ExperimentReport(method="CCG", task="valence", uar=58.0)])
    assert text.count("\n") == 3
    assert "**58.0**" in text
