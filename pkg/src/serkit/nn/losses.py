"""Loss functions and small label helpers.

Cross-entropy here is summed over the batch and uses base-10 logs, so its
fused softmax gradient carries a 1/ln(10) factor. MSE averages over every
element.
"""

from __future__ import annotations

import numpy as np

CE_CLAMP = 1e-12
_LN10 = np.log(10.0)


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over all elements. Returns (value, dpred)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    value = float(np.mean(diff * diff))
    dpred = 2.0 * diff / diff.size
    return value, dpred


def cross_entropy10(probs: np.ndarray, targets: np.ndarray) -> float:
    """-sum(y * log10(p)) over the whole batch, probabilities clamped at
    1e-12 so empty support never produces inf."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ValueError(f"shape mismatch {probs.shape} vs {targets.shape}")
    return float(-np.sum(targets * np.log10(np.maximum(probs, CE_CLAMP))))


def softmax_ce_grad(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gradient of cross_entropy10 w.r.t. the softmax pre-activations,
    for use with Mlp.backward(..., fused_softmax=True)."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    return (probs - targets) / _LN10


def onehot(labels, classes) -> np.ndarray:
    """Rows of the identity picked by label; classes fixes column order."""
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(labels), len(classes)))
    for row, lab in enumerate(labels):
        try:
            out[row, index[lab]] = 1.0
        except KeyError:
            raise ValueError(f"label {lab!r} not in classes {classes}") from None
    return out


def accuracy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Fraction of rows whose argmax matches the one-hot target."""
    probs = np.asarray(probs)
    targets = np.asarray(targets)
    return float(np.mean(probs.argmax(axis=1) == targets.argmax(axis=1)))
