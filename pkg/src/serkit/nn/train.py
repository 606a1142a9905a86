"""Mini-batch training loop with patience-based early stopping.

Every epoch the monitor split is scored in eval mode; the best-scoring
parameters are kept and restored at the end. Epoch 0 is the first
candidate (the untrained initialization is never returned) and training
stops once the best epoch is `patience` epochs behind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .losses import accuracy, cross_entropy10, mse_loss, softmax_ce_grad
from .network import Mlp, NnError

LOSSES = ("mse", "cross_entropy")
MONITORS = ("loss", "accuracy")


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "mse"
    monitor: str = "loss"
    batch_size: int = 256
    patience: int = 10
    max_epochs: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise NnError(f"unknown loss {self.loss!r}")
        if self.monitor not in MONITORS:
            raise NnError(f"unknown monitor {self.monitor!r}")
        if self.monitor == "accuracy" and self.loss != "cross_entropy":
            raise NnError("accuracy monitoring needs the cross_entropy loss")
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise NnError("batch_size, patience and max_epochs must be positive")


@dataclass
class TrainResult:
    best_epoch: int
    best_value: float
    epochs_run: int
    history: list[dict] = field(repr=False, default_factory=list)


def _batch_loss_grad(model: Mlp, x, y, loss: str, rng):
    out, cache = model.forward(x, train=True, rng=rng)
    if loss == "mse":
        value, dout = mse_loss(out, y)
        grads, _ = model.backward(cache, dout)
    else:
        value = cross_entropy10(out, y)
        dz = softmax_ce_grad(out, y)
        grads, _ = model.backward(cache, dz, fused_softmax=True)
    return value, grads


def _monitor_value(model: Mlp, x, y, config: TrainConfig) -> float:
    out = model.predict(x)
    if config.monitor == "accuracy":
        return accuracy(out, y)
    if config.loss == "mse":
        return mse_loss(out, y)[0]
    return cross_entropy10(out, y)


def _improved(value: float, best: float, monitor: str) -> bool:
    if monitor == "accuracy":
        return value > best
    return value < best


def train_early_stopping(model: Mlp, optimizer, train_x, train_y,
                         monitor_x, monitor_y, config: TrainConfig) -> TrainResult:
    """Train `model` in place, returning the best epoch's stats. Batches are
    a fresh shuffle each epoch with the final short batch kept. `model` ends
    holding the best parameters and batch-norm buffers seen."""
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.float64)
    monitor_x = np.asarray(monitor_x, dtype=np.float64)
    monitor_y = np.asarray(monitor_y, dtype=np.float64)
    n = train_x.shape[0]
    if n == 0:
        raise NnError("empty training set")
    if monitor_x.shape[0] == 0:
        raise NnError("empty monitor set")
    rng = np.random.default_rng(config.seed)
    best_epoch = -1
    best_value = np.inf if config.monitor == "loss" else -np.inf
    best_snap = None
    history: list[dict] = []
    epochs_run = 0
    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            value, grads = _batch_loss_grad(
                model, train_x[idx], train_y[idx], config.loss, rng
            )
            total += value
            optimizer.step(model.param_arrays(), model.grad_arrays(grads))
        monitor = _monitor_value(model, monitor_x, monitor_y, config)
        history.append({
            "epoch": epoch,
            "train_loss": total,
            "monitor": monitor,
        })
        epochs_run = epoch + 1
        if _improved(monitor, best_value, config.monitor):
            best_value = monitor
            best_epoch = epoch
            best_snap = model.snapshot()
        if epoch - best_epoch >= config.patience:
            break
    model.restore(best_snap)
    return TrainResult(
        best_epoch=best_epoch,
        best_value=float(best_value),
        epochs_run=epochs_run,
        history=history,
    )
