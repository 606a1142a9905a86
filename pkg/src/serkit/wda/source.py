"""Stage one: supervised training of the extractor + classifier stack on
labeled source data, with early stopping on held-out accuracy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn import Adam, TrainConfig, TrainResult, onehot, train_early_stopping
from .models import SourceModel, WdaArch, WdaError, build_source_stack, task_classes


@dataclass(frozen=True)
class SourceTrainConfig:
    lr: float = 1e-4
    batch_size: int = 256
    patience: int = 100
    max_epochs: int = 10_000
    test_fraction: float = 0.15
    arch: WdaArch = field(default_factory=WdaArch)


def split_source(n: int, seed: int, test_fraction: float = 0.15):
    """Seeded random row split; returns (train indices, held-out indices)."""
    if not 0.0 < test_fraction < 1.0:
        raise WdaError(f"test fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_test = max(1, int(round(test_fraction * n)))
    if n_test >= n:
        raise WdaError(f"{n} rows cannot support a {test_fraction} held-out split")
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def train_source(features, labels, task: str, seed: int = 0,
                 config: SourceTrainConfig = SourceTrainConfig(),
                 holdout=None):
    """Train the source model. Without an explicit holdout, rows are split
    85:15 by the seed. Pass holdout=(features, labels) when the split was
    made upstream (combined multi-corpus training uses per-corpus splits).

    Returns (SourceModel, TrainResult)."""
    features = np.asarray(features, dtype=np.float64)
    labels = [str(l) for l in labels]
    if features.ndim != 2 or features.shape[0] != len(labels):
        raise WdaError("features must be 2-D with one row per label")
    classes = task_classes(task)
    if holdout is None:
        tr, te = split_source(len(labels), seed, config.test_fraction)
        train_x, test_x = features[tr], features[te]
        train_labels = [labels[i] for i in tr]
        test_labels = [labels[i] for i in te]
    else:
        train_x, train_labels = features, labels
        test_x = np.asarray(holdout[0], dtype=np.float64)
        test_labels = [str(l) for l in holdout[1]]
    for cls in classes:
        if cls not in train_labels:
            raise WdaError(f"class {cls!r} absent from the training split")
    stack = build_source_stack(features.shape[1], config.arch, seed=seed,
                               n_classes=len(classes))
    result = train_early_stopping(
        stack,
        Adam(config.lr),
        train_x, onehot(train_labels, classes),
        test_x, onehot(test_labels, classes),
        TrainConfig(
            loss="cross_entropy", monitor="accuracy",
            batch_size=min(config.batch_size, train_x.shape[0]),
            patience=config.patience, max_epochs=config.max_epochs,
            seed=seed,
        ),
    )
    depth = len(config.arch.feature_hidden) + 1
    model = SourceModel(
        feature=stack.slice(0, depth),
        classifier=stack.slice(depth, len(stack.specs)),
        task=task,
        classes=classes,
        arch=config.arch,
    )
    return model, result
