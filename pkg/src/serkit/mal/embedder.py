"""Autoencoder embedder: compress functional feature vectors to a short
latent code for distance computation.

Encoder is three ELU layers wide-wide-narrow, decoder mirrors with two
wide ELU layers plus a linear reconstruction. Only the first two layers
drop out. Training minimizes MSE with Adam on a seed-derived 80:20
train/validation split and keeps the best-validation model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..audio_features import FeatureTable
from ..nn import Adam, LayerSpec, Mlp, TrainConfig, TrainResult, train_early_stopping
from .distance import MalError

MIN_SAMPLES = 10


@dataclass(frozen=True)
class AeConfig:
    hidden: tuple = (512, 512)
    bottleneck: int = 32
    dropout: float = 0.1
    lr: float = 1e-4
    batch_size: int = 1024
    patience: int = 300
    max_epochs: int = 10_000
    val_fraction: float = 0.2
    seed: int = 0


def ae_layer_specs(input_dim: int, config: AeConfig) -> list[LayerSpec]:
    """Full autoencoder stack; the encoder is the first three layers."""
    wide, mid = config.hidden
    return [
        LayerSpec(wide, "elu", dropout=config.dropout),
        LayerSpec(mid, "elu", dropout=config.dropout),
        LayerSpec(config.bottleneck, "elu"),
        LayerSpec(mid, "elu"),
        LayerSpec(wide, "elu"),
        LayerSpec(input_dim, "linear"),
    ]


@dataclass
class EmbedderResult:
    encoder: Mlp
    autoencoder: Mlp
    train_result: TrainResult = field(repr=False)
    config: AeConfig = field(repr=False, default_factory=AeConfig)


def train_embedder(features, seed: int | None = None,
                   config: AeConfig = AeConfig()) -> EmbedderResult:
    """Fit the autoencoder on feature rows and return its encoder half.
    `seed` overrides config.seed when given."""
    if isinstance(features, FeatureTable):
        matrix = features.matrix
    else:
        matrix = np.asarray(features, dtype=np.float64)
    if seed is not None:
        config = replace(config, seed=seed)
    n = matrix.shape[0]
    if n < MIN_SAMPLES:
        raise MalError(f"need at least {MIN_SAMPLES} samples, got {n}")
    if float(matrix.std()) == 0.0:
        raise MalError("features are constant; nothing to embed")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)
    n_val = max(1, int(round(config.val_fraction * n)))
    if n_val >= n:
        raise MalError(f"validation fraction {config.val_fraction} leaves no training rows")
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    model = Mlp(matrix.shape[1], ae_layer_specs(matrix.shape[1], config),
                seed=config.seed)
    batch = min(config.batch_size, train_idx.size)
    result = train_early_stopping(
        model,
        Adam(config.lr),
        matrix[train_idx], matrix[train_idx],
        matrix[val_idx], matrix[val_idx],
        TrainConfig(
            loss="mse", monitor="loss", batch_size=batch,
            patience=config.patience, max_epochs=config.max_epochs,
            seed=config.seed,
        ),
    )
    return EmbedderResult(
        encoder=model.slice(0, 3),
        autoencoder=model,
        train_result=result,
        config=config,
    )


def encode_table(encoder: Mlp, table: FeatureTable) -> FeatureTable:
    """Run the encoder over every row of a feature table; the output is a
    new raw table tagged as embeddings."""
    latent = encoder.predict(table.matrix)
    return FeatureTable(
        utterance_ids=table.utterance_ids,
        matrix=latent,
        feature_kind="embedding",
        normalization="raw",
    )
