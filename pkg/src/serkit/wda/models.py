"""Network shapes for domain adaptation.

The extractor is three batch-normalized dense layers; the first two are
LReLU with heavy dropout, the last is linear so the feature space is not
clipped. The label classifier is a plain two-hidden-layer LReLU net with
a softmax pair head and no batch norm. The critic scores features with
three ReLU layers into a single linear output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import AROUSAL_CLASSES, VALENCE_CLASSES
from ..nn import LayerSpec, Mlp

TASKS = ("valence", "arousal")


class WdaError(ValueError):
    pass


def task_classes(task: str) -> tuple:
    if task == "valence":
        return VALENCE_CLASSES
    if task == "arousal":
        return AROUSAL_CLASSES
    raise WdaError(f"unknown task {task!r}")


@dataclass(frozen=True)
class WdaArch:
    feature_hidden: tuple = (512, 512)
    feature_out: int = 256
    feature_dropout: float = 0.4
    classifier_hidden: tuple = (256, 256)
    classifier_dropout: float = 0.3
    critic_hidden: tuple = (512, 512, 256)


def feature_layer_specs(arch: WdaArch) -> list[LayerSpec]:
    specs = [
        LayerSpec(units, "lrelu", dropout=arch.feature_dropout, batch_norm=True)
        for units in arch.feature_hidden
    ]
    specs.append(LayerSpec(arch.feature_out, "linear", batch_norm=True))
    return specs


def classifier_layer_specs(arch: WdaArch, n_classes: int = 2) -> list[LayerSpec]:
    specs = [
        LayerSpec(units, "lrelu", dropout=arch.classifier_dropout)
        for units in arch.classifier_hidden
    ]
    specs.append(LayerSpec(n_classes, "softmax"))
    return specs


def build_source_stack(input_dim: int, arch: WdaArch, seed: int = 0,
                       n_classes: int = 2) -> Mlp:
    """Extractor and classifier as one trainable stack; slice at the
    extractor depth to separate them afterwards."""
    return Mlp(input_dim,
               feature_layer_specs(arch) + classifier_layer_specs(arch, n_classes),
               seed=seed)


def build_critic(arch: WdaArch, seed: int = 0) -> Mlp:
    specs = [LayerSpec(units, "relu") for units in arch.critic_hidden]
    specs.append(LayerSpec(1, "linear"))
    return Mlp(arch.feature_out, specs, seed=seed)


@dataclass
class SourceModel:
    feature: Mlp
    classifier: Mlp
    task: str
    classes: tuple
    arch: WdaArch = field(repr=False, default_factory=WdaArch)

    def __post_init__(self):
        if self.task not in TASKS:
            raise WdaError(f"unknown task {self.task!r}")
        if self.feature.output_dim != self.classifier.input_dim:
            raise WdaError(
                f"extractor output {self.feature.output_dim} does not feed "
                f"classifier input {self.classifier.input_dim}"
            )
        if self.classifier.output_dim != len(self.classes):
            raise WdaError("classifier head width must match class count")

    @property
    def input_dim(self) -> int:
        return self.feature.input_dim

    def predict_proba(self, features) -> np.ndarray:
        return self.classifier.predict(self.feature.predict(features))

    def predict_labels(self, features) -> list:
        probs = self.predict_proba(features)
        return [self.classes[int(i)] for i in probs.argmax(axis=1)]
