"""Two-stage adversarial domain adaptation: supervised source training of
an extractor + classifier pair, then critic-guided alignment of a copied
extractor toward unlabeled target data, with unsupervised (loss
saturation) or semi-supervised (monitor peak) epoch selection."""

from .models import SourceModel, WdaArch, WdaError, build_critic, build_source_stack, task_classes
from .source import SourceTrainConfig, split_source, train_source
from .adapt import (
    AdaptationConfig,
    AdaptationResult,
    adapt,
    critic_gap_value,
    predict_target,
    save_run_log,
    stop_semisupervised,
    stop_unsupervised,
)

__all__ = [
    "WdaError", "WdaArch", "SourceModel",
    "build_source_stack", "build_critic", "task_classes",
    "SourceTrainConfig", "split_source", "train_source",
    "AdaptationConfig", "AdaptationResult", "adapt",
    "critic_gap_value", "predict_target",
    "stop_unsupervised", "stop_semisupervised", "save_run_log",
]
