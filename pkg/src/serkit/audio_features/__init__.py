"""Acoustic features: log-mel spectrograms, deltas, utterance functionals,
feature tables with corpus-level z-scoring, and the binary feature store."""

from .logmel import AudioClip, LogMelSpec, AudioError, load_wav, compute_logmel, deltas
from .functionals import functionals, FUNCTIONAL_DIM
from .table import (
    FeatureTable, TableError, zscore_table, apply_zscore, invert_zscore,
    import_external_features,
)
from .store import save_table, load_table, StoreError

__all__ = [
    "AudioClip", "LogMelSpec", "AudioError", "load_wav", "compute_logmel", "deltas",
    "functionals", "FUNCTIONAL_DIM",
    "FeatureTable", "TableError", "zscore_table", "apply_zscore", "invert_zscore",
    "import_external_features",
    "save_table", "load_table", "StoreError",
]
