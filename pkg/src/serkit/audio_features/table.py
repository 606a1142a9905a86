"""Feature tables: N utterances x D dimensions, with corpus-level z-scoring
and import of externally computed feature CSVs (e.g. GeMAPS/eGeMAPS tables)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

FEATURE_KINDS = ("logmel_functionals", "external_import", "embedding")
NORMALIZATIONS = ("raw", "zscored")


class TableError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureTable:
    utterance_ids: tuple[str, ...]
    matrix: np.ndarray                      # N x D float
    feature_kind: str = "logmel_functionals"
    normalization: str = "raw"
    mean: np.ndarray | None = field(default=None, compare=False)   # set by z-scoring
    std: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise TableError(f"matrix must be 2-D, got shape {self.matrix.shape}")
        if len(self.utterance_ids) != self.matrix.shape[0]:
            raise TableError(
                f"{len(self.utterance_ids)} ids for {self.matrix.shape[0]} rows")
        if self.feature_kind not in FEATURE_KINDS:
            raise TableError(f"unknown feature kind {self.feature_kind!r}")
        if self.normalization not in NORMALIZATIONS:
            raise TableError(f"unknown normalization {self.normalization!r}")
        if len(set(self.utterance_ids)) != len(self.utterance_ids):
            raise TableError("duplicate utterance ids in table")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def rows_for(self, ids) -> np.ndarray:
        index = {u: i for i, u in enumerate(self.utterance_ids)}
        try:
            sel = [index[u] for u in ids]
        except KeyError as e:
            raise TableError(f"table has no row for utterance {e.args[0]!r}") from e
        return self.matrix[sel]

    def subset(self, ids) -> "FeatureTable":
        return replace(self, utterance_ids=tuple(ids), matrix=self.rows_for(ids))


def zscore_table(table: FeatureTable) -> FeatureTable:
    """Normalize each dimension to mean 0, population std 1 over the table.

    Zero-variance dimensions map to all-zeros. The per-dimension (mean, std)
    are stored on the result so the same transform can be applied to
    held-out rows or inverted.
    """
    if table.normalization != "raw":
        raise TableError("table is already normalized")
    if table.matrix.shape[0] < 2:
        raise TableError("z-scoring needs at least 2 rows")
    mean = table.matrix.mean(axis=0)
    std = table.matrix.std(axis=0)   # population (ddof=0)
    out = np.zeros_like(table.matrix)
    ok = std > 0.0
    out[:, ok] = (table.matrix[:, ok] - mean[ok]) / std[ok]
    return replace(table, matrix=out, normalization="zscored", mean=mean, std=std)


def apply_zscore(matrix: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Apply stored z-score stats to new rows (zero-variance dims -> 0)."""
    out = np.zeros_like(matrix, dtype=np.float64)
    ok = std > 0.0
    out[:, ok] = (matrix[:, ok] - mean[ok]) / std[ok]
    return out


def invert_zscore(matrix: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Undo z-scoring; zero-variance dims recover their (constant) mean."""
    return matrix * std + mean


def import_external_features(path, utterance_ids) -> FeatureTable:
    """Load a feature CSV (header: utterance_id,f0,f1,...) reordered to
    match ``utterance_ids``. Every requested id must be present."""
    wanted = list(utterance_ids)
    rows: dict[str, np.ndarray] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "utterance_id":
            raise TableError(f"{path}: expected header starting with utterance_id")
        dim = len(header) - 1
        if dim < 1:
            raise TableError(f"{path}: no feature columns")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise TableError(f"{path}: ragged row for {row[0]!r} (line {lineno})")
            try:
                rows[row[0]] = np.array([float(v) for v in row[1:]], dtype=np.float64)
            except ValueError as e:
                raise TableError(f"{path}: non-numeric cell in row {row[0]!r} (line {lineno})") from e
    missing = [u for u in wanted if u not in rows]
    if missing:
        raise TableError(f"{path}: missing utterance ids: {missing}")
    matrix = np.stack([rows[u] for u in wanted]) if wanted else np.zeros((0, dim))
    return FeatureTable(
        utterance_ids=tuple(wanted),
        matrix=matrix,
        feature_kind="external_import",
        normalization="raw",
    )
