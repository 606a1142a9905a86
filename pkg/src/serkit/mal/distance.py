"""Pearson distance (1 - r) and the packed pairwise distance matrix.

Constant vectors have no defined correlation; we set r = 0 there, giving
distance 1 to everything (and the diagonal stays 0 by construction). The
matrix keeps only the float32 upper triangle, which halves memory against
a naive square array and bounds drift between runs to float32 rounding.
"""

from __future__ import annotations

import numpy as np


class MalError(ValueError):
    pass


def pearson_distance(a, b) -> float:
    """1 - Pearson correlation, in [0, 2]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise MalError(f"need two equal-length vectors of size >= 2, got {a.shape}, {b.shape}")
    ac = a - a.mean()
    bc = b - b.mean()
    na = np.sqrt((ac * ac).sum())
    nb = np.sqrt((bc * bc).sum())
    if na == 0.0 or nb == 0.0:
        return 1.0
    r = float(np.clip((ac * bc).sum() / (na * nb), -1.0, 1.0))
    return 1.0 - r


class DistanceMatrix:
    """Symmetric zero-diagonal matrix stored as a condensed float32 upper
    triangle (same packing as scipy's squareform)."""

    def __init__(self, n: int, condensed: np.ndarray):
        expected = n * (n - 1) // 2
        if condensed.shape != (expected,):
            raise MalError(f"condensed length {condensed.shape} != {expected} for n={n}")
        self.n = int(n)
        self.condensed = np.asarray(condensed, dtype=np.float32)

    def __len__(self) -> int:
        return self.n

    def _index(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return i * (2 * self.n - i - 1) // 2 + (j - i - 1)

    def value(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return float(self.condensed[self._index(i, j)])

    def full(self) -> np.ndarray:
        """Expand to a dense float64 square matrix."""
        out = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, k=1)
        vals = self.condensed.astype(np.float64)
        out[iu] = vals
        out[(iu[1], iu[0])] = vals
        return out


def _centered_unit_rows(matrix: np.ndarray) -> np.ndarray:
    centered = matrix - matrix.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered * centered).sum(axis=1))
    safe = np.where(norms > 0.0, norms, 1.0)
    unit = centered / safe[:, None]
    unit[norms == 0.0] = 0.0
    return unit


def pearson_distance_matrix(matrix, chunk: int = 512) -> DistanceMatrix:
    """Pairwise 1 - r over the rows of matrix, built in row blocks so the
    working set stays at chunk x N."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] < 2:
        raise MalError(f"need an N x D matrix with D >= 2, got {matrix.shape}")
    n = matrix.shape[0]
    unit = _centered_unit_rows(matrix)
    zero_rows = ~unit.any(axis=1)
    parts = []
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        corr = unit[start:stop] @ unit.T
        np.clip(corr, -1.0, 1.0, out=corr)
        dist = 1.0 - corr
        # constant rows correlate 0 with everything, including each other
        dist[zero_rows[start:stop], :] = 1.0
        dist[:, zero_rows] = 1.0
        for local, row in enumerate(range(start, stop)):
            parts.append(dist[local, row + 1:].astype(np.float32))
    condensed = np.concatenate(parts) if parts else np.zeros(0, dtype=np.float32)
    return DistanceMatrix(n, condensed)
