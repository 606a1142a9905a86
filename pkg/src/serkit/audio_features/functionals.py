"""Utterance-level functionals over log-mel time series.

Per band: seven statics (mean, variance, skewness, kurtosis, min, max,
range) plus the first four moments of the first- and second-order deltas.
40 bands x (7 + 4 + 4) = 600 dimensions. Moments are population statistics
and kurtosis is non-excess (a normal series scores ~3); the skewness and
kurtosis of a zero-variance series are defined as 0 so constant bands never
poison a vector with NaN.

Concatenation order (band-major within each block):
  [band0 statics .. band39 statics | band0 delta moments .. | band0 delta2 moments ..]
"""

from __future__ import annotations

import numpy as np

from .logmel import N_MELS, LogMelSpec, deltas

N_STATICS = 7
N_MOMENTS = 4
FUNCTIONAL_DIM = N_MELS * (N_STATICS + 2 * N_MOMENTS)   # 600


def _moments(x: np.ndarray) -> np.ndarray:
    """Columns: mean, population variance, skewness, non-excess kurtosis."""
    mean = x.mean(axis=0)
    centered = x - mean
    var = np.mean(centered ** 2, axis=0)
    skew = np.zeros_like(var)
    kurt = np.zeros_like(var)
    ok = var > 0.0
    if np.any(ok):
        m3 = np.mean(centered[:, ok] ** 3, axis=0)
        m4 = np.mean(centered[:, ok] ** 4, axis=0)
        skew[ok] = m3 / var[ok] ** 1.5
        kurt[ok] = m4 / var[ok] ** 2
    return np.stack([mean, var, skew, kurt], axis=1)


def functionals(spec: LogMelSpec) -> np.ndarray:
    """600-dim functional vector of one utterance."""
    x = spec.frames
    if x.shape[0] < 3:
        raise ValueError(f"need at least 3 frames for functionals, got {x.shape[0]}")
    statics = np.concatenate([
        _moments(x),
        x.min(axis=0)[:, None],
        x.max(axis=0)[:, None],
        (x.max(axis=0) - x.min(axis=0))[:, None],
    ], axis=1)                                   # 40 x 7
    d1 = deltas(x, order=1)
    d2 = deltas(x, order=2)
    vec = np.concatenate([
        statics.reshape(-1),
        _moments(d1).reshape(-1),
        _moments(d2).reshape(-1),
    ])
    assert vec.shape == (FUNCTIONAL_DIM,)
    return vec
