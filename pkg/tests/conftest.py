"""Shared fixtures: synthetic WAV corpora and small helper builders."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.io import wavfile


def write_wav(path, samples, sample_rate=16000):
    data = (np.clip(np.asarray(samples), -1.0, 1.0) * 32767.0).astype(np.int16)
    wavfile.write(str(path), sample_rate, data)


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory):
    """Small synthetic WAV corpus shared by the CLI tests."""
    from serkit.synthetic import wav_corpus

    out = tmp_path_factory.mktemp("corpus")
    return wav_corpus(out, n=60, seed=3)
