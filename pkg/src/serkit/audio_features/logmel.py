"""Log mel-filterbank extraction and delta features.

Analysis settings: 30 ms Hann window, 10 ms shift, 40 triangular mel bands
spanning 0 to Nyquist, power spectrum, natural log with an additive floor.
Conventions that the rest of the toolkit (and its tests) rely on:

* no padding — the final partial window is dropped, so the frame count is
  floor((n_samples - win) / hop) + 1;
* FFT size is the next power of two >= the window length;
* the log floor is ``LOG_FLOOR`` added to the mel energies before log;
* deltas use a symmetric +/-2-frame regression window with edge frames
  replicated, and the second order is the delta of the delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

N_MELS = 40
WINDOW_S = 0.030
HOP_S = 0.010
LOG_FLOOR = 1e-10
DELTA_HALF_WIN = 2


class AudioError(ValueError):
    pass


@dataclass(frozen=True)
class AudioClip:
    """Mono floating-point PCM in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        s = self.samples
        if s.ndim != 1:
            raise AudioError(f"expected mono audio, got shape {s.shape}")
        if s.size == 0:
            raise AudioError("empty clip")
        if self.sample_rate <= 0:
            raise AudioError(f"bad sample rate {self.sample_rate}")
        if not np.all(np.isfinite(s)):
            raise AudioError("non-finite samples")
        peak = float(np.max(np.abs(s)))
        if peak > 1.0 + 1e-6:
            raise AudioError(f"samples exceed [-1, 1] (peak {peak:.3f})")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class LogMelSpec:
    """T x 40 matrix of log mel energies at a 10 ms frame shift."""

    frames: np.ndarray
    sample_rate: int

    def __post_init__(self):
        f = self.frames
        if f.ndim != 2 or f.shape[1] != N_MELS:
            raise AudioError(f"expected T x {N_MELS} frames, got {f.shape}")
        if f.shape[0] < 1:
            raise AudioError("empty spectrogram")
        if not np.all(np.isfinite(f)):
            raise AudioError("non-finite spectrogram entries")


def load_wav(path) -> AudioClip:
    """Read a mono 16-bit or float WAV. Stereo input is an error."""
    sr, data = wavfile.read(path)
    if data.ndim != 1:
        raise AudioError(f"{path}: expected mono audio, got {data.ndim} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioError(f"{path}: unsupported sample format {data.dtype}")
    return AudioClip(samples=samples, sample_rate=int(sr))


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_band_edges(sample_rate: int, n_mels: int = N_MELS) -> np.ndarray:
    """(n_mels + 2) Hz points: left edge, n_mels peaks, right edge."""
    mel_pts = np.linspace(0.0, float(_hz_to_mel(sample_rate / 2.0)), n_mels + 2)
    return _mel_to_hz(mel_pts)


def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int = N_MELS) -> np.ndarray:
    """n_mels x (n_fft//2 + 1) triangular filters, peak amplitude 1."""
    edges = mel_band_edges(sample_rate, n_mels)
    freqs = np.arange(n_fft // 2 + 1, dtype=np.float64) * sample_rate / n_fft
    bank = np.zeros((n_mels, freqs.size))
    for j in range(n_mels):
        left, center, right = edges[j], edges[j + 1], edges[j + 2]
        up = (freqs - left) / (center - left)
        down = (right - freqs) / (right - center)
        bank[j] = np.clip(np.minimum(up, down), 0.0, 1.0)
    return bank


def compute_logmel(clip: AudioClip) -> LogMelSpec:
    sr = clip.sample_rate
    win = int(round(WINDOW_S * sr))
    hop = int(round(HOP_S * sr))
    n = clip.samples.size
    if n < win:
        raise AudioError(f"too short: {n} samples < one {win}-sample window")
    n_fft = 1
    while n_fft < win:
        n_fft *= 2
    n_frames = (n - win) // hop + 1
    # periodic Hann
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(win) / win)
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = clip.samples[idx] * window[None, :]
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    bank = mel_filterbank(sr, n_fft)
    energies = power @ bank.T
    return LogMelSpec(frames=np.log(energies + LOG_FLOOR), sample_rate=sr)


def deltas(matrix: np.ndarray, order: int = 1) -> np.ndarray:
    """Regression deltas over time (axis 0) with replicated edge frames."""
    if order not in (1, 2):
        raise AudioError(f"order must be 1 or 2, got {order}")
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2:
        raise AudioError(f"expected a 2-D matrix, got shape {x.shape}")
    if x.shape[0] < 3:
        raise AudioError(f"need at least 3 frames, got {x.shape[0]}")
    out = x
    for _ in range(order):
        out = _delta_once(out)
    return out


def _delta_once(x: np.ndarray) -> np.ndarray:
    h = DELTA_HALF_WIN
    padded = np.concatenate([np.repeat(x[:1], h, axis=0), x, np.repeat(x[-1:], h, axis=0)])
    denom = 2.0 * sum(n * n for n in range(1, h + 1))
    t = np.arange(x.shape[0]) + h
    acc = np.zeros_like(x)
    for n in range(1, h + 1):
        acc += n * (padded[t + n] - padded[t - n])
    return acc / denom
