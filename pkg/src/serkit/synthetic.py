"""Synthetic data with known structure for benchmarks and self-checks.

Three generators:

* a four-quadrant Gaussian corpus, lifted into feature space through a
  fixed random linear map, for exercising the medoid annotation loop
  against a random-budget baseline;
* a pair of class-separable Gaussian domains where the target is a
  rotated and shifted copy of the source, for exercising adversarial
  adaptation (plus an identical-domains control);
* a small on-disk WAV corpus whose four acoustic classes map onto the
  valence/arousal quadrants, complete with manifest, oracle annotations
  and a train/test split, for end-to-end pipeline runs.

Everything is driven by explicit seeds; the lift map is fixed across
seeds so that corpora drawn with different seeds live in the same space.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .corpus import ANNOTATION_FIELDS

# The quadrants of the (valence, arousal) plane after the negative ->
# neutral merge. Priors are deliberately skewed in both binarized
# dimensions: the interesting (positive-valence, high-arousal) behavior
# is rare, which is what makes uniform random annotation budgets
# wasteful.
QUADRANTS = (
    ("positive", "high"),
    ("neutral", "high"),
    ("neutral", "low"),
    ("positive", "low"),
)
QUADRANT_WEIGHTS = (0.04, 0.10, 0.76, 0.10)

# rare classes are scattered over many small modes, the dominant class
# over a few broad ones; a uniform random annotation budget leaves whole
# rare modes unlabeled, a representative one does not
ISLANDS_PER_CLASS = (13, 33, 19, 33)

_LIFT_SEED = 1618    # fixed across corpus seeds


def _counts(n: int, weights) -> list[int]:
    """Integer class counts proportional to weights, summing to n."""
    raw = [w * n for w in weights]
    counts = [int(c) for c in raw]
    # hand out the rounding remainder to the largest fractional parts
    order = sorted(range(len(raw)), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def lift_map(dim: int, base_dim: int = 2) -> np.ndarray:
    """The fixed random base_dim -> dim linear map, unit row energy."""
    rng = np.random.default_rng(_LIFT_SEED)
    return rng.normal(0.0, 1.0 / np.sqrt(base_dim), size=(base_dim, dim))


@dataclass(frozen=True)
class QuadrantData:
    train_x: np.ndarray
    train_valence: list
    train_arousal: list
    train_quadrant: np.ndarray       # quadrant index per train row
    test_x: np.ndarray
    test_valence: list
    test_arousal: list


def _ring_layout(rng, ring_radius: float):
    """Angular island positions on a ring, classes interleaved.

    Correlation distance on the lifted features reduces to the angle
    between base-plane positions, so angularly separated islands stay
    separated after the lift while radial structure collapses; a ring
    keeps every island distinct.
    """
    classes = []
    for cls, count in enumerate(ISLANDS_PER_CLASS):
        classes.extend([cls] * count)
    order = rng.permutation(len(classes))
    classes = [classes[i] for i in order]
    m = len(classes)
    base = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
    angles = base + rng.uniform(-0.2, 0.2, size=m) * (2.0 * np.pi / m)
    centres = ring_radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return centres, classes


def _sample_islands(rng, n, centres, classes, sigma):
    """n points over the islands, class totals per QUADRANT_WEIGHTS and
    spread evenly over each class's islands."""
    class_counts = _counts(n, QUADRANT_WEIGHTS)
    by_class: dict[int, list[int]] = {}
    for idx, cls in enumerate(classes):
        by_class.setdefault(cls, []).append(idx)
    points = []
    quadrant = []
    for cls, total in enumerate(class_counts):
        islands = by_class[cls]
        share = _counts(total, [1.0 / len(islands)] * len(islands))
        for idx, count in zip(islands, share):
            points.append(rng.normal(0.0, sigma, size=(count, 2)) + centres[idx])
            quadrant.extend([cls] * count)
    return np.concatenate(points), np.array(quadrant)


def quadrant_corpus(seed: int = 0, n_train: int = 1000, n_test: int = 500,
                    dim: int = 600, ring_radius: float = 4.0,
                    island_sigma: float = 0.045,
                    lift_noise: float = 0.05) -> QuadrantData:
    """Imbalanced four-class Gaussian-mixture corpus lifted to `dim`.

    Each class is a union of small Gaussian islands placed around a ring
    (rare classes: many tiny islands, the dominant class: fewer, larger
    ones), then lifted through the fixed random map. Train and test are
    drawn from the same islands. Class priors follow QUADRANT_WEIGHTS.
    """
    rng = np.random.default_rng(seed)
    centres, classes = _ring_layout(rng, ring_radius)
    lift = lift_map(dim)
    train_p, train_q = _sample_islands(rng, n_train, centres, classes, island_sigma)
    test_p, test_q = _sample_islands(rng, n_test, centres, classes, island_sigma)
    train_x = train_p @ lift + lift_noise * rng.normal(size=(n_train, dim))
    test_x = test_p @ lift + lift_noise * rng.normal(size=(n_test, dim))
    return QuadrantData(
        train_x=train_x,
        train_valence=[QUADRANTS[q][0] for q in train_q],
        train_arousal=[QUADRANTS[q][1] for q in train_q],
        train_quadrant=train_q,
        test_x=test_x,
        test_valence=[QUADRANTS[q][0] for q in test_q],
        test_arousal=[QUADRANTS[q][1] for q in test_q],
    )


@dataclass(frozen=True)
class ShiftData:
    source_x: np.ndarray
    source_labels: list              # binary arousal labels
    target_x: np.ndarray
    target_labels: list


def shift_corpus(seed: int = 0, n_source: int = 600, n_target: int = 600,
                 dim: int = 256, class_offset: float = 1.6,
                 rotation_deg: float = 25.0, mean_shift: float = 28.0,
                 shifted: bool = True) -> ShiftData:
    """Two Gaussian domains for domain adaptation runs.

    The source holds two unit-covariance classes offset by
    +-class_offset along the first axis, mixed 60:40. The target draws
    from the same mixture, then rotates the first two axes by
    rotation_deg and adds a fixed mean shift of magnitude mean_shift
    spread evenly over all axes, so a source-trained network sees
    feature statistics far from the ones it calibrated on. With
    shifted=False the target is simply a fresh draw from the source
    distribution (the no-op control).
    """
    rng = np.random.default_rng(seed)

    def draw(n):
        n_high = _counts(n, (0.6, 0.4))[0]
        x = rng.normal(size=(n, dim))
        x[:n_high, 0] += class_offset
        x[n_high:, 0] -= class_offset
        return x, ["high"] * n_high + ["low"] * (n - n_high)

    source_x, source_labels = draw(n_source)
    target_x, target_labels = draw(n_target)
    if shifted:
        theta = np.deg2rad(rotation_deg)
        c, s = np.cos(theta), np.sin(theta)
        rot = target_x[:, :2] @ np.array([[c, s], [-s, c]])
        target_x = target_x.copy()
        target_x[:, :2] = rot
        target_x += mean_shift / np.sqrt(dim)
    return ShiftData(source_x=source_x, source_labels=source_labels,
                     target_x=target_x, target_labels=target_labels)


# --- on-disk WAV corpus -----------------------------------------------------

# Acoustic encoding of the quadrants: spectral band carries valence,
# amplitude-modulation rate carries arousal.
_VAL_BAND = {"positive": (2600.0, 3400.0), "neutral": (550.0, 900.0)}
_ARO_RATE = {"high": (12.0, 16.0), "low": (2.0, 3.5)}
_SPEAKERS = ("key_child", "female_adult", "male_adult")

# quadrant mix for the bundled mini corpus
_WAV_WEIGHTS = (0.10, 0.40, 0.35, 0.15)


def _clip_samples(rng, duration: float, sample_rate: int,
                  valence: str, arousal: str) -> np.ndarray:
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    f0 = rng.uniform(*_VAL_BAND[valence])
    rate = rng.uniform(*_ARO_RATE[arousal])
    carrier = (np.sin(2 * np.pi * f0 * t + rng.uniform(0, 2 * np.pi))
               + 0.4 * np.sin(2 * np.pi * 1.5 * f0 * t + rng.uniform(0, 2 * np.pi)))
    envelope = 0.55 + 0.45 * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
    x = envelope * carrier + 0.02 * rng.normal(size=t.size)
    ramp = min(int(0.02 * sample_rate), x.size // 2)
    if ramp > 0:
        window = np.linspace(0.0, 1.0, ramp)
        x[:ramp] *= window
        x[-ramp:] *= window[::-1]
    return 0.4 * x / np.max(np.abs(x))


def _write_annotations(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_FIELDS)
        writer.writerows(rows)


def wav_corpus(out_dir, n: int = 100, seed: int = 0,
               sample_rate: int = 16000) -> dict:
    """Generate a small labeled WAV corpus under out_dir.

    Writes audio/<id>.wav clips of 0.7-2.0 s, a manifest with groups and
    a stratified 70:30 train/test split, a two-rater gold file covering
    the test split, and a single-rater oracle file covering the whole
    train split. Returns the paths. Deterministic for a given seed.
    """
    if n < 10:
        raise ValueError("need at least 10 clips for a meaningful corpus")
    out = Path(out_dir)
    (out / "audio").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    counts = _counts(n, _WAV_WEIGHTS)
    quadrant = np.repeat(np.arange(4), counts)
    order = rng.permutation(n)        # interleave classes across ids
    quadrant = quadrant[order]

    manifest_lines = []
    clips = []
    for i in range(n):
        uid = f"u{i:04d}"
        valence, arousal = QUADRANTS[quadrant[i]]
        duration = float(rng.uniform(0.7, 2.0))
        samples = _clip_samples(rng, duration, sample_rate, valence, arousal)
        rel = f"audio/{uid}.wav"
        wavfile.write(out / rel, sample_rate,
                      np.round(samples * 32767).astype(np.int16))
        clips.append((uid, valence, arousal, rel, samples.size / sample_rate))

    # stratified split: ~30% of each quadrant goes to test
    test_ids = set()
    for q in range(4):
        members = [i for i in range(n) if quadrant[i] == q]
        k = max(1, int(round(0.3 * len(members))))
        picked = rng.permutation(len(members))[:k]
        test_ids.update(members[j] for j in picked)

    gold_rows = []
    oracle_rows = []
    stamp = 0
    for i, (uid, valence, arousal, rel, duration) in enumerate(clips):
        split = "test" if i in test_ids else "train"
        manifest_lines.append(
            '{"id": "%s", "audio": "%s", "duration_s": %.6f, '
            '"speaker": "%s", "group": "g%d", "split": "%s"}'
            % (uid, rel, duration, _SPEAKERS[i % len(_SPEAKERS)], i % 5, split)
        )
        # raw labels: half the neutral-valence clips are annotated
        # "negative", which merges back to neutral downstream
        raw_valence = valence
        if valence == "neutral" and i % 2 == 0:
            raw_valence = "negative"
        present = "valence_first" if i % 2 == 0 else "arousal_first"
        if split == "test":
            for rater in ("oracle_a", "oracle_b"):
                gold_rows.append([uid, rater, raw_valence, arousal,
                                  "false", present, str(stamp)])
                stamp += 1
        else:
            oracle_rows.append([uid, "oracle", raw_valence, arousal,
                                "false", present, str(stamp)])
            stamp += 1

    manifest = out / "manifest.jsonl"
    manifest.write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    gold = out / "gold.csv"
    _write_annotations(gold, gold_rows)
    oracle = out / "oracle_train.csv"
    _write_annotations(oracle, oracle_rows)
    return {
        "manifest": str(manifest),
        "gold": str(gold),
        "oracle_train": str(oracle),
        "audio_dir": str(out / "audio"),
        "n_train": n - len(test_ids),
        "n_test": len(test_ids),
    }
