"""Corpora, utterances, annotations, and the emotion -> valence/arousal label space.

A corpus is an immutable collection of utterances (one diarized speech
segment each) plus raw annotations and a train/test/unlabeled split.
Transformations return new Corpus values. Labels live in two spaces: the
raw annotation space (ternary valence, binary arousal, plus an "erroneous"
escape hatch) and the merged binary space used for classification, where
negative valence folds into neutral.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace

log = logging.getLogger(__name__)

SPEAKER_TAGS = ("male_adult", "female_adult", "key_child", "other_child", "unknown")
SPLITS = ("train", "test", "unlabeled")

RAW_VALENCE = ("negative", "neutral", "positive")
RAW_AROUSAL = ("low", "high")
VALENCE_CLASSES = ("neutral", "positive")   # after the negative->neutral merge
AROUSAL_CLASSES = ("low", "high")

# Aliases collapse the label inventories of the source corpora onto one set.
EMOTION_ALIASES = {"happy": "joy", "sad": "sadness", "angry": "anger", "fearful": "fear"}

EMOTION_CATEGORIES = (
    "anger", "boredom", "disgust", "fear", "joy", "neutral", "sadness",
    "surprise", "calm", "tenderness",
)

# Quadrant table: emotion -> (pre-merge valence, arousal). The placement of
# "surprise" (positive/high) and "calm" (positive/low) follows common usage
# but is ambiguous in the literature; override via a mapping CSV if needed.
QUADRANT_TABLE = {
    "anger":      ("negative", "high"),
    "fear":       ("negative", "high"),
    "disgust":    ("negative", "high"),
    "joy":        ("positive", "high"),
    "surprise":   ("positive", "high"),
    "boredom":    ("negative", "low"),
    "sadness":    ("negative", "low"),
    "neutral":    ("neutral", "low"),
    "calm":       ("positive", "low"),
    "tenderness": ("positive", "low"),
}


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Utterance:
    id: str
    audio_ref: str
    duration: float              # seconds
    speaker_tag: str = "unknown"
    group_id: str = ""           # family/speaker grouping for per-group MAL
    source_audio: str = ""       # optional daylong recording for 10 s context
    source_start_s: float = 0.0

    def __post_init__(self):
        if self.duration <= 0:
            raise CorpusError(f"utterance {self.id!r}: duration must be > 0")
        if self.speaker_tag not in SPEAKER_TAGS:
            raise CorpusError(f"utterance {self.id!r}: unknown speaker tag {self.speaker_tag!r}")


@dataclass(frozen=True)
class VALabel:
    valence: str   # neutral | positive
    arousal: str   # low | high

    def __post_init__(self):
        if self.valence not in VALENCE_CLASSES:
            raise CorpusError(f"bad valence {self.valence!r}")
        if self.arousal not in AROUSAL_CLASSES:
            raise CorpusError(f"bad arousal {self.arousal!r}")


@dataclass(frozen=True)
class Annotation:
    utterance_id: str
    annotator_id: str
    valence_raw: str = ""        # negative | neutral | positive; may be empty if erroneous
    arousal_raw: str = ""        # low | high; may be empty if erroneous
    erroneous: bool = False
    presentation_order: str = "valence_first"   # valence_first | arousal_first
    timestamp: str = ""

    def __post_init__(self):
        if not self.erroneous:
            if self.valence_raw not in RAW_VALENCE:
                raise CorpusError(
                    f"annotation for {self.utterance_id!r}: bad valence {self.valence_raw!r}")
            if self.arousal_raw not in RAW_AROUSAL:
                raise CorpusError(
                    f"annotation for {self.utterance_id!r}: bad arousal {self.arousal_raw!r}")
        if self.presentation_order not in ("valence_first", "arousal_first"):
            raise CorpusError(f"bad presentation order {self.presentation_order!r}")


@dataclass(frozen=True)
class Corpus:
    name: str
    utterances: tuple[Utterance, ...]
    annotations: tuple[Annotation, ...] = ()
    splits: dict = field(default_factory=dict)   # utterance id -> train|test|unlabeled

    def __post_init__(self):
        ids = [u.id for u in self.utterances]
        seen = set()
        for i in ids:
            if i in seen:
                raise CorpusError(f"duplicate utterance id {i!r}")
            seen.add(i)
        for a in self.annotations:
            if a.utterance_id not in seen:
                raise CorpusError(f"annotation references unknown utterance {a.utterance_id!r}")
        for uid, split in self.splits.items():
            if uid not in seen:
                raise CorpusError(f"split assignment for unknown utterance {uid!r}")
            if split not in SPLITS:
                raise CorpusError(f"unknown split {split!r} for {uid!r}")

    def by_id(self, uid: str) -> Utterance:
        for u in self.utterances:
            if u.id == uid:
                return u
        raise KeyError(uid)

    def ids(self, split=None) -> list[str]:
        if split is None:
            return [u.id for u in self.utterances]
        wanted = (split,) if isinstance(split, str) else tuple(split)
        return [u.id for u in self.utterances if self.splits.get(u.id) in wanted]

    def annotations_for(self, uid: str) -> list[Annotation]:
        return [a for a in self.annotations if a.utterance_id == uid]


def filter_min_duration(corpus: Corpus, min_ms: float = 600.0) -> Corpus:
    """Drop utterances shorter than ``min_ms`` milliseconds.

    Annotations and split assignments of dropped utterances are dropped
    with them. An empty result is allowed (with a warning).
    """
    keep = tuple(u for u in corpus.utterances if u.duration * 1000.0 >= min_ms)
    kept_ids = {u.id for u in keep}
    dropped = len(corpus.utterances) - len(keep)
    log.info("duration filter (%.0f ms): kept %d, dropped %d", min_ms, len(keep), dropped)
    if not keep:
        log.warning("duration filter removed every utterance of corpus %r", corpus.name)
    return replace(
        corpus,
        utterances=keep,
        annotations=tuple(a for a in corpus.annotations if a.utterance_id in kept_ids),
        splits={k: v for k, v in corpus.splits.items() if k in kept_ids},
    )


def normalize_emotion(category: str) -> str:
    cat = category.strip().lower()
    cat = EMOTION_ALIASES.get(cat, cat)
    if cat not in EMOTION_CATEGORIES:
        raise CorpusError(f"unknown emotion category {category!r}")
    return cat


def map_emotion_to_va(category: str, quadrant_table: dict | None = None) -> VALabel:
    """Map an emotion category to the merged binary valence/arousal space.

    The category lands in a quadrant of the valence-arousal plane, then
    negative valence is merged into neutral.
    """
    table = QUADRANT_TABLE if quadrant_table is None else quadrant_table
    cat = normalize_emotion(category) if quadrant_table is None else category.strip().lower()
    if cat not in table:
        raise CorpusError(f"unknown emotion category {category!r}")
    valence, arousal = table[cat]
    if valence == "negative":
        valence = "neutral"
    return VALabel(valence=valence, arousal=arousal)


def load_mapping_override(path) -> dict:
    """Read a quadrant override CSV with header emotion,valence,arousal.

    Valence entries are pre-merge (negative/neutral/positive).
    """
    table = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["emotion", "valence", "arousal"]:
            raise CorpusError(f"{path}: expected header emotion,valence,arousal")
        for i, row in enumerate(reader, start=2):
            val, aro = row["valence"].strip().lower(), row["arousal"].strip().lower()
            if val not in RAW_VALENCE or aro not in RAW_AROUSAL:
                raise CorpusError(f"{path}: bad mapping on line {i}")
            table[row["emotion"].strip().lower()] = (val, aro)
    return table


def majority_vote(annotations, dimension: str):
    """Strict-majority label over one dimension, or (None, reason).

    Erroneous annotations are excluded first; fewer than 2 usable
    annotations or a tie yields None and the sample should be dropped.
    Votes are counted over the raw label space (ternary valence).
    """
    if dimension not in ("valence", "arousal"):
        raise CorpusError(f"unknown dimension {dimension!r}")
    anns = list(annotations)
    uids = {a.utterance_id for a in anns}
    if len(uids) > 1:
        raise CorpusError(f"annotations span multiple utterances: {sorted(uids)}")
    usable = [a for a in anns if not a.erroneous]
    if len(usable) < 2:
        return None, "fewer than 2 usable annotations"
    votes = [a.valence_raw if dimension == "valence" else a.arousal_raw for a in usable]
    counts: dict[str, int] = {}
    for v in votes:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    winners = [v for v, c in counts.items() if c == best]
    if len(winners) > 1 or best * 2 <= len(votes):
        return None, "no strict majority"
    return winners[0], ""


def merge_raw_valence(raw: str) -> str:
    return "neutral" if raw == "negative" else raw


def gold_labels(corpus: Corpus, split="test") -> dict[str, VALabel]:
    """Majority-voted merged VA labels for a split; samples without a
    strict majority in either dimension are dropped."""
    out = {}
    for uid in corpus.ids(split):
        anns = corpus.annotations_for(uid)
        if not anns:
            continue
        val, _ = majority_vote(anns, "valence")
        aro, _ = majority_vote(anns, "arousal")
        if val is None or aro is None:
            continue
        out[uid] = VALabel(valence=merge_raw_valence(val), arousal=aro)
    return out


def cohens_kappa(labels_a, labels_b) -> float:
    """Cohen's kappa with marginal-product chance agreement.

    Degenerate case: if chance agreement is 1 (both raters constant),
    kappa is 1 for perfect agreement and 0 otherwise.
    """
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise CorpusError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise CorpusError("need at least 2 paired items")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    labels = set(a) | set(b)
    p_e = sum((a.count(lab) / n) * (b.count(lab) / n) for lab in labels)
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


# --- manifest / annotation file I/O ---------------------------------------
#
# Manifest: JSONL, one utterance per line:
#   {"id","audio","duration_s","speaker","group","split"}
# (optional: "source_audio", "source_start_s" for annotation-context audio)
# Annotations: CSV utterance_id,annotator,valence,arousal,erroneous,order,timestamp

ANNOTATION_FIELDS = ["utterance_id", "annotator", "valence", "arousal",
                     "erroneous", "order", "timestamp"]


def load_manifest(path, annotations_path=None, name=None) -> Corpus:
    utterances = []
    splits = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}: malformed JSON on line {lineno}: {e}") from e
            try:
                utt = Utterance(
                    id=str(rec["id"]),
                    audio_ref=str(rec["audio"]),
                    duration=float(rec["duration_s"]),
                    speaker_tag=rec.get("speaker", "unknown"),
                    group_id=str(rec.get("group", "")),
                    source_audio=str(rec.get("source_audio", "")),
                    source_start_s=float(rec.get("source_start_s", 0.0)),
                )
            except KeyError as e:
                raise CorpusError(f"{path}: line {lineno} missing field {e}") from e
            utterances.append(utt)
            split = rec.get("split", "unlabeled")
            if split not in SPLITS:
                raise CorpusError(f"{path}: line {lineno}: unknown split {split!r}")
            splits[utt.id] = split
    annotations = ()
    if annotations_path is not None:
        annotations = tuple(load_annotations(annotations_path))
    return Corpus(
        name=name or str(path),
        utterances=tuple(utterances),
        annotations=annotations,
        splits=splits,
    )


def _parse_bool(text: str, where: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no", ""):
        return False
    raise CorpusError(f"{where}: bad boolean {text!r}")


def load_annotations(path) -> list[Annotation]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ANNOTATION_FIELDS:
            raise CorpusError(f"{path}: expected header {','.join(ANNOTATION_FIELDS)}")
        for lineno, row in enumerate(reader, start=2):
            if any(v is None for v in row.values()):
                raise CorpusError(f"{path}: ragged row on line {lineno}")
            out.append(Annotation(
                utterance_id=row["utterance_id"],
                annotator_id=row["annotator"],
                valence_raw=row["valence"],
                arousal_raw=row["arousal"],
                erroneous=_parse_bool(row["erroneous"], f"{path} line {lineno}"),
                presentation_order=row["order"] or "valence_first",
                timestamp=row["timestamp"],
            ))
    return out


def save_labels(corpus_or_annotations, path) -> None:
    """Write annotations as CSV; load_annotations(save_labels(x)) == x."""
    anns = (corpus_or_annotations.annotations
            if isinstance(corpus_or_annotations, Corpus) else corpus_or_annotations)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_FIELDS)
        for a in anns:
            writer.writerow([
                a.utterance_id, a.annotator_id, a.valence_raw, a.arousal_raw,
                "true" if a.erroneous else "false", a.presentation_order, a.timestamp,
            ])


def save_manifest(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u in corpus.utterances:
            rec = {
                "id": u.id,
                "audio": u.audio_ref,
                "duration_s": u.duration,
                "speaker": u.speaker_tag,
                "group": u.group_id,
                "split": corpus.splits.get(u.id, "unlabeled"),
            }
            if u.source_audio:
                rec["source_audio"] = u.source_audio
                rec["source_start_s"] = u.source_start_s
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
