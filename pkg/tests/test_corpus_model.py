"""Corpus data model: filtering, label mapping, voting, kappa, manifests."""

import numpy as np
import pytest

from serkit.corpus import (
    ANNOTATION_FIELDS,
    EMOTION_ALIASES,
    EMOTION_CATEGORIES,
    Annotation,
    Corpus,
    CorpusError,
    Utterance,
    VALabel,
    cohens_kappa,
    filter_min_duration,
    gold_labels,
    load_annotations,
    load_manifest,
    load_mapping_override,
    majority_vote,
    map_emotion_to_va,
    merge_raw_valence,
    save_labels,
    save_manifest,
)


def utt(i, duration=1.0, **kw):
    return Utterance(id=f"u{i:03d}", audio_ref=f"audio/u{i:03d}.wav",
                     duration=duration, **kw)


def ann(uid, annotator, valence="neutral", arousal="low", **kw):
    return Annotation(utterance_id=uid, annotator_id=annotator,
                      valence_raw=valence, arousal_raw=arousal, **kw)


def test_duration_filter_keeps_the_threshold():
    corpus = Corpus(name="c", utterances=(
        utt(0, duration=0.5), utt(1, duration=0.6), utt(2, duration=1.57)))
    kept = filter_min_duration(corpus, min_ms=600.0)
    assert [u.duration for u in kept.utterances] == [0.6, 1.57]


def test_duration_filter_identity_and_empty():
    corpus = Corpus(name="c", utterances=(utt(0, duration=2.0), utt(1, duration=3.0)))
    assert filter_min_duration(corpus).utterances == corpus.utterances
    empty = filter_min_duration(corpus, min_ms=5000.0)
    assert empty.utterances == ()


def test_duration_filter_drops_attached_records():
    corpus = Corpus(
        name="c",
        utterances=(utt(0, duration=0.3), utt(1, duration=1.0)),
        annotations=(ann("u000", "a"), ann("u001", "a")),
        splits={"u000": "train", "u001": "test"},
    )
    kept = filter_min_duration(corpus)
    assert [a.utterance_id for a in kept.annotations] == ["u001"]
    assert kept.splits == {"u001": "test"}


def test_emotion_quadrants():
    assert map_emotion_to_va("joy") == VALabel(valence="positive", arousal="high")
    assert map_emotion_to_va("sadness") == VALabel(valence="neutral", arousal="low")
    assert map_emotion_to_va("anger") == VALabel(valence="neutral", arousal="high")


def test_emotion_mapping_is_total():
    for cat in EMOTION_CATEGORIES + tuple(EMOTION_ALIASES):
        label = map_emotion_to_va(cat)
        assert label.valence in ("neutral", "positive")
        assert label.arousal in ("low", "high")
    assert map_emotion_to_va("Happy") == map_emotion_to_va("joy")
    with pytest.raises(CorpusError):
        map_emotion_to_va("melancholy")


def test_mapping_override_file(tmp_path):
    path = tmp_path / "map.csv"
    path.write_text("emotion,valence,arousal\nsurprise,negative,high\n")
    table = load_mapping_override(path)
    assert map_emotion_to_va("surprise", table) == VALabel(
        valence="neutral", arousal="high")
    bad = tmp_path / "bad.csv"
    bad.write_text("emotion,valence,arousal\nsurprise,sideways,high\n")
    with pytest.raises(CorpusError):
        load_mapping_override(bad)


def test_majority_vote_two_of_three():
    anns = [ann("u", "a", valence="positive"), ann("u", "b", valence="positive"),
            ann("u", "c", valence="neutral")]
    assert majority_vote(anns, "valence") == ("positive", "")


def test_majority_vote_three_way_split_drops_the_sample():
    anns = [ann("u", "a", valence="positive"), ann("u", "b", valence="neutral"),
            ann("u", "c", valence="negative")]
    label, reason = majority_vote(anns, "valence")
    assert label is None and reason


def test_binary_dimension_with_three_raters_always_resolves():
    for combo in np.ndindex(2, 2, 2):
        anns = [ann("u", f"r{i}", arousal=("low", "high")[c])
                for i, c in enumerate(combo)]
        label, _ = majority_vote(anns, "arousal")
        assert label in ("low", "high")


def test_majority_vote_edge_rules():
    label, reason = majority_vote([ann("u", "a")], "valence")
    assert label is None and "fewer than 2" in reason
    # erroneous rows are excluded before counting
    anns = [ann("u", "a", valence="positive"),
            Annotation(utterance_id="u", annotator_id="b", erroneous=True),
            ann("u", "c", valence="positive")]
    assert majority_vote(anns, "valence") == ("positive", "")
    # even split is not a majority
    tie = [ann("u", "a", valence="positive"), ann("u", "b", valence="neutral")]
    assert majority_vote(tie, "valence")[0] is None
    # annotator order cannot matter
    anns = [ann("u", "a", valence="neutral"), ann("u", "b", valence="positive"),
            ann("u", "c", valence="positive")]
    for perm in ([0, 1, 2], [2, 1, 0], [1, 2, 0]):
        assert majority_vote([anns[i] for i in perm], "valence")[0] == "positive"
    with pytest.raises(CorpusError):
        majority_vote([ann("u1", "a"), ann("u2", "b")], "valence")


def test_merge_folds_negative_into_neutral():
    assert merge_raw_valence("negative") == "neutral"
    assert merge_raw_valence("neutral") == "neutral"
    assert merge_raw_valence("positive") == "positive"


def test_kappa_hand_values():
    p, n = "positive", "neutral"
    assert cohens_kappa([p, p, n, n], [p, p, n, n]) == 1.0
    assert abs(cohens_kappa([p, p, n, n], [p, n, p, n])) < 1e-9
    assert abs(cohens_kappa([p, p, p, n], [p, p, n, n]) - 0.5) < 1e-9


def test_kappa_symmetry_and_degenerate_marginals():
    a = ["x", "x", "y", "y", "x"]
    b = ["x", "y", "y", "x", "x"]
    assert abs(cohens_kappa(a, b) - cohens_kappa(b, a)) < 1e-12
    # both raters constant and agreeing: chance agreement is 1
    assert cohens_kappa(["x", "x"], ["x", "x"]) == 1.0
    assert cohens_kappa(["x", "x"], ["y", "y"]) == 0.0
    with pytest.raises(CorpusError):
        cohens_kappa(["x"], ["x", "y"])


def make_manifest(tmp_path, lines):
    path = tmp_path / "manifest.jsonl"
    path.write_text("\n".join(lines) + "\n")
    return path


def manifest_line(i, **extra):
    import json

    rec = {"id": f"u{i:03d}", "audio": f"audio/u{i:03d}.wav", "duration_s": 1.0,
           "speaker": "unknown", "group": "g0", "split": "train"}
    rec.update(extra)
    return json.dumps(rec)


def test_manifest_round_trip(tmp_path):
    path = make_manifest(tmp_path, [manifest_line(i) for i in range(3)])
    corpus = load_manifest(path, name="c")
    assert len(corpus.utterances) == 3
    out = tmp_path / "again.jsonl"
    save_manifest(corpus, out)
    assert load_manifest(out, name="c") == corpus


def test_manifest_errors(tmp_path):
    dup = make_manifest(tmp_path, [manifest_line(1), manifest_line(1)])
    with pytest.raises(CorpusError, match="u001"):
        load_manifest(dup)

    bad = make_manifest(tmp_path, [manifest_line(1), "{not json"])
    with pytest.raises(CorpusError, match="line 2"):
        load_manifest(bad)

    missing = make_manifest(tmp_path, ['{"id": "u1"}'])
    with pytest.raises(CorpusError):
        load_manifest(missing)


def test_annotation_csv_round_trip(tmp_path):
    manifest = make_manifest(tmp_path, [manifest_line(i) for i in range(2)])
    labels = tmp_path / "labels.csv"
    rows = (
        ann("u000", "a", valence="positive", arousal="high",
            presentation_order="arousal_first", timestamp="3"),
        Annotation(utterance_id="u001", annotator_id="b", erroneous=True,
                   timestamp="4"),
    )
    save_labels(rows, labels)
    corpus = load_manifest(manifest, annotations_path=labels, name="c")
    assert corpus.annotations == rows
    loaded = load_annotations(labels)
    assert loaded == list(rows)


def test_annotation_csv_header_is_strict(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("utterance_id,annotator\nu0,a\n")
    with pytest.raises(CorpusError):
        load_annotations(path)
    assert ANNOTATION_FIELDS[0] == "utterance_id"


def test_annotation_referencing_unknown_utterance(tmp_path):
    manifest = make_manifest(tmp_path, [manifest_line(0)])
    labels = tmp_path / "labels.csv"
    save_labels([ann("zz", "a")], labels)
    with pytest.raises(CorpusError, match="zz"):
        load_manifest(manifest, annotations_path=labels)


def test_gold_labels_votes_and_merges(tmp_path):
    corpus = Corpus(
        name="c",
        utterances=(utt(0), utt(1), utt(2)),
        annotations=(
            # u000: negative valence majority folds into neutral
            ann("u000", "a", valence="negative", arousal="high"),
            ann("u000", "b", valence="negative", arousal="high"),
            ann("u000", "c", valence="positive", arousal="low"),
            # u001: valence has no majority, sample dropped
            ann("u001", "a", valence="positive", arousal="low"),
            ann("u001", "b", valence="neutral", arousal="low"),
            # u002: single annotation, dropped
            ann("u002", "a", valence="positive", arousal="high"),
        ),
        splits={"u000": "test", "u001": "test", "u002": "test"},
    )
    gold = gold_labels(corpus, split="test")
    assert gold == {"u000": VALabel(valence="neutral", arousal="high")}


def test_validation_errors():
    with pytest.raises(CorpusError):
        VALabel(valence="negative", arousal="low")   # pre-merge value rejected
    with pytest.raises(CorpusError):
        ann("u", "a", valence="upbeat")
    with pytest.raises(CorpusError):
        Utterance(id="u", audio_ref="a.wav", duration=1.0, speaker_tag="robot")
    with pytest.raises(CorpusError):
        Corpus(name="c", utterances=(utt(0),), splits={"u000": "holdout"})
    with pytest.raises(CorpusError):
        Corpus(name="c", utterances=(utt(0), utt(0)))
