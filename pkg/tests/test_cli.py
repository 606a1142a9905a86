"""End-to-end runs of the `ser` command line, in process."""

import csv
import json
import shutil
import warnings

import numpy as np
import pytest

from serkit.audio_features import load_table
from serkit.cli import CliError, load_config, main
from serkit.corpus import ANNOTATION_FIELDS
from serkit.mal import load_queue
from serkit.metrics import reports_from_json
from serkit.nn import load_model

CONFIG = {
    "embed": {"hidden": [32, 24], "bottleneck": 8, "dropout": 0.1, "lr": 1e-3,
              "batch_size": 64, "patience": 25, "max_epochs": 120},
    "al": {"folds": 3, "c_grid": [1.0, 10.0], "gamma_grid": [0.001, 0.01, 0.1]},
    "ccg": {"folds": 2, "c_grid": [1.0, 10.0]},
    "arch": {"feature_hidden": [16, 16], "feature_out": 8,
             "classifier_hidden": [16], "critic_hidden": [16, 8]},
    "source": {"lr": 1e-2, "batch_size": 32, "patience": 20, "max_epochs": 80},
    "adapt": {"lr": 1e-3, "critic_steps": 2, "batch_size": 64, "max_epochs": 14,
              "window": 5},
}


def run_stage(argv):
    assert main(argv) == 0


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory, mini_corpus):
    """One full chain over the bundled mini corpus, shared by the module."""
    base = tmp_path_factory.mktemp("cli")
    run = base / "run"
    config = base / "cfg.json"
    config.write_text(json.dumps(CONFIG))
    common = ["--config", str(config), "--seed", "7"]
    run_stage(["features", "--run", str(run),
               "--manifest", mini_corpus["manifest"],
               "--annotations", mini_corpus["gold"], *common])
    run_stage(["embed", "--run", str(run), *common])
    run_stage(["cluster", "--run", str(run), *common])
    run_stage(["queue", "--run", str(run), *common])
    run_stage(["import-labels", "--run", str(run),
               "--annotations", mini_corpus["oracle_train"], *common])
    run_stage(["run-al", "--run", str(run), *common])
    run_stage(["run-ccg", "--sources", str(run), "--target", str(run), *common])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run_stage(["run-da", "--sources", str(run), "--target", str(run),
                   "--variant", "both", "--tasks", "valence", *common])
    return {"base": base, "run": run, "config": config}


def test_synth_corpus_command(tmp_path, capsys):
    out = tmp_path / "corpus"
    assert main(["synth-corpus", "--out", str(out), "--n", "12"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert (out / "manifest.jsonl").exists()
    assert info["n_train"] + info["n_test"] == 12


def test_features_stage_artifacts(pipeline):
    run = pipeline["run"]
    table = load_table(run / "features.serf")
    assert table.dim == 600
    assert table.normalization == "zscored"
    assert len(table.utterance_ids) == 60
    assert (run / "features.serf.meta.json").exists()
    assert (run / "zscore.json").exists()
    for line in (run / "manifest.jsonl").read_text().splitlines():
        assert json.loads(line)["audio"].startswith("/")


def test_embed_stage_artifacts(pipeline):
    run = pipeline["run"]
    table = load_table(run / "embedding.serf")
    assert table.feature_kind == "embedding"
    assert table.dim == 8
    encoder = load_model(run / "encoder.serm")[0]
    assert encoder.input_dim == 600 and encoder.output_dim == 8


def test_cluster_and_queue_artifacts(pipeline, mini_corpus):
    run = pipeline["run"]
    doc = json.loads((run / "clustering.json").read_text())
    assert [g["group_id"] for g in doc["groups"]] == [f"g{i}" for i in range(5)]
    entries = load_queue(run / "queue.csv")
    assert [e.rank for e in entries] == list(range(1, len(entries) + 1))
    sizes = [e.cluster_size for e in entries]
    assert sizes == sorted(sizes, reverse=True)
    total_clusters = sum(g["clustering"]["k"] for g in doc["groups"])
    assert len(entries) == total_clusters
    queued = {e.utterance_id for e in entries}
    pool = set()
    for g in doc["groups"]:
        pool.update(g["utterance_ids"])
    assert queued <= pool
    for e in entries:
        assert e.audio_path.endswith(f"{e.utterance_id}.wav")


def test_import_labels_records_skips(pipeline, mini_corpus):
    run = pipeline["run"]
    meta = json.loads((run / "labels.csv.meta.json").read_text())
    entries = load_queue(run / "queue.csv")
    assert meta["config"]["imported"] == len(entries)
    assert meta["config"]["imported"] + meta["config"]["skipped"] == \
           mini_corpus["n_train"]


def test_import_labels_rejects_disjoint_annotations(pipeline, tmp_path):
    bad = tmp_path / "foreign.csv"
    with open(bad, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_FIELDS)
        writer.writerow(["zzz9999", "rater", "neutral", "low", "false",
                         "valence_first", "0"])
    assert main(["import-labels", "--run", str(pipeline["run"]),
                 "--annotations", str(bad)]) == 2


def test_run_al_reports(pipeline, mini_corpus):
    run = pipeline["run"]
    reports = reports_from_json((run / "al_report.json").read_text())
    assert len(reports) == 4
    assert {r.method for r in reports} == {"AL"}
    assert {(r.task, r.label_mode) for r in reports} == {
        ("valence", "cluster"), ("valence", "medoid"),
        ("arousal", "cluster"), ("arousal", "medoid"),
    }
    for r in reports:
        assert 0.0 <= r.uar <= 100.0
        assert int(np.sum(r.confusion_counts)) == mini_corpus["n_test"]
    text = (run / "al_report.txt").read_text()
    assert text.count("**") >= 4           # one bolded winner per task


def test_run_ccg_reports(pipeline):
    run = pipeline["run"]
    reports = reports_from_json((run / "ccg_report.json").read_text())
    assert {r.method for r in reports} == {"CCG"}
    assert {r.task for r in reports} == {"valence", "arousal"}
    assert all(r.source == run.name for r in reports)
    assert all(0.0 <= r.uar <= 100.0 for r in reports)


def test_run_da_reports(pipeline):
    run = pipeline["run"]
    reports = reports_from_json((run / "da_report.json").read_text())
    assert {r.method for r in reports} == {"DA"}
    assert {r.variant for r in reports} == {"source_only", "US", "S-S"}
    assert {r.task for r in reports} == {"valence"}
    assert (run / "da_valence_log.jsonl").exists()
    assert (run / "da_valence_unsupervised_feature.serm").exists()
    assert (run / "da_valence_semi_supervised_classifier.serm").exists()
    log_rows = [json.loads(l) for l in
                (run / "da_valence_log.jsonl").read_text().splitlines()]
    assert len(log_rows) == CONFIG["adapt"]["max_epochs"]
    assert all("critic_gap" in row for row in log_rows)


def test_report_merges_everything(pipeline, tmp_path, capsys):
    out = tmp_path / "merged"
    assert main(["report", "--runs", str(pipeline["run"]),
                 "--out", str(out)]) == 0
    text = capsys.readouterr().out
    for method in ("AL", "CCG", "DA"):
        assert method in text
    assert (out / "report.json").exists()
    assert (out / "report.txt").read_text() == text

    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", "--runs", str(empty)]) == 2


def test_stages_refuse_to_run_out_of_order(tmp_path):
    run = tmp_path / "fresh"
    run.mkdir()
    assert main(["embed", "--run", str(run)]) == 2
    assert main(["cluster", "--run", str(run)]) == 2
    assert main(["queue", "--run", str(run)]) == 2
    assert main(["run-al", "--run", str(run)]) == 2


def test_tampered_artifact_is_refused(pipeline, tmp_path):
    copy = tmp_path / "tampered"
    shutil.copytree(pipeline["run"], copy)
    with open(copy / "features.serf", "ab") as fh:
        fh.write(b"\x00")
    assert main(["embed", "--run", str(copy),
                 "--config", str(pipeline["config"])]) == 2


def test_unknown_config_keys_are_refused(pipeline, tmp_path):
    copy = tmp_path / "cfgcheck"
    shutil.copytree(pipeline["run"], copy)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"embed": {"bottleneck": 8, "n_layers": 3}}))
    assert main(["embed", "--run", str(copy), "--config", str(bad)]) == 2


def test_config_file_validation(tmp_path):
    with pytest.raises(CliError, match="toml or .json"):
        main(["synth-corpus", "--out", str(tmp_path / "x"),
              "--config", str(tmp_path / "cfg.yaml")])
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(CliError, match="must be an object"):
        main(["synth-corpus", "--out", str(tmp_path / "x"),
              "--config", str(arr)])
    toml = tmp_path / "cfg.toml"
    toml.write_text('[al]\nfolds = 3\nc_grid = [1.0, 10.0]\n')
    assert load_config(toml) == {"al": {"folds": 3, "c_grid": [1.0, 10.0]}}


def test_toml_config_drives_a_stage(pipeline, tmp_path):
    toml = tmp_path / "cluster.toml"
    toml.write_text('[cluster]\nsplits = ["train", "unlabeled"]\n')
    before = (pipeline["run"] / "queue.csv").read_bytes()
    run_stage(["cluster", "--run", str(pipeline["run"]),
               "--config", str(toml), "--seed", "7"])
    run_stage(["queue", "--run", str(pipeline["run"]), "--seed", "7"])
    assert (pipeline["run"] / "queue.csv").read_bytes() == before


def test_front_half_is_byte_reproducible(pipeline, mini_corpus, tmp_path):
    rerun = tmp_path / "again"
    common = ["--config", str(pipeline["config"]), "--seed", "7"]
    run_stage(["features", "--run", str(rerun),
               "--manifest", mini_corpus["manifest"],
               "--annotations", mini_corpus["gold"], *common])
    run_stage(["embed", "--run", str(rerun), *common])
    run_stage(["cluster", "--run", str(rerun), *common])
    run_stage(["queue", "--run", str(rerun), *common])
    for name in ("features.serf", "embedding.serf", "queue.csv"):
        assert (rerun / name).read_bytes() == \
               (pipeline["run"] / name).read_bytes(), name
