"""Provenance sidecars and the stage chain."""

import json

import pytest

from serkit.rundir import (
    ARTIFACTS,
    RunDirError,
    config_digest,
    file_fingerprint,
    meta_path,
    read_meta,
    require_stage,
    stage_artifact,
    write_meta,
)


def test_fingerprint_is_content_only(tmp_path):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    a.write_bytes(b"hello")
    b.write_bytes(b"hello")
    assert file_fingerprint(a) == file_fingerprint(b)
    assert file_fingerprint(a).startswith("sha256:")
    b.write_bytes(b"hello!")
    assert file_fingerprint(a) != file_fingerprint(b)


def test_config_digest_ignores_key_order():
    assert config_digest({"a": 1, "b": 2}) == config_digest({"b": 2, "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


def test_stage_artifact_names():
    assert stage_artifact("/run", "features").name == ARTIFACTS["features"]
    with pytest.raises(RunDirError):
        stage_artifact("/run", "deploy")


def test_meta_round_trip(tmp_path):
    upstream = tmp_path / ARTIFACTS["features"]
    upstream.write_bytes(b"feature bytes")
    write_meta(upstream, "features", seed=3, config={"n_mels": 40})

    artifact = tmp_path / ARTIFACTS["embed"]
    artifact.write_bytes(b"embedding bytes")
    side = tmp_path / "encoder.serm"
    side.write_bytes(b"weights")
    write_meta(artifact, "embed", inputs={"features": upstream}, seed=3,
               config={"bottleneck": 32}, outputs={"encoder": side})

    meta = read_meta(artifact, expect_stage="embed")
    assert meta["stage"] == "embed"
    assert meta["seed"] == 3
    assert meta["config"] == {"bottleneck": 32}
    assert meta["config_digest"] == config_digest({"bottleneck": 32})
    assert meta["inputs"]["features"]["fingerprint"] == file_fingerprint(upstream)
    assert meta["outputs"]["encoder"]["artifact"] == "encoder.serm"
    assert meta_path(artifact).name == "embedding.serf.meta.json"
    assert require_stage(tmp_path, "embed") == meta


def test_meta_refuses_missing_pieces(tmp_path):
    artifact = tmp_path / "queue.csv"
    with pytest.raises(RunDirError, match="missing artifact"):
        write_meta(artifact, "queue")
    with pytest.raises(RunDirError, match="run the queue stage first"):
        require_stage(tmp_path, "queue")
    artifact.write_text("rank\n")
    with pytest.raises(RunDirError, match="sidecar"):
        read_meta(artifact)


def test_meta_detects_artifact_drift(tmp_path):
    artifact = tmp_path / ARTIFACTS["cluster"]
    artifact.write_text("{}")
    write_meta(artifact, "cluster")
    read_meta(artifact)
    artifact.write_text("{ }")
    with pytest.raises(RunDirError, match="fingerprint"):
        read_meta(artifact)


def test_meta_detects_stage_mismatch(tmp_path):
    artifact = tmp_path / ARTIFACTS["cluster"]
    artifact.write_text("{}")
    write_meta(artifact, "cluster")
    with pytest.raises(RunDirError, match="produced by stage 'cluster'"):
        read_meta(artifact, expect_stage="queue")


def test_meta_detects_input_drift(tmp_path):
    upstream = tmp_path / ARTIFACTS["features"]
    upstream.write_bytes(b"v1")
    artifact = tmp_path / ARTIFACTS["embed"]
    artifact.write_bytes(b"emb")
    write_meta(artifact, "embed", inputs={"features": upstream})
    read_meta(artifact)

    upstream.write_bytes(b"v2")
    with pytest.raises(RunDirError, match="changed after"):
        read_meta(artifact)
    assert read_meta(artifact, check_inputs=False)["stage"] == "embed"

    upstream.unlink()
    with pytest.raises(RunDirError, match="is missing"):
        read_meta(artifact)


def test_rerun_to_identical_bytes_keeps_the_chain(tmp_path):
    upstream = tmp_path / ARTIFACTS["features"]
    upstream.write_bytes(b"stable")
    artifact = tmp_path / ARTIFACTS["embed"]
    artifact.write_bytes(b"emb")
    write_meta(artifact, "embed", inputs={"features": upstream})
    upstream.write_bytes(b"stable")     # rewrite, same content
    meta = read_meta(artifact)
    sidecar = json.loads(meta_path(artifact).read_text())
    assert sidecar == meta
    assert "timestamp" not in json.dumps(sidecar)
