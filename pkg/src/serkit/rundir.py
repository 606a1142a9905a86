"""Run-directory artifact chain with content-hash fingerprints.

Every pipeline stage writes its artifact plus a sidecar
``<artifact>.meta.json`` naming the stage, the artifact's sha256, the
fingerprints of the inputs it was built from, the seed and the resolved
stage config. Downstream stages refuse to read an artifact whose bytes
no longer match its recorded fingerprint, whose recorded inputs have
changed on disk, or that was produced by a different stage than
expected. Hashes are content-only, so re-running a stage to identical
bytes never invalidates the chain; metadata carries no timestamps.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


class RunDirError(ValueError):
    pass


# canonical artifact names per stage
ARTIFACTS = {
    "features": "features.serf",
    "embed": "embedding.serf",
    "cluster": "clustering.json",
    "queue": "queue.csv",
    "labels": "labels.csv",
}


def stage_artifact(run_dir, stage: str) -> Path:
    if stage not in ARTIFACTS:
        raise RunDirError(f"stage {stage!r} has no canonical artifact")
    return Path(run_dir) / ARTIFACTS[stage]


def file_fingerprint(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return "sha256:" + digest.hexdigest()


def config_digest(config) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


def meta_path(artifact) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.name + ".meta.json")


def write_meta(artifact, stage: str, inputs=None, seed=None,
               config=None, outputs=None) -> Path:
    """Fingerprint an artifact and its side outputs; record provenance.

    inputs maps a label to the path of an upstream artifact (fingerprinted
    now); outputs maps a label to a side-output path written by the same
    stage (e.g. the encoder checkpoint next to the embedding table).
    """
    artifact = Path(artifact)
    if not artifact.exists():
        raise RunDirError(f"{artifact}: cannot fingerprint a missing artifact")
    meta = {
        "stage": stage,
        "artifact": artifact.name,
        "fingerprint": file_fingerprint(artifact),
        "inputs": {
            label: {"artifact": Path(p).name, "fingerprint": file_fingerprint(p)}
            for label, p in sorted((inputs or {}).items())
        },
        "outputs": {
            label: {"artifact": Path(p).name, "fingerprint": file_fingerprint(p)}
            for label, p in sorted((outputs or {}).items())
        },
        "seed": seed,
        "config": config if config is not None else {},
    }
    meta["config_digest"] = config_digest(meta["config"])
    path = meta_path(artifact)
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")
    return path


def read_meta(artifact, expect_stage=None, check_inputs: bool = True) -> dict:
    """Load and verify an artifact's provenance sidecar.

    Raises RunDirError when the artifact or sidecar is missing, the
    artifact bytes have drifted from the recorded fingerprint, the stage
    does not match `expect_stage`, or (with check_inputs) any recorded
    input artifact has changed since this one was built.
    """
    artifact = Path(artifact)
    stage_hint = f"; run the {expect_stage} stage first" if expect_stage else ""
    if not artifact.exists():
        raise RunDirError(f"{artifact}: artifact not found{stage_hint}")
    mpath = meta_path(artifact)
    if not mpath.exists():
        raise RunDirError(
            f"{artifact}: no provenance sidecar ({mpath.name} missing)")
    meta = json.loads(mpath.read_text(encoding="utf-8"))
    if expect_stage is not None and meta.get("stage") != expect_stage:
        raise RunDirError(
            f"{artifact}: produced by stage {meta.get('stage')!r}, "
            f"expected {expect_stage!r}")
    current = file_fingerprint(artifact)
    if current != meta.get("fingerprint"):
        raise RunDirError(
            f"{artifact}: content no longer matches its recorded fingerprint; "
            f"stale artifact, re-run the {meta.get('stage')} stage")
    if check_inputs:
        for label, rec in meta.get("inputs", {}).items():
            upstream = artifact.parent / rec["artifact"]
            if not upstream.exists():
                raise RunDirError(
                    f"{artifact}: recorded input {label!r} "
                    f"({rec['artifact']}) is missing")
            if file_fingerprint(upstream) != rec["fingerprint"]:
                raise RunDirError(
                    f"{artifact}: input {label!r} ({rec['artifact']}) changed "
                    f"after this artifact was built; re-run the "
                    f"{meta.get('stage')} stage")
    return meta


def require_stage(run_dir, stage: str, check_inputs: bool = True) -> dict:
    """read_meta for the canonical artifact of a stage in run_dir."""
    return read_meta(stage_artifact(run_dir, stage), expect_stage=stage,
                     check_inputs=check_inputs)
