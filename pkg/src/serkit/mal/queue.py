"""Annotation queues and label materialization.

The queue lists one medoid per cluster, biggest cluster first (ties by
cluster id), which is the order humans are asked to label. Labels then
spread to whole clusters or stay on the medoids only. Clustering runs
independently per recording group; rows are sorted by utterance id inside
each group so the outcome ignores corpus row order.
"""

from __future__ import annotations

import csv
import hashlib
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus import Corpus, VALabel
from ..audio_features import FeatureTable
from .cluster import Clustering, choose_k, farthest_first, k_medoids
from .distance import MalError, pearson_distance_matrix

QUEUE_FIELDS = ("rank", "cluster_id", "cluster_size", "utterance_id", "audio_path")

LABEL_MODES = ("cluster_labels", "medoid_labels")


@dataclass(frozen=True)
class QueueEntry:
    rank: int
    cluster_id: int
    cluster_size: int
    utterance_id: str
    audio_path: str = ""


def build_queue(clustering: Clustering, utterance_ids,
                corpus: Corpus | None = None,
                cluster_id_offset: int = 0,
                rank_start: int = 1) -> list[QueueEntry]:
    """One entry per cluster medoid, sorted by descending cluster size,
    then ascending cluster id. Ranks number from rank_start upward."""
    ids = list(utterance_ids)
    if len(ids) != clustering.assignment.size:
        raise MalError(
            f"{len(ids)} utterance ids for {clustering.assignment.size} clustered rows"
        )
    sizes = clustering.cluster_sizes()
    order = sorted(range(clustering.k), key=lambda c: (-int(sizes[c]), c))
    entries = []
    for rank, cluster in enumerate(order, start=rank_start):
        uid = ids[clustering.medoids[cluster]]
        path = ""
        if corpus is not None:
            path = corpus.by_id(uid).audio_ref
        entries.append(QueueEntry(
            rank=rank,
            cluster_id=cluster + cluster_id_offset,
            cluster_size=int(sizes[cluster]),
            utterance_id=uid,
            audio_path=path,
        ))
    return entries


def save_queue(entries, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(QUEUE_FIELDS)
        for e in entries:
            writer.writerow([e.rank, e.cluster_id, e.cluster_size,
                             e.utterance_id, e.audio_path])


def load_queue(path) -> list[QueueEntry]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != list(QUEUE_FIELDS):
            raise MalError(f"bad queue header in {path}: {header}")
        entries = []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(QUEUE_FIELDS):
                raise MalError(f"{path}:{line}: expected {len(QUEUE_FIELDS)} columns")
            entries.append(QueueEntry(
                rank=int(row[0]),
                cluster_id=int(row[1]),
                cluster_size=int(row[2]),
                utterance_id=row[3],
                audio_path=row[4],
            ))
        return entries


def materialize_labels(clustering: Clustering, utterance_ids,
                       medoid_annotations, mode: str) -> dict[str, VALabel]:
    """Turn medoid annotations into a labeled training set.

    medoid_annotations maps medoid utterance id -> VALabel, or None when
    the annotator flagged the clip as unusable; those clusters contribute
    nothing. cluster_labels copies the medoid label onto every member;
    medoid_labels keeps just the medoids."""
    if mode not in LABEL_MODES:
        raise MalError(f"unknown label mode {mode!r}")
    ids = list(utterance_ids)
    medoid_ids = {ids[m]: cluster for cluster, m in enumerate(clustering.medoids)}
    labeled: dict[str, VALabel] = {}
    for uid, label in medoid_annotations.items():
        if uid not in medoid_ids:
            raise MalError(f"annotation for non-medoid utterance {uid!r}")
        if label is None:
            continue
        cluster = medoid_ids[uid]
        if mode == "medoid_labels":
            labeled[uid] = label
        else:
            for member in clustering.members(cluster):
                labeled[ids[member]] = label
    return labeled


def _group_seed(seed: int, group_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{group_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class GroupResult:
    group_id: str
    utterance_ids: tuple
    clustering: Clustering


def combined_queue(group_results, corpus: Corpus | None = None) -> list[QueueEntry]:
    """Merge per-group queues into one, with globally unique cluster ids.

    Cluster ids are offset in group order; the merged queue is re-sorted
    so that "biggest cluster first" holds across groups, then re-ranked
    from 1."""
    raw: list[QueueEntry] = []
    offset = 0
    for g in group_results:
        raw.extend(build_queue(g.clustering, g.utterance_ids, corpus,
                               cluster_id_offset=offset))
        offset += g.clustering.k
    raw.sort(key=lambda e: (-e.cluster_size, e.cluster_id))
    return [QueueEntry(rank=i, cluster_id=e.cluster_id,
                       cluster_size=e.cluster_size,
                       utterance_id=e.utterance_id,
                       audio_path=e.audio_path)
            for i, e in enumerate(raw, start=1)]


def mal_per_group(corpus: Corpus, embeddings: FeatureTable, seed: int = 0,
                  splits=("train", "unlabeled")):
    """Run farthest-first + k-medoids separately for every recording group
    in the pooled non-test splits. Returns (group results sorted by group
    id, combined queue with globally unique cluster ids and ranks).

    Rows inside a group are ordered by utterance id and each group draws
    its own seed from the run seed, so corpus row order cannot change any
    medoid choice."""
    pool = [corpus.by_id(uid) for uid in corpus.ids(splits)]
    if not pool:
        raise MalError(f"no utterances in splits {splits}")
    groups: dict[str, list[str]] = {}
    for utt in pool:
        groups.setdefault(utt.group_id, []).append(utt.id)
    results = []
    for group_id in sorted(groups):
        ids = tuple(sorted(groups[group_id]))
        if len(ids) < 3:
            warnings.warn(
                f"group {group_id!r} has only {len(ids)} samples; using one cluster"
            )
        rows = embeddings.rows_for(ids)
        dist = pearson_distance_matrix(rows)
        k = choose_k(len(ids))
        initial = farthest_first(dist, k, seed=_group_seed(seed, group_id))
        clustering = k_medoids(dist, initial)
        results.append(GroupResult(group_id, ids, clustering))
    return results, combined_queue(results, corpus)
