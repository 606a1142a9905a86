"""Medoid-driven active learning: autoencoder embedding, Pearson distance
matrix, farthest-first seeded k-medoids, per-group annotation queues, and
label materialization in cluster or medoid mode."""

from .distance import DistanceMatrix, MalError, pearson_distance, pearson_distance_matrix
from .cluster import Clustering, choose_k, clustering_from_json, clustering_to_json, farthest_first, k_medoids
from .embedder import AeConfig, EmbedderResult, ae_layer_specs, encode_table, train_embedder
from .queue import (
    LABEL_MODES,
    QUEUE_FIELDS,
    GroupResult,
    QueueEntry,
    build_queue,
    combined_queue,
    load_queue,
    mal_per_group,
    materialize_labels,
    save_queue,
)

__all__ = [
    "MalError", "DistanceMatrix", "pearson_distance", "pearson_distance_matrix",
    "Clustering", "choose_k", "farthest_first", "k_medoids",
    "clustering_to_json", "clustering_from_json",
    "AeConfig", "EmbedderResult", "ae_layer_specs", "train_embedder", "encode_table",
    "QueueEntry", "GroupResult", "QUEUE_FIELDS", "LABEL_MODES",
    "build_queue", "combined_queue", "save_queue", "load_queue",
    "materialize_labels", "mal_per_group",
]
