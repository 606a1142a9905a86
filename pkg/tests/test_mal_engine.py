"""Distance matrix, clustering, annotation queue, and the embedder."""

import numpy as np
import pytest

from serkit.corpus import Corpus, Utterance, VALabel
from serkit.audio_features.table import FeatureTable
from serkit.mal.cluster import (
    Clustering,
    choose_k,
    clustering_from_json,
    clustering_to_json,
    farthest_first,
    k_medoids,
)
from serkit.mal.distance import (
    DistanceMatrix,
    MalError,
    pearson_distance,
    pearson_distance_matrix,
)
from serkit.mal.embedder import AeConfig, ae_layer_specs, encode_table, train_embedder
from serkit.mal.queue import (
    build_queue,
    combined_queue,
    load_queue,
    mal_per_group,
    materialize_labels,
    save_queue,
)


def test_pearson_distance_hand_values():
    assert abs(pearson_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])) < 1e-12
    assert abs(pearson_distance([1, 2, 3], [3, 2, 1]) - 2.0) < 1e-12
    assert abs(pearson_distance([1, 2, 3, 4], [1, 3, 2, 4]) - 0.2) < 1e-12
    # a constant vector correlates with nothing
    assert pearson_distance([5.0, 5.0, 5.0], [1.0, 2.0, 3.0]) == 1.0


def test_distance_matrix_matches_pairwise_calls():
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(14, 9))
    d = pearson_distance_matrix(rows)
    full = d.full()
    assert full.shape == (14, 14)
    assert np.array_equal(full, full.T)
    assert np.all(np.diag(full) == 0.0)
    assert np.all(full >= 0.0) and np.all(full <= 2.0)
    for i in range(14):
        for j in range(i + 1, 14):
            # condensed storage is float32
            assert abs(d.value(i, j) - pearson_distance(rows[i], rows[j])) < 1e-6
    chunked = pearson_distance_matrix(rows, chunk=3)
    assert np.array_equal(full, chunked.full())


def first_pick_seed(n, want=0):
    return next(s for s in range(1000)
                if int(np.random.default_rng(s).integers(n)) == want)


def test_farthest_first_line_example():
    # three points on a line at 0, 1, 10; starting at 0 the maximin pick is 10
    d = np.array([[0.0, 1.0, 10.0], [1.0, 0.0, 9.0], [10.0, 9.0, 0.0]])
    seed = first_pick_seed(3, want=0)
    assert set(farthest_first(d, 2, seed=seed).tolist()) == {0, 2}


def test_farthest_first_takes_everything_at_full_budget():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(7, 7))
    d = pearson_distance_matrix(x)
    assert sorted(farthest_first(d, 7, seed=3).tolist()) == list(range(7))
    with pytest.raises(MalError):
        farthest_first(d, 8, seed=0)
    with pytest.raises(MalError):
        farthest_first(d, 0, seed=0)


def greedy_oracle(dist, k, seed):
    """Independent maximin recomputation with lowest-index tie breaks."""
    n = dist.shape[0]
    chosen = [int(np.random.default_rng(seed).integers(n))]
    while len(chosen) < k:
        best, best_val = None, -1.0
        for i in range(n):
            if i in chosen:
                continue
            val = min(dist[i][c] for c in chosen)
            if val > best_val:
                best, best_val = i, val
        chosen.append(best)
    return chosen


def test_farthest_first_matches_greedy_recomputation():
    rng = np.random.default_rng(2)
    for trial in range(40):
        n = int(rng.integers(2, 7))
        sym = rng.random((n, n)) * 2.0
        d = (sym + sym.T) / 2.0
        np.fill_diagonal(d, 0.0)
        k = int(rng.integers(1, n + 1))
        seed = int(rng.integers(10_000))
        assert farthest_first(d, k, seed=seed).tolist() == greedy_oracle(d, k, seed)


def pair_distance_matrix():
    # two tight pairs far apart: {0,1} and {2,3}
    d = np.full((4, 4), 10.0)
    np.fill_diagonal(d, 0.0)
    d[0, 1] = d[1, 0] = 0.1
    d[2, 3] = d[3, 2] = 0.2
    return d


def brute_force_cost(dist, medoids):
    return float(sum(min(dist[i][m] for m in medoids)
                     for i in range(dist.shape[0])))


def test_k_medoids_splits_well_separated_pairs():
    d = pair_distance_matrix()
    res = k_medoids(d, farthest_first(d, 2, seed=0))
    sides = {m // 2 for m in res.medoids}
    assert sides == {0, 1}
    from itertools import combinations

    optimum = min(brute_force_cost(d, pair) for pair in combinations(range(4), 2))
    assert abs(res.cost - optimum) < 1e-12


def test_k_medoids_degenerate_budgets():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(6, 5))
    d = pearson_distance_matrix(x)
    full = d.full()

    own = k_medoids(d, np.arange(6))
    assert own.cost == 0.0
    assert sorted(own.medoids) == list(range(6))

    single = k_medoids(d, np.array([0]))
    expected = int(np.argmin(full.sum(axis=1)))
    assert single.medoids == (expected,)

    with pytest.raises(MalError):
        k_medoids(d, np.array([1, 1]))


def test_k_medoids_is_single_swap_optimal():
    rng = np.random.default_rng(4)
    for trial in range(20):
        n = int(rng.integers(5, 11))
        x = rng.normal(size=(n, 6))
        d = pearson_distance_matrix(x).full()
        k = int(rng.integers(1, 4))
        init = farthest_first(d, k, seed=trial)
        res = k_medoids(d, init)
        assert abs(res.cost - brute_force_cost(d, res.medoids)) < 1e-9
        assert res.cost <= brute_force_cost(d, init) + 1e-12
        for out in res.medoids:
            for swap_in in range(n):
                if swap_in in res.medoids:
                    continue
                cand = [swap_in if m == out else m for m in res.medoids]
                assert brute_force_cost(d, cand) >= res.cost - 1e-9


def test_clustering_validation_and_json():
    with pytest.raises(MalError):
        Clustering(k=2, medoids=(0, 1), assignment=np.array([0, 0, 0]), cost=1.0)
    d = pair_distance_matrix()
    res = k_medoids(d, np.array([0, 2]))
    again = clustering_from_json(clustering_to_json(res))
    assert again.medoids == res.medoids
    assert np.array_equal(again.assignment, res.assignment)
    assert again.cost == res.cost


def test_choose_k_floor_rule():
    assert choose_k(2) == 1
    assert choose_k(9) == 3
    assert choose_k(10) == 3
    with pytest.raises(MalError):
        choose_k(0)


def sized_clustering(sizes):
    """Build a clustering whose cluster c has sizes[c] members."""
    assignment = np.concatenate([np.full(s, c) for c, s in enumerate(sizes)])
    medoids = tuple(int(np.where(assignment == c)[0][0]) for c in range(len(sizes)))
    return Clustering(k=len(sizes), medoids=medoids, assignment=assignment,
                      cost=0.0)


def test_queue_orders_by_descending_cluster_size():
    sizes = [5, 9, 2]
    clustering = sized_clustering(sizes)
    ids = [f"u{i}" for i in range(sum(sizes))]
    entries = build_queue(clustering, ids)
    assert [e.cluster_id for e in entries] == [1, 0, 2]
    assert [e.rank for e in entries] == [1, 2, 3]
    assert [e.cluster_size for e in entries] == [9, 5, 2]
    assert entries[0].utterance_id == ids[clustering.medoids[1]]


def test_queue_ties_break_by_cluster_id():
    entries = build_queue(sized_clustering([3, 3, 3]), [f"u{i}" for i in range(9)])
    assert [e.cluster_id for e in entries] == [0, 1, 2]
    assert len(entries) == 3


def test_queue_csv_round_trip(tmp_path):
    entries = build_queue(sized_clustering([4, 2]), [f"u{i}" for i in range(6)])
    path = tmp_path / "queue.csv"
    save_queue(entries, path)
    assert load_queue(path) == entries
    bad = tmp_path / "bad.csv"
    bad.write_text("rank,utterance_id\n1,u0\n")
    with pytest.raises(MalError):
        load_queue(bad)


def test_materialize_cluster_and_medoid_modes():
    clustering = sized_clustering([4, 3, 2])
    ids = [f"u{i}" for i in range(9)]
    label = VALabel(valence="positive", arousal="high")
    annos = {ids[m]: label for m in clustering.medoids}

    spread = materialize_labels(clustering, ids, annos, "cluster_labels")
    assert len(spread) == 9 and all(v == label for v in spread.values())

    sparse = materialize_labels(clustering, ids, annos, "medoid_labels")
    assert sorted(sparse) == sorted(ids[m] for m in clustering.medoids)


def test_materialize_skips_flagged_medoids():
    clustering = sized_clustering([4, 3, 2])
    ids = [f"u{i}" for i in range(9)]
    label = VALabel(valence="neutral", arousal="low")
    annos = {ids[m]: label for m in clustering.medoids}
    annos[ids[clustering.medoids[0]]] = None    # erroneous clip

    spread = materialize_labels(clustering, ids, annos, "cluster_labels")
    assert len(spread) == 5                      # the 4-sample cluster drops out
    sparse = materialize_labels(clustering, ids, annos, "medoid_labels")
    assert len(sparse) == 2

    with pytest.raises(MalError):
        materialize_labels(clustering, ids, {"not_a_medoid": label},
                           "cluster_labels")
    with pytest.raises(MalError):
        materialize_labels(clustering, ids, annos, "hand_labels")


def group_corpus(sizes, seed=0):
    """Corpus + embedding rows with one group per entry of sizes."""
    rng = np.random.default_rng(seed)
    utts, ids = [], []
    for g, size in enumerate(sizes):
        for i in range(size):
            uid = f"g{g}_u{i:02d}"
            ids.append(uid)
            utts.append(Utterance(id=uid, audio_ref=f"{uid}.wav", duration=1.0,
                                  group_id=f"g{g}"))
    corpus = Corpus(name="c", utterances=tuple(utts),
                    splits={u: "train" for u in ids})
    table = FeatureTable(utterance_ids=tuple(ids),
                         matrix=rng.normal(size=(len(ids), 8)),
                         feature_kind="embedding")
    return corpus, table


def test_per_group_budgets_and_global_queue():
    corpus, table = group_corpus([9, 6])
    results, queue = mal_per_group(corpus, table, seed=0)
    assert [g.group_id for g in results] == ["g0", "g1"]
    assert [g.clustering.k for g in results] == [3, 2]
    assert len(queue) == 5
    assert [e.rank for e in queue] == [1, 2, 3, 4, 5]
    sizes = [e.cluster_size for e in queue]
    assert sizes == sorted(sizes, reverse=True)
    assert len({e.cluster_id for e in queue}) == 5
    # every queued utterance is the medoid of its own group cluster
    for g in results:
        for cluster, m in enumerate(g.clustering.medoids):
            assert g.utterance_ids[m] in [e.utterance_id for e in queue]


def test_per_group_results_ignore_row_order():
    corpus, table = group_corpus([7, 5], seed=1)
    results, _ = mal_per_group(corpus, table, seed=9)

    perm = np.random.default_rng(2).permutation(len(table.utterance_ids))
    shuffled_corpus = Corpus(
        name="c",
        utterances=tuple(corpus.utterances[i] for i in perm),
        splits=corpus.splits,
    )
    shuffled_table = FeatureTable(
        utterance_ids=tuple(table.utterance_ids[i] for i in perm),
        matrix=table.matrix[perm],
        feature_kind="embedding",
    )
    shuffled, _ = mal_per_group(shuffled_corpus, shuffled_table, seed=9)
    for a, b in zip(results, shuffled):
        assert a.group_id == b.group_id
        medoids_a = {a.utterance_ids[m] for m in a.clustering.medoids}
        medoids_b = {b.utterance_ids[m] for m in b.clustering.medoids}
        assert medoids_a == medoids_b


def test_tiny_group_warns_and_uses_one_cluster():
    corpus, table = group_corpus([2, 6])
    with pytest.warns(UserWarning, match="g0"):
        results, queue = mal_per_group(corpus, table, seed=0)
    assert results[0].clustering.k == 1


def test_combined_queue_offsets_cluster_ids():
    corpus, table = group_corpus([6, 6])
    results, queue = mal_per_group(corpus, table, seed=0)
    direct = combined_queue(results)
    assert [e.cluster_id for e in direct] == [e.cluster_id for e in queue]
    assert max(e.cluster_id for e in direct) == 3    # 2 + 2 clusters, zero based


def embed_table(n=40, dim=24, seed=0):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(n, 3))
    lift = rng.normal(size=(3, dim))
    return FeatureTable(utterance_ids=tuple(f"u{i:03d}" for i in range(n)),
                        matrix=base @ lift + 0.05 * rng.normal(size=(n, dim)))


SMALL_AE = AeConfig(hidden=(16, 12), bottleneck=4, dropout=0.1, lr=1e-3,
                    batch_size=32, patience=20, max_epochs=120, seed=0)


def test_embedder_layer_plan_mirrors_the_encoder():
    specs = ae_layer_specs(600, AeConfig())
    units = [s.units for s in specs]
    assert units == [512, 512, 32, 512, 512, 600]
    assert [s.activation for s in specs] == ["elu"] * 5 + ["linear"]
    assert [s.dropout for s in specs][:2] == [0.1, 0.1]
    assert all(s.dropout == 0.0 for s in specs[2:])


def test_embedder_trains_and_improves_validation():
    table = embed_table()
    result = train_embedder(table, config=SMALL_AE)
    encoded = encode_table(result.encoder, table)
    assert encoded.matrix.shape == (40, 4)
    assert encoded.feature_kind == "embedding"
    assert encoded.utterance_ids == table.utterance_ids
    history = result.train_result.history
    assert history[result.train_result.best_epoch]["monitor"] <= history[0]["monitor"]


def test_embedder_is_deterministic():
    table = embed_table(seed=3)
    a = train_embedder(table, config=SMALL_AE).encoder.param_bytes()
    b = train_embedder(table, config=SMALL_AE).encoder.param_bytes()
    assert a == b


def test_embedder_input_validation():
    tiny = FeatureTable(utterance_ids=tuple(f"u{i}" for i in range(5)),
                        matrix=np.random.default_rng(0).normal(size=(5, 8)))
    with pytest.raises(MalError):
        train_embedder(tiny, config=SMALL_AE)
    flat = FeatureTable(utterance_ids=tuple(f"u{i}" for i in range(12)),
                        matrix=np.ones((12, 8)))
    with pytest.raises(MalError):
        train_embedder(flat, config=SMALL_AE)
