"""Farthest-first traversal and k-medoids over a precomputed distance
matrix.

k-medoids alternates nearest-medoid assignment with in-cluster medoid
updates until a fixed point, then applies single-swap polish (evaluated
for all medoid/candidate pairs at once) until no swap lowers the cost.
Every tie anywhere resolves to the lowest sample index, so results are
fully deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .distance import DistanceMatrix, MalError

MAX_ALTERNATE_ITERS = 300
MAX_SWAPS = 300
_SWAP_EPS = 1e-9


def choose_k(n: int) -> int:
    """Cluster budget of a third of the samples, never below 1."""
    if n < 1:
        raise MalError(f"need at least one sample, got {n}")
    return max(1, n // 3)


def _as_full(d) -> np.ndarray:
    if isinstance(d, DistanceMatrix):
        return d.full()
    arr = np.asarray(d, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MalError(f"distance matrix must be square, got {arr.shape}")
    return arr


def farthest_first(d, k: int, seed: int = 0) -> np.ndarray:
    """Greedy maximin traversal: start at a seed-chosen sample, then keep
    taking the sample farthest from the chosen set (distance to a set =
    min over its members). Returns indices in traversal order."""
    dist = _as_full(d)
    n = dist.shape[0]
    if not 1 <= k <= n:
        raise MalError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    first = int(rng.integers(n))
    chosen = [first]
    min_dist = dist[first].copy()
    min_dist[first] = -np.inf
    for _ in range(k - 1):
        nxt = int(np.argmax(min_dist))
        chosen.append(nxt)
        np.minimum(min_dist, dist[nxt], out=min_dist)
        min_dist[nxt] = -np.inf
    return np.array(chosen)


@dataclass(frozen=True)
class Clustering:
    k: int
    medoids: tuple
    assignment: np.ndarray
    cost: float

    def __post_init__(self):
        if self.k != len(self.medoids):
            raise MalError(f"k={self.k} but {len(self.medoids)} medoids")
        if len(set(self.medoids)) != self.k:
            raise MalError("duplicate medoids")
        for cluster, m in enumerate(self.medoids):
            if self.assignment[m] != cluster:
                raise MalError(f"medoid {m} not assigned to its own cluster {cluster}")
        counts = np.bincount(self.assignment, minlength=self.k)
        if counts.size != self.k or (counts < 1).any():
            raise MalError("assignment does not partition all samples over k clusters")

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def members(self, cluster: int) -> np.ndarray:
        return np.where(self.assignment == cluster)[0]


def _assign(dist: np.ndarray, medoids: np.ndarray):
    """Nearest medoid per sample; argmin over medoids sorted ascending, so
    distance ties land on the lowest medoid index. Medoids always claim
    themselves (duplicate points could otherwise tie away)."""
    cols = dist[:, medoids]
    assignment = np.argmin(cols, axis=1)
    assignment[medoids] = np.arange(medoids.size)
    d_near = cols[np.arange(dist.shape[0]), assignment]
    d_near[medoids] = 0.0
    return assignment, d_near


def _update_medoids(dist: np.ndarray, medoids: np.ndarray, assignment: np.ndarray) -> np.ndarray:
    new = medoids.copy()
    for cluster in range(medoids.size):
        members = np.where(assignment == cluster)[0]
        inside = dist[np.ix_(members, members)].sum(axis=1)
        new[cluster] = members[int(np.argmin(inside))]
    return np.sort(new)


def _best_swap(dist: np.ndarray, medoids: np.ndarray, assignment: np.ndarray,
               d_near: np.ndarray):
    """Cost delta of replacing medoid m_i with candidate h, for every pair
    at once. For samples outside cluster i the change is
    min(d(j,h), d_near) - d_near; for members of cluster i the removed
    medoid forces a fallback to the second-nearest medoid unless h is
    closer."""
    n = dist.shape[0]
    cols = dist[:, medoids]
    cols[np.arange(n), assignment] = np.inf
    d_second = cols.min(axis=1)
    near_term = np.minimum(dist, d_near[:, None])
    base = (near_term - d_near[:, None]).sum(axis=0)
    correction = np.minimum(dist, d_second[:, None]) - near_term
    grouped = np.zeros((medoids.size, n))
    np.add.at(grouped, assignment, correction)
    delta = base[None, :] + grouped
    delta[:, medoids] = np.inf
    flat = int(np.argmin(delta))
    i, h = divmod(flat, n)
    return float(delta[i, h]), i, h


def k_medoids(d, initial_medoids) -> Clustering:
    """Cluster around the given starting medoids. The alternating phase
    drives the cost to a fixed point; the swap phase then keeps applying
    the single best medoid/non-medoid exchange while one improves, so the
    result is locally optimal under single swaps."""
    dist = _as_full(d)
    n = dist.shape[0]
    medoids = np.array(sorted(int(m) for m in initial_medoids))
    if medoids.size == 0:
        raise MalError("need at least one initial medoid")
    if len(set(medoids.tolist())) != medoids.size:
        raise MalError("duplicate initial medoids")
    if medoids[0] < 0 or medoids[-1] >= n:
        raise MalError(f"medoid index out of range for {n} samples")

    for _ in range(MAX_SWAPS):
        for _ in range(MAX_ALTERNATE_ITERS):
            assignment, d_near = _assign(dist, medoids)
            new = _update_medoids(dist, medoids, assignment)
            if np.array_equal(new, medoids):
                break
            medoids = new
        delta, cluster, candidate = _best_swap(dist, medoids, assignment, d_near)
        if delta >= -_SWAP_EPS:
            break
        medoids = np.sort(np.concatenate([
            np.delete(medoids, cluster), [candidate]
        ]))
    assignment, d_near = _assign(dist, medoids)
    return Clustering(
        k=medoids.size,
        medoids=tuple(int(m) for m in medoids),
        assignment=assignment,
        cost=float(d_near.sum()),
    )


def clustering_to_json(clustering: Clustering) -> str:
    return json.dumps({
        "k": clustering.k,
        "medoids": list(clustering.medoids),
        "assignment": clustering.assignment.tolist(),
        "cost": clustering.cost,
    }, sort_keys=True)


def clustering_from_json(text: str) -> Clustering:
    raw = json.loads(text)
    return Clustering(
        k=int(raw["k"]),
        medoids=tuple(int(m) for m in raw["medoids"]),
        assignment=np.array(raw["assignment"], dtype=int),
        cost=float(raw["cost"]),
    )
