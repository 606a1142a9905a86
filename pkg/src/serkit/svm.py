"""Binary RBF-kernel SVM trained with a two-variable SMO solver.

The dual is solved with first-order maximal-violating-pair working-set
selection and incremental gradient maintenance, stopping when the KKT
violation drops below 1e-3. Per-sample box constraints are C * w(y) with
w(y) = N / (n_classes * count(y)), so rare classes push back harder.
Hyperparameters come from a stratified 5-fold grid search maximizing UAR.

The full kernel matrix is materialized, so memory is O(N^2); fine for the
corpus sizes this repo trains on (tens of thousands of rows at float64).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import uar

KKT_TOL = 1e-3
DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)


class SvmError(ValueError):
    pass


def class_weights(labels) -> dict:
    """w(y) = N / (n_classes * count(y)); weights > 0 and average to 1
    under balanced classes."""
    labels = list(labels)
    classes = sorted(set(str(l) for l in labels))
    n = len(labels)
    return {
        c: n / (len(classes) * sum(1 for l in labels if str(l) == c))
        for c in classes
    }


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||x - x'||^2) for every row pair."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sq = (
        (a * a).sum(axis=1)[:, None]
        + (b * b).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass(frozen=True)
class SvmConfig:
    c: float
    gamma: float
    class_weights: dict | None = None
    max_passes: int | None = None

    def __post_init__(self):
        if self.c <= 0.0 or self.gamma <= 0.0:
            raise SvmError(f"C and gamma must be positive, got {self.c}, {self.gamma}")
        if self.class_weights is not None:
            if any(w <= 0.0 for w in self.class_weights.values()):
                raise SvmError("class weights must be positive")


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray          # alpha_i * y_i over the support set
    bias: float
    gamma: float
    classes: tuple                 # (negative label, positive label)
    n_features: int

    def decision_values(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        single = features.ndim == 1
        if single:
            features = features[None, :]
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise SvmError(
                f"expected {self.n_features} features, got shape {features.shape}"
            )
        k = rbf_kernel(features, self.support_vectors, self.gamma)
        scores = k @ self.dual_coef + self.bias
        return scores[0] if single else scores

    def predict(self, features):
        scores = self.decision_values(features)
        if np.isscalar(scores) or scores.ndim == 0:
            return self.classes[1] if scores > 0.0 else self.classes[0]
        return [self.classes[1] if s > 0.0 else self.classes[0] for s in scores]


def _smo(kernel: np.ndarray, y: np.ndarray, box: np.ndarray,
         tol: float, max_iter: int):
    """Minimize 0.5 a'Qa - sum(a) with Q = yy' * K subject to y'a = 0 and
    0 <= a <= box. Returns (alpha, bias). Working pair each step is the
    most violating (i from the up set, j from the down set); ties resolve
    to the lowest index via argmax/argmin."""
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)
    pos = y > 0
    for _ in range(max_iter):
        up = np.where(pos, alpha < box, alpha > 0.0)
        down = np.where(pos, alpha > 0.0, alpha < box)
        score = -y * grad
        up_score = np.where(up, score, -np.inf)
        down_score = np.where(down, score, np.inf)
        i = int(np.argmax(up_score))
        j = int(np.argmin(down_score))
        m = up_score[i]
        big_m = down_score[j]
        if m - big_m < tol:
            free = (alpha > 1e-8) & (alpha < box - 1e-8)
            if free.any():
                bias = float(np.mean(score[free]))
            else:
                bias = float((m + big_m) / 2.0)
            return alpha, bias
        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        room_i = box[i] - alpha[i] if pos[i] else alpha[i]
        room_j = alpha[j] if pos[j] else box[j] - alpha[j]
        if eta > 1e-12:
            t = (m - big_m) / eta
        else:
            t = np.inf
        t = min(t, room_i, room_j)
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        # exact t respects the box; clip the pair to shed float dust only
        alpha[i] = min(max(alpha[i], 0.0), box[i])
        alpha[j] = min(max(alpha[j], 0.0), box[j])
        # dG = Q e_i dalpha_i + Q e_j dalpha_j collapses to y * t * (K_i - K_j)
        grad += (t * y) * (kernel[:, i] - kernel[:, j])
    raise SvmError(f"SMO did not reach KKT tolerance {tol} in {max_iter} steps")


def train(features, labels, config: SvmConfig) -> SvmModel:
    features = np.asarray(features, dtype=np.float64)
    labels = [str(l) for l in labels]
    if features.ndim != 2 or features.shape[0] != len(labels):
        raise SvmError("features must be 2-D with one row per label")
    classes = tuple(sorted(set(labels)))
    if len(classes) != 2:
        raise SvmError(f"need exactly 2 classes, got {classes}")
    weights = config.class_weights or class_weights(labels)
    for c in classes:
        if c not in weights:
            raise SvmError(f"no class weight for label {c!r}")
    y = np.where(np.array(labels) == classes[1], 1.0, -1.0)
    box = np.array([config.c * weights[l] for l in labels])
    kernel = rbf_kernel(features, features, config.gamma)
    max_iter = config.max_passes or max(100_000, 200 * len(labels))
    alpha, bias = _smo(kernel, y, box, KKT_TOL, max_iter)
    sv = alpha > 1e-12
    if not sv.any():
        # Degenerate but possible with tiny C; keep one row so predict works.
        sv[0] = True
    return SvmModel(
        support_vectors=features[sv].copy(),
        dual_coef=(alpha * y)[sv],
        bias=bias,
        gamma=config.gamma,
        classes=classes,
        n_features=features.shape[1],
    )


def default_gamma_grid(features, count: int = 8) -> tuple:
    """Log-spaced multipliers 1e-4..1 applied to 1/(D * overall variance),
    the usual characteristic scale of an RBF kernel on z-scored data."""
    features = np.asarray(features, dtype=np.float64)
    var = float(features.var())
    if var <= 0.0:
        raise SvmError("features have zero variance")
    scale = 1.0 / (features.shape[1] * var)
    return tuple(float(g) for g in np.logspace(-4.0, 0.0, count) * scale)


def stratified_folds(labels, folds: int, seed: int) -> list[np.ndarray]:
    """Partition indices into `folds` validation folds, each class spread
    as evenly as the counts allow. Every sample lands in exactly one fold."""
    labels = [str(l) for l in labels]
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(folds)]
    for c in sorted(set(labels)):
        idx = np.array([i for i, l in enumerate(labels) if l == c])
        if idx.size < folds:
            raise SvmError(
                f"class {c!r} has {idx.size} samples, fewer than {folds} folds"
            )
        rng.shuffle(idx)
        for pos, sample in enumerate(idx):
            buckets[pos % folds].append(int(sample))
    return [np.array(sorted(b)) for b in buckets]


@dataclass
class GridSearchResult:
    cells: list[dict] = field(repr=False)
    best_c: float = 0.0
    best_gamma: float = 0.0
    best_uar: float = 0.0
    model: SvmModel | None = None


def grid_search_cv(features, labels, c_grid=DEFAULT_C_GRID, gamma_grid=None,
                   folds: int = 5, seed: int = 0,
                   base_weights: dict | None = None) -> GridSearchResult:
    """Mean validation UAR per (C, gamma) cell over stratified folds; the
    winner (ties -> smaller C, then smaller gamma) is refit on all rows."""
    features = np.asarray(features, dtype=np.float64)
    labels = [str(l) for l in labels]
    if gamma_grid is None:
        gamma_grid = default_gamma_grid(features)
    fold_idx = stratified_folds(labels, folds, seed)
    all_idx = np.arange(len(labels))
    cells = []
    for c in sorted(c_grid):
        for gamma in sorted(gamma_grid):
            scores = []
            for val in fold_idx:
                train_mask = np.ones(len(labels), dtype=bool)
                train_mask[val] = False
                tr = all_idx[train_mask]
                config = SvmConfig(c, gamma, class_weights=base_weights)
                model = train(features[tr], [labels[i] for i in tr], config)
                preds = model.predict(features[val])
                scores.append(uar(preds, [labels[i] for i in val]))
            cells.append({"c": c, "gamma": gamma, "mean_uar": float(np.mean(scores))})
    best = max(cells, key=lambda cell: (cell["mean_uar"], -cell["c"], -cell["gamma"]))
    final = train(features, labels, SvmConfig(best["c"], best["gamma"],
                                              class_weights=base_weights))
    return GridSearchResult(
        cells=cells,
        best_c=best["c"],
        best_gamma=best["gamma"],
        best_uar=best["mean_uar"],
        model=final,
    )
