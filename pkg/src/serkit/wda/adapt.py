"""Stage two: adversarial alignment of the copied extractor.

A critic learns to score source features (through the frozen source
extractor) above target features (through the adapting copy); the
extractor then moves to raise its target scores while a classification
term on source batches keeps the pair label-faithful. Batches are always
equal-size per domain. Both loss terms are batch means, so gradients do
not scale with batch size; the critic/extractor duel estimates the
transport distance between the two feature distributions.

Epoch selection: the unsupervised variant stops when the smoothed target
score term stops moving; the semi-supervised variant runs the full budget
and keeps the epoch with the best monitor UAR. The "both" variant runs
the full budget once and retains a selection per rule, so the two reports
come from a single history.
"""

from __future__ import annotations

import copy
import hashlib
import json
import warnings
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..metrics import uar
from ..nn import Adam, Mlp, RmsProp, cross_entropy10, onehot, softmax_ce_grad
from ..nn.optim import clip_params
from .models import SourceModel, WdaError, build_critic

VARIANTS = ("unsupervised", "semi_supervised", "both")


@dataclass(frozen=True)
class AdaptationConfig:
    variant: str = "unsupervised"
    lr: float = 5e-5
    critic_lr: float | None = None   # defaults to lr
    critic_steps: int = 5
    clip: float = 0.01
    batch_size: int = 256
    max_epochs: int = 2000
    window: int = 10
    threshold: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise WdaError(f"unknown variant {self.variant!r}")
        if self.lr < 0.0 or (self.critic_lr is not None and self.critic_lr < 0.0):
            raise WdaError("learning rates must be non-negative")
        if self.critic_steps < 1:
            raise WdaError("critic_steps must be at least 1")
        if self.clip <= 0.0:
            raise WdaError("clip bound must be positive")
        if self.batch_size < 1 or self.max_epochs < 1 or self.window < 1:
            raise WdaError("batch_size, max_epochs and window must be positive")


class _Stream:
    """Endless equal-size batches over shuffled indices; when a
    permutation runs dry it is topped up with a fresh one."""

    def __init__(self, n: int, batch: int, rng):
        self.n = n
        self.batch = batch
        self.rng = rng
        self.order = rng.permutation(n)
        self.pos = 0

    def next(self) -> np.ndarray:
        take = []
        need = self.batch
        while need > 0:
            left = self.order.size - self.pos
            if left == 0:
                self.order = self.rng.permutation(self.n)
                self.pos = 0
                continue
            grab = min(need, left)
            take.append(self.order[self.pos:self.pos + grab])
            self.pos += grab
            need -= grab
        return np.concatenate(take)


def _derive_seed(seed: int, tag: str) -> int:
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def critic_gap_value(f_s: Mlp, f_t: Mlp, critic: Mlp, source_x, target_x) -> float:
    """Mean critic score on source features minus mean on target features,
    everything in eval mode. The adversarial distance estimate is the
    negation of this value."""
    src = critic.predict(f_s.predict(source_x))
    tgt = critic.predict(f_t.predict(target_x))
    return float(src.mean() - tgt.mean())


def _saturation_start(terms, window: int, threshold: float):
    """First epoch opening a `window`-long run of sub-threshold relative
    change in the windowed median, or None."""
    terms = np.asarray(terms, dtype=np.float64)
    if terms.size < window + 1:
        return None
    medians = np.array([
        np.median(terms[e - window + 1:e + 1])
        for e in range(window - 1, terms.size)
    ])
    prev = medians[:-1]
    rel = np.abs(np.diff(medians)) / np.maximum(np.abs(prev), 1e-12)
    # rel[i] is the change at epoch window + i
    run = 0
    for i, value in enumerate(rel):
        run = run + 1 if value < threshold else 0
        if run == window:
            return window + i - (window - 1)
    return None


def _terms(history) -> list[float]:
    return [h["target_term"] if isinstance(h, dict) else float(h) for h in history]


def stop_unsupervised(history, window: int = 10, threshold: float = 1e-3) -> int:
    """Selected epoch for the saturation rule; warns and falls back to the
    last epoch when the term never settles."""
    terms = _terms(history)
    if len(terms) < window + 1:
        raise WdaError(
            f"need at least {window + 1} epochs of history, got {len(terms)}"
        )
    start = _saturation_start(terms, window, threshold)
    if start is None:
        warnings.warn("target term never saturated; selecting the last epoch")
        return len(terms) - 1
    return start


def stop_semisupervised(history) -> int:
    """Epoch with the highest monitor UAR; earliest wins ties."""
    if not history:
        raise WdaError("empty history")
    best_epoch = 0
    best = -np.inf
    for i, entry in enumerate(history):
        value = entry.get("monitor_uar") if isinstance(entry, dict) else float(entry)
        if value is None:
            raise WdaError(f"history entry {i} lacks a monitor value")
        if value > best:
            best = value
            best_epoch = i
    return best_epoch


@dataclass
class AdaptationResult:
    f_t: Mlp
    c_l: Mlp
    critic: Mlp
    classes: tuple
    task: str
    selected_epoch: int
    history: list[dict] = field(repr=False)
    config: AdaptationConfig = field(repr=False, default_factory=AdaptationConfig)
    # variant -> (epoch, extractor snapshot, classifier snapshot)
    snapshots: dict = field(repr=False, default_factory=dict)

    @property
    def selected_epochs(self) -> dict:
        return {name: pick[0] for name, pick in self.snapshots.items()}

    def for_variant(self, variant: str) -> "AdaptationResult":
        """The same run restored at another variant's stopping epoch."""
        if variant not in self.snapshots:
            raise WdaError(f"no {variant!r} selection in this run")
        epoch, f_snap, c_snap = self.snapshots[variant]
        f_t = copy.deepcopy(self.f_t)
        c_l = copy.deepcopy(self.c_l)
        f_t.restore(f_snap)
        c_l.restore(c_snap)
        return AdaptationResult(
            f_t=f_t, c_l=c_l, critic=self.critic, classes=self.classes,
            task=self.task, selected_epoch=epoch, history=self.history,
            config=self.config, snapshots=self.snapshots,
        )

    def predict_proba(self, features) -> np.ndarray:
        return self.c_l.predict(self.f_t.predict(features))

    def predict_labels(self, features) -> list:
        probs = self.predict_proba(features)
        return [self.classes[int(i)] for i in probs.argmax(axis=1)]


def predict_target(adapted: AdaptationResult, features) -> list:
    return adapted.predict_labels(features)


def _critic_update(critic, rms, f_s, f_t, source_x, target_x, clip) -> None:
    h_src = f_s.predict(source_x)
    h_tgt = f_t.predict(target_x)
    o_src, cache_s = critic.forward(h_src)
    o_tgt, cache_t = critic.forward(h_tgt)
    g_src, _ = critic.backward(cache_s, np.full(o_src.shape, 1.0 / o_src.shape[0]))
    g_tgt, _ = critic.backward(cache_t, np.full(o_tgt.shape, -1.0 / o_tgt.shape[0]))
    grads = [a + b for a, b in
             zip(critic.grad_arrays(g_src), critic.grad_arrays(g_tgt))]
    rms.step(critic.param_arrays(), grads)
    clip_params(critic.param_arrays(), clip)


def _generator_update(f_t, c_l, critic, adam, target_x, source_x, source_y, rng) -> None:
    h_tgt, cache_ft = f_t.forward(target_x, train=True, rng=rng)
    o_tgt, cache_c = critic.forward(h_tgt)
    _, d_h_tgt = critic.backward(cache_c, np.full(o_tgt.shape, 1.0 / o_tgt.shape[0]))
    g_ft_tgt, _ = f_t.backward(cache_ft, d_h_tgt)

    h_src, cache_fs = f_t.forward(source_x, train=True, rng=rng)
    probs, cache_cl = c_l.forward(h_src, train=True, rng=rng)
    dz = softmax_ce_grad(probs, source_y) / source_y.shape[0]
    g_cl, d_h_src = c_l.backward(cache_cl, dz, fused_softmax=True)
    g_ft_src, _ = f_t.backward(cache_fs, d_h_src)

    f_grads = [a + b for a, b in
               zip(f_t.grad_arrays(g_ft_tgt), f_t.grad_arrays(g_ft_src))]
    adam.step(f_t.param_arrays() + c_l.param_arrays(),
              f_grads + c_l.grad_arrays(g_cl))


def adapt(model: SourceModel, source_x, source_labels, target_x,
          config: AdaptationConfig = AdaptationConfig(),
          monitor_x=None, monitor_labels=None) -> AdaptationResult:
    """Adapt a copy of the source extractor toward the target rows.

    The source model is left untouched: its extractor only embeds the
    source side of the critic loss. An epoch is one nominal pass over the
    target set through generator updates, each preceded by critic_steps
    critic updates on fresh batches. History records per epoch the critic
    gap, the mean target critic score, the mean source classification
    loss, and the monitor UAR when a monitor set is given."""
    source_x = np.asarray(source_x, dtype=np.float64)
    target_x = np.asarray(target_x, dtype=np.float64)
    labels = [str(l) for l in source_labels]
    if source_x.shape[0] != len(labels):
        raise WdaError("one label per source row required")
    if source_x.shape[0] == 0 or target_x.shape[0] == 0:
        raise WdaError("source and target sets must be non-empty")
    want_us = config.variant in ("unsupervised", "both")
    want_ss = config.variant in ("semi_supervised", "both")
    if want_ss and (monitor_x is None or monitor_labels is None):
        raise WdaError(
            f"{config.variant} adaptation needs a labeled monitor set"
        )
    if monitor_x is not None:
        monitor_x = np.asarray(monitor_x, dtype=np.float64)
        monitor_labels = [str(l) for l in monitor_labels]

    f_s = model.feature
    f_t = copy.deepcopy(model.feature)
    c_l = copy.deepcopy(model.classifier)
    critic = build_critic(model.arch, seed=_derive_seed(config.seed, "critic"))
    source_y = onehot(labels, model.classes)

    rng = np.random.default_rng(config.seed)
    batch = min(config.batch_size, source_x.shape[0], target_x.shape[0])
    src_stream = _Stream(source_x.shape[0], batch, rng)
    tgt_stream = _Stream(target_x.shape[0], batch, rng)
    steps_per_epoch = -(-target_x.shape[0] // batch)

    critic_lr = config.lr if config.critic_lr is None else config.critic_lr
    rms = RmsProp(critic_lr)
    adam = Adam(config.lr)

    history: list[dict] = []
    recent: deque = deque(maxlen=config.window)
    best_monitor = -np.inf
    best_snap = None
    us_pick = None

    for epoch in range(config.max_epochs):
        for _ in range(steps_per_epoch):
            for _ in range(config.critic_steps):
                _critic_update(
                    critic, rms, f_s, f_t,
                    source_x[src_stream.next()], target_x[tgt_stream.next()],
                    config.clip,
                )
            # a zero rate must leave the copy bitwise untouched, batch norm
            # calibration included, so the whole update is skipped
            if config.lr > 0.0:
                gen_src = src_stream.next()
                _generator_update(
                    f_t, c_l, critic, adam,
                    target_x[tgt_stream.next()],
                    source_x[gen_src], source_y[gen_src], rng,
                )
        tgt_scores = critic.predict(f_t.predict(target_x))
        src_scores = critic.predict(f_s.predict(source_x))
        target_term = float(tgt_scores.mean())
        critic_gap = float(src_scores.mean()) - target_term
        l_m_term = cross_entropy10(
            c_l.predict(f_t.predict(source_x)), source_y
        ) / source_x.shape[0]
        entry = {
            "epoch": epoch,
            "critic_gap": critic_gap,
            "target_term": target_term,
            "l_m_term": l_m_term,
        }
        if monitor_x is not None:
            preds = [model.classes[int(i)] for i in
                     c_l.predict(f_t.predict(monitor_x)).argmax(axis=1)]
            entry["monitor_uar"] = uar(preds, monitor_labels)
        if not all(np.isfinite(v) for k, v in entry.items() if k != "epoch"):
            raise WdaError(f"non-finite adaptation loss at epoch {epoch}: {entry}")
        history.append(entry)

        if want_ss and entry["monitor_uar"] > best_monitor:
            best_monitor = entry["monitor_uar"]
            best_snap = (f_t.snapshot(), c_l.snapshot())
        if want_us:
            recent.append((epoch, f_t.snapshot(), c_l.snapshot()))
            if us_pick is None:
                start = _saturation_start(
                    [h["target_term"] for h in history],
                    config.window, config.threshold,
                )
                if start is not None:
                    for kept, f_snap, c_snap in recent:
                        if kept == start:
                            us_pick = (start, f_snap, c_snap)
                            break
                    else:
                        raise WdaError(
                            f"no snapshot retained for selected epoch {start}"
                        )
                    if config.variant == "unsupervised":
                        break

    snapshots = {}
    if want_us:
        if us_pick is None:
            warnings.warn("target term never saturated; keeping the last epoch")
            us_pick = (len(history) - 1, f_t.snapshot(), c_l.snapshot())
        snapshots["unsupervised"] = us_pick
    if want_ss:
        snapshots["semi_supervised"] = (
            stop_semisupervised(history), best_snap[0], best_snap[1],
        )

    primary = "semi_supervised" if want_ss else "unsupervised"
    selected, f_snap, c_snap = snapshots[primary]
    f_t.restore(f_snap)
    c_l.restore(c_snap)

    return AdaptationResult(
        f_t=f_t,
        c_l=c_l,
        critic=critic,
        classes=model.classes,
        task=model.task,
        selected_epoch=selected,
        history=history,
        config=config,
        snapshots=snapshots,
    )


def save_run_log(history, path) -> None:
    """JSONL, one epoch per line: epoch, critic_gap, target_term, and
    monitor_uar when present."""
    lines = []
    for entry in history:
        row = {
            "epoch": entry["epoch"],
            "critic_gap": entry["critic_gap"],
            "target_term": entry["target_term"],
        }
        if "monitor_uar" in entry:
            row["monitor_uar"] = entry["monitor_uar"]
        lines.append(json.dumps(row, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")
