"""The `ser` command line: a staged, reproducible experiment pipeline.

Stages write artifacts plus provenance sidecars into a run directory
(see rundir); downstream stages verify the chain before reading, so
stale or out-of-order artifacts fail loudly instead of silently mixing
runs. Every command takes --config (TOML or JSON), --seed and --jobs,
and none of the outputs embed wall-clock state: the same inputs, seed
and config reproduce every artifact byte for byte.

    ser synth-corpus --out corpus/           # bundled mini corpus
    ser features  --run run/ --manifest corpus/manifest.jsonl \
                  --annotations corpus/gold.csv
    ser embed     --run run/
    ser cluster   --run run/
    ser queue     --run run/
    ser serve     --run run/ --port 8765
    ser import-labels --run run/ --annotations labels.csv
    ser run-al    --run run/
    ser run-ccg   --sources a/,b/ --target run/
    ser run-da    --sources a/ --target run/ --variant both
    ser report    --runs run/
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:          # 3.10
    import tomli as tomllib

from .audio_features import (
    FeatureTable,
    compute_logmel,
    functionals,
    import_external_features,
    load_table,
    load_wav,
    save_table,
    zscore_table,
)
from .corpus import (
    Annotation,
    CorpusError,
    VALabel,
    filter_min_duration,
    gold_labels,
    load_annotations,
    load_manifest,
    majority_vote,
    merge_raw_valence,
    save_labels,
    save_manifest,
)
from .mal import (
    AeConfig,
    GroupResult,
    LABEL_MODES,
    clustering_from_json,
    clustering_to_json,
    combined_queue,
    encode_table,
    load_queue,
    mal_per_group,
    materialize_labels,
    save_queue,
    train_embedder,
)
from .metrics import ExperimentReport, confusion, render_report, reports_from_json, reports_to_json, uar
from .nn import load_model, save_model
from .rundir import RunDirError, config_digest, require_stage, stage_artifact, write_meta
from .svm import SvmError, grid_search_cv
from .wda import AdaptationConfig, SourceTrainConfig, WdaArch, adapt, save_run_log, split_source, train_source

log = logging.getLogger("ser")

TASKS = ("valence", "arousal")


class CliError(ValueError):
    pass


# --- config handling --------------------------------------------------------

def load_config(path) -> dict:
    p = Path(path)
    if p.suffix == ".toml":
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    if p.suffix == ".json":
        with open(p, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise CliError(f"{path}: config root must be an object")
        return cfg
    raise CliError(f"{path}: config must be .toml or .json")


def _section(cfg: dict | None, name: str) -> dict:
    if not cfg:
        return {}
    part = cfg.get(name, {})
    if not isinstance(part, dict):
        raise CliError(f"config section [{name}] must be a table")
    return dict(part)


def _build(dc_cls, overrides: dict, where: str, **fixed):
    """Instantiate a config dataclass from file overrides + fixed kwargs.
    TOML arrays are coerced to the tuples the dataclasses expect."""
    names = {f.name for f in dataclasses.fields(dc_cls)}
    unknown = set(overrides) - names
    if unknown:
        raise CliError(f"unknown {where} config keys: {sorted(unknown)}")
    merged = {**overrides, **fixed}
    clean = {k: tuple(v) if isinstance(v, list) else v for k, v in merged.items()}
    return dc_cls(**clean)


# --- shared helpers ---------------------------------------------------------

def _run_dir(path, create: bool = False) -> Path:
    run = Path(path)
    if create:
        run.mkdir(parents=True, exist_ok=True)
    elif not run.is_dir():
        raise CliError(f"run directory {run} does not exist")
    return run


def _corpus_name(manifest_path) -> str:
    p = Path(manifest_path).resolve()
    return p.parent.name or p.stem


def _load_corpus(run: Path):
    manifest = run / "manifest.jsonl"
    if not manifest.exists():
        raise CliError(f"{manifest} missing; run the features stage first")
    name = run.name
    meta = run / "features.serf.meta.json"
    if meta.exists():
        name = json.loads(meta.read_text(encoding="utf-8")).get(
            "config", {}).get("corpus", name)
    gold = run / "gold.csv"
    return load_manifest(manifest, gold if gold.exists() else None, name=name)


def _feature_vector(path: str) -> np.ndarray:
    return functionals(compute_logmel(load_wav(path)))


def _extract_features(paths: list, jobs: int) -> np.ndarray:
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_feature_vector, paths, chunksize=8))
    else:
        rows = [_feature_vector(p) for p in paths]
    return np.asarray(rows)


def _labels_from_annotations(annotations) -> dict:
    """Collapse annotation rows to one merged VA label per utterance.

    Erroneous rows are dropped; a single usable row is taken at face
    value; several usable rows need a strict per-dimension majority.
    Utterances left without a usable label map to None."""
    by_uid: dict[str, list[Annotation]] = {}
    for a in annotations:
        by_uid.setdefault(a.utterance_id, []).append(a)
    out: dict[str, VALabel | None] = {}
    for uid, anns in by_uid.items():
        usable = [a for a in anns if not a.erroneous]
        if not usable:
            out[uid] = None
        elif len(usable) == 1:
            a = usable[0]
            out[uid] = VALabel(merge_raw_valence(a.valence_raw), a.arousal_raw)
        else:
            val, _ = majority_vote(anns, "valence")
            aro, _ = majority_vote(anns, "arousal")
            out[uid] = (None if val is None or aro is None
                        else VALabel(merge_raw_valence(val), aro))
    return out


def _labeled_rows(table: FeatureTable, labels: dict, task: str, ids=None):
    """(matrix, label list, id list) for the ids with a usable label."""
    pool = sorted(labels if ids is None else ids)
    kept = [u for u in pool if labels.get(u) is not None]
    y = [getattr(labels[u], task) for u in kept]
    return table.rows_for(kept), y, kept


def _load_groups(run: Path):
    doc = json.loads((run / "clustering.json").read_text(encoding="utf-8"))
    return [
        GroupResult(g["group_id"], tuple(g["utterance_ids"]),
                    clustering_from_json(json.dumps(g["clustering"])))
        for g in doc["groups"]
    ], doc


def _report_entry(method: str, task: str, preds, truth, classes, *,
                  feature_kind: str = "", source: str = "", label_mode: str = "",
                  variant: str = "", config: dict | None = None,
                  seed: int = 0) -> ExperimentReport:
    cm = confusion(preds, truth, classes)
    return ExperimentReport(
        method=method, task=task, uar=uar(preds, truth),
        feature_kind=feature_kind, source=source, label_mode=label_mode,
        variant=variant, confusion_labels=list(classes),
        confusion_counts=[list(map(int, row)) for row in cm.counts],
        config_fingerprint=config_digest(config or {}), seed=seed,
    )


def _write_reports(run: Path, stem: str, reports: list) -> str:
    (run / f"{stem}.json").write_text(reports_to_json(reports) + "\n",
                                      encoding="utf-8")
    text = render_report(reports)
    (run / f"{stem}.txt").write_text(text, encoding="utf-8")
    return text


def _parse_tasks(arg: str | None) -> tuple:
    if not arg:
        return TASKS
    tasks = tuple(t.strip() for t in arg.split(",") if t.strip())
    for t in tasks:
        if t not in TASKS:
            raise CliError(f"unknown task {t!r}; choose from {TASKS}")
    return tasks


# --- commands ---------------------------------------------------------------

def cmd_synth_corpus(args, cfg) -> int:
    from .synthetic import wav_corpus
    info = wav_corpus(args.out, n=args.n, seed=args.seed)
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def cmd_features(args, cfg) -> int:
    run = _run_dir(args.run, create=True)
    section = _section(cfg, "features")
    kind = section.get("kind", "logmel_functionals")
    min_ms = float(section.get("min_duration_ms", 600.0))

    corpus = load_manifest(args.manifest, args.annotations,
                           name=_corpus_name(args.manifest))
    corpus = filter_min_duration(corpus, min_ms)
    if not corpus.utterances:
        raise CliError("no utterances left after the duration filter")
    # the run keeps its own manifest copy, so clip paths must survive the
    # move: anchor them at the original manifest's directory
    base = Path(args.manifest).resolve().parent
    corpus = dataclasses.replace(corpus, utterances=tuple(
        dataclasses.replace(
            u,
            audio_ref=str(Path(u.audio_ref) if Path(u.audio_ref).is_absolute()
                          else base / u.audio_ref),
            source_audio=(str(Path(u.source_audio)
                              if Path(u.source_audio).is_absolute()
                              else base / u.source_audio)
                          if u.source_audio else ""),
        )
        for u in corpus.utterances
    ))
    save_manifest(corpus, run / "manifest.jsonl")
    outputs = {"manifest": run / "manifest.jsonl"}
    if corpus.annotations:
        save_labels(corpus, run / "gold.csv")
        outputs["gold"] = run / "gold.csv"

    ids = corpus.ids()
    if kind == "logmel_functionals":
        paths = [corpus.by_id(uid).audio_ref for uid in ids]
        matrix = _extract_features(paths, args.jobs)
        table = FeatureTable(tuple(ids), matrix, feature_kind=kind)
    elif kind == "external_import":
        source = section.get("table") or args.table
        if not source:
            raise CliError("external_import needs features.table in the config "
                           "or --table")
        table = import_external_features(source, ids)
    else:
        raise CliError(f"unknown feature kind {kind!r}")

    table = zscore_table(table)
    save_table(table, run / "features.serf")
    stats = {"mean": table.mean.tolist(), "std": table.std.tolist()}
    (run / "zscore.json").write_text(
        json.dumps(stats, sort_keys=True) + "\n", encoding="utf-8")
    outputs["zscore"] = run / "zscore.json"
    write_meta(run / "features.serf", "features",
               inputs={"manifest": run / "manifest.jsonl"},
               seed=args.seed,
               config={"kind": table.feature_kind, "min_duration_ms": min_ms,
                       "corpus": corpus.name,
                       "n_utterances": len(ids), "dim": table.dim},
               outputs=outputs)
    log.info("features: %d utterances x %d dims", len(ids), table.dim)
    return 0


def cmd_embed(args, cfg) -> int:
    run = _run_dir(args.run)
    require_stage(run, "features")
    table = load_table(run / "features.serf")
    corpus = _load_corpus(run)
    pool_ids = corpus.ids(("train", "unlabeled"))
    if not pool_ids:
        raise CliError("no train/unlabeled rows to fit the embedder on")

    ae_cfg = _build(AeConfig, _section(cfg, "embed"), "embed", seed=args.seed)
    result = train_embedder(table.subset(pool_ids), config=ae_cfg)
    embedded = encode_table(result.encoder, table)
    save_table(embedded, run / "embedding.serf")
    save_model(result.encoder, run / "encoder.serm")
    write_meta(run / "embedding.serf", "embed",
               inputs={"features": run / "features.serf"},
               seed=args.seed,
               config={**dataclasses.asdict(ae_cfg),
                       "best_epoch": result.train_result.best_epoch,
                       "epochs_run": result.train_result.epochs_run},
               outputs={"encoder": run / "encoder.serm"})
    log.info("embed: %d -> %d dims, best epoch %d",
             table.dim, embedded.dim, result.train_result.best_epoch)
    return 0


def cmd_cluster(args, cfg) -> int:
    run = _run_dir(args.run)
    require_stage(run, "embed")
    embedded = load_table(run / "embedding.serf")
    corpus = _load_corpus(run)
    splits = tuple(_section(cfg, "cluster").get("splits", ("train", "unlabeled")))
    groups, _ = mal_per_group(corpus, embedded, seed=args.seed, splits=splits)
    doc = {
        "seed": args.seed,
        "splits": list(splits),
        "groups": [
            {"group_id": g.group_id,
             "utterance_ids": list(g.utterance_ids),
             "clustering": json.loads(clustering_to_json(g.clustering))}
            for g in groups
        ],
    }
    (run / "clustering.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    write_meta(run / "clustering.json", "cluster",
               inputs={"embedding": run / "embedding.serf"},
               seed=args.seed, config={"splits": list(splits)})
    total = sum(g.clustering.k for g in groups)
    log.info("cluster: %d groups, %d clusters total", len(groups), total)
    return 0


def cmd_queue(args, cfg) -> int:
    run = _run_dir(args.run)
    meta = require_stage(run, "cluster")
    corpus = _load_corpus(run)
    groups, doc = _load_groups(run)
    entries = combined_queue(groups, corpus)
    save_queue(entries, run / "queue.csv")
    write_meta(run / "queue.csv", "queue",
               inputs={"clustering": run / "clustering.json"},
               seed=doc.get("seed", args.seed),
               config={"n_entries": len(entries)})
    log.info("queue: %d medoids to annotate", len(entries))
    return 0


def cmd_serve(args, cfg) -> int:
    import uvicorn

    from .api import create_app

    run = _run_dir(args.run)
    meta = require_stage(run, "queue")
    seed = meta.get("seed", 0) if args.seed is None else args.seed
    section = _section(cfg, "serve")
    overlap = args.overlap_n if args.overlap_n is not None else int(
        section.get("overlap_n", 0))
    token = args.token or section.get("token")
    app = create_app(run, seed=seed, overlap_n=overlap, token=token)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_import_labels(args, cfg) -> int:
    run = _run_dir(args.run)
    require_stage(run, "queue")
    entries = load_queue(run / "queue.csv")
    queued = {e.utterance_id for e in entries}
    annotations = load_annotations(args.annotations)
    kept = [a for a in annotations if a.utterance_id in queued]
    skipped = len(annotations) - len(kept)
    if skipped:
        log.warning("import-labels: %d rows do not match any queued medoid; "
                    "skipped", skipped)
    if not kept:
        raise CliError("none of the annotation rows match queued medoids")
    save_labels(kept, run / "labels.csv")
    write_meta(run / "labels.csv", "labels",
               inputs={"queue": run / "queue.csv"},
               seed=args.seed,
               config={"imported": len(kept), "skipped": skipped})
    log.info("import-labels: %d rows for %d medoids", len(kept),
             len({a.utterance_id for a in kept}))
    return 0


def cmd_run_al(args, cfg) -> int:
    run = _run_dir(args.run)
    require_stage(run, "labels")
    table = load_table(run / "features.serf")
    corpus = _load_corpus(run)
    groups, doc = _load_groups(run)
    gold = gold_labels(corpus, "test")
    if not gold:
        raise CliError("no usable gold labels on the test split; cannot evaluate")
    test_ids = sorted(gold)

    medoid_labels = _labels_from_annotations(load_annotations(run / "labels.csv"))
    section = _section(cfg, "al")
    folds = int(section.get("folds", 5))
    c_grid = tuple(section.get("c_grid", (0.1, 1.0, 10.0, 100.0)))
    gamma_grid = section.get("gamma_grid")
    if gamma_grid is not None:
        gamma_grid = tuple(gamma_grid)
    modes = ([args.mode] if args.mode and args.mode != "both" else LABEL_MODES)
    tasks = _parse_tasks(args.tasks)

    reports = []
    for mode in modes:
        labeled: dict[str, VALabel] = {}
        for g in groups:
            medoid_ids = {g.utterance_ids[m] for m in g.clustering.medoids}
            subset = {u: l for u, l in medoid_labels.items() if u in medoid_ids}
            labeled.update(materialize_labels(
                g.clustering, g.utterance_ids, subset, mode))
        if not labeled:
            raise CliError("no labeled medoids after materialization; "
                           "import annotations first")
        log.info("run-al[%s]: %d labeled training rows", mode, len(labeled))
        for task in tasks:
            x, y, kept = _labeled_rows(table, labeled, task)
            try:
                gs = grid_search_cv(x, y, c_grid=c_grid, gamma_grid=gamma_grid,
                                    folds=folds, seed=args.seed)
            except SvmError as e:
                raise CliError(f"run-al[{mode}/{task}]: {e}") from e
            preds = gs.model.predict(table.rows_for(test_ids))
            truth = [getattr(gold[u], task) for u in test_ids]
            classes = sorted(set(truth) | set(y))
            reports.append(_report_entry(
                "AL", task, preds, truth, classes,
                feature_kind=table.feature_kind, source=corpus.name,
                label_mode="cluster" if mode == "cluster_labels" else "medoid",
                config={"mode": mode, "folds": folds, "c": gs.best_c,
                        "gamma": gs.best_gamma, "n_labeled": len(kept)},
                seed=args.seed))
    text = _write_reports(run, "al_report", reports)
    print(text, end="")
    return 0


def _source_runs(arg: str) -> list:
    runs = [Path(p.strip()) for p in arg.split(",") if p.strip()]
    if not runs:
        raise CliError("need at least one source run directory")
    for r in runs:
        if not r.is_dir():
            raise CliError(f"source run directory {r} does not exist")
    return runs


def _check_kinds(tables: dict) -> None:
    kinds = {name: (t.feature_kind, t.dim) for name, t in tables.items()}
    if len(set(kinds.values())) > 1:
        raise CliError(f"feature kind/dimension mismatch across corpora: {kinds}")


def cmd_run_ccg(args, cfg) -> int:
    target = _run_dir(args.target)
    require_stage(target, "features")
    target_table = load_table(target / "features.serf")
    target_corpus = _load_corpus(target)
    gold = gold_labels(target_corpus, "test")
    if not gold:
        raise CliError("target has no usable gold labels on the test split")
    test_ids = sorted(gold)
    tasks = _parse_tasks(args.tasks)

    sources = []
    tables = {"target": target_table}
    for sdir in _source_runs(args.sources):
        require_stage(sdir, "features")
        stable = load_table(sdir / "features.serf")
        scorpus = _load_corpus(sdir)
        labels = _labels_from_annotations(scorpus.annotations)
        sources.append((sdir.name, stable, labels))
        tables[sdir.name] = stable
    _check_kinds(tables)

    section = _section(cfg, "ccg")
    folds = int(section.get("folds", 5))
    c_grid = tuple(section.get("c_grid", (0.1, 1.0, 10.0, 100.0)))

    reports = []
    for task in tasks:
        parts_x, parts_y = [], []
        for name, stable, labels in sources:
            x, y, kept = _labeled_rows(stable, labels, task)
            if not kept:
                raise CliError(f"source {name} has no usable labels")
            parts_x.append(x)
            parts_y.extend(y)
        pooled_x = np.concatenate(parts_x)
        try:
            gs = grid_search_cv(pooled_x, parts_y, c_grid=c_grid,
                                folds=folds, seed=args.seed)
        except SvmError as e:
            raise CliError(f"run-ccg[{task}]: {e}") from e
        preds = gs.model.predict(target_table.rows_for(test_ids))
        truth = [getattr(gold[u], task) for u in test_ids]
        classes = sorted(set(truth) | set(parts_y))
        reports.append(_report_entry(
            "CCG", task, preds, truth, classes,
            feature_kind=target_table.feature_kind,
            source="+".join(name for name, _, _ in sources),
            config={"folds": folds, "c": gs.best_c, "gamma": gs.best_gamma,
                    "n_train": len(parts_y)},
            seed=args.seed))
    text = _write_reports(target, "ccg_report", reports)
    print(text, end="")
    return 0


def cmd_run_da(args, cfg) -> int:
    target = _run_dir(args.target)
    require_stage(target, "features")
    target_table = load_table(target / "features.serf")
    target_corpus = _load_corpus(target)
    gold = gold_labels(target_corpus, "test")
    if not gold:
        raise CliError("target has no usable gold labels on the test split")
    test_ids = sorted(gold)
    test_x = target_table.rows_for(test_ids)
    pool_ids = target_corpus.ids(("train", "unlabeled"))
    if not pool_ids:
        raise CliError("target has no train/unlabeled rows to adapt on")
    pool_x = target_table.rows_for(pool_ids)
    tasks = _parse_tasks(args.tasks)

    variant = {"us": "unsupervised", "ss": "semi_supervised",
               "both": "both"}[args.variant]

    sources = []
    tables = {"target": target_table}
    for sdir in _source_runs(args.sources):
        require_stage(sdir, "features")
        stable = load_table(sdir / "features.serf")
        scorpus = _load_corpus(sdir)
        labels = _labels_from_annotations(scorpus.annotations)
        sources.append((sdir.name, stable, labels))
        tables[sdir.name] = stable
    _check_kinds(tables)

    # labeled target rows (train split) drive the semi-supervised monitor
    monitor_labels: dict = {}
    store = target / "labels.csv"
    if store.exists():
        monitor_labels = _labels_from_annotations(load_annotations(store))
    else:
        train_ids = set(target_corpus.ids("train"))
        monitor_labels = {
            u: l for u, l in
            _labels_from_annotations(target_corpus.annotations).items()
            if u in train_ids
        }

    arch = _build(WdaArch, _section(cfg, "arch"), "arch")
    src_cfg = _build(SourceTrainConfig, _section(cfg, "source"), "source",
                     arch=arch)
    adapt_over = _section(cfg, "adapt")
    source_name = "+".join(name for name, _, _ in sources)

    reports = []
    for task in tasks:
        # per-corpus 85:15 splits, then pool
        tr_parts, ho_parts = [], []
        tr_y, ho_y = [], []
        for name, stable, labels in sources:
            x, y, kept = _labeled_rows(stable, labels, task)
            if not kept:
                raise CliError(f"source {name} has no usable labels")
            tr, ho = split_source(len(kept), args.seed, src_cfg.test_fraction)
            tr_parts.append(x[tr])
            ho_parts.append(x[ho])
            tr_y.extend(y[i] for i in tr)
            ho_y.extend(y[i] for i in ho)
        train_x = np.concatenate(tr_parts)
        holdout_x = np.concatenate(ho_parts)

        model, tr_result = train_source(
            train_x, tr_y, task, seed=args.seed, config=src_cfg,
            holdout=(holdout_x, ho_y))
        truth = [getattr(gold[u], task) for u in test_ids]
        classes = list(model.classes)
        src_preds = model.predict_labels(test_x)
        reports.append(_report_entry(
            "DA", task, src_preds, truth, classes,
            feature_kind=target_table.feature_kind, source=source_name,
            variant="source_only",
            config={"lr": src_cfg.lr, "best_epoch": tr_result.best_epoch},
            seed=args.seed))
        save_model(model.feature, target / f"da_{task}_source_feature.serm")
        save_model(model.classifier, target / f"da_{task}_source_classifier.serm")

        mon_x = mon_y = None
        if variant in ("semi_supervised", "both"):
            x, y, kept = _labeled_rows(target_table, monitor_labels, task)
            if not kept:
                raise CliError(
                    "semi-supervised adaptation needs labeled target rows; "
                    "import labels or provide train-split gold annotations")
            mon_x, mon_y = x, y
        adapt_cfg = _build(AdaptationConfig, adapt_over, "adapt",
                           variant=variant, seed=args.seed)
        result = adapt(model, train_x, tr_y, pool_x, adapt_cfg,
                       monitor_x=mon_x, monitor_labels=mon_y)
        save_run_log(result.history, target / f"da_{task}_log.jsonl")
        for name in sorted(result.snapshots):
            sel = result.for_variant(name)
            tag = "US" if name == "unsupervised" else "S-S"
            preds = sel.predict_labels(test_x)
            reports.append(_report_entry(
                "DA", task, preds, truth, classes,
                feature_kind=target_table.feature_kind, source=source_name,
                variant=tag,
                config={"lr": adapt_cfg.lr, "selected_epoch": sel.selected_epoch,
                        "epochs_run": len(result.history)},
                seed=args.seed))
            stem = f"da_{task}_{name}"
            save_model(sel.f_t, target / f"{stem}_feature.serm")
            save_model(sel.c_l, target / f"{stem}_classifier.serm")
    text = _write_reports(target, "da_report", reports)
    print(text, end="")
    return 0


def cmd_report(args, cfg) -> int:
    reports = []
    stems = ("al_report", "ccg_report", "da_report")
    if args.runs:
        for rdir in _source_runs(args.runs):
            found = False
            for stem in stems:
                path = rdir / f"{stem}.json"
                if path.exists():
                    reports.extend(reports_from_json(path.read_text(encoding="utf-8")))
                    found = True
            if not found:
                log.warning("%s: no report files found", rdir)
    if args.inputs:
        for path in args.inputs.split(","):
            reports.extend(reports_from_json(Path(path.strip()).read_text(encoding="utf-8")))
    if not reports:
        raise CliError("no reports to merge")
    text = render_report(reports)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(reports_to_json(reports) + "\n",
                                         encoding="utf-8")
        (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


# --- argument parsing ---------------------------------------------------------

def _common(sub):
    sub.add_argument("--config", help="TOML or JSON config file")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ser",
        description="speech emotion recognition deployment pipeline")
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth-corpus", help="generate the bundled mini corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=100)
    _common(p)
    p.set_defaults(func=cmd_synth_corpus)

    p = subs.add_parser("features", help="extract and z-score features")
    p.add_argument("--run", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--annotations", help="gold annotation CSV")
    p.add_argument("--table", help="feature CSV for kind=external_import")
    _common(p)
    p.set_defaults(func=cmd_features)

    p = subs.add_parser("embed", help="train the bottleneck embedder")
    p.add_argument("--run", required=True)
    _common(p)
    p.set_defaults(func=cmd_embed)

    p = subs.add_parser("cluster", help="per-group medoid clustering")
    p.add_argument("--run", required=True)
    _common(p)
    p.set_defaults(func=cmd_cluster)

    p = subs.add_parser("queue", help="export the annotation queue")
    p.add_argument("--run", required=True)
    _common(p)
    p.set_defaults(func=cmd_queue)

    p = subs.add_parser("serve", help="serve the annotation API and UI")
    p.add_argument("--run", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--overlap-n", type=int, default=None,
                   help="first N queue items go to every annotator")
    p.add_argument("--token", help="shared access token")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=None,
                   help="defaults to the queue stage seed")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_serve)

    p = subs.add_parser("import-labels", help="load annotations into the run")
    p.add_argument("--run", required=True)
    p.add_argument("--annotations", required=True)
    _common(p)
    p.set_defaults(func=cmd_import_labels)

    p = subs.add_parser("run-al", help="train and evaluate on medoid labels")
    p.add_argument("--run", required=True)
    p.add_argument("--mode", choices=("cluster_labels", "medoid_labels", "both"),
                   default="both")
    p.add_argument("--tasks", help="comma list: valence,arousal")
    _common(p)
    p.set_defaults(func=cmd_run_al)

    p = subs.add_parser("run-ccg", help="pooled cross-corpus training")
    p.add_argument("--sources", required=True, help="comma list of run dirs")
    p.add_argument("--target", required=True)
    p.add_argument("--tasks")
    _common(p)
    p.set_defaults(func=cmd_run_ccg)

    p = subs.add_parser("run-da", help="adversarial domain adaptation")
    p.add_argument("--sources", required=True, help="comma list of run dirs")
    p.add_argument("--target", required=True)
    p.add_argument("--tasks")
    p.add_argument("--variant", choices=("us", "ss", "both"), default="both")
    _common(p)
    p.set_defaults(func=cmd_run_da)

    p = subs.add_parser("report", help="merge and render reports")
    p.add_argument("--runs", help="comma list of run dirs")
    p.add_argument("--inputs", help="comma list of report JSON files")
    p.add_argument("--out", help="directory for merged report files")
    _common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    try:
        return args.func(args, cfg)
    except (CliError, CorpusError, RunDirError, SvmError, ValueError) as e:
        log.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
