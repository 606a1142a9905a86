"""HTTP annotation service over a run directory's queue.

Serves queue items in rank order, streams clip audio (plus up to ten
seconds of preceding context when the clip came out of a longer
recording), accepts labels into an append-only store, and exports the
collected labels in the same CSV dialect the rest of the pipeline
reads. The first `overlap_n` queue items go to every annotator (for
agreement estimation); the rest are claimed one annotator at a time.

Label rows are never rewritten: a second label for the same
(utterance, annotator) appends a superseding row and the export keeps
only the latest. The dimension presentation order for each item is
drawn deterministically from the run seed, so re-serving a queue
reproduces the same orders.
"""

from __future__ import annotations

import csv
import hashlib
import io
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles

from .corpus import (
    ANNOTATION_FIELDS,
    RAW_AROUSAL,
    RAW_VALENCE,
    load_annotations,
    load_manifest,
)
from .mal import load_queue

STORE_NAME = "labels_store.csv"
DIMENSION_ORDERS = ("valence_first", "arousal_first")
CONTEXT_SECONDS = 10.0
_PROTECTED = ("/queue", "/audio", "/label", "/progress", "/export")


def dimension_order(seed: int, utterance_id: str) -> str:
    """Uniform, per-run-seed deterministic choice of which dimension an
    annotator is asked about first."""
    digest = hashlib.sha256(f"{seed}:{utterance_id}".encode()).digest()
    return DIMENSION_ORDERS[digest[0] & 1]


class LabelStore:
    """Append-only CSV store; the last row per (utterance, annotator)
    is the active one. Timestamps are submission ordinals, not clock
    readings, so a replayed session reproduces the file byte for byte."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.lock = threading.Lock()
        self.rows: list[dict] = []
        self.active: dict[tuple, int] = {}   # (uid, annotator) -> row index
        if self.path.exists():
            for a in load_annotations(self.path):
                self._remember({
                    "utterance_id": a.utterance_id, "annotator": a.annotator_id,
                    "valence": a.valence_raw, "arousal": a.arousal_raw,
                    "erroneous": "true" if a.erroneous else "false",
                    "order": a.presentation_order, "timestamp": a.timestamp,
                })
        else:
            with open(self.path, "w", newline="", encoding="utf-8") as fh:
                csv.writer(fh).writerow(ANNOTATION_FIELDS)

    def _remember(self, row: dict) -> None:
        self.rows.append(row)
        self.active[(row["utterance_id"], row["annotator"])] = len(self.rows) - 1

    def append(self, utterance_id: str, annotator: str, valence: str,
               arousal: str, erroneous: bool, order: str) -> bool:
        """Returns True when this row supersedes an earlier one."""
        with self.lock:
            key = (utterance_id, annotator)
            superseded = key in self.active
            row = {
                "utterance_id": utterance_id, "annotator": annotator,
                "valence": valence, "arousal": arousal,
                "erroneous": "true" if erroneous else "false",
                "order": order, "timestamp": str(len(self.rows)),
            }
            self._remember(row)
            with open(self.path, "a", newline="", encoding="utf-8") as fh:
                csv.writer(fh).writerow([row[f] for f in ANNOTATION_FIELDS])
            return superseded

    def labeled_by(self, annotator: str) -> set:
        with self.lock:
            return {uid for uid, ann in self.active if ann == annotator}

    def labeled_any(self) -> set:
        with self.lock:
            return {uid for uid, _ in self.active}

    def active_rows(self) -> list[dict]:
        with self.lock:
            return [self.rows[i] for i in sorted(self.active.values())]

    def counts_by_annotator(self) -> dict:
        with self.lock:
            out: dict[str, int] = {}
            for _, ann in self.active:
                out[ann] = out.get(ann, 0) + 1
            return out


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse({"detail": message}, status_code=400)


def create_app(run_dir, seed: int = 0, overlap_n: int = 0,
               token: str | None = None, static_dir="auto") -> FastAPI:
    """Build the annotation service for one run directory.

    static_dir: a directory to serve the browser client from, "auto" to
    pick up frontend/dist under the current directory when present, or
    None for the bare JSON API.
    """
    run = Path(run_dir)
    entries = load_queue(run / "queue.csv")
    corpus = load_manifest(run / "manifest.jsonl", name=run.name)
    audio_base = run
    store = LabelStore(run / STORE_NAME)
    claims: dict[str, str] = {}          # uid -> annotator, in-memory only
    claims_lock = threading.Lock()
    by_uid = {e.utterance_id: e for e in entries}
    overlap_ids = [e.utterance_id for e in entries[:max(0, overlap_n)]]

    app = FastAPI(title="annotation service", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _bad_request(str(exc.errors()[:1]))

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        if token and any(request.url.path.startswith(p) for p in _PROTECTED):
            if request.headers.get("x-annotation-token") != token:
                return JSONResponse({"detail": "missing or bad token"},
                                    status_code=401)
        return await call_next(request)

    def _item_payload(entry, annotator: str) -> dict:
        utt = corpus.by_id(entry.utterance_id)
        has_context = bool(utt.source_audio) and utt.source_start_s > 0.0
        return {
            "done": False,
            "utterance_id": entry.utterance_id,
            "rank": entry.rank,
            "cluster_id": entry.cluster_id,
            "cluster_size": entry.cluster_size,
            "audio_url": f"/audio/{entry.utterance_id}",
            "context_url": (f"/audio/{entry.utterance_id}/context"
                            if has_context else None),
            "dimension_order": dimension_order(seed, entry.utterance_id),
            "annotator": annotator,
            "queue_size": len(entries),
        }

    @app.get("/queue/next")
    def queue_next(annotator: str = ""):
        if not annotator.strip():
            return _bad_request("annotator query parameter is required")
        mine = store.labeled_by(annotator)
        anyone = store.labeled_any()
        with claims_lock:
            for entry in entries:
                uid = entry.utterance_id
                if uid in overlap_ids:
                    if uid not in mine:
                        return _item_payload(entry, annotator)
                    continue
                if uid in anyone:
                    continue
                owner = claims.get(uid)
                if owner is not None and owner != annotator:
                    continue
                claims[uid] = annotator
                return _item_payload(entry, annotator)
        return {"done": True, "queue_size": len(entries),
                "labeled": len(anyone & set(by_uid))}

    def _resolve_audio(ref: str) -> Path:
        p = Path(ref)
        return p if p.is_absolute() else audio_base / p

    @app.get("/audio/{utterance_id}")
    def audio(utterance_id: str):
        if utterance_id not in by_uid:
            return JSONResponse({"detail": "unknown utterance"}, status_code=404)
        path = _resolve_audio(corpus.by_id(utterance_id).audio_ref)
        if not path.exists():
            return JSONResponse({"detail": "audio file missing"}, status_code=404)
        return FileResponse(path, media_type="audio/wav")

    @app.get("/audio/{utterance_id}/context")
    def audio_context(utterance_id: str):
        if utterance_id not in by_uid:
            return JSONResponse({"detail": "unknown utterance"}, status_code=404)
        utt = corpus.by_id(utterance_id)
        if not utt.source_audio or utt.source_start_s <= 0.0:
            return JSONResponse({"detail": "no context available"},
                                status_code=404)
        path = _resolve_audio(utt.source_audio)
        if not path.exists():
            return JSONResponse({"detail": "source recording missing"},
                                status_code=404)
        from scipy.io import wavfile
        rate, data = wavfile.read(path)
        end = int(round(utt.source_start_s * rate))
        start = max(0, end - int(round(CONTEXT_SECONDS * rate)))
        if end <= start or end > data.shape[0]:
            return JSONResponse({"detail": "no context available"},
                                status_code=404)
        buffer = io.BytesIO()
        wavfile.write(buffer, rate, data[start:end])
        return Response(buffer.getvalue(), media_type="audio/wav")

    @app.post("/label")
    async def label(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _bad_request("body must be JSON")
        if not isinstance(body, dict):
            return _bad_request("body must be a JSON object")
        required = {"utterance_id", "annotator", "valence", "arousal",
                    "erroneous", "order"}
        missing = required - set(body)
        if missing:
            return _bad_request(f"missing fields: {sorted(missing)}")
        uid = body["utterance_id"]
        annotator = body["annotator"]
        if not isinstance(uid, str) or not isinstance(annotator, str) \
                or not annotator.strip():
            return _bad_request("utterance_id and annotator must be "
                                "non-empty strings")
        if uid not in by_uid:
            return JSONResponse(
                {"detail": f"utterance {uid!r} is not in the queue"},
                status_code=409)
        erroneous = body["erroneous"]
        if not isinstance(erroneous, bool):
            return _bad_request("erroneous must be a boolean")
        valence, arousal = body["valence"], body["arousal"]
        if erroneous:
            if valence is not None or arousal is not None:
                return _bad_request("an erroneous clip cannot carry labels")
            valence = arousal = ""
        else:
            if valence not in RAW_VALENCE:
                return _bad_request(f"valence must be one of {RAW_VALENCE}")
            if arousal not in RAW_AROUSAL:
                return _bad_request(f"arousal must be one of {RAW_AROUSAL}")
        order = body["order"]
        expected = dimension_order(seed, uid)
        if order not in DIMENSION_ORDERS:
            return _bad_request(f"order must be one of {DIMENSION_ORDERS}")
        if order != expected:
            return _bad_request(
                f"order {order!r} does not match the assigned {expected!r}")
        superseded = store.append(uid, annotator, valence, arousal,
                                  erroneous, order)
        with claims_lock:
            claims.pop(uid, None)
        return {"status": "ok", "superseded": superseded}

    @app.get("/progress")
    def progress():
        labeled = store.labeled_any() & set(by_uid)
        return {
            "queue_size": len(entries),
            "labeled": len(labeled),
            "percent": round(100.0 * len(labeled) / len(entries), 2)
            if entries else 100.0,
            "overlap_n": len(overlap_ids),
            "by_annotator": store.counts_by_annotator(),
        }

    @app.get("/export")
    def export():
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(ANNOTATION_FIELDS)
        for row in store.active_rows():
            writer.writerow([row[f] for f in ANNOTATION_FIELDS])
        return PlainTextResponse(buffer.getvalue(), media_type="text/csv")

    if static_dir == "auto":
        candidate = Path.cwd() / "frontend" / "dist"
        static_dir = candidate if candidate.is_dir() else None
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")
    else:
        @app.get("/")
        def root():
            return {"service": "annotation", "queue_size": len(entries)}

    return app
