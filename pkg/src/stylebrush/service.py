"""HTTP service exposing sessions to thin clients.

Paint runs execute on a worker thread per stream and are delivered as
newline-delimited JSON FrameMessages with strictly increasing sequence
numbers; the wire carries PNG payloads, never tensors. A worker does not
start until the stream gains its first consumer or a stop arrives, so
"stop before anything streamed" deterministically aborts without touching
session state.
"""

from __future__ import annotations

import base64
import io
import json
import queue
import threading
import time
import uuid

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response, StreamingResponse
from PIL import Image as PILImage

from .core import Image, Params, decode_png, encode_png
from .errors import (
    EmptySelectionError,
    NoBrushError,
    NothingToUndoError,
    ResourceLimitError,
    ScriptError,
    StyleBrushError,
)
from .features import AnalyticBackend
from .session import Session, build_mask

MAX_UPLOAD_BYTES = 32 * 1024 * 1024
FRAME_INTERVAL = 1.0 / 30.0  # paint streaming throttle


def _encode_gray_png(field: np.ndarray) -> bytes:
    arr = np.rint(np.clip(field, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    PILImage.fromarray(arr, "L").save(buf, format="PNG")
    return buf.getvalue()


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _decode_upload(b64_text, what: str) -> Image:
    if not isinstance(b64_text, str):
        raise ScriptError(f"{what} must be a base64 PNG string")
    if len(b64_text) * 3 // 4 > MAX_UPLOAD_BYTES:
        raise ResourceLimitError(f"{what} exceeds the upload size limit")
    try:
        raw = base64.b64decode(b64_text, validate=True)
    except Exception as exc:
        raise ScriptError(f"{what} is not valid base64: {exc}") from exc
    try:
        return decode_png(raw)
    except Exception as exc:
        raise ScriptError(f"{what} is not a decodable PNG: {exc}") from exc


class PaintJob:
    def __init__(self, stream_id: str):
        self.stream_id = stream_id
        self.queue: queue.Queue = queue.Queue()
        self.stop = threading.Event()
        self.started = threading.Event()
        self.finished = threading.Event()
        self.seq = 0
        self.thread: threading.Thread | None = None

    def push(self, message: dict | None) -> None:
        if message is not None:
            self.seq += 1
            message["seq"] = self.seq
        self.queue.put(message)


class SessionEntry:
    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()
        self.job: PaintJob | None = None


def create_app(backend=None) -> FastAPI:
    backend = backend if backend is not None else AnalyticBackend()
    app = FastAPI(title="stylebrush service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry: dict[str, SessionEntry] = {}
    registry_lock = threading.Lock()

    def error_json(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": message})

    def get_entry(session_id: str) -> SessionEntry | None:
        with registry_lock:
            return registry.get(session_id)

    @app.exception_handler(StyleBrushError)
    def handle_domain_error(request: Request, exc: StyleBrushError):
        status = 500
        if isinstance(exc, ResourceLimitError):
            status = 413
        elif isinstance(exc, (ScriptError, EmptySelectionError, NoBrushError)):
            status = 400
        elif isinstance(exc, NothingToUndoError):
            status = 409
        return error_json(status, str(exc))

    @app.post("/sessions")
    def create_session_endpoint(body: dict):
        if "content" not in body or "styles" not in body:
            raise ScriptError("body needs 'content' and 'styles'")
        if not isinstance(body["styles"], list) or not body["styles"]:
            raise ScriptError("styles must be a non-empty list")
        content = _decode_upload(body["content"], "content")
        styles = [_decode_upload(s, f"styles[{i}]")
                  for i, s in enumerate(body["styles"])]
        raw_params = body.get("params", {})
        if not isinstance(raw_params, dict):
            raise ScriptError("params must be an object")
        try:
            params = Params(**{k: float(v) for k, v in raw_params.items()
                               if k in ("v", "r", "epsilon", "alpha", "dt")})
        except (TypeError, ValueError) as exc:
            raise ScriptError(f"invalid params: {exc}") from exc
        try:
            session = Session(content, styles, params=params, backend=backend)
        except ValueError as exc:
            raise ScriptError(str(exc)) from exc
        session_id = uuid.uuid4().hex
        with registry_lock:
            registry[session_id] = SessionEntry(session)
        return {
            "session_id": session_id,
            "height": content.height,
            "width": content.width,
            "styles": [{"height": s.height, "width": s.width} for s in styles],
        }

    @app.post("/sessions/{session_id}/dip")
    def dip_endpoint(session_id: str, body: dict):
        entry = get_entry(session_id)
        if entry is None:
            return error_json(404, "unknown session")
        targets_raw = body.get("targets")
        if not isinstance(targets_raw, list) or not targets_raw:
            raise ScriptError("dip needs a non-empty targets list")
        sess = entry.session
        targets = []
        for i, t in enumerate(targets_raw):
            if not isinstance(t, dict) or "style" not in t:
                raise ScriptError(f"targets[{i}] needs a style index")
            idx = t["style"]
            if not isinstance(idx, int) or not 0 <= idx < len(sess.styles):
                raise ScriptError(f"targets[{i}]: style index out of range")
            style = sess.styles[idx]
            targets.append(
                (idx, build_mask(t.get("pixels"), style.height, style.width))
            )
        with entry.lock:
            stats = sess.dip(targets)
            previews = getattr(sess, "last_dip_penetrations", [])
            preview = previews[-1] if previews else None
        return {
            "channels": stats.channels,
            "mean": stats.mean.tolist(),
            "std": stats.std.tolist(),
            "sources": list(stats.sources),
            "preview_penetration": _b64(_encode_gray_png(preview))
            if preview is not None else None,
        }

    @app.post("/sessions/{session_id}/paint")
    def paint_endpoint(session_id: str, body: dict):
        entry = get_entry(session_id)
        if entry is None:
            return error_json(404, "unknown session")
        sess = entry.session
        if entry.job is not None and not entry.job.finished.is_set():
            return error_json(409, "a paint is already running on this session")
        mode = body.get("mode", "auto")
        if mode not in ("auto", "manual"):
            raise ScriptError("mode must be 'auto' or 'manual'")
        steps = body.get("steps")
        if steps is not None and (not isinstance(steps, int) or steps < 0):
            raise ScriptError("steps must be a non-negative integer")
        mask = build_mask(body.get("pixels"), sess.content.height,
                          sess.content.width)
        if sess.brush is None:
            raise NoBrushError("dip a style before painting")
        job = PaintJob(uuid.uuid4().hex)
        if mode == "manual" and steps == 0:
            job.stop.set()
        entry.job = job

        def frame_message(kind: str, frame) -> dict:
            rate = frame.rate
            return {
                "session": session_id,
                "stream": job.stream_id,
                "kind": kind,
                "step": frame.step,
                "state": frame.state,
                "rate": rate if rate is not None and np.isfinite(rate) else None,
                "committed": frame.committed,
                "payload": _b64(
                    _encode_gray_png(frame.penetration)
                    if kind == "penetration-frame"
                    else encode_png(frame.image)
                ),
            }

        def worker():
            job.started.wait()
            last_emit = [0.0]

            def throttle(step: int) -> bool:
                # Frames at a requested step budget must always surface so
                # the stop lands deterministically; otherwise cap at 30 fps.
                if mode == "manual" and steps is not None and step >= steps:
                    return True
                now = time.monotonic()
                if now - last_emit[0] >= FRAME_INTERVAL:
                    last_emit[0] = now
                    return True
                return False

            try:
                with entry.lock:
                    for frame in sess.paint(mask, mode, job.stop,
                                            frame_filter=throttle):
                        if frame.terminal:
                            job.push(frame_message("terminal", frame))
                        else:
                            job.push(frame_message("penetration-frame", frame))
                            job.push(frame_message("render-frame", frame))
                            if (mode == "manual" and steps is not None
                                    and frame.step >= steps):
                                job.stop.set()
            except StyleBrushError as exc:
                job.push({
                    "session": session_id,
                    "stream": job.stream_id,
                    "kind": "error",
                    "step": None,
                    "state": "error",
                    "rate": None,
                    "committed": False,
                    "payload": str(exc),
                })
            finally:
                job.push(None)
                job.finished.set()

        job.thread = threading.Thread(target=worker, daemon=True)
        job.thread.start()
        return {"stream_id": job.stream_id}

    def _get_job(session_id: str, stream_id: str):
        entry = get_entry(session_id)
        if entry is None:
            return None, None
        job = entry.job
        if job is None or job.stream_id != stream_id:
            return entry, None
        return entry, job

    @app.get("/sessions/{session_id}/paint/{stream_id}/stream")
    def stream_endpoint(session_id: str, stream_id: str):
        entry, job = _get_job(session_id, stream_id)
        if entry is None:
            return error_json(404, "unknown session")
        if job is None:
            return error_json(404, "unknown paint stream")

        def gen():
            job.started.set()
            while True:
                msg = job.queue.get()
                if msg is None:
                    break
                yield json.dumps(msg) + "\n"

        return StreamingResponse(gen(), media_type="application/x-ndjson")

    @app.post("/sessions/{session_id}/paint/{stream_id}/stop")
    def stop_endpoint(session_id: str, stream_id: str):
        entry, job = _get_job(session_id, stream_id)
        if entry is None:
            return error_json(404, "unknown session")
        if job is None:
            return error_json(404, "unknown paint stream")
        job.stop.set()
        job.started.set()
        return {"stopped": True}

    @app.post("/sessions/{session_id}/undo")
    def undo_endpoint(session_id: str):
        entry = get_entry(session_id)
        if entry is None:
            return error_json(404, "unknown session")
        with entry.lock:
            entry.session.undo()
            return {"paints": entry.session.paint_count}

    @app.get("/sessions/{session_id}/export")
    def export_endpoint(session_id: str):
        entry = get_entry(session_id)
        if entry is None:
            return error_json(404, "unknown session")
        with entry.lock:
            png = encode_png(entry.session.export())
        return Response(content=png, media_type="image/png")

    @app.delete("/sessions/{session_id}")
    def delete_endpoint(session_id: str):
        with registry_lock:
            entry = registry.pop(session_id, None)
        if entry is None:
            return error_json(404, "unknown session")
        if entry.job is not None and not entry.job.finished.is_set():
            entry.job.stop.set()
            entry.job.started.set()
            entry.job.thread.join(timeout=10.0)
        return {"deleted": True}

    return app
