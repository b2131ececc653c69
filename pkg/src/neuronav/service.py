"""HTTP service for the viewer: scene, meshes, commands, SSE updates, upload.

One writer: all scene mutations pass through SessionState under a lock, so
revisions are gap-free and every accepted mutation emits exactly one event.
Readers always get an immutable snapshot tagged with its revision.
"""

from __future__ import annotations

import errno
import io
import json
import logging
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from .errors import NeuronavError, PipelineStageError, PortInUse, UnknownCommand
from .mesh import TriangleMesh, export_obj
from .pipeline import segment_and_mesh, volume_from_upload
from .scene import SceneState, apply_command, default_scene, parse_scene, serialize_scene
from .segmentation import SegmentationConfig

logger = logging.getLogger(__name__)

_SSE_KEEPALIVE_S = 15.0


@dataclass
class EventRecord:
    revision: int
    kind: str  # "command" | "upload"
    text: str
    timestamp: float


class SessionState:
    """Single-writer scene session with subscriber fan-out."""

    def __init__(self, scene: SceneState, meshes: dict[str, bytes],
                 segmentation: SegmentationConfig | None = None, iso: float = 0.5):
        self._lock = threading.Lock()
        self._scene = scene
        self._meshes = dict(meshes)  # name -> OBJ bytes
        self._segmentation = segmentation or SegmentationConfig()
        self._iso = iso
        self._events: list[EventRecord] = []
        self._base_revision = scene.revision
        self._subscribers: list[queue.SimpleQueue] = []

    # -- reads ---------------------------------------------------------

    def scene_snapshot(self) -> SceneState:
        with self._lock:
            return self._scene

    def mesh_bytes(self, name: str) -> bytes | None:
        with self._lock:
            return self._meshes.get(name)

    def mesh_names(self) -> list[str]:
        with self._lock:
            return sorted(self._meshes)

    def event_log(self) -> list[EventRecord]:
        with self._lock:
            return list(self._events)

    # -- mutations -----------------------------------------------------

    def command(self, text: str) -> SceneState:
        with self._lock:
            new_scene = apply_command(self._scene, text)  # raises UnknownCommand
            self._scene = new_scene
            self._events.append(EventRecord(
                revision=new_scene.revision, kind="command", text=text,
                timestamp=time.time()))
            self._fanout(new_scene)
            return new_scene

    def replace_models(self, meshes: dict[str, TriangleMesh]) -> SceneState:
        """Adopt freshly built meshes (upload path); bumps the revision."""
        rendered = {}
        for name, mesh in meshes.items():
            buf = io.BytesIO()
            export_obj(mesh, buf)
            rendered[name] = buf.getvalue()
        with self._lock:
            scene = default_scene(marker_pose=self._scene.marker_pose,
                                  offset_mm=self._scene.offset_mm)
            new_scene = SceneState(
                nodes=scene.nodes,
                marker_pose=scene.marker_pose,
                offset_mm=scene.offset_mm,
                revision=self._scene.revision + 1,
            )
            self._meshes.update(rendered)
            self._scene = new_scene
            self._events.append(EventRecord(
                revision=new_scene.revision, kind="upload", text="upload",
                timestamp=time.time()))
            self._fanout(new_scene)
            return new_scene

    @property
    def segmentation(self) -> SegmentationConfig:
        return self._segmentation

    @property
    def iso(self) -> float:
        return self._iso

    # -- events ----------------------------------------------------------

    def _fanout(self, scene: SceneState) -> None:
        payload = _sse_event(scene)
        for q in list(self._subscribers):
            q.put(payload)

    def subscribe(self, last_event_id: int | None):
        """Register a subscriber; returns (replay events, queue)."""
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._lock:
            replay = []
            if last_event_id is not None and self._scene.revision > last_event_id:
                replay.append(_sse_event(self._scene))
            self._subscribers.append(q)
        return replay, q

    def unsubscribe(self, q) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


def _sse_event(scene: SceneState) -> str:
    doc = serialize_scene(scene).replace("\n", "")
    return f"id: {scene.revision}\nevent: scene\ndata: {doc}\n\n"


def load_session(manifest_path: str | Path) -> SessionState:
    """Build a session from a pipeline manifest directory."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    scene = default_scene()
    meshes: dict[str, bytes] = {}
    for art in manifest["artifacts"]:
        path = base / art["file"]
        if art["name"] == "scene":
            scene = parse_scene(path.read_text())
        elif path.suffix == ".obj":
            meshes[art["name"]] = path.read_bytes()
    seg = SegmentationConfig(**manifest.get("config", {}).get("segmentation", {}))
    iso = float(manifest.get("config", {}).get("iso", 0.5))
    return SessionState(scene, meshes, segmentation=seg, iso=iso)


def create_app(session: SessionState) -> FastAPI:
    app = FastAPI(title="neuronav scene service")

    @app.exception_handler(NeuronavError)
    def _neuronav_error(request: Request, exc: NeuronavError):
        status = 422
        if isinstance(exc, PipelineStageError):
            body = {"error": exc.cause.__class__.__name__,
                    "stage": exc.stage, "detail": str(exc.cause)}
        else:
            body = {"error": exc.__class__.__name__, "detail": str(exc)}
        return JSONResponse(status_code=status, content=body)

    @app.get("/health")
    def health():
        return {"status": "ok", "revision": session.scene_snapshot().revision}

    @app.get("/scene")
    def scene():
        return Response(content=serialize_scene(session.scene_snapshot()),
                        media_type="application/json")

    @app.get("/mesh/{name}")
    def mesh(name: str):
        data = session.mesh_bytes(name)
        if data is None:
            return JSONResponse(status_code=404, content={
                "error": "MissingMesh", "detail": f"no mesh named '{name}'",
                "available": session.mesh_names()})
        return PlainTextResponse(content=data, media_type="text/plain")

    @app.post("/command")
    async def command(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse(status_code=400,
                                content={"error": "BadRequest",
                                         "detail": "body must be JSON"})
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str):
            return JSONResponse(status_code=400,
                                content={"error": "BadRequest",
                                         "detail": 'expected {"text": "..."}'})
        new_scene = session.command(text)  # UnknownCommand -> 422 via handler
        return JSONResponse(content={"revision": new_scene.revision,
                                     "scene": json.loads(serialize_scene(new_scene))})

    @app.post("/upload")
    async def upload(request: Request):
        blob = await request.body()
        if not blob:
            return JSONResponse(status_code=400,
                                content={"error": "BadRequest", "detail": "empty body"})
        volume = volume_from_upload(blob)  # stage errors -> 422 via handler
        meshes = segment_and_mesh(volume, session.segmentation, session.iso)
        new_scene = session.replace_models(meshes)
        return JSONResponse(content={"revision": new_scene.revision,
                                     "meshes": sorted(meshes)})

    @app.get("/events")
    def events(request: Request):
        raw_last = request.headers.get("last-event-id")
        try:
            last_id = int(raw_last) if raw_last is not None else None
        except ValueError:
            last_id = None

        def stream():
            replay, q = session.subscribe(last_id)
            try:
                yield "retry: 2000\n\n"
                for item in replay:
                    yield item
                while True:
                    try:
                        yield q.get(timeout=_SSE_KEEPALIVE_S)
                    except queue.Empty:
                        yield ": keepalive\n\n"
            finally:
                session.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    return app


def serve(session: SessionState, port: int, host: str = "127.0.0.1") -> None:
    """Run the service until interrupted. Raises PortInUse when bound."""
    import uvicorn

    app = create_app(session)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as e:
        if e.errno == errno.EADDRINUSE:
            raise PortInUse(f"port {port} is already in use") from e
        raise
