"""HTTP service exposing sequences, clouds, frustum queries, annotation CRUD,
transfer, evaluation and autosave.

Concurrency model: sessions for different sequences are fully independent;
within one session every mutation takes the session lock, so mutations are
serialized in arrival order and the operation log is a serial witness of the
final state. Reads never mutate.

All numeric fields are SI (meters, radians, seconds). Clouds and images are
served as the raw on-disk bytes.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, Response
from pydantic import BaseModel, Field

from . import archive as archive_mod
from .engine import (
    AnnotationSession,
    BevEdge,
    Edge,
    View,
    ViewEdit,
    verify_projection,
)
from .errors import (
    AllBehindCameraError,
    DegenerateFootprintError,
    DegenerateResultError,
    FlavaError,
    FrameMismatchError,
    HeightLockedError,
    NothingToTransferError,
    UnknownBoxError,
    UnknownFrameError,
)
from .evaluation import evaluate
from .geometry import Box3D, Category, Rect2D, frustum_select
from .kitti_io import (
    PointCloud,
    SequenceDescriptor,
    box_from_label,
    load_point_cloud,
    read_labels,
    scan_data_root,
)

log = logging.getLogger("flava.service")


@dataclass
class ServiceConfig:
    data_root: Path
    autosave_secs: float = 30.0
    save_dir: Path | None = None  # default: <data_root>/_sessions
    clip_percentiles: tuple[float, float] = (0.0, 100.0)
    anchors: dict | None = None
    frontend_dir: Path | None = None

    def resolved_save_dir(self) -> Path:
        return self.save_dir if self.save_dir is not None else Path(self.data_root) / "_sessions"


@dataclass
class SessionHolder:
    """One sequence's live annotation state plus its mutation lock."""

    session: AnnotationSession
    token: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    dirty: bool = False
    last_autosave: float | None = None
    _cloud_cache: dict = field(default_factory=dict)


def box_to_wire(session: AnnotationSession, frame: int, box: Box3D) -> dict:
    return {
        "frame": frame,
        "track_id": box.track_id,
        "center": [box.x, box.y, box.z],
        "size": [box.length, box.width, box.height],
        "yaw": box.yaw,
        "category": box.category.value,
        "height_locked": session.is_locked(frame, box.track_id),
        "height_defaulted": session.is_defaulted(frame, box.track_id),
    }


def box_from_wire(wire: dict) -> Box3D:
    return Box3D(
        x=wire["center"][0], y=wire["center"][1], z=wire["center"][2],
        length=wire["size"][0], width=wire["size"][1], height=wire["size"][2],
        yaw=wire["yaw"], category=Category(wire["category"]),
        track_id=wire["track_id"],
    )


class FrustumRequest(BaseModel):
    u_min: float
    v_min: float
    u_max: float
    v_max: float


class CreateBoxRequest(BaseModel):
    center: tuple[float, float]
    length: float
    width: float
    yaw: float = 0.0
    category: str = "Car"


class BoxActionRequest(BaseModel):
    action: str
    dx: float = 0.0
    dy: float = 0.0
    dtheta: float = 0.0
    edge: Optional[str] = None
    delta: Optional[float] = None
    view: Optional[str] = None
    shift: Optional[tuple[float, float]] = None
    locked: Optional[bool] = None


class TransferRequest(BaseModel):
    from_frame: int = Field(alias="from")
    to_frame: int = Field(alias="to")

    model_config = {"populate_by_name": True}


class TransferObjectRequest(BaseModel):
    frame: int
    source_track_id: int
    target: tuple[float, float]


class EvaluateRequest(BaseModel):
    gt_path: str


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        sequences, skipped = scan_data_root(config.data_root)
        self.sequences: dict[str, SequenceDescriptor] = {s.sequence_id: s for s in sequences}
        self.skipped = skipped
        self.holders: dict[str, SessionHolder] = {}
        self.holders_lock = threading.Lock()

    # -- session lifecycle ----------------------------------------------------

    def archive_path(self, sequence_id: str) -> Path:
        return self.config.resolved_save_dir() / f"{sequence_id}.session.json"

    def holder(self, sequence_id: str) -> SessionHolder:
        """Live session for a sequence, recovering from the last autosave
        archive when one exists."""
        with self.holders_lock:
            if sequence_id in self.holders:
                return self.holders[sequence_id]
            seq = self.sequences.get(sequence_id)
            if seq is None:
                raise KeyError(sequence_id)
            path = self.archive_path(sequence_id)
            if path.is_file():
                session = archive_mod.import_session(path)
                session.sequence = seq
                session.frame_count = seq.frame_count
            else:
                session = AnnotationSession(sequence=seq)
            session.anchors = dict(self.config.anchors) if self.config.anchors else session.anchors
            session.clip_percentiles = self.config.clip_percentiles
            holder = SessionHolder(session=session, token=uuid.uuid4().hex)
            session.cloud_provider = lambda frame: self.cloud(holder, frame)
            self.holders[sequence_id] = holder
            return holder

    def cloud(self, holder: SessionHolder, frame: int) -> PointCloud:
        if frame not in holder._cloud_cache:
            ref = holder.session.sequence.frame(frame)
            holder._cloud_cache[frame] = load_point_cloud(ref.cloud_path)
        return holder._cloud_cache[frame]

    def annotation_count(self, sequence_id: str) -> int:
        with self.holders_lock:
            holder = self.holders.get(sequence_id)
        if holder is not None:
            return sum(len(v) for v in holder.session.boxes.values())
        path = self.archive_path(sequence_id)
        if path.is_file():
            try:
                saved = archive_mod.import_session(path)
                return sum(len(v) for v in saved.boxes.values())
            except FlavaError:
                return 0
        return 0

    def save(self, sequence_id: str) -> Path | None:
        """Persist a holder's session if dirty; returns the archive path."""
        with self.holders_lock:
            holder = self.holders.get(sequence_id)
        if holder is None:
            return None
        with holder.lock:
            path = archive_mod.export_session(holder.session, self.archive_path(sequence_id))
            holder.dirty = False
            holder.last_autosave = time.time()
        return path

    def autosave_pass(self) -> list[str]:
        """One sweep of the autosave policy: write every dirty session whose
        last save is older than the configured interval."""
        saved = []
        now = time.time()
        with self.holders_lock:
            items = list(self.holders.items())
        for sequence_id, holder in items:
            if not holder.dirty:
                continue
            if holder.last_autosave is not None and \
                    now - holder.last_autosave < self.config.autosave_secs:
                continue
            try:
                self.save(sequence_id)
                saved.append(sequence_id)
            except OSError as exc:
                log.warning("autosave of %s failed (%s); annotations kept in memory",
                            sequence_id, exc)
        return saved


class AutosaveWorker(threading.Thread):
    def __init__(self, state: ServiceState, poll_secs: float = 1.0):
        super().__init__(daemon=True, name="flava-autosave")
        self.state = state
        self.poll_secs = poll_secs
        self._stop = threading.Event()

    def run(self):
        while not self._stop.wait(self.poll_secs):
            self.state.autosave_pass()

    def stop(self):
        self._stop.set()


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, (UnknownFrameError, UnknownBoxError, KeyError, FileNotFoundError)):
        return HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, HeightLockedError):
        return HTTPException(status_code=409, detail=str(exc))
    if isinstance(exc, (DegenerateResultError, DegenerateFootprintError,
                        NothingToTransferError, FrameMismatchError, ValueError)):
        return HTTPException(status_code=422, detail=str(exc))
    if isinstance(exc, FlavaError):
        return HTTPException(status_code=422, detail=str(exc))
    return HTTPException(status_code=500, detail=str(exc))


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        worker = AutosaveWorker(state)
        worker.start()
        try:
            yield
        finally:
            worker.stop()
            state.autosave_pass()

    app = FastAPI(title="flava annotation service", lifespan=lifespan)
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    def _sequence(sequence_id: str) -> SequenceDescriptor:
        seq = state.sequences.get(sequence_id)
        if seq is None:
            raise HTTPException(status_code=404, detail=f"unknown sequence {sequence_id!r}")
        return seq

    def _frame_ref(sequence_id: str, frame: int):
        seq = _sequence(sequence_id)
        try:
            return seq.frame(frame)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown frame {frame} in {sequence_id!r}") from None

    def _authorized_holder(sequence_id: str, token: str | None,
                           header_token: str | None) -> SessionHolder:
        _sequence(sequence_id)
        holder = state.holder(sequence_id)
        supplied = token or header_token
        if supplied != holder.token:
            raise HTTPException(status_code=401, detail="missing or invalid session token")
        return holder

    # -- read endpoints ---------------------------------------------------------

    @app.get("/sequences")
    def get_sequences():
        return [
            {
                "id": seq.sequence_id,
                "frame_count": seq.frame_count,
                "annotation_count": state.annotation_count(seq.sequence_id),
            }
            for seq in sorted(state.sequences.values(), key=lambda s: s.sequence_id)
        ]

    @app.post("/sequences/{sequence_id}/session")
    def open_session(sequence_id: str):
        _sequence(sequence_id)
        holder = state.holder(sequence_id)
        return {"token": holder.token, "sequence_id": sequence_id,
                "log_length": len(holder.session.op_log)}

    @app.get("/sequences/{sequence_id}/frames/{frame}")
    def get_frame(sequence_id: str, frame: int):
        seq = _sequence(sequence_id)
        ref = _frame_ref(sequence_id, frame)
        holder = state.holder(sequence_id)
        base = f"/sequences/{sequence_id}/frames/{frame}"
        return {
            "sequence_id": sequence_id,
            "frame": frame,
            "calibration": seq.calibration.as_dict(),
            "cloud_url": f"{base}/cloud",
            "image_url": f"{base}/image" if ref.image_path else None,
            "boxes": [box_to_wire(holder.session, frame, b)
                      for b in holder.session.boxes.get(frame, [])],
        }

    @app.get("/sequences/{sequence_id}/frames/{frame}/cloud")
    def get_cloud(sequence_id: str, frame: int):
        ref = _frame_ref(sequence_id, frame)
        return FileResponse(ref.cloud_path, media_type="application/octet-stream")

    @app.get("/sequences/{sequence_id}/frames/{frame}/image")
    def get_image(sequence_id: str, frame: int):
        ref = _frame_ref(sequence_id, frame)
        if not ref.image_path:
            raise HTTPException(status_code=404, detail="frame has no image")
        return FileResponse(ref.image_path)

    @app.post("/sequences/{sequence_id}/frames/{frame}/frustum")
    def frustum(sequence_id: str, frame: int, req: FrustumRequest):
        seq = _sequence(sequence_id)
        _frame_ref(sequence_id, frame)
        holder = state.holder(sequence_id)
        try:
            rect = Rect2D(req.u_min, req.v_min, req.u_max, req.v_max)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        cloud = state.cloud(holder, frame)
        sel = frustum_select(seq.calibration, cloud, rect)
        return {
            "indices": sel.indices.tolist(),
            "count": int(len(sel.indices)),
            "depth_min": sel.depth_min,
            "depth_max": sel.depth_max,
        }

    @app.get("/sequences/{sequence_id}/frames/{frame}/boxes/{track_id}/projection")
    def box_projection(sequence_id: str, frame: int, track_id: int):
        seq = _sequence(sequence_id)
        holder = state.holder(sequence_id)
        try:
            box = holder.session.get_box(frame, track_id)
            result = verify_projection(seq.calibration, box)
        except AllBehindCameraError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except FlavaError as exc:
            raise _http_error(exc) from exc
        return {
            "points": [list(p) if p is not None else None for p in result.points],
            "hull": [result.hull.u_min, result.hull.v_min,
                     result.hull.u_max, result.hull.v_max],
            "behind_count": result.behind_count,
        }

    # -- mutation endpoints -------------------------------------------------------

    @app.post("/sequences/{sequence_id}/frames/{frame}/boxes", status_code=201)
    def create_box(sequence_id: str, frame: int, req: CreateBoxRequest,
                   token: str | None = Query(default=None),
                   x_session_token: str | None = Header(default=None)):
        holder = _authorized_holder(sequence_id, token, x_session_token)
        with holder.lock:
            try:
                box = holder.session.create_box_from_bev(
                    frame, req.center, req.length, req.width, req.yaw,
                    Category(req.category),
                )
            except FlavaError as exc:
                raise _http_error(exc) from exc
            holder.dirty = True
            return {"box": box_to_wire(holder.session, frame, box),
                    "log_length": len(holder.session.op_log)}

    @app.patch("/sequences/{sequence_id}/frames/{frame}/boxes/{track_id}")
    def mutate_box(sequence_id: str, frame: int, track_id: int, req: BoxActionRequest,
                   token: str | None = Query(default=None),
                   x_session_token: str | None = Header(default=None)):
        holder = _authorized_holder(sequence_id, token, x_session_token)
        session = holder.session
        with holder.lock:
            try:
                if req.action == "shift":
                    box = session.shift_box(frame, track_id, req.dx, req.dy)
                elif req.action == "rotate":
                    box = session.rotate_box(frame, track_id, req.dtheta)
                elif req.action == "resize_bev":
                    box = session.resize_box_bev(frame, track_id,
                                                 BevEdge(req.edge), req.delta)
                elif req.action == "view_edit":
                    edit = ViewEdit(
                        view=View(req.view),
                        edge=Edge(req.edge) if req.edge else None,
                        delta=req.delta,
                        shift=req.shift,
                    )
                    box = session.edit_box_view(frame, track_id, edit)
                elif req.action == "lock":
                    session.lock_height(frame, track_id, bool(req.locked))
                    box = session.get_box(frame, track_id)
                else:
                    raise HTTPException(status_code=422,
                                        detail=f"unknown action {req.action!r}")
            except FlavaError as exc:
                raise _http_error(exc) from exc
            holder.dirty = True
            return {"box": box_to_wire(session, frame, box),
                    "log_length": len(session.op_log)}

    @app.delete("/sequences/{sequence_id}/frames/{frame}/boxes/{track_id}")
    def delete_box(sequence_id: str, frame: int, track_id: int,
                   token: str | None = Query(default=None),
                   x_session_token: str | None = Header(default=None)):
        holder = _authorized_holder(sequence_id, token, x_session_token)
        with holder.lock:
            try:
                holder.session.delete_box(frame, track_id)
            except FlavaError as exc:
                raise _http_error(exc) from exc
            holder.dirty = True
            return {"deleted": track_id, "log_length": len(holder.session.op_log)}

    @app.post("/sequences/{sequence_id}/transfer")
    def transfer_frame(sequence_id: str, req: TransferRequest,
                       token: str | None = Query(default=None),
                       x_session_token: str | None = Header(default=None)):
        holder = _authorized_holder(sequence_id, token, x_session_token)
        with holder.lock:
            try:
                report = holder.session.transfer_inter_frame(req.from_frame, req.to_frame)
            except FlavaError as exc:
                raise _http_error(exc) from exc
            holder.dirty = True
            return {
                "copied": [box_to_wire(holder.session, req.to_frame, b)
                           for b in report.copied],
                "conflicts": list(report.conflicts),
                "log_length": len(holder.session.op_log),
            }

    @app.post("/sequences/{sequence_id}/transfer_object")
    def transfer_object(sequence_id: str, req: TransferObjectRequest,
                        token: str | None = Query(default=None),
                        x_session_token: str | None = Header(default=None)):
        holder = _authorized_holder(sequence_id, token, x_session_token)
        with holder.lock:
            try:
                box = holder.session.transfer_inter_object(
                    req.frame, req.source_track_id, req.target)
            except FlavaError as exc:
                raise _http_error(exc) from exc
            holder.dirty = True
            return {"box": box_to_wire(holder.session, req.frame, box),
                    "log_length": len(holder.session.op_log)}

    @app.post("/sequences/{sequence_id}/evaluate")
    def evaluate_endpoint(sequence_id: str, req: EvaluateRequest):
        seq = _sequence(sequence_id)
        holder = state.holder(sequence_id)
        try:
            records = read_labels(req.gt_path)
        except FlavaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except FileNotFoundError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        gts: dict[int, list[Box3D]] = {}
        for rec in records:
            gts.setdefault(rec.frame, []).append(box_from_label(rec, seq.calibration))
        try:
            report = evaluate(dict(holder.session.boxes), gts)
        except FrameMismatchError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return report.as_dict()

    @app.post("/sequences/{sequence_id}/save")
    def save(sequence_id: str):
        _sequence(sequence_id)
        state.holder(sequence_id)
        try:
            path = state.save(sequence_id)
        except OSError as exc:
            return Response(status_code=507, content=f"save failed: {exc}")
        return {"path": str(path)}

    @app.post("/save")
    def save_all():
        saved = []
        with state.holders_lock:
            dirty = [sid for sid, h in state.holders.items() if h.dirty]
        for sequence_id in dirty:
            try:
                state.save(sequence_id)
                saved.append(sequence_id)
            except OSError as exc:
                return Response(status_code=507,
                                content=f"save of {sequence_id} failed: {exc}")
        return {"saved": saved}

    @app.get("/sequences/{sequence_id}/stats")
    def stats(sequence_id: str):
        _sequence(sequence_id)
        holder = state.holder(sequence_id)
        stats = holder.session.operation_stats()
        return {
            "by_kind": {k.value: v for k, v in stats.by_kind.items()},
            "instances": len(stats.per_instance),
            "transferred_instances": [list(k) for k in stats.transferred_instances],
            "mean_ops_per_instance": stats.mean_ops_per_instance,
            "mean_ops_transferred": stats.mean_ops_transferred,
            "mean_ops_untransferred": stats.mean_ops_untransferred,
        }

    if config.frontend_dir and Path(config.frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(config.frontend_dir), html=True),
                  name="ui")

    return app
