"""Annotation pipeline state machine.

A session owns per-frame box sets, height-lock flags and an append-only
operation log. Box creation derives height from the points under the drawn
footprint; later edits come in through bird-view actions (shift / rotate /
resize) or through projected-view edits (front and side views), and
verification can freeze a box's vertical extent against further change.
Labels propagate between objects and between consecutive frames by copying.

Every mutating call appends one event whose ``params`` are sufficient to
replay it, so a log replayed from an empty session reproduces the final
state (see :func:`replay_log`).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import (
    AllBehindCameraError,
    DegenerateFootprintError,
    DegenerateResultError,
    HeightLockedError,
    InsufficientPointsError,
    NothingToTransferError,
    UnknownBoxError,
    UnknownFrameError,
    ZeroHeightError,
)
from .geometry import (
    BEHIND_CAMERA_EPS,
    GEOM_TOL,
    MIN_DIM,
    Box3D,
    Calibration,
    Category,
    ImagePoint,
    Rect2D,
    _rot2d,
    box_corners,
    normalize_yaw,
    points_in_bev_footprint,
    project_points,
)
from .kitti_io import PointCloud, SequenceDescriptor

# Default per-category reference sizes (length, width, height), meters.
# Conventional mean sizes; used only when automatic height fails.
DEFAULT_ANCHORS: dict[Category, tuple[float, float, float]] = {
    Category.CAR: (3.9, 1.6, 1.56),
    Category.VAN: (5.0, 1.9, 2.1),
    Category.PEDESTRIAN: (0.8, 0.6, 1.73),
    Category.CYCLIST: (1.76, 0.6, 1.73),
}


def anchor_size(category: Category,
                anchors: dict[Category, tuple[float, float, float]] | None = None,
                ) -> tuple[float, float, float]:
    table = anchors if anchors is not None else DEFAULT_ANCHORS
    if category in table:
        return table[category]
    return table.get(Category.CAR, DEFAULT_ANCHORS[Category.CAR])


class OperationKind(str, Enum):
    LOCATE = "Locate"
    SHIFT = "Shift"
    ROTATE = "Rotate"
    RESIZE_BEV = "ResizeBev"
    ADJUST_HEIGHT = "AdjustHeight"
    TRANSFER_OBJECT = "TransferObject"
    TRANSFER_FRAME = "TransferFrame"
    DELETE = "Delete"
    VERIFY_MARK = "VerifyMark"


@dataclass
class OperationEvent:
    kind: OperationKind
    frame: int
    track_id: int
    timestamp: float
    params: dict = field(default_factory=dict)


class View(str, Enum):
    FRONT = "Front"
    SIDE = "Side"


class Edge(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"
    TOP = "Top"
    BOTTOM = "Bottom"


class BevEdge(str, Enum):
    """Bird-view resize handles, named by vehicle body side: Front is the
    +length face, Left the +width (driver-left) face."""

    FRONT = "Front"
    REAR = "Rear"
    LEFT = "Left"
    RIGHT = "Right"


@dataclass(frozen=True)
class ViewEdit:
    """One projected-view adjustment: either a single edge moved outward by
    ``delta`` meters, or a whole-box (horizontal, vertical) shift.

    The front view looks at the box head-on (screen-horizontal is the width
    axis); the side view is seen from the box's right, heading pointing
    screen-right (screen-horizontal is the length axis). ``Right``/``Left``
    name the screen side, ``Top``/``Bottom`` the vertical extremes.
    """

    view: View
    edge: Edge | None = None
    delta: float | None = None
    shift: tuple[float, float] | None = None

    def __post_init__(self):
        edge_form = self.edge is not None and self.delta is not None
        shift_form = self.shift is not None
        if edge_form == shift_form:
            raise ValueError("exactly one of (edge, delta) or shift must be given")
        if shift_form:
            object.__setattr__(self, "shift", (float(self.shift[0]), float(self.shift[1])))

    @property
    def touches_vertical(self) -> bool:
        if self.edge is not None:
            return self.edge in (Edge.TOP, Edge.BOTTOM)
        return self.shift[1] != 0.0

    def negated(self) -> "ViewEdit":
        if self.edge is not None:
            return ViewEdit(view=self.view, edge=self.edge, delta=-self.delta)
        return ViewEdit(view=self.view, shift=(-self.shift[0], -self.shift[1]))


def _body_axis(view: View) -> np.ndarray:
    # Screen-horizontal in the front view runs along body y (width axis);
    # in the side view along body x (length axis).
    return np.array([0.0, 1.0]) if view == View.FRONT else np.array([1.0, 0.0])


def apply_view_edit(box: Box3D, edit: ViewEdit) -> Box3D:
    """Map a 2D projected-view adjustment onto the 3D box.

    Vertical edits act on height and center z directly. Horizontal edge edits
    move the named face outward by ``delta`` in the unrotated (yaw = 0) frame,
    which grows the dimension by ``delta`` and shifts the center by
    ``delta / 2`` along that body axis; the result is rotated back around the
    original center. Shifts translate along the body axes without resizing.
    """
    if edit.shift is not None:
        horizontal, vertical = edit.shift
        world = _rot2d(box.yaw) @ (_body_axis(edit.view) * horizontal)
        return box.moved(x=box.x + world[0], y=box.y + world[1], z=box.z + vertical)

    delta = float(edit.delta)
    if edit.edge == Edge.TOP:
        new_h = box.height + delta
        _require_dim(new_h)
        return box.moved(height=new_h, z=box.z + delta / 2.0)
    if edit.edge == Edge.BOTTOM:
        new_h = box.height + delta
        _require_dim(new_h)
        return box.moved(height=new_h, z=box.z - delta / 2.0)

    sign = 1.0 if edit.edge == Edge.RIGHT else -1.0
    world = _rot2d(box.yaw) @ (_body_axis(edit.view) * (sign * delta / 2.0))
    if edit.view == View.FRONT:
        new_w = box.width + delta
        _require_dim(new_w)
        return box.moved(width=new_w, x=box.x + world[0], y=box.y + world[1])
    new_l = box.length + delta
    _require_dim(new_l)
    return box.moved(length=new_l, x=box.x + world[0], y=box.y + world[1])


def _require_dim(value: float) -> None:
    if value <= MIN_DIM:
        raise DegenerateResultError(f"dimension would drop to {value:.6g} m")


def auto_height(cloud, footprint: Box3D,
                clip_percentiles: tuple[float, float] = (0.0, 100.0),
                ) -> tuple[float, float]:
    """Derive (center_z, height) from the points under a bird-view footprint.

    With the default (0, 100) percentiles the span is the strict min/max of
    in-footprint z; tighter percentiles clip outliers. Requires at least two
    points and a non-degenerate vertical span.
    """
    low, high = clip_percentiles
    if not (0.0 <= low < high <= 100.0):
        raise ValueError(f"bad percentile pair ({low}, {high})")
    idx = points_in_bev_footprint(cloud, footprint)
    if len(idx) < 2:
        raise InsufficientPointsError(f"{len(idx)} points in footprint, need >= 2")
    z = np.sort(np.asarray(cloud.xyz if hasattr(cloud, "xyz") else cloud)[idx, 2])
    z_low, z_high = np.percentile(z, [low, high])
    height = float(z_high - z_low)
    if height <= MIN_DIM:
        raise ZeroHeightError(f"vertical span {height:.6g} m is degenerate")
    return float((z_high + z_low) / 2.0), height


@dataclass(frozen=True)
class VerifyProjection:
    """The 8 box corners projected to the image. ``points`` holds one entry
    per corner (None when that corner is behind the camera); ``hull`` is the
    pixel bounding rectangle of the in-front corners."""

    points: tuple[ImagePoint | None, ...]
    hull: Rect2D

    @property
    def behind_count(self) -> int:
        return sum(1 for p in self.points if p is None)


def verify_projection(calib: Calibration, box: Box3D) -> VerifyProjection:
    corners = box_corners(box)
    uv, depth = project_points(calib, corners)
    in_front = depth > BEHIND_CAMERA_EPS
    if not in_front.any():
        raise AllBehindCameraError(f"all 8 corners behind camera for track {box.track_id}")
    points = tuple(
        ImagePoint(float(uv[i, 0]), float(uv[i, 1]), float(depth[i])) if in_front[i] else None
        for i in range(8)
    )
    sel = uv[in_front]
    u_min, v_min = sel.min(axis=0)
    u_max, v_max = sel.max(axis=0)
    # A single visible corner gives a zero-size hull; widen so the rect stays valid.
    if u_max - u_min <= GEOM_TOL:
        u_max = u_min + GEOM_TOL
    if v_max - v_min <= GEOM_TOL:
        v_max = v_min + GEOM_TOL
    return VerifyProjection(points=points,
                            hull=Rect2D(float(u_min), float(v_min), float(u_max), float(v_max)))


@dataclass(frozen=True)
class TransferReport:
    copied: tuple[Box3D, ...]
    conflicts: tuple[int, ...]


@dataclass(frozen=True)
class OperationStats:
    by_kind: dict
    per_instance: dict
    transferred_instances: tuple
    mean_ops_per_instance: float | None
    mean_ops_transferred: float | None
    mean_ops_untransferred: float | None


class AnnotationSession:
    """Single-writer annotation state for one sequence.

    Mutating calls must be externally serialized (the HTTP service holds one
    lock per session); reads are safe to run concurrently with each other.
    """

    def __init__(
        self,
        sequence: SequenceDescriptor | None = None,
        frame_count: int | None = None,
        anchors: dict[Category, tuple[float, float, float]] | None = None,
        clip_percentiles: tuple[float, float] = (0.0, 100.0),
        clock: Callable[[], float] = time.time,
        cloud_provider: Callable[[int], PointCloud] | None = None,
    ):
        self.sequence = sequence
        self.frame_count = sequence.frame_count if sequence is not None else frame_count
        self.anchors = dict(anchors) if anchors is not None else dict(DEFAULT_ANCHORS)
        self.clip_percentiles = clip_percentiles
        self.clock = clock
        self.cloud_provider = cloud_provider
        self.boxes: dict[int, list[Box3D]] = {}
        self.height_locked: set[tuple[int, int]] = set()
        self.height_defaulted: set[tuple[int, int]] = set()
        self.op_log: list[OperationEvent] = []
        self.next_track_id: int = 0

    # -- bookkeeping --------------------------------------------------------

    def frame_exists(self, frame: int) -> bool:
        if self.sequence is not None:
            return frame in self.sequence.frame_indices
        if self.frame_count is not None:
            return 0 <= frame < self.frame_count
        return frame >= 0

    def _require_frame(self, frame: int) -> None:
        if not self.frame_exists(frame):
            raise UnknownFrameError(f"frame {frame} does not exist")

    def _find(self, frame: int, track_id: int) -> tuple[int, Box3D]:
        for i, box in enumerate(self.boxes.get(frame, [])):
            if box.track_id == track_id:
                return i, box
        raise UnknownBoxError(f"no box with track {track_id} in frame {frame}")

    def get_box(self, frame: int, track_id: int) -> Box3D:
        return self._find(frame, track_id)[1]

    def is_locked(self, frame: int, track_id: int) -> bool:
        return (frame, track_id) in self.height_locked

    def is_defaulted(self, frame: int, track_id: int) -> bool:
        return (frame, track_id) in self.height_defaulted

    def _log(self, kind: OperationKind, frame: int, track_id: int, params: dict) -> None:
        self.op_log.append(OperationEvent(kind, frame, track_id, self.clock(), params))

    def _replace(self, frame: int, index: int, box: Box3D) -> None:
        self.boxes[frame][index] = box

    def _insert(self, frame: int, box: Box3D, locked: bool = False,
                defaulted: bool = False) -> None:
        held = self.boxes.setdefault(frame, [])
        if any(b.track_id == box.track_id for b in held):
            raise ValueError(f"track {box.track_id} already present in frame {frame}")
        held.append(box)
        if locked:
            self.height_locked.add((frame, box.track_id))
        if defaulted:
            self.height_defaulted.add((frame, box.track_id))
        self.next_track_id = max(self.next_track_id, box.track_id + 1)

    def _cloud_for(self, frame: int) -> PointCloud | None:
        if self.cloud_provider is not None:
            return self.cloud_provider(frame)
        return None

    # -- pipeline operations --------------------------------------------------

    def create_box_from_bev(
        self,
        frame: int,
        center_xy: tuple[float, float],
        length: float,
        width: float,
        yaw: float,
        category: Category,
        cloud: PointCloud | None = None,
    ) -> Box3D:
        """Create a box from a bird-view rectangle, deriving the vertical
        extent from the points under the footprint.

        When too few points (or a degenerate span) are found, the category
        anchor height is used with the bottom resting on the lowest
        in-footprint point (or z = 0 with no points at all), and the box is
        flagged height-defaulted.
        """
        self._require_frame(frame)
        if length <= MIN_DIM or width <= MIN_DIM:
            raise DegenerateFootprintError(f"footprint ({length} x {width}) is degenerate")
        category = Category(category)
        if cloud is None:
            cloud = self._cloud_for(frame)
        if cloud is None:
            xyz = np.empty((0, 3))
        elif hasattr(cloud, "xyz"):
            xyz = cloud.xyz
        else:
            xyz = np.asarray(cloud, dtype=np.float64)[:, :3]

        probe = Box3D(x=center_xy[0], y=center_xy[1], z=0.0,
                      length=length, width=width, height=1.0, yaw=yaw)
        defaulted = False
        try:
            center_z, height = auto_height(xyz, probe, self.clip_percentiles)
        except (InsufficientPointsError, ZeroHeightError):
            height = anchor_size(category, self.anchors)[2]
            idx = points_in_bev_footprint(xyz, probe)
            bottom = float(xyz[idx, 2].min()) if len(idx) else 0.0
            center_z = bottom + height / 2.0
            defaulted = True

        box = Box3D(x=center_xy[0], y=center_xy[1], z=center_z,
                    length=length, width=width, height=height,
                    yaw=yaw, category=category, track_id=self.next_track_id)
        self.next_track_id += 1
        self.boxes.setdefault(frame, []).append(box)
        if defaulted:
            self.height_defaulted.add((frame, box.track_id))
        self._log(OperationKind.LOCATE, frame, box.track_id, {
            "op": "create",
            "box": _box_dict(box),
            "height_defaulted": defaulted,
        })
        return box

    def shift_box(self, frame: int, track_id: int, dx: float, dy: float) -> Box3D:
        """Bird-view translation; z is never touched."""
        i, box = self._find(frame, track_id)
        moved = box.moved(x=box.x + dx, y=box.y + dy)
        self._replace(frame, i, moved)
        self._log(OperationKind.SHIFT, frame, track_id, {"op": "shift", "dx": dx, "dy": dy})
        return moved

    def rotate_box(self, frame: int, track_id: int, dtheta: float) -> Box3D:
        """Rotate about the box center; size and vertical extent unchanged."""
        i, box = self._find(frame, track_id)
        moved = box.moved(yaw=normalize_yaw(box.yaw + dtheta))
        self._replace(frame, i, moved)
        self._log(OperationKind.ROTATE, frame, track_id, {"op": "rotate", "dtheta": dtheta})
        return moved

    def resize_box_bev(self, frame: int, track_id: int, edge: BevEdge, delta: float) -> Box3D:
        """Move one footprint face outward by ``delta``; affects length or
        width only, so it is always legal on a height-locked box."""
        i, box = self._find(frame, track_id)
        edge = BevEdge(edge)
        if edge in (BevEdge.FRONT, BevEdge.REAR):
            new_l = box.length + delta
            _require_dim(new_l)
            sign = 1.0 if edge == BevEdge.FRONT else -1.0
            world = _rot2d(box.yaw) @ np.array([sign * delta / 2.0, 0.0])
            moved = box.moved(length=new_l, x=box.x + world[0], y=box.y + world[1])
        else:
            new_w = box.width + delta
            _require_dim(new_w)
            sign = 1.0 if edge == BevEdge.LEFT else -1.0
            world = _rot2d(box.yaw) @ np.array([0.0, sign * delta / 2.0])
            moved = box.moved(width=new_w, x=box.x + world[0], y=box.y + world[1])
        self._replace(frame, i, moved)
        self._log(OperationKind.RESIZE_BEV, frame, track_id,
                  {"op": "resize_bev", "edge": edge.value, "delta": delta})
        return moved

    def edit_box_view(self, frame: int, track_id: int, edit: ViewEdit) -> Box3D:
        """Apply a front/side-view edit, honoring the height lock: once a
        box is verified, any edit that would touch height or center z is
        rejected."""
        i, box = self._find(frame, track_id)
        if edit.touches_vertical and self.is_locked(frame, track_id):
            raise HeightLockedError(f"height locked for track {track_id} in frame {frame}")
        edited = apply_view_edit(box, edit)
        self._replace(frame, i, edited)
        if edit.touches_vertical:
            kind = OperationKind.ADJUST_HEIGHT
        elif edit.edge is not None:
            kind = OperationKind.RESIZE_BEV
        else:
            kind = OperationKind.SHIFT
        self._log(kind, frame, track_id, {
            "op": "view_edit",
            "view": edit.view.value,
            "edge": edit.edge.value if edit.edge else None,
            "delta": edit.delta,
            "shift": list(edit.shift) if edit.shift else None,
        })
        return edited

    def lock_height(self, frame: int, track_id: int, locked: bool) -> None:
        self._find(frame, track_id)
        if locked:
            self.height_locked.add((frame, track_id))
        else:
            self.height_locked.discard((frame, track_id))
        self._log(OperationKind.VERIFY_MARK, frame, track_id,
                  {"op": "lock", "locked": locked})

    def delete_box(self, frame: int, track_id: int) -> None:
        i, _ = self._find(frame, track_id)
        del self.boxes[frame][i]
        self.height_locked.discard((frame, track_id))
        self.height_defaulted.discard((frame, track_id))
        self._log(OperationKind.DELETE, frame, track_id, {"op": "delete"})

    def transfer_inter_object(self, frame: int, source_track_id: int,
                              target_xy: tuple[float, float]) -> Box3D:
        """Copy a box to a new ground position in the same frame. Size, yaw,
        vertical placement, category and the height lock all carry over;
        only the footprint center and the track id change."""
        _, source = self._find(frame, source_track_id)
        box = source.moved(x=float(target_xy[0]), y=float(target_xy[1]),
                           track_id=self.next_track_id)
        self.next_track_id += 1
        self.boxes.setdefault(frame, []).append(box)
        if self.is_locked(frame, source_track_id):
            self.height_locked.add((frame, box.track_id))
        if self.is_defaulted(frame, source_track_id):
            self.height_defaulted.add((frame, box.track_id))
        self._log(OperationKind.TRANSFER_OBJECT, frame, box.track_id, {
            "op": "transfer_object",
            "source_track_id": source_track_id,
            "box": _box_dict(box),
            "locked": self.is_locked(frame, box.track_id),
            "defaulted": self.is_defaulted(frame, box.track_id),
        })
        return box

    def transfer_inter_frame(self, from_frame: int, to_frame: int) -> TransferReport:
        """Copy every box of ``from_frame`` into ``to_frame``, preserving
        track ids so consecutive frames stay in one-to-one correspondence.
        Track ids already present in the target are skipped and reported,
        never overwritten."""
        self._require_frame(from_frame)
        self._require_frame(to_frame)
        source = self.boxes.get(from_frame, [])
        if not source:
            raise NothingToTransferError(f"frame {from_frame} has no boxes")
        existing = {b.track_id for b in self.boxes.get(to_frame, [])}
        copied, conflicts = [], []
        for box in source:
            if box.track_id in existing:
                conflicts.append(box.track_id)
            else:
                copied.append(box)
        self._log(OperationKind.TRANSFER_FRAME, to_frame, -1, {
            "op": "transfer_frame",
            "from_frame": from_frame,
            "copied": [b.track_id for b in copied],
            "conflicts": list(conflicts),
        })
        held = self.boxes.setdefault(to_frame, [])
        for box in copied:
            held.append(box)
            locked = self.is_locked(from_frame, box.track_id)
            defaulted = self.is_defaulted(from_frame, box.track_id)
            if locked:
                self.height_locked.add((to_frame, box.track_id))
            if defaulted:
                self.height_defaulted.add((to_frame, box.track_id))
            self._log(OperationKind.TRANSFER_FRAME, to_frame, box.track_id, {
                "op": "transfer_frame_box",
                "from_frame": from_frame,
                "box": _box_dict(box),
                "locked": locked,
                "defaulted": defaulted,
            })
        return TransferReport(copied=tuple(copied), conflicts=tuple(conflicts))

    # -- reporting ------------------------------------------------------------

    def operation_stats(self) -> OperationStats:
        """Count operations by kind and by instance. Instances that came in
        via transfer are reported separately from hand-annotated ones, so the
        operation saving of the transfer mechanism is directly observable."""
        by_kind = {kind: 0 for kind in OperationKind}
        per_instance: dict[tuple[int, int], dict[OperationKind, int]] = {}
        transferred: set[tuple[int, int]] = set()
        for event in self.op_log:
            by_kind[event.kind] += 1
            if event.track_id < 0:
                continue
            key = (event.frame, event.track_id)
            counts = per_instance.setdefault(key, {kind: 0 for kind in OperationKind})
            counts[event.kind] += 1
            if event.kind in (OperationKind.TRANSFER_OBJECT, OperationKind.TRANSFER_FRAME):
                transferred.add(key)

        def _mean(keys) -> float | None:
            keys = list(keys)
            if not keys:
                return None
            return sum(sum(per_instance[k].values()) for k in keys) / len(keys)

        untransferred = [k for k in per_instance if k not in transferred]
        return OperationStats(
            by_kind=by_kind,
            per_instance=per_instance,
            transferred_instances=tuple(sorted(transferred)),
            mean_ops_per_instance=_mean(per_instance.keys()),
            mean_ops_transferred=_mean(sorted(transferred)),
            mean_ops_untransferred=_mean(untransferred),
        )

    # -- equality (used by archive round-trip checks) --------------------------

    def __eq__(self, other):
        if not isinstance(other, AnnotationSession):
            return NotImplemented
        return (
            self.sequence == other.sequence
            and self.frame_count == other.frame_count
            and self.boxes == other.boxes
            and self.height_locked == other.height_locked
            and self.height_defaulted == other.height_defaulted
            and self.op_log == other.op_log
            and self.next_track_id == other.next_track_id
        )


def _box_dict(box: Box3D) -> dict:
    return {
        "center": [box.x, box.y, box.z],
        "size": [box.length, box.width, box.height],
        "yaw": box.yaw,
        "category": box.category.value,
        "track_id": box.track_id,
    }


def _box_from_dict(d: dict) -> Box3D:
    return Box3D(
        x=d["center"][0], y=d["center"][1], z=d["center"][2],
        length=d["size"][0], width=d["size"][1], height=d["size"][2],
        yaw=d["yaw"], category=Category(d["category"]), track_id=d["track_id"],
    )


def state_digest(session: AnnotationSession) -> bytes:
    """Canonical byte serialization of the annotation state (boxes, flags,
    next track id). Two sessions with equal digests hold identical state;
    the operation log is deliberately excluded."""
    doc = {
        "boxes": {
            str(frame): [_box_dict(b) for b in boxes]
            for frame, boxes in sorted(session.boxes.items()) if boxes
        },
        "height_locked": sorted(list(k) for k in session.height_locked),
        "height_defaulted": sorted(list(k) for k in session.height_defaulted),
        "next_track_id": session.next_track_id,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def replay_log(events, sequence: SequenceDescriptor | None = None,
               frame_count: int | None = None) -> AnnotationSession:
    """Rebuild a session by replaying an operation log from scratch.

    Creation-style events carry full box snapshots, so no cloud data is
    needed; edit events re-run the corresponding engine operation.
    """
    session = AnnotationSession(sequence=sequence, frame_count=frame_count)
    for event in events:
        op = event.params.get("op")
        frame, tid = event.frame, event.track_id
        if op == "create":
            session._insert(frame, _box_from_dict(event.params["box"]),
                            defaulted=event.params.get("height_defaulted", False))
        elif op == "shift":
            session.shift_box(frame, tid, event.params["dx"], event.params["dy"])
        elif op == "rotate":
            session.rotate_box(frame, tid, event.params["dtheta"])
        elif op == "resize_bev":
            session.resize_box_bev(frame, tid, BevEdge(event.params["edge"]),
                                   event.params["delta"])
        elif op == "view_edit":
            shift = event.params.get("shift")
            edit = ViewEdit(
                view=View(event.params["view"]),
                edge=Edge(event.params["edge"]) if event.params.get("edge") else None,
                delta=event.params.get("delta"),
                shift=tuple(shift) if shift else None,
            )
            session.edit_box_view(frame, tid, edit)
        elif op == "lock":
            session.lock_height(frame, tid, event.params["locked"])
        elif op == "delete":
            session.delete_box(frame, tid)
        elif op == "transfer_object":
            session._insert(frame, _box_from_dict(event.params["box"]),
                            locked=event.params.get("locked", False),
                            defaulted=event.params.get("defaulted", False))
        elif op == "transfer_frame":
            pass  # summary marker; the per-box events carry the state
        elif op == "transfer_frame_box":
            session._insert(frame, _box_from_dict(event.params["box"]),
                            locked=event.params.get("locked", False),
                            defaulted=event.params.get("defaulted", False))
        else:
            raise ValueError(f"unreplayable event: kind={event.kind} params={event.params}")
    return session
