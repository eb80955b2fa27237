"""Session archive: a human-readable JSON document that captures the full
annotation state of one sequence.

Schema (version 1)::

    {
      "format": "flava-session",
      "schema_version": 1,
      "sequence": null | {
        "id": str,
        "frames": [[index, cloud_path, image_path|null], ...],
        "calibration": {"p_rect": [12 floats], "r_rect": [16], "t_velo_cam": [16]}
      },
      "frame_count": int | null,          # only meaningful without a sequence
      "next_track_id": int,
      "boxes": [{"frame", "track_id", "center", "size", "yaw", "category",
                 "height_locked", "height_defaulted"}, ...],
      "op_log": [{"kind", "frame", "track_id", "timestamp", "params"}, ...]
    }

``size`` is (length, width, height); all numbers are SI (meters, radians,
seconds). Import of an export reproduces the session exactly: JSON float
round trips are lossless.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .engine import AnnotationSession, OperationEvent, OperationKind, _box_dict, _box_from_dict
from .errors import CorruptArchiveError, SchemaVersionMismatchError
from .geometry import Calibration
from .kitti_io import FrameRef, SequenceDescriptor

ARCHIVE_FORMAT = "flava-session"
SCHEMA_VERSION = 1


def session_to_dict(session: AnnotationSession) -> dict:
    seq = None
    if session.sequence is not None:
        seq = {
            "id": session.sequence.sequence_id,
            "frames": [[f.index, f.cloud_path, f.image_path] for f in session.sequence.frames],
            "calibration": session.sequence.calibration.as_dict(),
        }
    boxes = []
    for frame in sorted(session.boxes):
        for box in session.boxes[frame]:
            entry = _box_dict(box)
            entry["frame"] = frame
            entry["height_locked"] = session.is_locked(frame, box.track_id)
            entry["height_defaulted"] = session.is_defaulted(frame, box.track_id)
            boxes.append(entry)
    return {
        "format": ARCHIVE_FORMAT,
        "schema_version": SCHEMA_VERSION,
        "sequence": seq,
        "frame_count": session.frame_count if session.sequence is None else None,
        "next_track_id": session.next_track_id,
        "boxes": boxes,
        "op_log": [
            {
                "kind": e.kind.value,
                "frame": e.frame,
                "track_id": e.track_id,
                "timestamp": e.timestamp,
                "params": e.params,
            }
            for e in session.op_log
        ],
    }


def session_from_dict(doc: dict) -> AnnotationSession:
    try:
        if doc.get("format") != ARCHIVE_FORMAT:
            raise CorruptArchiveError(f"not a session archive (format={doc.get('format')!r})")
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionMismatchError(
                f"archive schema version {version}, this build reads {SCHEMA_VERSION}"
            )
        sequence = None
        if doc.get("sequence") is not None:
            s = doc["sequence"]
            sequence = SequenceDescriptor(
                sequence_id=s["id"],
                frames=tuple(FrameRef(int(i), c, img) for i, c, img in s["frames"]),
                calibration=Calibration.from_dict(s["calibration"]),
            )
        session = AnnotationSession(sequence=sequence, frame_count=doc.get("frame_count"))
        for entry in doc["boxes"]:
            session._insert(
                int(entry["frame"]),
                _box_from_dict(entry),
                locked=bool(entry.get("height_locked", False)),
                defaulted=bool(entry.get("height_defaulted", False)),
            )
        session.op_log = [
            OperationEvent(
                kind=OperationKind(e["kind"]),
                frame=int(e["frame"]),
                track_id=int(e["track_id"]),
                timestamp=float(e["timestamp"]),
                params=e.get("params", {}),
            )
            for e in doc["op_log"]
        ]
        session.next_track_id = max(int(doc["next_track_id"]), session.next_track_id)
        return session
    except (SchemaVersionMismatchError, CorruptArchiveError):
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptArchiveError(f"malformed session archive: {exc}") from exc


def export_session(session: AnnotationSession, path) -> Path:
    """Write the archive atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(session_to_dict(session), indent=2) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def import_session(path) -> AnnotationSession:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptArchiveError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptArchiveError(f"{path}: top-level value is not an object")
    return session_from_dict(doc)
