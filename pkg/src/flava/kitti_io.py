"""KITTI-style sequence I/O: binary clouds, calibration text, tracking labels.

File formats handled here:

* Velodyne cloud: binary, 16-byte records of 4 little-endian float32
  (x, y, z, reflectance).
* Calibration: text lines ``KEY: v1 v2 ...`` (``P2``, ``R0_rect``/``R_rect``,
  ``Tr_velo_to_cam``/``Tr_velo_cam``).
* Labels: tracking text format, one record per line:
  ``frame track_id type truncated occluded alpha bbox(4) dimensions(3)
  location(3) rotation_y``. Floats serialized at 4 decimals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    MalformedLengthError,
    MalformedLineError,
    MissingFileError,
    MissingKeyError,
    NonFiniteValueError,
    UnknownCategoryError,
    WrongValueCountError,
)
from .geometry import (
    NOMINAL_T_VELO_CAM,
    Box3D,
    Calibration,
    Category,
    normalize_yaw,
)

POINT_RECORD_BYTES = 16


@dataclass(eq=False)
class PointCloud:
    """One frame's points, (N, 4) float32: x, y, z, reflectance.

    ``dropped_records`` lists indices of non-finite records rejected at load
    time; finite records are never dropped or reordered.
    """

    points: np.ndarray
    dropped_records: tuple[int, ...] = ()

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float32).reshape(-1, 4)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3].astype(np.float64)

    @property
    def reflectance(self) -> np.ndarray:
        return self.points[:, 3]

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (np.array_equal(self.points, other.points)
                and self.dropped_records == other.dropped_records)


def load_point_cloud(path, strict: bool = False) -> PointCloud:
    """Read a velodyne binary cloud.

    Non-finite records are rejected and their indices recorded on the result;
    with ``strict=True`` the first offending record raises instead.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"point cloud file not found: {path}")
    data = path.read_bytes()
    if len(data) % POINT_RECORD_BYTES != 0:
        raise MalformedLengthError(
            f"{path}: byte length {len(data)} not divisible by {POINT_RECORD_BYTES}"
        )
    raw = np.frombuffer(data, dtype="<f4").reshape(-1, 4)
    finite = np.isfinite(raw).all(axis=1)
    if finite.all():
        return PointCloud(points=raw.copy())
    bad = np.flatnonzero(~finite)
    if strict:
        raise NonFiniteValueError(int(bad[0]))
    return PointCloud(points=raw[finite].copy(), dropped_records=tuple(int(i) for i in bad))


def _parse_calib_lines(path: Path) -> dict[str, list[float]]:
    values: dict[str, list[float]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or ":" not in line:
            continue
        key, rest = line.split(":", 1)
        try:
            values[key.strip()] = [float(tok) for tok in rest.split()]
        except ValueError as exc:
            raise MalformedLineError(lineno, f"{path}: {exc}") from exc
    return values


def _take(values: dict, aliases: tuple[str, ...], count: int) -> list[float]:
    for key in aliases:
        if key in values:
            vals = values[key]
            if len(vals) != count:
                raise WrongValueCountError(
                    f"key {key}: expected {count} values, got {len(vals)}"
                )
            return vals
    raise MissingKeyError(f"none of {aliases} present")


def load_calibration(path) -> Calibration:
    """Parse a calibration file into the projection / rectification /
    velodyne-to-camera matrix stack.

    ``P2`` (the left color camera) is the projection matrix used. The 3x3
    rectifying rotation is expanded to 4x4 homogeneous form; the 3x4 rigid
    transform gets the (0,0,0,1) row appended. Rotation blocks more than
    1e-4 off orthonormal are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"calibration file not found: {path}")
    values = _parse_calib_lines(path)

    p_rect = np.array(_take(values, ("P2",), 12)).reshape(3, 4)

    r_rect = np.eye(4)
    r_rect[:3, :3] = np.array(_take(values, ("R0_rect", "R_rect"), 9)).reshape(3, 3)

    t_velo_cam = np.vstack([
        np.array(_take(values, ("Tr_velo_to_cam", "Tr_velo_cam"), 12)).reshape(3, 4),
        [0.0, 0.0, 0.0, 1.0],
    ])

    calib = Calibration(p_rect=p_rect, r_rect=r_rect, t_velo_cam=t_velo_cam)
    calib.validate(tol=1e-4)
    return calib


@dataclass(frozen=True)
class LabelRecord:
    """One tracking-format label line.

    ``location`` is the bottom-center of the box in the camera frame;
    ``dimensions`` are (h, w, l). ``truncated``, ``occluded``, ``alpha`` and
    ``bbox`` pass through untouched.
    """

    frame: int
    track_id: int
    category: Category
    truncated: float
    occluded: int
    alpha: float
    bbox: tuple[float, float, float, float]
    h: float
    w: float
    l: float
    x: float
    y: float
    z: float
    rotation_y: float

    def __post_init__(self):
        if not (self.h > 0 and self.w > 0 and self.l > 0):
            raise ValueError(f"dimensions must be positive, got ({self.h}, {self.w}, {self.l})")
        object.__setattr__(self, "category", Category(self.category))
        object.__setattr__(self, "rotation_y", normalize_yaw(self.rotation_y))
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))


def read_labels(path, skip_dont_care: bool = True) -> list[LabelRecord]:
    """Parse a tracking label file. ``DontCare`` rows are skipped by default
    since they carry no box; any other unknown category is an error."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"label file not found: {path}")
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != 17:
            raise MalformedLineError(lineno, f"expected 17 fields, got {len(tokens)}")
        if tokens[2] == "DontCare" and skip_dont_care:
            continue
        try:
            category = Category(tokens[2])
        except ValueError:
            raise UnknownCategoryError(f"line {lineno}: unknown category {tokens[2]!r}") from None
        try:
            records.append(LabelRecord(
                frame=int(tokens[0]),
                track_id=int(tokens[1]),
                category=category,
                truncated=float(tokens[3]),
                occluded=int(tokens[4]),
                alpha=float(tokens[5]),
                bbox=tuple(float(t) for t in tokens[6:10]),
                h=float(tokens[10]),
                w=float(tokens[11]),
                l=float(tokens[12]),
                x=float(tokens[13]),
                y=float(tokens[14]),
                z=float(tokens[15]),
                rotation_y=float(tokens[16]),
            ))
        except (ValueError, ArithmeticError) as exc:
            raise MalformedLineError(lineno, str(exc)) from exc
    return records


def format_label(rec: LabelRecord) -> str:
    floats = (rec.truncated, rec.alpha, *rec.bbox, rec.h, rec.w, rec.l,
              rec.x, rec.y, rec.z, rec.rotation_y)
    head = f"{rec.frame} {rec.track_id} {rec.category.value} {floats[0]:.4f} {rec.occluded}"
    return head + " " + " ".join(f"{v:.4f}" for v in floats[1:])


def write_labels(records, path) -> None:
    path = Path(path)
    path.write_text("".join(format_label(r) + "\n" for r in records))


# --- label <-> box conversion ----------------------------------------------

def box_from_label(rec: LabelRecord, calib: Calibration | None = None) -> Box3D:
    """Lift a camera-frame label into a velodyne-frame box.

    Without a calibration the nominal axis permutation is used, which is
    exact for IoU-style comparisons (rigid invariance) and inverts
    ``label_from_box`` with the same argument.
    """
    t = calib.t_velo_cam if calib is not None else NOMINAL_T_VELO_CAM
    bottom = np.linalg.inv(t) @ np.array([rec.x, rec.y, rec.z, 1.0])
    return Box3D(
        x=float(bottom[0]),
        y=float(bottom[1]),
        z=float(bottom[2]) + rec.h / 2.0,
        length=rec.l,
        width=rec.w,
        height=rec.h,
        yaw=normalize_yaw(-rec.rotation_y - math.pi / 2.0),
        category=rec.category,
        track_id=max(rec.track_id, 0),
    )


def label_from_box(
    box: Box3D,
    frame: int,
    calib: Calibration | None = None,
    truncated: float = 0.0,
    occluded: int = 0,
    alpha: float = -10.0,
    bbox: tuple[float, float, float, float] = (-1.0, -1.0, -1.0, -1.0),
) -> LabelRecord:
    """Export a box as a camera-frame label record. Fields a box cannot
    represent (truncation, occlusion, alpha, 2D bbox) take sentinel values
    unless supplied."""
    t = calib.t_velo_cam if calib is not None else NOMINAL_T_VELO_CAM
    loc = t @ np.array([box.x, box.y, box.bottom_z, 1.0])
    return LabelRecord(
        frame=frame,
        track_id=box.track_id,
        category=box.category,
        truncated=truncated,
        occluded=occluded,
        alpha=alpha,
        bbox=bbox,
        h=box.height,
        w=box.width,
        l=box.length,
        x=float(loc[0]),
        y=float(loc[1]),
        z=float(loc[2]),
        rotation_y=normalize_yaw(-box.yaw - math.pi / 2.0),
    )


# --- sequences --------------------------------------------------------------

class FrameRef(NamedTuple):
    index: int
    cloud_path: str
    image_path: str | None


@dataclass(eq=True)
class SequenceDescriptor:
    """One annotated sequence on disk: ordered frames plus its calibration."""

    sequence_id: str
    frames: tuple[FrameRef, ...]
    calibration: Calibration

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def frame_indices(self) -> tuple[int, ...]:
        return tuple(f.index for f in self.frames)

    def frame(self, index: int) -> FrameRef:
        for ref in self.frames:
            if ref.index == index:
                return ref
        raise KeyError(index)


_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def load_sequence(seq_dir, sequence_id: str | None = None) -> SequenceDescriptor:
    """Build a descriptor from ``<seq_dir>/calib.txt`` and
    ``<seq_dir>/velodyne/*.bin`` (frame index = numeric file stem), with
    optional images under ``<seq_dir>/image_2/``."""
    seq_dir = Path(seq_dir)
    if not seq_dir.is_dir():
        raise MissingFileError(f"sequence directory not found: {seq_dir}")
    calib = load_calibration(seq_dir / "calib.txt")

    velo_dir = seq_dir / "velodyne"
    if not velo_dir.is_dir():
        raise MissingFileError(f"no velodyne directory in {seq_dir}")
    frames = []
    for cloud_path in sorted(velo_dir.glob("*.bin")):
        try:
            index = int(cloud_path.stem)
        except ValueError:
            continue
        image_path = None
        for suffix in _IMAGE_SUFFIXES:
            candidate = seq_dir / "image_2" / (cloud_path.stem + suffix)
            if candidate.is_file():
                image_path = str(candidate)
                break
        frames.append(FrameRef(index, str(cloud_path), image_path))
    if not frames:
        raise MissingFileError(f"no cloud frames in {velo_dir}")
    frames.sort(key=lambda f: f.index)
    return SequenceDescriptor(
        sequence_id=sequence_id or seq_dir.name,
        frames=tuple(frames),
        calibration=calib,
    )


def scan_data_root(root) -> tuple[list[SequenceDescriptor], list[tuple[str, str]]]:
    """Load every sequence under ``root``. Returns (sequences, skipped) where
    skipped pairs a directory name with the reason it failed to load.
    Dot- and underscore-prefixed directories are ignored."""
    root = Path(root)
    if not root.is_dir():
        raise MissingFileError(f"data root not found: {root}")
    sequences, skipped = [], []
    for child in sorted(root.iterdir()):
        if not child.is_dir() or child.name.startswith((".", "_")):
            continue
        try:
            sequences.append(load_sequence(child))
        except Exception as exc:  # noqa: BLE001 - every load failure is a skip reason
            skipped.append((child.name, str(exc)))
    return sequences, skipped
