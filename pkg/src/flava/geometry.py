"""Box, point and projection math for LiDAR annotation.

Conventions used throughout the package:

* Velodyne frame: x forward, y left, z up, meters.
* A box is an oriented 3D bounding box in the velodyne frame. ``yaw`` is the
  counter-clockwise rotation about +z, ``yaw = 0`` heading along +x, and is
  always normalized to ``[-pi, pi)``. ``length`` runs along the heading,
  ``width`` across it, ``height`` along z.
* Image frame: u right, v down, pixels. ``depth`` is the camera-forward
  distance before perspective division.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import BehindCameraError, NonOrthonormalRotationError

# Points this close to (or in front of) the image plane are "behind camera":
# perspective division would blow up below this depth.
BEHIND_CAMERA_EPS = 1e-9

# Boundary inclusivity and clipping tolerance, meters.
GEOM_TOL = 1e-9

# Minimum legal box dimension, meters.
MIN_DIM = 1e-3


class Category(str, Enum):
    CAR = "Car"
    VAN = "Van"
    TRUCK = "Truck"
    PEDESTRIAN = "Pedestrian"
    CYCLIST = "Cyclist"
    TRAM = "Tram"
    MISC = "Misc"
    PERSON_SITTING = "Person_sitting"


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return float((yaw + math.pi) % (2.0 * math.pi) - math.pi)


def _rot2d(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Box3D:
    """Oriented box: center (x, y, z), size (length, width, height), yaw."""

    x: float
    y: float
    z: float
    length: float
    width: float
    height: float
    yaw: float
    category: Category = Category.CAR
    track_id: int = 0

    def __post_init__(self):
        if not (self.length > MIN_DIM and self.width > MIN_DIM and self.height > MIN_DIM):
            raise ValueError(
                f"box dimensions must exceed {MIN_DIM} m, got "
                f"({self.length}, {self.width}, {self.height})"
            )
        if self.track_id < 0:
            raise ValueError(f"track_id must be >= 0, got {self.track_id}")
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))
        object.__setattr__(self, "category", Category(self.category))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def bottom_z(self) -> float:
        return self.z - self.height / 2.0

    @property
    def top_z(self) -> float:
        return self.z + self.height / 2.0

    @property
    def bev_area(self) -> float:
        return self.length * self.width

    @property
    def volume(self) -> float:
        return self.length * self.width * self.height

    def moved(self, **changes) -> "Box3D":
        """Copy with the given fields replaced."""
        return replace(self, **changes)


class ImagePoint(NamedTuple):
    """Projected pixel coordinate plus camera-forward depth (meters)."""

    u: float
    v: float
    depth: float


@dataclass(frozen=True)
class Rect2D:
    """Axis-aligned image rectangle, pixels."""

    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise ValueError(f"degenerate rectangle {self}")


@dataclass(eq=False)
class Calibration:
    """Camera model: projection, rectifying rotation, velodyne-to-camera rigid
    transform. ``p_rect`` is 3x4 (pixels), the other two are 4x4 homogeneous.
    """

    p_rect: np.ndarray
    r_rect: np.ndarray
    t_velo_cam: np.ndarray
    _combined: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self.p_rect = np.asarray(self.p_rect, dtype=np.float64).reshape(3, 4)
        self.r_rect = np.asarray(self.r_rect, dtype=np.float64).reshape(4, 4)
        self.t_velo_cam = np.asarray(self.t_velo_cam, dtype=np.float64).reshape(4, 4)
        self._combined = self.p_rect @ self.r_rect @ self.t_velo_cam

    def validate(self, tol: float = 1e-6) -> None:
        """Raise unless rotation blocks are orthonormal and the rigid
        transform has a proper homogeneous last row."""
        for name, rot in (("r_rect", self.r_rect[:3, :3]),
                          ("t_velo_cam", self.t_velo_cam[:3, :3])):
            err = float(np.abs(rot @ rot.T - np.eye(3)).max())
            if err > tol:
                raise NonOrthonormalRotationError(
                    f"{name} rotation block off orthonormal by {err:.3g} (tol {tol:g})"
                )
        if not np.allclose(self.t_velo_cam[3], [0, 0, 0, 1], atol=tol):
            raise NonOrthonormalRotationError(
                f"t_velo_cam last row must be (0,0,0,1), got {self.t_velo_cam[3]}"
            )

    @classmethod
    def identity(cls) -> "Calibration":
        p = np.hstack([np.eye(3), np.zeros((3, 1))])
        return cls(p_rect=p, r_rect=np.eye(4), t_velo_cam=np.eye(4))

    def as_dict(self) -> dict:
        return {
            "p_rect": self.p_rect.flatten().tolist(),
            "r_rect": self.r_rect.flatten().tolist(),
            "t_velo_cam": self.t_velo_cam.flatten().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Calibration":
        return cls(
            p_rect=np.array(d["p_rect"]).reshape(3, 4),
            r_rect=np.array(d["r_rect"]).reshape(4, 4),
            t_velo_cam=np.array(d["t_velo_cam"]).reshape(4, 4),
        )

    def __eq__(self, other):
        if not isinstance(other, Calibration):
            return NotImplemented
        return (np.array_equal(self.p_rect, other.p_rect)
                and np.array_equal(self.r_rect, other.r_rect)
                and np.array_equal(self.t_velo_cam, other.t_velo_cam))


# Canonical velodyne->camera axis permutation (x_cam = -y_velo, y_cam = -z_velo,
# z_cam = x_velo). Used as the default rigid transform when converting labels
# without a calibration file; IoU-style comparisons are invariant to it.
NOMINAL_T_VELO_CAM = np.array([
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
])


def nominal_calibration(focal: float = 700.0, cu: float = 600.0, cv: float = 180.0) -> Calibration:
    """A plausible pinhole camera over the nominal axis permutation."""
    p = np.array([[focal, 0.0, cu, 0.0],
                  [0.0, focal, cv, 0.0],
                  [0.0, 0.0, 1.0, 0.0]])
    return Calibration(p_rect=p, r_rect=np.eye(4), t_velo_cam=NOMINAL_T_VELO_CAM.copy())


def _as_xyz(points) -> np.ndarray:
    """Accept a PointCloud-like object or a raw (N,3)/(N,4) array."""
    arr = getattr(points, "xyz", None)
    if arr is None:
        arr = np.asarray(points, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] < 3:
            raise ValueError(f"expected (N,>=3) point array, got shape {arr.shape}")
        arr = arr[:, :3]
    return np.asarray(arr, dtype=np.float64)


def project_point(calib: Calibration, p) -> ImagePoint:
    """Project one velodyne-frame point to the image.

    Applies the full homogeneous chain projection * rectification * rigid
    transform, then divides by the camera-forward coordinate. Raises
    BehindCameraError when that coordinate is at or below the near tolerance.
    """
    ph = np.array([p[0], p[1], p[2], 1.0], dtype=np.float64)
    a, b, c = calib._combined @ ph
    if c <= BEHIND_CAMERA_EPS:
        raise BehindCameraError(float(c))
    return ImagePoint(float(a / c), float(b / c), float(c))


def project_points(calib: Calibration, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection.

    Returns (uv, depth) where uv is (N,2) and depth is (N,). Rows with
    ``depth <= BEHIND_CAMERA_EPS`` are behind the camera; their uv values are
    computed against a clamped depth and must be masked out by the caller.
    """
    xyz = _as_xyz(points)
    hom = np.hstack([xyz, np.ones((len(xyz), 1))])
    proj = hom @ calib._combined.T
    depth = proj[:, 2]
    safe = np.where(np.abs(depth) > BEHIND_CAMERA_EPS, depth, 1.0)
    uv = proj[:, :2] / safe[:, None]
    return uv, depth


@dataclass(frozen=True)
class FrustumSelection:
    """Indices of cloud points inside an image-rectangle frustum.

    ``depth_min``/``depth_max`` are None for an empty selection.
    """

    indices: np.ndarray
    depth_min: float | None
    depth_max: float | None

    @property
    def empty(self) -> bool:
        return len(self.indices) == 0


def frustum_select(calib: Calibration, points, rect: Rect2D) -> FrustumSelection:
    """Select the forward points whose projection falls inside ``rect``
    (boundary inclusive). Order of indices follows cloud order."""
    xyz = _as_xyz(points)
    if len(xyz) == 0:
        return FrustumSelection(np.empty(0, dtype=np.int64), None, None)
    uv, depth = project_points(calib, xyz)
    in_front = depth > BEHIND_CAMERA_EPS
    inside = (in_front
              & (uv[:, 0] >= rect.u_min) & (uv[:, 0] <= rect.u_max)
              & (uv[:, 1] >= rect.v_min) & (uv[:, 1] <= rect.v_max))
    idx = np.flatnonzero(inside)
    if len(idx) == 0:
        return FrustumSelection(idx.astype(np.int64), None, None)
    sel_depth = depth[idx]
    return FrustumSelection(idx.astype(np.int64),
                            float(sel_depth.min()), float(sel_depth.max()))


# Body-frame corner multipliers: bottom 4 counter-clockwise seen from above,
# then the top 4 in the same x/y order.
_CORNER_SIGNS = np.array([
    [+1, +1, -1],
    [-1, +1, -1],
    [-1, -1, -1],
    [+1, -1, -1],
    [+1, +1, +1],
    [-1, +1, +1],
    [-1, -1, +1],
    [+1, -1, +1],
], dtype=np.float64)


def box_corners(box: Box3D) -> np.ndarray:
    """The 8 corners of a box, (8,3), velodyne frame.

    Ordering: bottom face CCW from above starting at (+length/2, +width/2),
    then the top face in the same x/y order.
    """
    half = np.array([box.length / 2.0, box.width / 2.0, box.height / 2.0])
    body = _CORNER_SIGNS * half
    corners = body.copy()
    corners[:, :2] = body[:, :2] @ _rot2d(box.yaw).T
    return corners + box.center


def bev_polygon(box: Box3D) -> np.ndarray:
    """Bird's-eye footprint: the 4 bottom corners' (x, y), CCW, shape (4,2)."""
    return box_corners(box)[:4, :2]


def points_in_bev_footprint(points, box: Box3D) -> np.ndarray:
    """Indices of points whose (x, y) lies inside the box footprint
    (boundary inclusive); z is ignored."""
    xyz = _as_xyz(points)
    if len(xyz) == 0:
        return np.empty(0, dtype=np.int64)
    local = (xyz[:, :2] - np.array([box.x, box.y])) @ _rot2d(-box.yaw).T
    inside = ((np.abs(local[:, 0]) <= box.length / 2.0 + GEOM_TOL)
              & (np.abs(local[:, 1]) <= box.width / 2.0 + GEOM_TOL))
    return np.flatnonzero(inside).astype(np.int64)


def points_in_box(points, box: Box3D) -> np.ndarray:
    """Footprint test plus vertical containment, boundary inclusive."""
    xyz = _as_xyz(points)
    if len(xyz) == 0:
        return np.empty(0, dtype=np.int64)
    footprint = points_in_bev_footprint(xyz, box)
    z = xyz[footprint, 2]
    keep = np.abs(z - box.z) <= box.height / 2.0 + GEOM_TOL
    return footprint[keep]


def _shoelace(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _dedupe(vertices: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for v in vertices:
        if not out or np.abs(v - out[-1]).max() > GEOM_TOL:
            out.append(v)
    if len(out) > 1 and np.abs(out[0] - out[-1]).max() <= GEOM_TOL:
        out.pop()
    return out


def convex_intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection area of two convex CCW polygons.

    Clips ``a`` against each half-plane of ``b`` (Sutherland-Hodgman), then
    takes the shoelace area. Degenerate slivers collapse to 0.
    """
    subject = [np.asarray(v, dtype=np.float64) for v in a]
    clip = np.asarray(b, dtype=np.float64)
    for i in range(len(clip)):
        if not subject:
            return 0.0
        p1, p2 = clip[i], clip[(i + 1) % len(clip)]
        edge = p2 - p1
        output: list[np.ndarray] = []
        prev = subject[-1]
        prev_side = edge[0] * (prev[1] - p1[1]) - edge[1] * (prev[0] - p1[0])
        for cur in subject:
            cur_side = edge[0] * (cur[1] - p1[1]) - edge[1] * (cur[0] - p1[0])
            if cur_side >= -GEOM_TOL:
                if prev_side < -GEOM_TOL:
                    output.append(_edge_intersection(prev, cur, p1, p2))
                output.append(cur)
            elif prev_side >= -GEOM_TOL:
                output.append(_edge_intersection(prev, cur, p1, p2))
            prev, prev_side = cur, cur_side
        subject = _dedupe(output)
    if len(subject) < 3:
        return 0.0
    return max(0.0, abs(_shoelace(np.array(subject))))


def _edge_intersection(s: np.ndarray, e: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Intersection of segment s->e with the infinite line p1->p2."""
    d_se = e - s
    d_clip = p2 - p1
    denom = d_clip[0] * d_se[1] - d_clip[1] * d_se[0]
    if abs(denom) < GEOM_TOL * GEOM_TOL:
        return e.copy()
    t = (d_clip[0] * (p1[1] - s[1]) - d_clip[1] * (p1[0] - s[0])) / denom
    return s + t * d_se
