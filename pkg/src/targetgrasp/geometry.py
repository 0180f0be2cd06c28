"""Camera model, rigid transforms, point clouds, 2D boxes, and grasp poses.

Conventions: camera frame is z-forward, x-right, y-down with the image
origin at the top-left corner.  All lengths are meters, pixels are
continuous coordinates.  Every type here is an immutable value; the
operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import NonPositiveDepth

ORTHONORMAL_TOL = 1e-9
CONTACT_WIDTH_TOL = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics. fx/fy in pixels, (cx, cy) principal point."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


# Typical intrinsics for a 640x480 desk RGB-D sensor; all configurable.
DEFAULT_INTRINSICS = CameraIntrinsics(fx=615.0, fy=615.0, cx=320.0, cy=240.0,
                                      width=640, height=480)


@dataclass(frozen=True)
class Point3:
    """A 3D point in the camera frame."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("point components must be finite")

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Point3":
        a = np.asarray(a, dtype=float).reshape(3)
        return Point3(float(a[0]), float(a[1]), float(a[2]))

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: p_out = rotation @ p_in + translation."""

    rotation: np.ndarray
    translation: Point3

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        if r.shape != (3, 3):
            raise ValueError("rotation must be a 3x3 matrix")
        gram = r.T @ r
        gram[0, 0] -= 1.0
        gram[1, 1] -= 1.0
        gram[2, 2] -= 1.0
        if float(np.abs(gram).max()) > ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        det = (r[0, 0] * (r[1, 1] * r[2, 2] - r[1, 2] * r[2, 1])
               - r[0, 1] * (r[1, 0] * r[2, 2] - r[1, 2] * r[2, 0])
               + r[0, 2] * (r[1, 0] * r[2, 1] - r[1, 1] * r[2, 0]))
        if abs(det - 1.0) > 1e-9:
            raise ValueError("rotation must have det +1 within 1e-9")
        object.__setattr__(self, "rotation", r)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), Point3(0.0, 0.0, 0.0))

    @staticmethod
    def from_rt(rotation, translation) -> "Pose":
        return Pose(np.asarray(rotation, dtype=float),
                    Point3.from_array(translation))

    def apply(self, p: Point3) -> Point3:
        return Point3.from_array(self.rotation @ p.to_array()
                                 + self.translation.to_array())

    def apply_array(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation.to_array()

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, Point3.from_array(-rt @ self.translation.to_array()))

    def compose(self, other: "Pose") -> "Pose":
        """self after other: (self*other)(p) = self(other(p))."""
        r = self.rotation @ other.rotation
        t = self.rotation @ other.translation.to_array() + self.translation.to_array()
        return Pose(r, Point3.from_array(t))


def rotation_about_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_about_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_about_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered 3D points; object_ids tag per-point provenance when known."""

    points: np.ndarray
    object_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if self.object_ids is not None:
            ids = np.asarray(self.object_ids, dtype=int).reshape(-1)
            if len(ids) != len(pts):
                raise ValueError("object_ids length must match points length")
            object.__setattr__(self, "object_ids", ids)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class BBox2D:
    """Axis-aligned half-open pixel region [x1, x2) x [y1, y2)."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError("bbox corners must satisfy x1 < x2 and y1 < y2")

    def contains(self, u: float, v: float) -> bool:
        return self.x1 <= u < self.x2 and self.y1 <= v < self.y2

    def contains_mask(self, uv: np.ndarray) -> np.ndarray:
        uv = np.asarray(uv, dtype=float)
        return ((uv[:, 0] >= self.x1) & (uv[:, 0] < self.x2)
                & (uv[:, 1] >= self.y1) & (uv[:, 1] < self.y2))

    def intersects_image(self, width: int, height: int) -> bool:
        return self.x1 < width and self.x2 > 0 and self.y1 < height and self.y2 > 0

    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class GripperModel:
    """Parallel-jaw gripper dimensions used for collision and width limits."""

    max_width: float = 0.08
    finger_depth: float = 0.04
    finger_thickness: float = 0.01
    palm_clearance: float = 0.02

    def __post_init__(self):
        for name in ("max_width", "finger_depth", "finger_thickness",
                     "palm_clearance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_GRIPPER = GripperModel()


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    """A scored 6-DoF grasp: closing axis = pose x, approach axis = pose z."""

    pose: Pose
    width: float
    score: float
    contact_a: Point3
    contact_b: Point3

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError("score must lie in [0, 1]")
        a, b = self.contact_a, self.contact_b
        gap = math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)
        if abs(gap - self.width) > CONTACT_WIDTH_TOL:
            raise ValueError("contact separation must equal width within 1e-6")

    @property
    def position(self) -> Point3:
        return self.pose.translation

    def to_dict(self) -> dict:
        return {
            "position": list(self.pose.translation.to_array()),
            "rotation": [float(v) for v in self.pose.rotation.reshape(-1)],
            "width": self.width,
            "score": self.score,
            "contacts": [list(self.contact_a.to_array()),
                         list(self.contact_b.to_array())],
        }

    @staticmethod
    def from_dict(d: dict) -> "GraspCandidate":
        pose = Pose(np.array(d["rotation"], dtype=float).reshape(3, 3),
                    Point3.from_array(d["position"]))
        return GraspCandidate(pose=pose, width=float(d["width"]),
                              score=float(d["score"]),
                              contact_a=Point3.from_array(d["contacts"][0]),
                              contact_b=Point3.from_array(d["contacts"][1]))


def project(p: Point3, k: CameraIntrinsics) -> Tuple[float, float]:
    """Pinhole projection of a camera-frame point to continuous pixels."""
    if p.z <= 0:
        raise NonPositiveDepth(f"cannot project point with z={p.z}")
    return (k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy)


def project_points(points: np.ndarray, k: CameraIntrinsics) -> np.ndarray:
    """Vectorized projection; raises if any depth is non-positive."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    z = points[:, 2]
    if np.any(z <= 0):
        raise NonPositiveDepth("cloud contains points with z <= 0")
    uv = np.empty((len(points), 2))
    uv[:, 0] = k.fx * points[:, 0] / z + k.cx
    uv[:, 1] = k.fy * points[:, 1] / z + k.cy
    return uv


def deproject(u: float, v: float, depth: float, k: CameraIntrinsics) -> Point3:
    """Inverse pinhole map: pixel plus depth back to a camera-frame point."""
    if depth <= 0:
        raise NonPositiveDepth(f"cannot deproject with depth={depth}")
    return Point3((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth)


def pixel_in_bbox(u: float, v: float, b: BBox2D) -> bool:
    return b.contains(u, v)


def transform_cloud(cloud: PointCloud, t: Pose) -> PointCloud:
    """Apply a rigid transform to every point; object ids are preserved."""
    return PointCloud(t.apply_array(cloud.points), cloud.object_ids)
