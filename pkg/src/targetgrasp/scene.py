"""Synthetic desk scenes: primitive objects with semantic metadata, a
ray-cast renderer for RGB rasters and depth, surface-sampled point clouds
with z-buffer visibility culling, and ground-truth 2D boxes.

A scene lives entirely in the camera frame (z forward, x right, y down).
Scenes are built from a JSON-style description and are deterministic
given (description, seed).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from .errors import EmptyScene, MalformedSpec, NotVisible, UnknownObject
from .geometry import (
    BBox2D,
    CameraIntrinsics,
    DEFAULT_INTRINSICS,
    Point3,
    PointCloud,
    Pose,
    rotation_about_x,
    rotation_about_z,
)

TABLE_ID = 0
DEPTH_GUARD = 0.005          # z-buffer guard band, meters
BACKGROUND_RGB = (90, 90, 90)
DEFAULT_TABLE_RGB = (172, 154, 128)
DEFAULT_SAMPLES_PER_M2 = 30000.0
OBJECT_MIN_SAMPLES = 900     # floor so thin objects stay well resolved
DEFAULT_TABLE_SIZE = (0.7, 0.5)
DEFAULT_RIG_ELEVATION_DEG = 55.0
DEFAULT_RIG_DISTANCE = 0.9

_MISS = np.inf
_EPS = 1e-9


# ---------------------------------------------------------------------------
# Primitive shapes (object frame: z is the local "up"/symmetry axis)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        if min(self.dx, self.dy, self.dz) <= 0:
            raise ValueError("box dimensions must be positive")

    @property
    def dims(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz])

    def surface_area(self) -> float:
        return 2 * (self.dx * self.dy + self.dy * self.dz + self.dx * self.dz)

    def bounding_radius(self) -> float:
        return 0.5 * float(np.linalg.norm(self.dims))

    def footprint_radius(self) -> float:
        return 0.5 * math.hypot(self.dx, self.dy)

    def resting_height(self) -> float:
        return 0.5 * self.dz

    def sample_surface(self, n: int, rng: np.random.Generator) -> np.ndarray:
        half = 0.5 * self.dims
        areas = np.array([self.dy * self.dz, self.dy * self.dz,
                          self.dx * self.dz, self.dx * self.dz,
                          self.dx * self.dy, self.dx * self.dy])
        faces = rng.choice(6, size=n, p=areas / areas.sum())
        pts = rng.uniform(-half, half, size=(n, 3))
        axis = faces // 2
        sign = np.where(faces % 2 == 0, 1.0, -1.0)
        pts[np.arange(n), axis] = sign * half[axis]
        return pts

    def ray_intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        half = 0.5 * self.dims
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / dirs
            t1 = (-half - origins) * inv
            t2 = (half - origins) * inv
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        # Parallel rays: hit only if origin inside the slab
        par = np.abs(dirs) < _EPS
        inside = np.abs(origins) <= half
        lo = np.where(par, np.where(inside, -np.inf, np.inf), lo)
        hi = np.where(par, np.where(inside, np.inf, -np.inf), hi)
        tmin = lo.max(axis=-1)
        tmax = hi.min(axis=-1)
        hit = (tmax >= np.maximum(tmin, _EPS)) & (tmin > _EPS)
        return np.where(hit, tmin, _MISS)

    def signed_distance(self, p: np.ndarray) -> float:
        q = np.abs(p) - 0.5 * self.dims
        outside = np.linalg.norm(np.maximum(q, 0.0))
        inside = min(q.max(), 0.0)
        return float(outside + inside)

    def outward_normal(self, p: np.ndarray) -> np.ndarray:
        half = 0.5 * self.dims
        q = np.abs(p) - half
        if np.any(q > 0):
            nearest = np.clip(p, -half, half)
            d = p - nearest
            return d / (np.linalg.norm(d) + 1e-12)
        k = int(np.argmax(q))
        n = np.zeros(3)
        n[k] = math.copysign(1.0, p[k]) if p[k] != 0 else 1.0
        return n


@dataclass(frozen=True)
class Cylinder:
    radius: float
    height: float

    def __post_init__(self):
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("cylinder dimensions must be positive")

    def surface_area(self) -> float:
        return (2 * math.pi * self.radius * self.height
                + 2 * math.pi * self.radius ** 2)

    def bounding_radius(self) -> float:
        return math.hypot(self.radius, 0.5 * self.height)

    def footprint_radius(self) -> float:
        return self.radius

    def resting_height(self) -> float:
        return 0.5 * self.height

    def sample_surface(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lateral = 2 * math.pi * self.radius * self.height
        cap = math.pi * self.radius ** 2
        areas = np.array([lateral, cap, cap])
        part = rng.choice(3, size=n, p=areas / areas.sum())
        theta = rng.uniform(0, 2 * math.pi, size=n)
        pts = np.empty((n, 3))
        on_side = part == 0
        pts[on_side, 0] = self.radius * np.cos(theta[on_side])
        pts[on_side, 1] = self.radius * np.sin(theta[on_side])
        pts[on_side, 2] = rng.uniform(-0.5, 0.5, size=on_side.sum()) * self.height
        on_cap = ~on_side
        rr = self.radius * np.sqrt(rng.uniform(0, 1, size=on_cap.sum()))
        pts[on_cap, 0] = rr * np.cos(theta[on_cap])
        pts[on_cap, 1] = rr * np.sin(theta[on_cap])
        pts[on_cap, 2] = np.where(part[on_cap] == 1, 0.5, -0.5) * self.height
        return pts

    def ray_intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        ox, oy, oz = origins[..., 0], origins[..., 1], origins[..., 2]
        dx, dy, dz = dirs[..., 0], dirs[..., 1], dirs[..., 2]
        hz = 0.5 * self.height
        best = np.full(ox.shape, _MISS)

        a = dx * dx + dy * dy
        b = 2 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - self.radius ** 2
        disc = b * b - 4 * a * c
        ok = (disc >= 0) & (a > _EPS)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            for sgn in (-1.0, 1.0):
                t = np.where(ok, (-b + sgn * sq) / (2 * a), _MISS)
                z = oz + t * dz
                valid = ok & (t > _EPS) & (np.abs(z) <= hz)
                best = np.where(valid & (t < best), t, best)
            for zcap in (-hz, hz):
                t = np.where(np.abs(dz) > _EPS, (zcap - oz) / dz, _MISS)
                x = ox + t * dx
                y = oy + t * dy
                valid = (t > _EPS) & (x * x + y * y <= self.radius ** 2)
                best = np.where(valid & (t < best), t, best)
        return best

    def signed_distance(self, p: np.ndarray) -> float:
        qr = math.hypot(p[0], p[1]) - self.radius
        qz = abs(p[2]) - 0.5 * self.height
        outside = math.hypot(max(qr, 0.0), max(qz, 0.0))
        inside = min(max(qr, qz), 0.0)
        return outside + inside

    def outward_normal(self, p: np.ndarray) -> np.ndarray:
        rr = math.hypot(p[0], p[1])
        radial = (np.array([p[0] / rr, p[1] / rr, 0.0]) if rr > 1e-9
                  else np.array([1.0, 0.0, 0.0]))
        qr = rr - self.radius
        qz = abs(p[2]) - 0.5 * self.height
        cap = np.array([0.0, 0.0, math.copysign(1.0, p[2]) if p[2] != 0 else 1.0])
        if qr > 0 and qz > 0:
            n = radial * qr + cap * qz
            return n / np.linalg.norm(n)
        if qr > 0:
            return radial
        if qz > 0:
            return cap
        return radial if qr >= qz else cap


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    def surface_area(self) -> float:
        return 4 * math.pi * self.radius ** 2

    def bounding_radius(self) -> float:
        return self.radius

    def footprint_radius(self) -> float:
        return self.radius

    def resting_height(self) -> float:
        return self.radius

    def sample_surface(self, n: int, rng: np.random.Generator) -> np.ndarray:
        v = rng.normal(size=(n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * self.radius

    def ray_intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        a = np.einsum("...i,...i->...", dirs, dirs)
        b = 2 * np.einsum("...i,...i->...", origins, dirs)
        c = np.einsum("...i,...i->...", origins, origins) - self.radius ** 2
        disc = b * b - 4 * a * c
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        t1 = np.where(ok, (-b - sq) / (2 * a), _MISS)
        t2 = np.where(ok, (-b + sq) / (2 * a), _MISS)
        t = np.where(t1 > _EPS, t1, np.where(t2 > _EPS, t2, _MISS))
        return t

    def signed_distance(self, p: np.ndarray) -> float:
        return float(np.linalg.norm(p) - self.radius)

    def outward_normal(self, p: np.ndarray) -> np.ndarray:
        n = np.linalg.norm(p)
        return p / n if n > 1e-9 else np.array([0.0, 0.0, 1.0])


Shape = Union[Box, Cylinder, Sphere]


# ---------------------------------------------------------------------------
# Scene entities
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SceneObject:
    """A semantic primitive: geometry plus the metadata grounding uses."""

    id: int
    name: str
    shape: Shape
    pose: Pose
    synonyms: Tuple[str, ...] = ()
    color_label: str = "gray"
    color_rgb: Tuple[int, int, int] = (128, 128, 128)
    capabilities: frozenset = frozenset()


@dataclass(frozen=True, eq=False)
class TableModel:
    """Finite rectangular desk patch; renders as object id 0."""

    pose: Pose                      # camera-from-table
    size: Tuple[float, float] = DEFAULT_TABLE_SIZE
    color_rgb: Tuple[int, int, int] = DEFAULT_TABLE_RGB

    def plane_coefficients(self) -> Tuple[float, float, float, float]:
        """(a, b, c, d) with a*x + b*y + c*z + d = 0 in the camera frame."""
        n = self.pose.rotation @ np.array([0.0, 0.0, 1.0])
        t = self.pose.translation.to_array()
        return (float(n[0]), float(n[1]), float(n[2]), float(-n @ t))

    def surface_area(self) -> float:
        return self.size[0] * self.size[1]

    def sample_surface(self, n: int, rng: np.random.Generator) -> np.ndarray:
        sx, sy = self.size
        pts = np.zeros((n, 3))
        pts[:, 0] = rng.uniform(-0.5 * sx, 0.5 * sx, size=n)
        pts[:, 1] = rng.uniform(-0.5 * sy, 0.5 * sy, size=n)
        return pts

    def ray_intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        oz, dz = origins[..., 2], dirs[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(dz) > _EPS, -oz / dz, _MISS)
        x = origins[..., 0] + t * dirs[..., 0]
        y = origins[..., 1] + t * dirs[..., 1]
        sx, sy = self.size
        hit = (t > _EPS) & (np.abs(x) <= 0.5 * sx) & (np.abs(y) <= 0.5 * sy)
        return np.where(hit, t, _MISS)


def camera_from_table(elevation_deg: float = DEFAULT_RIG_ELEVATION_DEG,
                      distance: float = DEFAULT_RIG_DISTANCE) -> Pose:
    """Camera pose looking at the table center from the given elevation.

    The table frame has z up and x matching image right; the table center
    lands on the optical axis at the given distance.
    """
    phi = math.radians(elevation_deg)
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, -math.sin(phi), -math.cos(phi)])
    z = np.array([0.0, math.cos(phi), -math.sin(phi)])
    r = np.vstack([x, y, z])
    return Pose(r, Point3(0.0, 0.0, distance))


@dataclass(eq=False)
class Scene:
    """Primitive objects plus camera; renders are cached per instance."""

    objects: List[SceneObject]
    camera: CameraIntrinsics = DEFAULT_INTRINSICS
    table: Optional[TableModel] = None
    seed: int = 0
    samples_per_m2: float = DEFAULT_SAMPLES_PER_M2

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")
        self._raycast_cache = None
        self._cloud_cache: Dict[float, PointCloud] = {}
        self._bbox_cache: Dict[int, BBox2D] = {}

    # -- entity helpers ----------------------------------------------------

    def object_by_id(self, object_id: int) -> SceneObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise UnknownObject(f"no object with id {object_id}")

    def _entities(self):
        """(id, shape-like, pose) tuples in deterministic render order."""
        ents = []
        if self.table is not None:
            ents.append((TABLE_ID, self.table, self.table.pose))
        for o in sorted(self.objects, key=lambda o: o.id):
            ents.append((o.id, o.shape, o.pose))
        return ents

    @property
    def table_plane(self) -> Optional[Tuple[float, float, float, float]]:
        return self.table.plane_coefficients() if self.table else None

    # -- ray casting ---------------------------------------------------------

    def first_hit(self, dirs: np.ndarray):
        """Nearest (depth, entity id) along camera rays.

        Directions are z-normalized (z component 1) so the ray parameter
        equals camera depth.  Misses carry depth inf and id -1.
        """
        dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        depth = np.full(dirs.shape[0], _MISS)
        ids = np.full(dirs.shape[0], -1, dtype=int)
        for ent_id, body, pose in self._entities():
            inv = pose.inverse()
            o_local = np.broadcast_to(inv.translation.to_array(), dirs.shape)
            d_local = dirs @ inv.rotation.T
            t = body.ray_intersect(o_local, d_local)
            nearer = t < depth
            depth[nearer] = t[nearer]
            ids[nearer] = ent_id
        return depth, ids

    def _raycast(self):
        """Per-pixel nearest depth and entity id over pixel-center rays."""
        if self._raycast_cache is not None:
            return self._raycast_cache
        k = self.camera
        us = (np.arange(k.width) + 0.5 - k.cx) / k.fx
        vs = (np.arange(k.height) + 0.5 - k.cy) / k.fy
        du, dv = np.meshgrid(us, vs)
        dirs = np.stack([du, dv, np.ones_like(du)], axis=-1).reshape(-1, 3)
        depth, ids = self.first_hit(dirs)
        self._raycast_cache = (depth.reshape(k.height, k.width),
                               ids.reshape(k.height, k.width))
        return self._raycast_cache


# ---------------------------------------------------------------------------
# Rendering operations
# ---------------------------------------------------------------------------

def render_cloud(scene: Scene, samples_per_m2: Optional[float] = None) -> PointCloud:
    """Sample object surfaces and cull by z-buffer visibility.

    A sample survives iff its depth is within the guard band of the
    nearest surface along its pixel's ray; samples projecting outside the
    image are dropped.  The table contributes points with object id 0.
    """
    density = scene.samples_per_m2 if samples_per_m2 is None else samples_per_m2
    if density <= 0:
        raise ValueError("samples_per_m2 must be positive")
    cached = scene._cloud_cache.get(density)
    if cached is not None:
        return cached

    rng = np.random.default_rng(scene.seed)
    pts_all, ids_all = [], []
    for ent_id, body, pose in scene._entities():
        floor = 1 if ent_id == TABLE_ID else OBJECT_MIN_SAMPLES
        n = max(floor, int(round(body.surface_area() * density)))
        local = body.sample_surface(n, rng)
        pts_all.append(pose.apply_array(local))
        ids_all.append(np.full(n, ent_id, dtype=int))
    if not pts_all:
        raise EmptyScene("no visible surface points")
    pts = np.concatenate(pts_all)
    ids = np.concatenate(ids_all)

    k = scene.camera
    z = pts[:, 2]
    front = z > _EPS
    u = np.where(front, k.fx * pts[:, 0] / np.where(front, z, 1.0) + k.cx, -1.0)
    v = np.where(front, k.fy * pts[:, 1] / np.where(front, z, 1.0) + k.cy, -1.0)
    cu = np.floor(u).astype(int)
    cv = np.floor(v).astype(int)
    in_image = front & (cu >= 0) & (cu < k.width) & (cv >= 0) & (cv < k.height)

    depth, _ = scene._raycast()
    keep = np.zeros(len(pts), dtype=bool)
    sel = np.flatnonzero(in_image)
    keep[sel] = z[sel] <= depth[cv[sel], cu[sel]] + DEPTH_GUARD
    # A sample whose pixel-center ray misses every surface (silhouette
    # boundary cell) is judged along its own exact ray instead.
    missed = sel[np.isinf(depth[cv[sel], cu[sel]])]
    if len(missed):
        own_depth, _ = scene.first_hit(pts[missed] / z[missed, None])
        keep[missed] = z[missed] <= own_depth + DEPTH_GUARD
    if not keep.any():
        raise EmptyScene("no visible surface points")
    cloud = PointCloud(pts[keep], ids[keep])
    scene._cloud_cache[density] = cloud
    return cloud


def render_image(scene: Scene) -> np.ndarray:
    """Flat-shaded RGB raster: per pixel the nearest entity's color."""
    k = scene.camera
    _, ids = scene._raycast()
    img = np.empty((k.height, k.width, 3), dtype=np.uint8)
    img[:] = BACKGROUND_RGB
    if scene.table is not None:
        img[ids == TABLE_ID] = scene.table.color_rgb
    for o in scene.objects:
        img[ids == o.id] = o.color_rgb
    return img


def ground_truth_bbox(scene: Scene, object_id: int) -> BBox2D:
    """Tight pixel-cover box over the object's visible surface samples."""
    if object_id != TABLE_ID:
        scene.object_by_id(object_id)  # raises UnknownObject
    elif scene.table is None:
        raise UnknownObject("scene has no table")
    cached = scene._bbox_cache.get(object_id)
    if cached is not None:
        return cached

    cloud = render_cloud(scene)
    mask = cloud.object_ids == object_id
    if not mask.any():
        raise NotVisible(f"object {object_id} has no visible samples")
    pts = cloud.points[mask]
    k = scene.camera
    u = k.fx * pts[:, 0] / pts[:, 2] + k.cx
    v = k.fy * pts[:, 1] / pts[:, 2] + k.cy
    bbox = BBox2D(float(np.floor(u.min())), float(np.floor(v.min())),
                  float(np.floor(u.max()) + 1), float(np.floor(v.max()) + 1))
    scene._bbox_cache[object_id] = bbox
    return bbox


def save_png(image: np.ndarray, path) -> None:
    Image.fromarray(image).save(path, format="PNG")


def image_to_png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image).save(buf, format="PNG")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Scene construction from a JSON-style description
# ---------------------------------------------------------------------------

def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise MalformedSpec(f"{path}: {msg}")


def _parse_shape(d, path: str) -> Shape:
    _require(isinstance(d, dict), path, "shape must be an object")
    kind = d.get("type")
    try:
        if kind == "box":
            return Box(float(d["dx"]), float(d["dy"]), float(d["dz"]))
        if kind == "cylinder":
            return Cylinder(float(d["radius"]), float(d["height"]))
        if kind == "sphere":
            return Sphere(float(d["radius"]))
    except KeyError as e:
        raise MalformedSpec(f"{path}: missing dimension {e.args[0]}")
    except (TypeError, ValueError) as e:
        raise MalformedSpec(f"{path}: {e}")
    raise MalformedSpec(f"{path}.type: must be box, cylinder, or sphere")


def _parse_camera(d, path: str) -> CameraIntrinsics:
    if d is None:
        return DEFAULT_INTRINSICS
    _require(isinstance(d, dict), path, "camera must be an object")
    try:
        return CameraIntrinsics(
            fx=float(d.get("fx", DEFAULT_INTRINSICS.fx)),
            fy=float(d.get("fy", DEFAULT_INTRINSICS.fy)),
            cx=float(d.get("cx", DEFAULT_INTRINSICS.cx)),
            cy=float(d.get("cy", DEFAULT_INTRINSICS.cy)),
            width=int(d.get("width", DEFAULT_INTRINSICS.width)),
            height=int(d.get("height", DEFAULT_INTRINSICS.height)),
        )
    except (TypeError, ValueError) as e:
        raise MalformedSpec(f"{path}: {e}")


def _table_pose(rig: Pose, x: float, y: float, yaw_deg: float,
                lying: bool, shape: Shape) -> Pose:
    """Object-to-camera pose for a shape resting on the table at (x, y)."""
    r_local = rotation_about_z(math.radians(yaw_deg))
    height = shape.resting_height()
    if lying:
        _require(isinstance(shape, Cylinder), "pose.table.lying",
                 "only cylinders can lie on their side")
        r_local = r_local @ rotation_about_x(math.pi / 2)
        height = shape.radius
    table_from_obj = Pose.from_rt(r_local, [x, y, height])
    return rig.compose(table_from_obj)


def build_scene(spec: dict) -> Scene:
    """Validate a scene description and build a deterministic Scene."""
    _require(isinstance(spec, dict), "$", "scene spec must be an object")
    seed = spec.get("seed", 0)
    _require(isinstance(seed, int), "seed", "must be an integer")
    camera = _parse_camera(spec.get("camera"), "camera")

    rig_spec = spec.get("rig") or {}
    rig = camera_from_table(
        float(rig_spec.get("elevation_deg", DEFAULT_RIG_ELEVATION_DEG)),
        float(rig_spec.get("distance", DEFAULT_RIG_DISTANCE)))

    table_spec = spec.get("table", {})
    table = None
    if table_spec is not None:
        _require(isinstance(table_spec, dict), "table", "must be object or null")
        size = table_spec.get("size", list(DEFAULT_TABLE_SIZE))
        _require(isinstance(size, (list, tuple)) and len(size) == 2,
                 "table.size", "must be [sx, sy]")
        rgb = tuple(table_spec.get("rgb", DEFAULT_TABLE_RGB))
        table = TableModel(pose=rig, size=(float(size[0]), float(size[1])),
                           color_rgb=rgb)

    objects_spec = spec.get("objects", [])
    _require(isinstance(objects_spec, list), "objects", "must be a list")

    rng = np.random.default_rng(seed)
    objects: List[SceneObject] = []
    seen_ids = set()
    placed: List[Tuple[float, float, float]] = []  # (x, y, radius) on table

    for i, od in enumerate(objects_spec):
        path = f"objects[{i}]"
        _require(isinstance(od, dict), path, "must be an object")
        _require("id" in od, f"{path}.id", "required")
        oid = od["id"]
        _require(isinstance(oid, int), f"{path}.id", "must be an integer")
        _require(oid != TABLE_ID, f"{path}.id", "id 0 is reserved for the table")
        _require(oid not in seen_ids, f"{path}.id", f"duplicate id {oid}")
        seen_ids.add(oid)
        _require(isinstance(od.get("name"), str) and od["name"],
                 f"{path}.name", "required non-empty string")
        shape = _parse_shape(od.get("shape"), f"{path}.shape")

        color = od.get("color", {})
        _require(isinstance(color, dict), f"{path}.color", "must be an object")
        label = color.get("label", "gray")
        rgb = color.get("rgb", [128, 128, 128])
        _require(isinstance(rgb, (list, tuple)) and len(rgb) == 3,
                 f"{path}.color.rgb", "must be [r, g, b]")

        synonyms = od.get("synonyms", [])
        _require(isinstance(synonyms, list), f"{path}.synonyms", "must be a list")
        caps = od.get("capabilities", [])
        _require(isinstance(caps, list), f"{path}.capabilities", "must be a list")

        pose_spec = od.get("pose")
        lying = bool(od.get("lying", False))
        if pose_spec is None:
            # Seeded random placement with footprint separation
            sx, sy = table.size if table else DEFAULT_TABLE_SIZE
            radius = (shape.radius if lying and isinstance(shape, Cylinder)
                      else shape.footprint_radius())
            x = y = 0.0
            for _ in range(500):
                x = rng.uniform(-0.35 * sx, 0.35 * sx)
                y = rng.uniform(-0.35 * sy, 0.35 * sy)
                if all(math.hypot(x - px, y - py) > radius + pr + 0.02
                       for px, py, pr in placed):
                    break
            placed.append((x, y, radius))
            yaw = float(rng.uniform(0, 360))
            pose = _table_pose(rig, x, y, yaw, lying, shape)
        elif "table" in pose_spec:
            tp = pose_spec["table"]
            _require(isinstance(tp, dict), f"{path}.pose.table", "must be object")
            lying = bool(tp.get("lying", lying))
            x, y = float(tp.get("x", 0.0)), float(tp.get("y", 0.0))
            pose = _table_pose(rig, x, y, float(tp.get("yaw_deg", 0.0)),
                               lying, shape)
            placed.append((x, y, shape.footprint_radius()))
        else:
            _require("rotation" in pose_spec and "translation" in pose_spec,
                     f"{path}.pose", "needs rotation+translation or table")
            try:
                pose = Pose.from_rt(
                    np.array(pose_spec["rotation"], dtype=float).reshape(3, 3),
                    pose_spec["translation"])
            except (TypeError, ValueError) as e:
                raise MalformedSpec(f"{path}.pose: {e}")

        center_z = pose.translation.z
        _require(center_z - shape.bounding_radius() > 0,
                 f"{path}.pose", "object must be entirely in front of the camera")

        objects.append(SceneObject(
            id=oid, name=od["name"], shape=shape, pose=pose,
            synonyms=tuple(str(s) for s in synonyms),
            color_label=str(label),
            color_rgb=(int(rgb[0]), int(rgb[1]), int(rgb[2])),
            capabilities=frozenset(str(c) for c in caps)))

    density = float(spec.get("samples_per_m2", DEFAULT_SAMPLES_PER_M2))
    return Scene(objects=objects, camera=camera, table=table, seed=seed,
                 samples_per_m2=density)
