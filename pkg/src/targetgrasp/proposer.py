"""Analytic three-stage grasp proposer.

Stage one scores cloud points by the best antipodal partnership they can
form within the gripper opening.  The detected 2D box then filters the
scored seeds (with nearest-depth-cluster retention) before orientations
are generated, mirroring a proposal network whose middle stages only see
points inside the detected range.  A final refinement stage snaps grasp
centers, rejects candidates whose gripper body would collide with the
cloud, and discounts obstructed approach corridors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import CloudTooSmall, EmptyAfterFilter, NoCandidates
from .geometry import (
    BBox2D,
    CameraIntrinsics,
    DEFAULT_GRIPPER,
    GraspCandidate,
    GripperModel,
    Point3,
    PointCloud,
    Pose,
)


@dataclass(frozen=True, eq=False)
class ScoredPoint:
    """A cloud point with its unit normal and antipodality seed score."""

    point: np.ndarray
    normal: np.ndarray
    seed_score: float

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, float).reshape(3))
        n = np.asarray(self.normal, float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-6:
            raise ValueError("normal must be unit length")
        object.__setattr__(self, "normal", n)
        if not (0.0 <= self.seed_score <= 1.0):
            raise ValueError("seed score must lie in [0, 1]")


@dataclass(frozen=True)
class ProposerParams:
    k_neighbors: int = 16
    approach_bins: int = 8
    antipodal_angle_tol: float = math.radians(30.0)
    depth_cluster_gap: Optional[float] = 0.02   # None disables clustering
    gripper: GripperModel = DEFAULT_GRIPPER
    seed_limit: int = 512                       # top-N seeds kept
    min_pair_separation: float = 0.008          # thinnest graspable feature
    max_cloud_points: int = 6000                # seed-stage subsample bound
    finger_pad: float = 0.001                   # finger box standoff, meters
    approach_range: float = 0.10                # obstruction corridor length
    obstruction_cap: int = 50                   # points saturating obstruction
    prefilter_cloud: bool = False               # ablation: crop before seeding

    def __post_init__(self):
        if self.k_neighbors < 3:
            raise ValueError("k_neighbors must be at least 3")
        if self.approach_bins < 1:
            raise ValueError("approach_bins must be at least 1")
        if not (0 < self.antipodal_angle_tol < math.pi / 2):
            raise ValueError("antipodal_angle_tol must be in (0, pi/2)")
        if self.depth_cluster_gap is not None and self.depth_cluster_gap <= 0:
            raise ValueError("depth_cluster_gap must be positive or None")
        if self.seed_limit < 1:
            raise ValueError("seed_limit must be positive")


def subsample_indices(n: int, limit: int) -> np.ndarray:
    """Deterministic even-stride index selection down to at most `limit`."""
    if n <= limit:
        return np.arange(n)
    return np.linspace(0, n - 1, limit).round().astype(int)


def subsample_cloud(cloud: PointCloud, limit: int) -> PointCloud:
    """Deterministic even-stride subsample down to at most `limit` points."""
    idx = subsample_indices(len(cloud), limit)
    if len(idx) == len(cloud):
        return cloud
    ids = cloud.object_ids[idx] if cloud.object_ids is not None else None
    return PointCloud(cloud.points[idx], ids)


def estimate_normals(cloud: PointCloud, k: int) -> np.ndarray:
    """Per-point normals from k-NN covariance, oriented toward the camera.

    The smallest-eigenvector direction is sign-flipped so normal.point < 0
    (the camera sits at the origin).
    """
    if k < 3:
        raise ValueError("k must be at least 3")
    pts = cloud.points
    if len(pts) < k:
        raise CloudTooSmall(f"need at least {k} points, have {len(pts)}")
    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k)
    neighbors = pts[idx]                    # (N, k, 3)
    centered = neighbors - neighbors.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / (k - 1)
    _, vecs = np.linalg.eigh(cov)
    normals = vecs[:, :, 0]
    flip = np.einsum("ni,ni->n", normals, pts) > 0
    normals[flip] *= -1.0
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    return normals / np.maximum(norms, 1e-12)


def _pair_antipodality(points: np.ndarray, normals: np.ndarray,
                       i: np.ndarray, j: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cos-angle agreement of both normals with the i->j line (unsigned)."""
    diff = points[j] - points[i]
    dist = np.linalg.norm(diff, axis=1)
    u = diff / np.maximum(dist[:, None], 1e-12)
    a = np.abs(np.einsum("ni,ni->n", normals[i], u))
    b = np.abs(np.einsum("ni,ni->n", normals[j], u))
    return a * b, dist


def score_seeds(cloud: PointCloud, params: ProposerParams,
                normals: Optional[np.ndarray] = None) -> List[ScoredPoint]:
    """Seed-stage scores: best antipodal partnership within max width.

    Points with no partner inside (min_pair_separation, max_width] score
    zero.  The result is sorted by descending score and truncated to
    params.seed_limit entries.  Pass precomputed normals (for example
    from the full-resolution cloud) to skip re-estimation.
    """
    if normals is None:
        normals = estimate_normals(cloud, params.k_neighbors)
    else:
        normals = np.asarray(normals, float).reshape(-1, 3)
        if len(normals) != len(cloud):
            raise ValueError("normals length must match cloud length")
    pts = cloud.points
    w_max = params.gripper.max_width

    scores = np.zeros(len(pts))
    tree = cKDTree(pts)
    pairs = tree.query_pairs(r=w_max, output_type="ndarray")
    if len(pairs):
        anti, dist = _pair_antipodality(pts, normals, pairs[:, 0], pairs[:, 1])
        ok = dist > params.min_pair_separation
        anti = np.where(ok, anti, 0.0)
        np.maximum.at(scores, pairs[:, 0], anti)
        np.maximum.at(scores, pairs[:, 1], anti)
    scores[scores < 1e-9] = 0.0   # below fp noise means no real partner

    order = np.lexsort((np.arange(len(pts)), -scores))
    top = order[:params.seed_limit]
    return [ScoredPoint(pts[i], normals[i], float(np.clip(scores[i], 0, 1)))
            for i in top]


def bbox_depth_mask(points: np.ndarray, bbox: BBox2D, k: CameraIntrinsics,
                    gap: Optional[float]) -> np.ndarray:
    """Membership mask: projects inside bbox, then nearest depth cluster.

    Clustering sorts the in-box depths and splits where consecutive gaps
    exceed `gap`; only the cluster nearest the camera survives.  gap=None
    keeps every in-box point.
    """
    points = np.asarray(points, float).reshape(-1, 3)
    z = points[:, 2]
    front = z > 1e-9
    u = k.fx * points[:, 0] / np.where(front, z, 1.0) + k.cx
    v = k.fy * points[:, 1] / np.where(front, z, 1.0) + k.cy
    mask = front & (u >= bbox.x1) & (u < bbox.x2) & (v >= bbox.y1) & (v < bbox.y2)
    if gap is None or not mask.any():
        return mask
    zs = np.sort(z[mask])
    splits = np.flatnonzero(np.diff(zs) > gap)
    z_cut = zs[splits[0]] if len(splits) else zs[-1]
    return mask & (z <= z_cut + 1e-12)


def filter_by_bbox(seeds: Sequence[ScoredPoint], bbox: BBox2D,
                   k: CameraIntrinsics,
                   params: Optional[ProposerParams] = None) -> List[ScoredPoint]:
    """Keep seeds whose projection falls in the box, nearest cluster only."""
    params = params or ProposerParams()
    if not seeds:
        raise EmptyAfterFilter("no seeds to filter")
    pts = np.stack([s.point for s in seeds])
    mask = bbox_depth_mask(pts, bbox, k, params.depth_cluster_gap)
    kept = [s for s, m in zip(seeds, mask) if m]
    if not kept:
        raise EmptyAfterFilter("no seed projects inside the detected box")
    return kept


def _orthogonal_basis(axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair spanning the plane normal to axis."""
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(axis)))] = 1.0
    v = np.cross(axis, helper)
    v /= np.linalg.norm(v)
    w = np.cross(axis, v)
    return v, w


def propose_orientations(seeds: Sequence[ScoredPoint], cloud: PointCloud,
                         params: ProposerParams,
                         cloud_normals: Optional[np.ndarray] = None
                         ) -> List[GraspCandidate]:
    """Orientation stage: one best partner per seed, fanned approach bins.

    The closing axis joins seed and partner (gripper x); approach_bins
    directions orthogonal to it become gripper z.  Provisional score is
    seed_score times the pair's antipodality.
    """
    if not seeds:
        raise NoCandidates("no seeds provided")
    pts = cloud.points
    if cloud_normals is None:
        k = min(params.k_neighbors, len(pts))
        if k < 3:
            raise CloudTooSmall("partner cloud too small for normals")
        cloud_normals = estimate_normals(cloud, k)
    else:
        cloud_normals = np.asarray(cloud_normals, float).reshape(-1, 3)

    w_max = params.gripper.max_width
    cos_tol = math.cos(params.antipodal_angle_tol)
    tree = cKDTree(pts)

    candidates: List[GraspCandidate] = []
    for seed in seeds:
        idx = np.asarray(tree.query_ball_point(seed.point, w_max), dtype=int)
        if len(idx) == 0:
            continue
        diff = pts[idx] - seed.point
        dist = np.linalg.norm(diff, axis=1)
        ok = dist > params.min_pair_separation
        if not ok.any():
            continue
        u = diff / np.maximum(dist[:, None], 1e-12)
        align_seed = np.abs(u @ seed.normal)
        align_partner = np.abs(np.einsum("ni,ni->n", cloud_normals[idx], u))
        anti = align_seed * align_partner
        gated = ok & (align_seed >= cos_tol) & (align_partner >= cos_tol)
        if not gated.any():
            continue
        masked = np.where(gated, anti, -1.0)
        best = int(np.argmax(masked))
        partner = pts[idx[best]]

        closing = u[best]
        width = float(dist[best])
        midpoint = 0.5 * (seed.point + partner)
        prov = float(np.clip(seed.seed_score * anti[best], 0.0, 1.0))
        v, w = _orthogonal_basis(closing)
        for b in range(params.approach_bins):
            theta = 2 * math.pi * b / params.approach_bins
            approach = math.cos(theta) * v + math.sin(theta) * w
            y_axis = np.cross(approach, closing)
            rotation = np.column_stack([closing, y_axis, approach])
            candidates.append(GraspCandidate(
                pose=Pose(rotation, Point3.from_array(midpoint)),
                width=width, score=prov,
                contact_a=Point3.from_array(seed.point),
                contact_b=Point3.from_array(partner)))
    if not candidates:
        raise NoCandidates("no seed found an antipodal partner within tolerance")
    return candidates


def refine(cands: Sequence[GraspCandidate], cloud: PointCloud,
           params: ProposerParams) -> List[GraspCandidate]:
    """Refinement stage: snap centers, drop colliding grippers, and
    discount approach obstruction.

    The gripper body is two finger boxes plus a palm slab behind them;
    any cloud point inside that body (outside the jaw opening) discards
    the candidate.  Survivors get score * (1 - normalized obstruction of
    the approach corridor), clamped to [0, 1].
    """
    if not cands:
        return []
    g = params.gripper
    pts = cloud.points
    tree = cKDTree(pts)
    fh = g.finger_thickness          # finger cross-section is square
    out: List[GraspCandidate] = []
    ball_cache: dict = {}

    for cand in cands:
        mid = 0.5 * (cand.contact_a.to_array() + cand.contact_b.to_array())
        hw = 0.5 * cand.width
        x_out = hw + params.finger_pad + g.finger_thickness
        z_back = g.finger_depth + g.palm_clearance + params.approach_range
        reach = math.sqrt(x_out ** 2 + (0.5 * fh) ** 2 + z_back ** 2) + 1e-6

        key = mid.tobytes()
        idx = ball_cache.get(key)
        if idx is None:
            idx = np.asarray(tree.query_ball_point(mid, reach), dtype=int)
            ball_cache[key] = idx
        local = (pts[idx] - mid) @ cand.pose.rotation
        x, y, z = np.abs(local[:, 0]), np.abs(local[:, 1]), local[:, 2]

        in_y = y <= 0.5 * fh
        finger = (in_y & (x >= hw + params.finger_pad) & (x <= x_out)
                  & (z >= -g.finger_depth) & (z <= 0.0))
        palm = (in_y & (x <= x_out)
                & (z >= -g.finger_depth - g.palm_clearance)
                & (z < -g.finger_depth))
        if finger.any() or palm.any():
            continue

        corridor = (in_y & (x <= x_out)
                    & (z >= -z_back)
                    & (z < -g.finger_depth - g.palm_clearance))
        obstruction = min(1.0, float(corridor.sum()) / params.obstruction_cap)
        score = float(np.clip(cand.score * (1.0 - obstruction), 0.0, 1.0))
        out.append(GraspCandidate(
            pose=Pose(cand.pose.rotation, Point3.from_array(mid)),
            width=cand.width, score=score,
            contact_a=cand.contact_a, contact_b=cand.contact_b))
    return out


def _selection_key(cand: GraspCandidate):
    p = cand.pose.translation
    return (-cand.score, math.sqrt(p.x * p.x + p.y * p.y + p.z * p.z),
            (p.x, p.y, p.z), tuple(cand.pose.rotation.reshape(-1)))


def select_best(cands: Sequence[GraspCandidate]) -> GraspCandidate:
    """Max-score candidate; ties break on position norm, then coordinates."""
    if not cands:
        raise NoCandidates("cannot select from an empty candidate list")
    return min(cands, key=_selection_key)
