"""Rigid 3D geometry: transforms, least-squares estimation, neighbor queries,
cloud resolution, and pose-error measures.

All distance computations that downstream code compares against brute-force
oracles share one explicit formulation, sqrt(((a - b) * (a - b)).sum(-1)),
built from correctly-rounded primitives only, so the vectorized and scalar
paths produce bitwise-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInput, InvalidInput

DEFAULT_AREA_EPS = 1e-9

_ORTHONORMAL_TOL = 1e-9


def as_point(value) -> np.ndarray:
    """Coerce to a finite (3,) float64 point."""
    p = np.asarray(value, dtype=np.float64)
    if p.shape != (3,):
        raise InvalidInput(f"expected a 3-vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInput("point coordinates must be finite")
    return p


def as_cloud(value) -> np.ndarray:
    """Coerce to a nonempty, finite (n, 3) float64 point cloud."""
    pts = np.asarray(value, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidInput(f"expected an (n, 3) array, got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise InvalidInput("point cloud is empty")
    if not np.all(np.isfinite(pts)):
        raise InvalidInput("point cloud contains non-finite coordinates")
    return pts


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All-pairs Euclidean distances, shape (len(a), len(b))."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(-1))


def point_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two points (same arithmetic as pairwise_distances)."""
    diff = a - b
    return float(np.sqrt((diff * diff).sum(-1)))


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion p -> rotation @ p + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=np.float64)
        tr = np.array(self.translation, dtype=np.float64)
        if rot.shape != (3, 3) or tr.shape != (3,):
            raise InvalidInput("rotation must be 3x3 and translation a 3-vector")
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(tr))):
            raise InvalidInput("transform entries must be finite")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > _ORTHONORMAL_TOL:
            raise InvalidInput("rotation matrix is not orthonormal")
        if abs(float(np.linalg.det(rot)) - 1.0) > _ORTHONORMAL_TOL:
            raise InvalidInput("rotation must be proper (det = +1)")
        rot.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        """Transform one (3,) point or an (n, 3) cloud; order preserved.

        Uses explicit multiply-and-sum rather than BLAS so a single point and
        a batch row produce bitwise-identical results.
        """
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        rows = pts[None, :] if single else pts
        moved = (rows[:, None, :] * self.rotation[None, :, :]).sum(-1) + self.translation
        return moved[0] if single else moved

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -(rt @ self.translation))


def apply_transform(transform: RigidTransform, cloud) -> np.ndarray:
    """Apply a rigid transform to every point of a cloud."""
    return transform.apply(as_cloud(cloud))


def _spanning_triangle(points: np.ndarray) -> tuple[float, tuple[int, int, int]]:
    """Greedy max-area triple: anchor, farthest point, then best third point.

    Area is exactly zero iff the points are collinear/coincident, which is
    the only property the degeneracy guard relies on.
    """
    diff0 = points - points[0]
    d0 = (diff0 * diff0).sum(-1)
    i1 = int(np.argmax(d0))
    base = points[i1] - points[0]
    cross = np.cross(np.broadcast_to(base, points.shape), diff0)
    areas = 0.5 * np.sqrt((cross * cross).sum(-1))
    i2 = int(np.argmax(areas))
    return float(areas[i2]), (0, i1, i2)


def triangle_area(a, b, c) -> float:
    """Area of the triangle spanned by three points."""
    cross = np.cross(np.asarray(b, float) - a, np.asarray(c, float) - a)
    return 0.5 * float(np.sqrt((cross * cross).sum(-1)))


def estimate_rigid_transform(src, dst, area_eps: float = DEFAULT_AREA_EPS) -> RigidTransform:
    """Least-squares rigid transform mapping src points onto dst points.

    Centroid alignment plus SVD of the cross-covariance, with the sign of the
    last singular direction corrected so the result is a proper rotation.

    Raises InvalidInput for fewer than 3 pairs and DegenerateInput when the
    source points are collinear or coincident (no spanning triangle larger
    than area_eps).
    """
    src = as_cloud(src)
    dst = as_cloud(dst)
    if src.shape != dst.shape:
        raise InvalidInput("src and dst must have the same shape")
    if len(src) < 3:
        raise InvalidInput("need at least 3 correspondences")
    area, _ = _spanning_triangle(src)
    if area <= area_eps:
        raise DegenerateInput(
            f"source points are collinear/coincident (max spanning area {area:g})"
        )
    src_c = src.mean(axis=0)
    dst_c = dst.mean(axis=0)
    h = (src - src_c).T @ (dst - dst_c)
    u, _, vt = np.linalg.svd(h)
    d = 1.0 if float(np.linalg.det(vt.T @ u.T)) >= 0.0 else -1.0
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(rot, dst_c - rot @ src_c)


class NeighborIndex:
    """Immutable exact nearest-neighbor index over one point cloud."""

    def __init__(self, cloud):
        pts = as_cloud(cloud).copy()
        pts.setflags(write=False)
        self._points = pts
        self._tree = cKDTree(pts)

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> np.ndarray:
        return self._points

    def nearest_distances(self, queries) -> np.ndarray:
        """Distance from each query point to its nearest indexed point."""
        q = np.asarray(queries, dtype=np.float64)
        if q.ndim == 1:
            q = q[None, :]
        dist, _ = self._tree.query(q, k=1)
        return dist

    def nearest_distance(self, point) -> float:
        return float(self.nearest_distances(as_point(point))[0])


def point_to_cloud_distance(point, index: NeighborIndex) -> float:
    """Minimum distance from a point to the indexed cloud."""
    return index.nearest_distance(point)


def cloud_resolution(cloud) -> float:
    """Mean distance from each point to its nearest other point in the cloud.

    This is the scale unit ("pr") for all distance thresholds downstream.
    """
    pts = as_cloud(cloud)
    if len(pts) < 2:
        raise InvalidInput("resolution needs at least two points")
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].mean())


def rotation_error_deg(ra, rb) -> float:
    """Geodesic angle between two rotations, in degrees.

    Computed as atan2(|sin|, cos) from the relative rotation, which equals
    acos((trace - 1) / 2) exactly but stays accurate for near-zero angles
    where the bare arccos saturates around 1e-6 degrees.
    """
    ra = np.asarray(ra, dtype=np.float64)
    rb = np.asarray(rb, dtype=np.float64)
    if ra.shape != (3, 3) or rb.shape != (3, 3):
        raise InvalidInput("rotations must be 3x3 matrices")
    m = ra.T @ rb
    cos = (float(np.trace(m)) - 1.0) / 2.0
    axis = 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    sin = float(np.sqrt((axis * axis).sum()))
    return float(np.degrees(np.arctan2(sin, cos)))


def translation_error(ta, tb) -> float:
    """Euclidean distance between two translation vectors."""
    return point_distance(as_point(ta), as_point(tb))
