"""Synthetic multi-instance scenes with ground truth, and labeled
correspondence sets with a controlled outlier ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correspondences import CorrespondenceSet
from .errors import InvalidInput
from .geometry import RigidTransform, as_cloud, cloud_resolution, pairwise_distances

MAX_INSTANCES = 20

_PLACEMENT_SPREAD = 6.0  # cube side per instance-grid cell, in model diameters


@dataclass(frozen=True)
class SceneGroundTruth:
    """A model, a scene containing posed copies of it, and the true poses."""

    model: np.ndarray
    scene: np.ndarray
    poses: list[RigidTransform]
    instance_point_ranges: list[tuple[int, int]]
    clutter_count: int

    @property
    def instance_count(self) -> int:
        return len(self.poses)


@dataclass(frozen=True)
class LabeledCorrespondences:
    """Correspondences plus a per-member label: instance index or -1 (outlier)."""

    corrs: CorrespondenceSet
    labels: np.ndarray

    def outlier_ratio(self) -> float:
        return float(np.count_nonzero(self.labels < 0)) / len(self.corrs)


def _frame_with_z(axis: np.ndarray) -> np.ndarray:
    """Orthonormal frame whose third column is the given direction."""
    z = np.asarray(axis, dtype=np.float64)
    z = z / np.sqrt((z * z).sum())
    ref = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = np.cross(ref, z)
    x /= np.sqrt((x * x).sum())
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def _spiral_sphere(n: int) -> np.ndarray:
    golden = math.pi * (3.0 - math.sqrt(5.0))
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(1.0 - z * z)
    theta = golden * i
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def _ring(n: int, radius: float, axis, center, span: float = 2.0 * math.pi,
          phase: float = 0.0) -> np.ndarray:
    t = phase + span * (np.arange(n) + 0.5) / n
    pts = np.column_stack([radius * np.cos(t), radius * np.sin(t), np.zeros(n)])
    return pts @ _frame_with_z(np.asarray(axis, float)).T + np.asarray(center, float)


def _segment(n: int, a, b) -> np.ndarray:
    t = ((np.arange(n) + 0.5) / n)[:, None]
    return np.asarray(a, float) + t * (np.asarray(b, float) - np.asarray(a, float))


def builtin_model(point_count: int = 256) -> np.ndarray:
    """Deterministic, rotationally asymmetric test shape.

    A wireframe-style armature: a full ring, a partial arc, a straight
    segment, a conical helix, a tilted plate, and a small lump, all at
    generic positions and orientations.  No rotation above ~30 degrees maps
    the composite near itself (each curve could only self-map under a spin
    about its own axis, which displaces every other part), which is what
    overlap validation needs to reject wrong poses; smooth closed surfaces
    fail that requirement along their near-symmetry axes.

    point_count only scales the default 256-point layout.
    """
    if point_count < 64:
        raise InvalidInput("model needs at least 64 points")
    scale = point_count / 256.0
    counts = [round(scale * c) for c in (64, 40, 27, 36, 49, 40)]
    counts[-1] = point_count - sum(counts[:-1])
    if counts[-1] < 4:
        raise InvalidInput("point_count leaves too few points for the last part")
    n_ring, n_arc, n_seg, n_helix, n_plate, n_lump = counts

    ring = _ring(n_ring, 0.55, (0.20, 0.30, 0.93), (0.05, -0.03, 0.02))
    arc = _ring(n_arc, 0.45, (0.90, -0.20, 0.40), (0.30, 0.20, -0.10),
                span=4.2, phase=0.7)
    seg = _segment(n_seg, (0.10, -0.45, -0.30), (-0.30, 0.20, -0.52))

    t = (np.arange(n_helix) + 0.5) / n_helix
    helix_local = np.column_stack([
        (0.12 + 0.18 * t) * np.cos(2.4 * math.pi * t),
        (0.12 + 0.18 * t) * np.sin(2.4 * math.pi * t),
        0.8 * (t - 0.5),
    ])
    helix = helix_local @ _frame_with_z((0.3, -0.85, 0.43)).T + np.array([-0.35, -0.25, 0.30])

    side = math.ceil(math.sqrt(n_plate))
    u = np.linspace(-0.16, 0.16, side)
    gu, gv = np.meshgrid(u, u, indexing="ij")
    flat = np.column_stack([np.zeros(side * side), gu.ravel(), gv.ravel()])[:n_plate]
    q = np.array([0.8, 0.36, 0.41, 0.25])
    plate = flat @ _quaternion_to_matrix(q / np.sqrt((q * q).sum())).T \
        + np.array([0.58, 0.21, -0.10])

    lump = _spiral_sphere(n_lump) * 0.11 + np.array([-0.42, 0.30, 0.22])

    return np.vstack([ring, arc, seg, helix, plate, lump])


def _quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Rotation drawn uniformly from the rotation group (quaternion method)."""
    q = rng.normal(size=4)
    q /= np.sqrt((q * q).sum())
    return _quaternion_to_matrix(q)


def model_diameter(model: np.ndarray) -> float:
    return float(pairwise_distances(model, model).max())


def generate_scene(model, instance_count: int, clutter_count: int,
                   rng_seed: int, min_separation: float | None = None) -> SceneGroundTruth:
    """Place `instance_count` rigidly transformed copies of the model plus
    uniform clutter points.

    Translations are drawn uniformly in a cube sized with the instance count
    so bounding boxes are separable with high probability; `min_separation`
    (distance between instance centers) adds rejection sampling for scenes
    that must be either cleanly separated or deliberately overlapping.
    """
    model = as_cloud(model)
    if not 1 <= instance_count <= MAX_INSTANCES:
        raise InvalidInput(f"instance_count must be in [1, {MAX_INSTANCES}]")
    if clutter_count < 0:
        raise InvalidInput("clutter_count must be >= 0")
    rng = np.random.default_rng(rng_seed)
    diameter = model_diameter(model)
    cells = 1
    while cells ** 3 < instance_count:
        cells += 1
    half = 0.5 * _PLACEMENT_SPREAD * diameter * cells

    poses: list[RigidTransform] = []
    centers: list[np.ndarray] = []
    for _ in range(instance_count):
        rot = random_rotation(rng)
        for _attempt in range(1000):
            tr = rng.uniform(-half, half, size=3)
            if min_separation is None or all(
                float(np.linalg.norm(tr - c)) >= min_separation for c in centers
            ):
                break
        else:
            raise InvalidInput("could not place instances with the requested separation")
        poses.append(RigidTransform(rot, tr))
        centers.append(tr)

    parts = [pose.apply(model) for pose in poses]
    ranges = []
    start = 0
    for part in parts:
        ranges.append((start, start + len(part)))
        start += len(part)
    instance_points = np.vstack(parts)
    if clutter_count > 0:
        lo = instance_points.min(axis=0)
        hi = instance_points.max(axis=0)
        clutter = rng.uniform(lo, hi, size=(clutter_count, 3))
        scene = np.vstack([instance_points, clutter])
    else:
        scene = instance_points
    return SceneGroundTruth(model, scene, poses, ranges, clutter_count)


def generate_correspondences(gt: SceneGroundTruth, inliers_per_instance: int,
                             outlier_ratio: float, noise_sigma_pr: float,
                             rng_seed: int) -> LabeledCorrespondences:
    """Mix exact per-instance correspondences (with optional Gaussian noise on
    the target side) with uniform-random outlier pairs until the requested
    outlier fraction is met to within one correspondence."""
    if inliers_per_instance < 1:
        raise InvalidInput("inliers_per_instance must be >= 1")
    if not 0.0 <= outlier_ratio < 1.0:
        raise InvalidInput("outlier_ratio must be in [0, 1)")
    if noise_sigma_pr < 0:
        raise InvalidInput("noise_sigma_pr must be >= 0")
    rng = np.random.default_rng(rng_seed)
    model = gt.model
    sigma = noise_sigma_pr * cloud_resolution(model)

    src_parts = []
    dst_parts = []
    labels = []
    for j, pose in enumerate(gt.poses):
        replace = inliers_per_instance > len(model)
        idx = rng.choice(len(model), size=inliers_per_instance, replace=replace)
        pts = model[idx]
        noise = sigma * rng.standard_normal((inliers_per_instance, 3))
        src_parts.append(pts)
        dst_parts.append(pose.apply(pts) + noise)
        labels.extend([j] * inliers_per_instance)

    n_inliers = gt.instance_count * inliers_per_instance
    n_outliers = round(n_inliers * outlier_ratio / (1.0 - outlier_ratio))
    if n_outliers > 0:
        src_idx = rng.integers(0, len(model), size=n_outliers)
        dst_idx = rng.integers(0, len(gt.scene), size=n_outliers)
        src_parts.append(model[src_idx])
        dst_parts.append(gt.scene[dst_idx])
        labels.extend([-1] * n_outliers)

    corrs = CorrespondenceSet(np.vstack(src_parts), np.vstack(dst_parts))
    return LabeledCorrespondences(corrs, np.asarray(labels, dtype=np.int64))
