"""Hypothesis validation: global point-cloud overlap, plus the local
inlier-count alternative."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consensus import residuals
from .correspondences import CorrespondenceSet
from .errors import InvalidInput
from .geometry import NeighborIndex, RigidTransform, as_cloud


@dataclass(frozen=True)
class ValidationVerdict:
    accepted: bool
    overlap: float = 0.0
    inlier_count: int = 0


def overlap_rate(transform: RigidTransform, model, scene_index: NeighborIndex,
                 radius: float) -> float:
    """Fraction of transformed model points within `radius` of the scene."""
    if radius <= 0:
        raise InvalidInput("radius must be positive")
    moved = transform.apply(as_cloud(model))
    dist = scene_index.nearest_distances(moved)
    return float(np.count_nonzero(dist <= radius)) / len(moved)


def validate_global(overlap: float, min_overlap: float) -> bool:
    """Accept iff the overlap strictly exceeds the threshold."""
    if not 0.0 <= overlap <= 1.0:
        raise InvalidInput("overlap must be in [0, 1]")
    return overlap > min_overlap


def validate_local(transform: RigidTransform, corrs: CorrespondenceSet,
                   inlier_threshold: float, min_inliers: int) -> ValidationVerdict:
    """Accept iff strictly more than `min_inliers` residuals fall below the
    inlier threshold.  The overlap field is not computed on this path."""
    if inlier_threshold <= 0 or min_inliers <= 0:
        raise InvalidInput("thresholds must be positive")
    count = int(np.count_nonzero(residuals(transform, corrs) < inlier_threshold))
    return ValidationVerdict(accepted=count > min_inliers, inlier_count=count)
