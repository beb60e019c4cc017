"""Multi-instance rigid 3D registration from putative point correspondences.

Registers every rigid copy of a source model inside a target scene, one
instance per iteration: mine a mutually consistent seed group, expand it by
compatibility voting, solve a pose with guided three-point consensus, and
validate it by point-cloud overlap before removing the instance's
correspondences from the pool.
"""

from .consensus import (
    Hypothesis,
    correspondence_residual,
    guided_consensus,
    guided_triplets,
    mae_contribution,
    mae_score,
    ransac_solver,
    residuals,
)
from .correspondences import Correspondence, CorrespondenceSet
from .errors import (
    DegenerateInput,
    DegeneratePayoff,
    InsufficientCorrespondences,
    InvalidInput,
    MissingScores,
    RegistrationError,
    TooDegenerate,
)
from .geometry import (
    NeighborIndex,
    RigidTransform,
    apply_transform,
    cloud_resolution,
    estimate_rigid_transform,
    point_to_cloud_distance,
    rotation_error_deg,
    translation_error,
)
from .metrics import HitCriteria, MetricsReport, compute_metrics, match_hits
from .pipeline import (
    InstanceResult,
    PipelineConfig,
    RegistrationOutcome,
    downsample,
    register_instances,
    seeds_from_ratios,
)
from .seeding import (
    build_payoff_matrix,
    evolve_population,
    otsu_threshold,
    pairwise_rigidity,
    replicator_step,
    rigidity,
    select_seeds,
)
from .synthesis import (
    LabeledCorrespondences,
    SceneGroundTruth,
    builtin_model,
    generate_correspondences,
    generate_scene,
)
from .validation import ValidationVerdict, overlap_rate, validate_global, validate_local
from .voting import compatibility, select_dense, vote

__version__ = "0.1.0"

__all__ = [
    "Correspondence",
    "CorrespondenceSet",
    "DegenerateInput",
    "DegeneratePayoff",
    "HitCriteria",
    "Hypothesis",
    "InstanceResult",
    "InsufficientCorrespondences",
    "InvalidInput",
    "LabeledCorrespondences",
    "MetricsReport",
    "MissingScores",
    "NeighborIndex",
    "PipelineConfig",
    "RegistrationError",
    "RegistrationOutcome",
    "RigidTransform",
    "SceneGroundTruth",
    "TooDegenerate",
    "ValidationVerdict",
    "apply_transform",
    "build_payoff_matrix",
    "builtin_model",
    "cloud_resolution",
    "compatibility",
    "compute_metrics",
    "correspondence_residual",
    "downsample",
    "estimate_rigid_transform",
    "evolve_population",
    "generate_correspondences",
    "generate_scene",
    "guided_consensus",
    "guided_triplets",
    "mae_contribution",
    "mae_score",
    "match_hits",
    "otsu_threshold",
    "overlap_rate",
    "pairwise_rigidity",
    "point_to_cloud_distance",
    "ransac_solver",
    "register_instances",
    "replicator_step",
    "residuals",
    "rigidity",
    "rotation_error_deg",
    "seeds_from_ratios",
    "select_dense",
    "select_seeds",
    "translation_error",
    "validate_global",
    "validate_local",
    "vote",
]
