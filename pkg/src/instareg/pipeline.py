"""The instance-by-instance registration loop.

Each iteration re-samples the surviving correspondences, mines one mutually
consistent seed group with the evolutionary matching game, expands it into a
dense working set by compatibility voting, solves a pose with guided (or
plain random) three-point consensus, validates the pose against the scene,
and removes the working set from the pool regardless of the verdict.  The
loop stops when the seed group becomes too small, when fewer than three
correspondences survive, or at the iteration cap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .consensus import Hypothesis, guided_consensus, ransac_solver
from .correspondences import CorrespondenceSet
from .errors import (
    DegenerateInput,
    DegeneratePayoff,
    InsufficientCorrespondences,
    InvalidInput,
    MissingScores,
    TooDegenerate,
)
from .geometry import (
    DEFAULT_AREA_EPS,
    NeighborIndex,
    RigidTransform,
    as_cloud,
    cloud_resolution,
)
from .seeding import (
    DEFAULT_PAYOFF_EPS,
    evolve_population,
    otsu_threshold,
    select_seeds,
)
from .validation import overlap_rate, validate_global, validate_local
from .voting import select_dense, vote

VALIDATION_MODES = ("global", "local", "none")
SOLVER_MODES = ("guided", "ransac")
SEED_MODES = ("game", "ratio")

# Sub-stream tags for per-iteration RNG derivation.
_STREAM_DOWNSAMPLE = 1
_STREAM_POPULATION = 2
_STREAM_SOLVER = 3


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one registration run.

    Distance-like fields carry the `_pr` suffix and are multiples of the
    model cloud resolution, resolved to absolute units at run start.
    """

    downsample_size: int = 1024
    evolution_steps: int = 20
    dense_size: int = 300
    solver_budget: int = 100
    rigidity_scale_pr: float = 10.0
    inlier_threshold_pr: float = 10.0
    overlap_radius_pr: float = 1.5
    min_overlap: float = 0.85
    min_seeds: int = 5
    min_inliers: int = 100
    ratio_seed_count: int = 20
    max_iterations: int = 64
    rng_seed: int = 0
    validation_mode: str = "global"
    solver_mode: str = "guided"
    seed_mode: str = "game"
    # Fraction of the seed count a candidate's voting score must exceed to
    # enter the dense set; 0 disables the floor and keeps a pure top-k cut.
    dense_score_floor: float = 0.5
    area_eps: float = DEFAULT_AREA_EPS
    payoff_eps: float = DEFAULT_PAYOFF_EPS

    def __post_init__(self):
        counts = (
            self.downsample_size, self.dense_size, self.solver_budget,
            self.min_seeds, self.min_inliers, self.ratio_seed_count,
            self.max_iterations,
        )
        if any(c < 1 for c in counts):
            raise InvalidInput("all count parameters must be >= 1")
        if self.evolution_steps < 0:
            raise InvalidInput("evolution_steps must be >= 0")
        thresholds = (self.rigidity_scale_pr, self.inlier_threshold_pr,
                      self.overlap_radius_pr, self.area_eps, self.payoff_eps)
        if any(t <= 0 for t in thresholds):
            raise InvalidInput("thresholds must be positive")
        if not 0.0 < self.min_overlap < 1.0:
            raise InvalidInput("min_overlap must be in (0, 1)")
        if not 0.0 <= self.dense_score_floor < 1.0:
            raise InvalidInput("dense_score_floor must be in [0, 1)")
        if self.validation_mode not in VALIDATION_MODES:
            raise InvalidInput(f"validation_mode must be one of {VALIDATION_MODES}")
        if self.solver_mode not in SOLVER_MODES:
            raise InvalidInput(f"solver_mode must be one of {SOLVER_MODES}")
        if self.seed_mode not in SEED_MODES:
            raise InvalidInput(f"seed_mode must be one of {SEED_MODES}")

    @classmethod
    def for_real_scans(cls, **overrides) -> "PipelineConfig":
        """Preset tuned for partial, occluded real scans."""
        base = cls(solver_budget=20, inlier_threshold_pr=1.0,
                   overlap_radius_pr=3.0, min_overlap=0.7)
        return replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class InstanceResult:
    """One pose hypothesis produced by the loop, accepted or not."""

    transform: RigidTransform
    overlap: float
    mae: float
    dense_ids: tuple[int, ...]
    accepted: bool
    iteration: int


@dataclass(frozen=True)
class RegistrationOutcome:
    results: list[InstanceResult] = field(default_factory=list)
    rejected: list[InstanceResult] = field(default_factory=list)
    iterations_run: int = 0
    wall_time: float = 0.0


def derive_seed(base: int, *keys: int) -> int:
    """Deterministic child seed for a named sub-stream of a run."""
    seq = np.random.SeedSequence((int(base),) + tuple(int(k) for k in keys))
    return int(seq.generate_state(1, np.uint64)[0])


def downsample(corrs: CorrespondenceSet, size: int, seed: int) -> CorrespondenceSet:
    """Uniform random subset of at most `size` members, original order kept."""
    if size < 1:
        raise InvalidInput("size must be >= 1")
    n = len(corrs)
    if n <= size:
        return corrs
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n, size=size, replace=False))
    return corrs.take(chosen)


def seeds_from_ratios(corrs: CorrespondenceSet, ratios: dict[int, float] | None,
                      top_k: int) -> CorrespondenceSet:
    """Most distinctive correspondences by ascending similarity ratio.

    Ratios come from the feature matcher that produced the correspondences
    (smaller means more distinctive); they are external inputs, so missing
    values raise MissingScores.
    """
    if top_k < 1:
        raise InvalidInput("top_k must be >= 1")
    if ratios is None:
        raise MissingScores("similarity ratios were not provided")
    missing = [int(i) for i in corrs.ids if int(i) not in ratios]
    if missing:
        raise MissingScores(f"no similarity ratio for ids {missing[:5]}")
    order = sorted(range(len(corrs)),
                   key=lambda i: (ratios[int(corrs.ids[i])], int(corrs.ids[i])))
    return corrs.take(order[:top_k])


def _solve(dense: CorrespondenceSet, scores, cfg: PipelineConfig,
           inlier_threshold: float, iteration: int) -> Hypothesis:
    if cfg.solver_mode == "guided":
        return guided_consensus(dense, scores, cfg.solver_budget,
                                inlier_threshold, cfg.area_eps)
    seed = derive_seed(cfg.rng_seed, iteration, _STREAM_SOLVER)
    return ransac_solver(dense, cfg.solver_budget, inlier_threshold,
                         seed, cfg.area_eps)


def register_instances(corrs: CorrespondenceSet, model, scene,
                       cfg: PipelineConfig | None = None,
                       ratios: dict[int, float] | None = None) -> RegistrationOutcome:
    """Run the full iterative loop and return every accepted pose.

    `ratios` is only consulted when cfg.seed_mode == "ratio".  Inner errors
    during one iteration (degenerate payoff, no usable triple) reject that
    iteration's working set and continue, so a run never aborts midway;
    iterations_run counts iterations that completed a removal.
    """
    if corrs is None or len(corrs) == 0:
        raise InvalidInput("correspondence set is empty")
    model = as_cloud(model)
    scene = as_cloud(scene)
    cfg = cfg or PipelineConfig()
    if cfg.seed_mode == "ratio" and ratios is None:
        raise MissingScores("seed_mode='ratio' needs similarity ratios")

    start = time.perf_counter()
    pr = cloud_resolution(model)
    if pr <= 0:
        raise InvalidInput("model resolution is zero (duplicate points only)")
    rigidity_scale = cfg.rigidity_scale_pr * pr
    inlier_threshold = cfg.inlier_threshold_pr * pr
    overlap_radius = cfg.overlap_radius_pr * pr
    scene_index = NeighborIndex(scene)

    remaining = corrs
    accepted: list[InstanceResult] = []
    rejected: list[InstanceResult] = []
    completed = 0

    for iteration in range(1, cfg.max_iterations + 1):
        if len(remaining) < 3:
            break
        sample = downsample(remaining, cfg.downsample_size,
                            derive_seed(cfg.rng_seed, iteration, _STREAM_DOWNSAMPLE))

        if cfg.seed_mode == "game":
            try:
                population = evolve_population(
                    sample, cfg.evolution_steps, rigidity_scale,
                    init_seed=derive_seed(cfg.rng_seed, iteration, _STREAM_POPULATION),
                    payoff_eps=cfg.payoff_eps)
            except DegeneratePayoff:
                # No mutual consistency anywhere in the sample: drop it all
                # rather than spin on the same hopeless pool.
                remaining = remaining.without(sample.ids)
                completed = iteration
                continue
            try:
                cut = otsu_threshold(population)
            except DegenerateInput:
                seeds = sample.take(np.empty(0, dtype=np.int64))
            else:
                seeds = select_seeds(sample, population, cut)
        else:
            seeds = seeds_from_ratios(sample, ratios, cfg.ratio_seed_count)

        if len(seeds) < cfg.min_seeds:
            break  # consistency too weak: the stop rule

        scores = vote(remaining, seeds, rigidity_scale)
        pool = remaining
        if cfg.dense_score_floor > 0.0:
            # Keyed to the best-supported candidate, not the seed count, so a
            # seed group split across instances still yields a usable pool.
            floor = cfg.dense_score_floor * max(scores.values())
            keep = np.fromiter((scores[int(i)] > floor for i in remaining.ids),
                               dtype=bool, count=len(remaining))
            pool = remaining.take(np.flatnonzero(keep))
        dense = select_dense(pool, scores, cfg.dense_size) if len(pool) else pool
        # Removing seeds along with the dense set keeps every completed
        # iteration shrinking the pool by at least min_seeds.
        removal = set(int(i) for i in dense.ids) | set(int(i) for i in seeds.ids)

        if len(dense) < 3:
            remaining = remaining.without(removal)
            completed = iteration
            continue

        try:
            hypothesis = _solve(dense, scores, cfg, inlier_threshold, iteration)
        except (TooDegenerate, InsufficientCorrespondences):
            remaining = remaining.without(removal)
            completed = iteration
            continue

        overlap = overlap_rate(hypothesis.transform, model, scene_index, overlap_radius)
        if cfg.validation_mode == "global":
            ok = validate_global(overlap, cfg.min_overlap)
        elif cfg.validation_mode == "local":
            ok = validate_local(hypothesis.transform, remaining,
                                inlier_threshold, cfg.min_inliers).accepted
        else:
            ok = True

        result = InstanceResult(
            transform=hypothesis.transform,
            overlap=overlap,
            mae=hypothesis.mae,
            dense_ids=tuple(int(i) for i in dense.ids),
            accepted=ok,
            iteration=iteration,
        )
        (accepted if ok else rejected).append(result)
        remaining = remaining.without(removal)
        completed = iteration

    return RegistrationOutcome(
        results=accepted,
        rejected=rejected,
        iterations_run=completed,
        wall_time=time.perf_counter() - start,
    )
