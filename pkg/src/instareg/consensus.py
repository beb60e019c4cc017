"""Pose hypothesis generation and selection.

Triplet hypotheses are drawn from the dense set either in descending order of
summed voting scores (guided) or uniformly at random (the RANSAC baseline),
solved with the closed-form three-point estimator, and ranked by a truncated
inlier-margin score: every correspondence with residual e below the inlier
threshold t contributes (t - e) / t.  The highest-scoring hypothesis wins;
ties keep the earliest hypothesis in generation order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .correspondences import Correspondence, CorrespondenceSet
from .errors import InsufficientCorrespondences, InvalidInput, TooDegenerate
from .geometry import (
    DEFAULT_AREA_EPS,
    RigidTransform,
    estimate_rigid_transform,
    triangle_area,
)
from .voting import VotingScores

# Bound on priority-queue pops while walking triples in score order; keeps
# adversarial near-collinear sets from enumerating O(n^3) candidates.
_MAX_TRIPLET_POPS = 200_000


@dataclass(frozen=True)
class Hypothesis:
    """A candidate pose with its score and the id triple that generated it."""

    transform: RigidTransform
    mae: float
    triplet_ids: tuple[int, int, int]


def residuals(transform: RigidTransform, corrs: CorrespondenceSet) -> np.ndarray:
    """Euclidean residual of every correspondence under the transform."""
    moved = transform.apply(corrs.src)
    diff = moved - corrs.dst
    return np.sqrt((diff * diff).sum(-1))


def correspondence_residual(transform: RigidTransform, corr: Correspondence) -> float:
    """Residual ||R p + t - p'|| of a single correspondence."""
    moved = transform.apply(corr.src)
    diff = moved - corr.dst
    return float(np.sqrt((diff * diff).sum(-1)))


def mae_contribution(residual: float, inlier_threshold: float) -> float:
    """Truncated normalized margin (t - e) / t for e < t, else 0; in [0, 1]."""
    if inlier_threshold <= 0:
        raise InvalidInput("inlier_threshold must be positive")
    if residual < inlier_threshold:
        return (inlier_threshold - residual) / inlier_threshold
    return 0.0


def mae_score(transform: RigidTransform, corrs: CorrespondenceSet,
              inlier_threshold: float) -> float:
    """Sum of truncated inlier margins over the evaluation set."""
    if inlier_threshold <= 0:
        raise InvalidInput("inlier_threshold must be positive")
    e = residuals(transform, corrs)
    contrib = np.where(e < inlier_threshold, (inlier_threshold - e) / inlier_threshold, 0.0)
    return float(np.sum(contrib))


def guided_triplets(corrs: CorrespondenceSet, scores: VotingScores, budget: int,
                    area_eps: float = DEFAULT_AREA_EPS) -> list[tuple[int, int, int]]:
    """Up to `budget` id triples in descending order of summed voting score.

    Triples whose source points span a triangle of area <= area_eps are
    skipped.  Enumeration is a best-first frontier walk over index triples of
    the score-sorted list, so the top triples come out without materializing
    all O(n^3) combinations; ties in the score sum are broken by ascending
    id tuples.
    """
    n = len(corrs)
    if n < 3:
        raise InsufficientCorrespondences("need at least 3 correspondences")
    if budget < 1:
        raise InvalidInput("budget must be >= 1")
    order = sorted(range(n), key=lambda i: (-scores[int(corrs.ids[i])], int(corrs.ids[i])))
    ids = [int(corrs.ids[i]) for i in order]
    vals = [scores[i] for i in ids]
    pts = corrs.src[np.asarray(order, dtype=np.int64)]

    def entry(tri: tuple[int, int, int]):
        i, j, k = tri
        return (-(vals[i] + vals[j] + vals[k]), (ids[i], ids[j], ids[k]), tri)

    heap = [entry((0, 1, 2))]
    seen = {(0, 1, 2)}
    out: list[tuple[int, int, int]] = []
    pops = 0
    while heap and len(out) < budget and pops < _MAX_TRIPLET_POPS:
        _, id_tuple, (i, j, k) = heapq.heappop(heap)
        pops += 1
        if triangle_area(pts[i], pts[j], pts[k]) > area_eps:
            out.append(id_tuple)
        for succ in ((i, j, k + 1), (i, j + 1, k), (i + 1, j, k)):
            si, sj, sk = succ
            if sk < n and si < sj < sk and succ not in seen:
                seen.add(succ)
                heapq.heappush(heap, entry(succ))
    if not out:
        raise TooDegenerate("no non-collinear triple found in the candidate set")
    return out


def _best_hypothesis(corrs: CorrespondenceSet, triples, inlier_threshold: float,
                     area_eps: float) -> Hypothesis:
    best: Hypothesis | None = None
    for id_tuple in triples:
        sub = corrs.subset_by_ids(id_tuple)
        transform = estimate_rigid_transform(sub.src, sub.dst, area_eps)
        score = mae_score(transform, corrs, inlier_threshold)
        if best is None or score > best.mae:
            best = Hypothesis(transform, score, tuple(id_tuple))
    assert best is not None
    return best


def guided_consensus(corrs: CorrespondenceSet, scores: VotingScores, budget: int,
                     inlier_threshold: float,
                     area_eps: float = DEFAULT_AREA_EPS) -> Hypothesis:
    """Best hypothesis among the top `budget` score-guided triples."""
    triples = guided_triplets(corrs, scores, budget, area_eps)
    return _best_hypothesis(corrs, triples, inlier_threshold, area_eps)


def ransac_solver(corrs: CorrespondenceSet, iterations: int, inlier_threshold: float,
                  seed: int, area_eps: float = DEFAULT_AREA_EPS) -> Hypothesis:
    """Uniform-random triplet baseline with the same scoring and tie rules.

    Draws until `iterations` non-degenerate triples have been evaluated, with
    a bounded number of redraws so fully degenerate sets fail fast.
    """
    n = len(corrs)
    if n < 3:
        raise InsufficientCorrespondences("need at least 3 correspondences")
    if iterations < 1:
        raise InvalidInput("iterations must be >= 1")
    rng = np.random.default_rng(seed)
    triples: list[tuple[int, int, int]] = []
    attempts = 0
    max_attempts = 20 * iterations + 100
    while len(triples) < iterations and attempts < max_attempts:
        attempts += 1
        pos = rng.choice(n, size=3, replace=False)
        if triangle_area(corrs.src[pos[0]], corrs.src[pos[1]], corrs.src[pos[2]]) <= area_eps:
            continue
        triples.append(tuple(int(corrs.ids[p]) for p in pos))
    if not triples:
        raise TooDegenerate("no non-degenerate triple drawn")
    return _best_hypothesis(corrs, triples, inlier_threshold, area_eps)
