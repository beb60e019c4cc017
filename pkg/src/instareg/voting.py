"""Compatibility voting: score candidates against a trusted voter set and
keep the strongest ones as the dense working set."""

from __future__ import annotations

import numpy as np

from .correspondences import Correspondence, CorrespondenceSet
from .errors import InvalidInput
from .geometry import pairwise_distances
from .seeding import rigidity

VotingScores = dict[int, float]


def compatibility(a: Correspondence, b: Correspondence, rigidity_scale: float) -> float:
    """exp(-(rigidity / scale)^2), in (0, 1]; 1 for a perfectly rigid pair.

    Squared via explicit multiply so the result is bitwise identical to the
    vectorized voting path (libm pow rounds differently on some inputs).
    """
    if rigidity_scale <= 0:
        raise InvalidInput("rigidity_scale must be positive")
    q = rigidity(a, b) / rigidity_scale
    return float(np.exp(-(q * q)))


def vote(candidates: CorrespondenceSet, voters: CorrespondenceSet,
         rigidity_scale: float) -> VotingScores:
    """Sum of compatibilities between each candidate and every voter.

    A candidate that is itself a voter keeps its self term (compatibility 1).
    Per candidate, voters are accumulated in set order so repeated runs are
    bitwise identical.
    """
    if rigidity_scale <= 0:
        raise InvalidInput("rigidity_scale must be positive")
    if len(voters) == 0:
        raise InvalidInput("voter set is empty")
    q = np.abs(pairwise_distances(candidates.src, voters.src)
               - pairwise_distances(candidates.dst, voters.dst)) / rigidity_scale
    compat = np.exp(-(q * q))
    scores = np.zeros(len(candidates))
    for j in range(compat.shape[1]):
        scores += compat[:, j]
    return {int(i): float(s) for i, s in zip(candidates.ids, scores)}


def select_dense(candidates: CorrespondenceSet, scores: VotingScores,
                 keep: int) -> CorrespondenceSet:
    """Top `keep` candidates by descending score, ties broken by ascending id."""
    if keep < 1:
        raise InvalidInput("keep must be >= 1")
    order = sorted(range(len(candidates)),
                   key=lambda i: (-scores[int(candidates.ids[i])], int(candidates.ids[i])))
    return candidates.take(order[:keep])
