"""Seed-group mining via an evolutionary matching game.

Every candidate correspondence is a strategy in a symmetric two-player game.
The payoff between two strategies is a decreasing kernel of their rigidity
gap (the absolute difference between source-side and target-side pairwise
distances), so pairs that could belong to one rigid motion reward each other
and unrelated pairs do not.  Iterating the discrete replicator update

    x_i <- x_i * (P x)_i / (x^T P x)

concentrates population mass onto one mutually consistent group; an Otsu cut
on the final masses then separates that group from the rest.  The update is
self-normalizing, and for a symmetric payoff the average payoff x^T P x never
decreases, which is what makes the winning group stable.
"""

from __future__ import annotations

import numpy as np

from .correspondences import Correspondence, CorrespondenceSet
from .errors import DegenerateInput, DegeneratePayoff, InvalidInput
from .geometry import pairwise_distances, point_distance

DEFAULT_PAYOFF_EPS = 1e-12

_INIT_JITTER = 1e-4
_OTSU_BINS = 256


def rigidity(a: Correspondence, b: Correspondence) -> float:
    """Absolute gap between source-side and target-side pair distances.

    Zero iff the two correspondences are consistent with one rigid motion.
    """
    return abs(point_distance(a.src, b.src) - point_distance(a.dst, b.dst))


def pairwise_rigidity(corrs: CorrespondenceSet) -> np.ndarray:
    """Symmetric matrix of rigidity gaps for every pair in the set."""
    return np.abs(pairwise_distances(corrs.src, corrs.src)
                  - pairwise_distances(corrs.dst, corrs.dst))


def build_payoff_matrix(corrs: CorrespondenceSet, rigidity_scale: float) -> np.ndarray:
    """Payoff matrix exp(-(rigidity / scale)^2) with a zero diagonal.

    The square is an explicit multiply, not `** 2`: libm pow is off by an
    ulp on some inputs, and the scalar and matrix paths must agree bitwise.
    """
    if rigidity_scale <= 0:
        raise InvalidInput("rigidity_scale must be positive")
    q = pairwise_rigidity(corrs) / rigidity_scale
    payoff = np.exp(-(q * q))
    np.fill_diagonal(payoff, 0.0)
    return payoff


def replicator_step(population: np.ndarray, payoff: np.ndarray,
                    payoff_eps: float = DEFAULT_PAYOFF_EPS) -> np.ndarray:
    """One discrete replicator update of the population over the payoff.

    Raises DegeneratePayoff when the average payoff is at or below
    payoff_eps, which signals that no mutual consistency is left; callers
    treat the current seed set as empty.
    """
    x = np.asarray(population, dtype=np.float64)
    if x.ndim != 1 or payoff.shape != (x.size, x.size):
        raise InvalidInput("population and payoff shapes do not match")
    fitness = payoff @ x
    mean_fitness = float(x @ fitness)
    if mean_fitness <= payoff_eps:
        raise DegeneratePayoff(f"average payoff {mean_fitness:g} <= {payoff_eps:g}")
    return x * fitness / mean_fitness


def evolve_population(corrs: CorrespondenceSet, steps: int, rigidity_scale: float,
                      init_seed: int = 0,
                      payoff_eps: float = DEFAULT_PAYOFF_EPS) -> np.ndarray:
    """Run the matching game for a fixed number of replicator steps.

    The population starts at the barycenter of the simplex with a tiny seeded
    jitter; exact uniformity is a fixed point for symmetric payoffs, so the
    jitter is required for the dynamics to break ties between equally strong
    groups deterministically.
    """
    n = len(corrs)
    if n < 2:
        raise InvalidInput("need at least two correspondences to run the game")
    if steps < 0:
        raise InvalidInput("steps must be >= 0")
    payoff = build_payoff_matrix(corrs, rigidity_scale)
    rng = np.random.default_rng(init_seed)
    x = 1.0 + rng.uniform(-_INIT_JITTER, _INIT_JITTER, size=n)
    x /= x.sum()
    for _ in range(steps):
        x = replicator_step(x, payoff, payoff_eps)
    return x


def otsu_threshold(values) -> float:
    """Histogram threshold maximizing between-class variance.

    Values are binned into 256 uniform bins over [min, max]; the returned
    threshold is the right edge of the best split bin (first maximizer on
    ties).  Raises DegenerateInput when all values are equal.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size < 2:
        raise InvalidInput("need at least two values")
    lo = float(vals.min())
    hi = float(vals.max())
    if lo == hi:
        raise DegenerateInput("all values equal; no threshold exists")
    counts, edges = np.histogram(vals, bins=_OTSU_BINS, range=(lo, hi))
    p = counts / counts.sum()
    centers = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(p)
    m0 = np.cumsum(p * centers)
    w1 = 1.0 - w0
    total_mean = m0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = m0 / w0
        mu1 = (total_mean - m0) / w1
        var_between = w0 * w1 * (mu0 - mu1) ** 2
    var_between = np.where((w0 > 0) & (w1 > 0), var_between, 0.0)
    k = int(np.argmax(var_between))
    return float(edges[k + 1])


def select_seeds(corrs: CorrespondenceSet, population: np.ndarray,
                 threshold: float) -> CorrespondenceSet:
    """Members whose population mass strictly exceeds the threshold, in order."""
    x = np.asarray(population, dtype=np.float64)
    if x.shape != (len(corrs),):
        raise InvalidInput("population length must match the correspondence set")
    return corrs.take(np.flatnonzero(x > threshold))
