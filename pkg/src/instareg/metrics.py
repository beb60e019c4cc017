"""Hit-based detection metrics for multi-instance registration results."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidInput
from .geometry import RigidTransform, rotation_error_deg, translation_error

PairCounts = tuple[int, int, int]  # (hits, gt_count, pred_count)


@dataclass(frozen=True)
class HitCriteria:
    """A prediction hits a true pose when both errors are within bounds.

    The translation bound is expressed in multiples of the model cloud
    resolution so it is portable across scene scales.
    """

    rre_max_deg: float = 15.0
    rte_max_pr: float = 10.0

    def __post_init__(self):
        if self.rre_max_deg <= 0 or self.rte_max_pr <= 0:
            raise InvalidInput("hit criteria must be positive")


@dataclass(frozen=True)
class MetricsReport:
    mhr: float
    mhp: float
    mhf1: float
    per_pair: list[PairCounts] = field(default_factory=list)
    mean_time: float = 0.0


def match_hits(preds: list[RigidTransform], gts: list[RigidTransform],
               criteria: HitCriteria, pr: float) -> list[tuple[int, int]]:
    """Greedy one-to-one assignment of predictions to true poses.

    Candidate pairs within both error bounds are taken in ascending order of
    rotation error; each prediction and each true pose can be used once.
    """
    if pr <= 0:
        raise InvalidInput("pr must be positive")
    max_te = criteria.rte_max_pr * pr
    candidates = []
    for i, pred in enumerate(preds):
        for j, gt in enumerate(gts):
            re = rotation_error_deg(pred.rotation, gt.rotation)
            if re > criteria.rre_max_deg:
                continue
            te = translation_error(pred.translation, gt.translation)
            if te > max_te:
                continue
            candidates.append((re, i, j))
    candidates.sort()
    hits = []
    used_pred: set[int] = set()
    used_gt: set[int] = set()
    for _, i, j in candidates:
        if i not in used_pred and j not in used_gt:
            hits.append((i, j))
            used_pred.add(i)
            used_gt.add(j)
    return hits


def compute_metrics(per_pair: list[PairCounts], mean_time: float = 0.0) -> MetricsReport:
    """Mean hit recall / precision / F1 over scene pairs.

    Per pair: recall = hits / gt_count, precision = hits / pred_count (zero
    when there are no predictions), F1 the harmonic mean (zero when both are
    zero); the report averages the per-pair values.
    """
    if not per_pair:
        raise InvalidInput("need at least one scene pair")
    recalls = []
    precisions = []
    f1s = []
    for hits, gt_count, pred_count in per_pair:
        if gt_count < 1:
            raise InvalidInput("gt_count must be >= 1 for every pair")
        if hits < 0 or hits > min(gt_count, pred_count):
            raise InvalidInput("hits must be in [0, min(gt_count, pred_count)]")
        hr = hits / gt_count
        hp = hits / pred_count if pred_count > 0 else 0.0
        f1 = 2.0 * hr * hp / (hr + hp) if (hr + hp) > 0 else 0.0
        recalls.append(hr)
        precisions.append(hp)
        f1s.append(f1)
    n = len(per_pair)
    return MetricsReport(
        mhr=sum(recalls) / n,
        mhp=sum(precisions) / n,
        mhf1=sum(f1s) / n,
        per_pair=list(per_pair),
        mean_time=mean_time,
    )
