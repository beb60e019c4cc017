"""Hit matching and mean recall / precision / F1 aggregation."""

import numpy as np
import pytest

from instareg import (
    HitCriteria,
    InvalidInput,
    RigidTransform,
    compute_metrics,
    match_hits,
)
from instareg.synthesis import random_rotation


def rot_z(deg):
    a = np.deg2rad(deg)
    return np.array([[np.cos(a), -np.sin(a), 0.0],
                     [np.sin(a), np.cos(a), 0.0],
                     [0.0, 0.0, 1.0]])


def random_poses(seed, n):
    rng = np.random.default_rng(seed)
    return [RigidTransform(random_rotation(rng), rng.uniform(-5, 5, 3))
            for _ in range(n)]


class TestMatchHits:
    def test_identical_poses_all_hit(self, hit_criteria):
        poses = random_poses(0, 4)
        hits = match_hits(poses, poses, hit_criteria, pr=0.1)
        assert len(hits) == 4

    def test_one_pred_two_close_gts(self, hit_criteria):
        pose = random_poses(1, 1)[0]
        hits = match_hits([pose], [pose, pose], hit_criteria, pr=0.1)
        assert len(hits) == 1

    def test_rotation_beyond_limit_misses(self, hit_criteria):
        gt = RigidTransform.identity()
        pred = RigidTransform(rot_z(20.0), np.zeros(3))
        assert match_hits([pred], [gt], hit_criteria, pr=0.1) == []

    def test_translation_beyond_limit_misses(self, hit_criteria):
        gt = RigidTransform.identity()
        pred = RigidTransform(np.eye(3), np.array([2.0, 0, 0]))  # 20 pr
        assert match_hits([pred], [gt], hit_criteria, pr=0.1) == []

    def test_greedy_prefers_lower_rotation_error(self, hit_criteria):
        gt = RigidTransform.identity()
        close = RigidTransform(rot_z(1.0), np.zeros(3))
        closer = RigidTransform(rot_z(0.2), np.zeros(3))
        hits = match_hits([close, closer], [gt], hit_criteria, pr=0.1)
        assert hits == [(1, 0)]

    def test_hits_bounded(self, hit_criteria):
        preds = random_poses(2, 5)
        gts = random_poses(3, 3)
        hits = match_hits(preds, gts, hit_criteria, pr=0.1)
        assert 0 <= len(hits) <= 3

    def test_permutation_invariant_count(self, hit_criteria):
        gts = random_poses(4, 4)
        preds = list(gts)
        a = len(match_hits(preds, gts, hit_criteria, pr=0.1))
        b = len(match_hits(preds[::-1], gts, hit_criteria, pr=0.1))
        assert a == b == 4

    def test_bad_pr(self, hit_criteria):
        with pytest.raises(InvalidInput):
            match_hits([], [], hit_criteria, pr=0.0)


class TestComputeMetrics:
    def test_perfect_pair(self):
        rep = compute_metrics([(2, 2, 2)])
        assert rep.mhr == rep.mhp == rep.mhf1 == 1.0

    def test_half_recall_full_precision(self):
        rep = compute_metrics([(1, 2, 1)])
        assert rep.mhr == 0.5
        assert rep.mhp == 1.0
        np.testing.assert_allclose(rep.mhf1, 2.0 / 3.0)

    def test_mean_over_pairs(self):
        rep = compute_metrics([(2, 2, 2), (0, 2, 2)])
        assert rep.mhf1 == 0.5

    def test_no_predictions(self):
        rep = compute_metrics([(0, 3, 0)])
        assert rep.mhr == 0.0 and rep.mhp == 0.0 and rep.mhf1 == 0.0

    def test_zero_gt_rejected(self):
        with pytest.raises(InvalidInput):
            compute_metrics([(0, 0, 1)])

    def test_inconsistent_hits_rejected(self):
        with pytest.raises(InvalidInput):
            compute_metrics([(3, 2, 5)])

    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            compute_metrics([])

    def test_criteria_validation(self):
        with pytest.raises(InvalidInput):
            HitCriteria(rre_max_deg=0.0)
