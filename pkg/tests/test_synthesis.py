"""Scene and correspondence generation with controlled outlier ratios."""

import numpy as np
import pytest

from instareg import (
    InvalidInput,
    NeighborIndex,
    builtin_model,
    cloud_resolution,
    generate_correspondences,
    generate_scene,
    overlap_rate,
)
from instareg.consensus import residuals


def test_builtin_model_shape_and_determinism():
    a = builtin_model()
    b = builtin_model()
    assert a.shape == (256, 3)
    np.testing.assert_array_equal(a, b)


def test_single_instance_is_exact_copy(model):
    gt = generate_scene(model, 1, 0, rng_seed=10)
    assert len(gt.scene) == len(model)
    idx = NeighborIndex(gt.scene)
    assert overlap_rate(gt.poses[0], model, idx, 1e-9) == 1.0


def test_five_instances_disjoint_ranges(model):
    gt = generate_scene(model, 5, 0, rng_seed=11)
    assert len(gt.poses) == 5
    assert len(gt.scene) == 5 * len(model)
    flat = []
    for lo, hi in gt.instance_point_ranges:
        assert hi - lo == len(model)
        flat.extend(range(lo, hi))
    assert len(set(flat)) == len(flat) == 5 * len(model)


def test_clutter_appended(model):
    gt = generate_scene(model, 2, 40, rng_seed=12)
    assert len(gt.scene) == 2 * len(model) + 40
    assert gt.clutter_count == 40


def test_scene_deterministic(model):
    a = generate_scene(model, 4, 25, rng_seed=13)
    b = generate_scene(model, 4, 25, rng_seed=13)
    np.testing.assert_array_equal(a.scene, b.scene)
    for pa, pb in zip(a.poses, b.poses):
        np.testing.assert_array_equal(pa.rotation, pb.rotation)
        np.testing.assert_array_equal(pa.translation, pb.translation)


def test_poses_are_proper_rotations(model):
    gt = generate_scene(model, 6, 0, rng_seed=14)
    for pose in gt.poses:
        r = pose.rotation
        np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)
        assert abs(np.linalg.det(r) - 1.0) < 1e-12


def test_instance_count_bounds(model):
    with pytest.raises(InvalidInput):
        generate_scene(model, 0, 0, rng_seed=0)
    with pytest.raises(InvalidInput):
        generate_scene(model, 21, 0, rng_seed=0)


def test_min_separation_respected(model):
    gt = generate_scene(model, 4, 0, rng_seed=15, min_separation=3.0)
    centers = [p.translation for p in gt.poses]
    for i in range(4):
        for j in range(i + 1, 4):
            assert np.linalg.norm(centers[i] - centers[j]) >= 3.0


class TestGenerateCorrespondences:
    def test_zero_noise_zero_outliers_exact(self, model):
        gt = generate_scene(model, 3, 0, rng_seed=16)
        lab = generate_correspondences(gt, 20, 0.0, 0.0, rng_seed=17)
        assert len(lab.corrs) == 60
        assert lab.outlier_ratio() == 0.0
        for j, pose in enumerate(gt.poses):
            members = lab.corrs.take(np.flatnonzero(lab.labels == j))
            assert residuals(pose, members).max() == 0.0

    def test_outlier_mixing_arithmetic(self, model):
        gt = generate_scene(model, 3, 0, rng_seed=18)
        lab = generate_correspondences(gt, 20, 0.8, 0.0, rng_seed=19)
        n_out = int(np.count_nonzero(lab.labels < 0))
        assert n_out == 240
        assert len(lab.corrs) == 300

    @pytest.mark.parametrize("ratio", [0.1, 0.33, 0.5, 0.77, 0.9])
    def test_achieved_ratio_within_one_member(self, model, ratio):
        gt = generate_scene(model, 4, 0, rng_seed=20)
        lab = generate_correspondences(gt, 20, ratio, 0.5, rng_seed=21)
        assert abs(lab.outlier_ratio() - ratio) <= 1.0 / len(lab.corrs)

    def test_noisy_labels_roundtrip(self, model, model_pr):
        # residual of a labeled inlier under its own pose stays within the
        # 4-sigma tail (per-axis sigma, radial bound holds even more slack)
        gt = generate_scene(model, 5, 0, rng_seed=22)
        sigma_pr = 0.5
        lab = generate_correspondences(gt, 200, 0.3, sigma_pr, rng_seed=23)
        bound = 4.0 * sigma_pr * model_pr * np.sqrt(3)
        total, bad = 0, 0
        for j, pose in enumerate(gt.poses):
            members = lab.corrs.take(np.flatnonzero(lab.labels == j))
            res = residuals(pose, members)
            total += len(res)
            bad += int(np.count_nonzero(res > bound))
        assert bad / total <= 0.001

    def test_every_member_labeled_once(self, model):
        gt = generate_scene(model, 2, 0, rng_seed=24)
        lab = generate_correspondences(gt, 15, 0.4, 0.5, rng_seed=25)
        assert lab.labels.shape == (len(lab.corrs),)
        assert set(np.unique(lab.labels)) <= {-1, 0, 1}

    def test_deterministic(self, model):
        gt = generate_scene(model, 2, 0, rng_seed=26)
        a = generate_correspondences(gt, 10, 0.5, 0.5, rng_seed=27)
        b = generate_correspondences(gt, 10, 0.5, 0.5, rng_seed=27)
        np.testing.assert_array_equal(a.corrs.src, b.corrs.src)
        np.testing.assert_array_equal(a.corrs.dst, b.corrs.dst)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_parameter_validation(self, model):
        gt = generate_scene(model, 1, 0, rng_seed=28)
        with pytest.raises(InvalidInput):
            generate_correspondences(gt, 0, 0.5, 0.5, rng_seed=0)
        with pytest.raises(InvalidInput):
            generate_correspondences(gt, 10, 1.0, 0.5, rng_seed=0)
        with pytest.raises(InvalidInput):
            generate_correspondences(gt, 10, -0.1, 0.5, rng_seed=0)
