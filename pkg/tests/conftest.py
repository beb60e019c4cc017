import numpy as np
import pytest

from instareg import (
    CorrespondenceSet,
    HitCriteria,
    builtin_model,
    cloud_resolution,
    generate_correspondences,
    generate_scene,
)


@pytest.fixture(scope="session")
def model():
    return builtin_model()


@pytest.fixture(scope="session")
def model_pr(model):
    return cloud_resolution(model)


@pytest.fixture(scope="session")
def hit_criteria():
    return HitCriteria()


def random_correspondences(rng, n, scale=1.0):
    """Unstructured correspondences (outlier-like, no shared motion)."""
    return CorrespondenceSet(scale * rng.normal(size=(n, 3)),
                             scale * rng.normal(size=(n, 3)))


def rigid_group(rng, transform, n, noise=0.0):
    """Correspondences consistent with one rigid motion."""
    src = rng.uniform(-1.0, 1.0, size=(n, 3))
    dst = transform.apply(src) + noise * rng.standard_normal((n, 3))
    return src, dst


@pytest.fixture
def labeled_scene(model):
    """Mid-difficulty 3-instance scene with labels, shared across tests."""
    gt = generate_scene(model, 3, 0, rng_seed=77)
    labeled = generate_correspondences(gt, 20, 0.6, 0.5, rng_seed=78)
    return gt, labeled
