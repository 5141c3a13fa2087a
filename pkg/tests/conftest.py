import numpy as np
import pytest

from mcdd.data import TabularDataset


def make_blobs(num_classes=3, dim=2, per_class=40, spread=6.0, seed=0):
    """Well-separated isotropic Gaussian blobs, labels 0..K-1 in blocks."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, spread, size=(num_classes, dim))
    x = np.concatenate([c + rng.normal(size=(per_class, dim)) for c in centers])
    y = np.repeat(np.arange(num_classes), per_class)
    return x, y


@pytest.fixture
def blob_dataset():
    x, y = make_blobs(num_classes=4, dim=6, per_class=30, spread=4.0, seed=3)
    return TabularDataset(x, y, [f"c{i}" for i in range(4)], "blobs")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
