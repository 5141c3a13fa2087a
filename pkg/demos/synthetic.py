"""Shared toy data for the demos: Gaussian blobs in a few dimensions."""

import numpy as np


def blobs(num_classes=5, dim=8, per_class=120, spread=3.0, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, spread, size=(num_classes, dim))
    x = np.concatenate([c + rng.normal(size=(per_class, dim)) for c in centers])
    y = np.repeat(np.arange(num_classes), per_class)
    order = rng.permutation(y.size)
    return x[order], y[order]


def as_dataset(x, y, name="blobs"):
    from mcdd.data import TabularDataset
    return TabularDataset(x, y, [str(k) for k in range(int(y.max()) + 1)], name)
