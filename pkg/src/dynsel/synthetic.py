"""Seeded synthetic problems for benchmarks and tests."""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .learners import TrainedPool, TreeParams, train_tree

GENERATORS = ("blobs", "quadrant-experts")


def blobs(n=600, seed=0, n_classes=3, n_features=2, spread=1.2):
    """Overlapping isotropic Gaussian blobs with centers on a circle."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % n_classes
    rng.shuffle(labels)
    angles = 2 * np.pi * np.arange(n_classes) / n_classes
    centers = np.zeros((n_classes, n_features))
    centers[:, 0] = 2.0 * np.cos(angles)
    centers[:, 1 % n_features] += 2.0 * np.sin(angles)
    X = centers[labels] + spread * rng.standard_normal((n, n_features))
    return Dataset(X, labels, n_classes)


def quadrant(X):
    """Quadrant id: 0 = (+,+), 1 = (-,+), 2 = (-,-), 3 = (+,-)."""
    X = np.asarray(X)
    right, top = X[:, 0] >= 0, X[:, 1] >= 0
    return np.select([right & top, ~right & top, ~right & ~top], [0, 1, 2], 3)


def quadrant_labels(X):
    """Each quadrant thresholds a different axis at a different offset."""
    X = np.asarray(X)
    rules = np.stack([X[:, 0] > 0.5, X[:, 1] > 0.5, X[:, 0] > -0.5, X[:, 1] > -0.5], axis=1)
    return rules[np.arange(len(X)), quadrant(X)].astype(int)


def quadrant_experts(n=600, seed=0, noise=0.05):
    """Uniform points on [-1, 1]^2 labelled by a per-quadrant rule, with a
    ``noise`` fraction of labels flipped."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, 2))
    y = quadrant_labels(X)
    flip = rng.random(n) < noise
    y[flip] = 1 - y[flip]
    return Dataset(X, y, 2)


def quadrant_pool(train: Dataset, L=10, seed=0, max_depth=3) -> TrainedPool:
    """Member ``i`` is a tree fitted to a bootstrap of quadrant ``i % 4`` only,
    so it is an expert there and close to chance elsewhere."""
    quads = quadrant(train.features)
    members = []
    for i in range(L):
        rng = np.random.default_rng(seed ^ i)
        own = np.flatnonzero(quads == i % 4)
        if own.size == 0:
            own = np.arange(len(train))
        idx = rng.choice(own, size=own.size, replace=True)
        members.append(train_tree(train.subset(idx), TreeParams(max_depth, 1, seed ^ i)))
    return TrainedPool(members, train.n_classes)


def make_synthetic(name, n=600, seed=0, noise=0.05):
    if name == "blobs":
        return blobs(n, seed)
    if name == "quadrant-experts":
        return quadrant_experts(n, seed, noise)
    raise ValueError(f"unknown synthetic dataset {name!r}; choose from {GENERATORS}")
