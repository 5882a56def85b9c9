"""Shared bits for the test suite: random rotations and partition views."""

import numpy as np


def random_rotation(rng) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def as_partition(labels) -> tuple:
    """Clustering labels as (frozenset of clusters, noise set), so two
    labelings compare equal exactly when they induce the same partition."""
    clusters = {}
    noise = set()
    for i, label in enumerate(labels):
        if label < 0:
            noise.add(i)
        else:
            clusters.setdefault(label, set()).add(i)
    return frozenset(frozenset(c) for c in clusters.values()), frozenset(noise)
