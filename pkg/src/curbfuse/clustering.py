"""Curb segment clustering and temporal cluster association.

Candidate points from each frame are partitioned with density-based
clustering (an unknown number of curbs may be visible), then folded into
the evolving cluster set: a new cluster merges into an existing one when
their boundary points come closer than a threshold, otherwise it starts a
fresh curb segment.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError

NOISE = -1

DEFAULT_EPS = 0.5
DEFAULT_MIN_PTS = 4
DEFAULT_MERGE_THRESHOLD = 1.0
DEFAULT_BOUNDARY_K = 5


def dbscan(points, eps: float, min_pts: int) -> np.ndarray:
    """Density-based clustering with deterministic label assignment.

    Core points have at least ``min_pts`` neighbors within ``eps`` (the
    point itself counts); clusters are maximal density-connected sets.
    The scan runs in input order with sorted neighbor lists, so border
    points always attach to the first-discovered adjacent cluster and the
    labeling is reproducible.
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    if min_pts < 1:
        raise ConfigError("min_pts must be at least 1")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    labels = np.full(n, NOISE, dtype=np.int64)
    if n == 0:
        return labels
    tree = cKDTree(pts)
    neighborhoods = [sorted(nb) for nb in tree.query_ball_point(pts, r=eps)]
    core = np.array([len(nb) >= min_pts for nb in neighborhoods], dtype=bool)
    visited = np.zeros(n, dtype=bool)
    cluster_id = 0
    for i in range(n):
        if visited[i] or not core[i]:
            continue
        labels[i] = cluster_id
        visited[i] = True
        queue = deque(neighborhoods[i])
        while queue:
            j = queue.popleft()
            if visited[j]:
                continue
            visited[j] = True
            labels[j] = cluster_id
            if core[j]:
                queue.extend(q for q in neighborhoods[j] if not visited[q])
        cluster_id += 1
    return labels


def alt_cluster(points, method: str, **params) -> np.ndarray:
    """Alternative clustering algorithms for the evaluation harness.

    Supported: ``agglomerative`` (distance_threshold, linkage),
    ``birch`` (threshold, branching_factor) and ``optics`` (min_pts, xi).
    Semantics follow each algorithm's canonical scikit-learn definition;
    BIRCH runs without the global-clustering refinement (CF-tree leaves
    are the clusters).
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64)

    if method == "agglomerative":
        from sklearn.cluster import AgglomerativeClustering

        threshold = float(_required(params, "distance_threshold", method))
        linkage = params.pop("linkage", "single")
        _reject_extra(params, method)
        if n == 1:
            return np.zeros(1, dtype=np.int64)
        model = AgglomerativeClustering(
            n_clusters=None, distance_threshold=threshold, linkage=linkage
        )
        return model.fit_predict(pts).astype(np.int64)

    if method == "birch":
        from sklearn.cluster import Birch

        threshold = float(_required(params, "threshold", method))
        branching = int(params.pop("branching_factor", 50))
        _reject_extra(params, method)
        model = Birch(threshold=threshold, branching_factor=branching, n_clusters=None)
        return model.fit_predict(pts).astype(np.int64)

    if method == "optics":
        from sklearn.cluster import OPTICS

        min_pts = int(_required(params, "min_pts", method))
        xi = float(params.pop("xi", 0.05))
        _reject_extra(params, method)
        if n < max(2, min_pts):
            return np.full(n, NOISE, dtype=np.int64)
        model = OPTICS(min_samples=min_pts, xi=xi)
        return model.fit_predict(pts).astype(np.int64)

    raise ConfigError(f"unknown clustering method {method!r}")


def _required(params: dict, key: str, method: str):
    if key not in params:
        raise ConfigError(f"{method} requires {key!r}")
    return params.pop(key)


def _reject_extra(params: dict, method: str) -> None:
    if params:
        raise ConfigError(f"unexpected {method} parameters: {sorted(params)}")


def boundary_points(points, centroid, k: int) -> np.ndarray:
    """The min(k, n) points furthest from the centroid; equidistant ties
    resolve by lexicographic (x, y, z) order."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("boundary_points needs at least one point")
    dist = np.linalg.norm(pts - np.asarray(centroid, dtype=np.float64), axis=1)
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0], -dist))
    return pts[order[: min(k, len(pts))]]


@dataclass(frozen=True, eq=False)
class CurbCluster:
    """One curb segment: its points (world frame), cached centroid and the
    boundary points used for merge checks."""

    id: int
    points: np.ndarray
    centroid: np.ndarray
    boundary: np.ndarray

    @staticmethod
    def build(cluster_id: int, points, boundary_k: int = DEFAULT_BOUNDARY_K) -> "CurbCluster":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(pts) == 0:
            raise ValueError("a cluster needs at least one point")
        centroid = pts.mean(axis=0)
        return CurbCluster(
            id=cluster_id,
            points=pts,
            centroid=centroid,
            boundary=boundary_points(pts, centroid, boundary_k),
        )

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CurbClusterSet:
    """Evolving set of curb clusters; ids are unique and never reused."""

    clusters: tuple[CurbCluster, ...] = ()
    next_id: int = 0

    def __len__(self) -> int:
        return len(self.clusters)

    def total_points(self) -> int:
        return sum(len(c) for c in self.clusters)


def _boundary_gap(a: CurbCluster, b: CurbCluster) -> float:
    diff = a.boundary[:, None, :] - b.boundary[None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=2)).min())


def merge_clusters(
    cluster_set: CurbClusterSet,
    new_points,
    new_labels,
    merge_threshold: float = DEFAULT_MERGE_THRESHOLD,
    boundary_k: int = DEFAULT_BOUNDARY_K,
) -> CurbClusterSet:
    """Fold a freshly clustered batch into the set.

    New clusters are processed in label order.  Each merges into the
    existing cluster whose boundary points come nearest (single linkage)
    when that gap is below ``merge_threshold``; ties go to the lowest
    existing id.  Otherwise the batch cluster becomes a new segment.
    Merged clusters recompute centroid and boundary immediately, so a
    chain of batch clusters can collapse into one segment.
    """
    if merge_threshold <= 0:
        raise ConfigError("merge_threshold must be positive")
    pts = np.asarray(new_points, dtype=np.float64).reshape(-1, 3)
    labels = np.asarray(new_labels, dtype=np.int64).reshape(-1)
    if len(pts) != len(labels):
        raise ValueError("one label per point required")

    clusters = list(cluster_set.clusters)
    next_id = cluster_set.next_id
    for lab in sorted(set(labels[labels != NOISE].tolist())):
        batch = CurbCluster.build(-1, pts[labels == lab], boundary_k)
        best_idx, best_gap = None, None
        for idx, existing in enumerate(clusters):
            gap = _boundary_gap(batch, existing)
            better = best_gap is None or gap < best_gap
            tie_lower_id = (
                best_gap is not None
                and gap == best_gap
                and existing.id < clusters[best_idx].id
            )
            if better or tie_lower_id:
                best_idx, best_gap = idx, gap
        if best_idx is not None and best_gap < merge_threshold:
            target = clusters[best_idx]
            merged = np.vstack([target.points, batch.points])
            clusters[best_idx] = CurbCluster.build(target.id, merged, boundary_k)
        else:
            clusters.append(CurbCluster.build(next_id, batch.points, boundary_k))
            next_id += 1
    return CurbClusterSet(tuple(clusters), next_id)


def temporal_associate(
    cluster_set: CurbClusterSet,
    new_points,
    eps: float = DEFAULT_EPS,
    min_pts: int = DEFAULT_MIN_PTS,
    merge_threshold: float = DEFAULT_MERGE_THRESHOLD,
    boundary_k: int = DEFAULT_BOUNDARY_K,
) -> CurbClusterSet:
    """Per-frame update: cluster the new world-frame points, then associate
    the result with the existing segments.  Noise points never associate."""
    pts = np.asarray(new_points, dtype=np.float64).reshape(-1, 3)
    labels = dbscan(pts, eps, min_pts)
    return merge_clusters(cluster_set, pts, labels, merge_threshold, boundary_k)
