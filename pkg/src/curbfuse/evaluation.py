"""Scoring against ground-truth curb polylines.

Two protocols: normalized L2 against a polynomial fitted through the GT
points (manual-style association) and Chamfer distance per automatically
associated segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .clustering import CurbClusterSet
from .core import _as_points
from .delaunay import RadiusPolicy, delaunay_filter, polyline_distances
from .errors import DegenerateInput, EmptyInput, NoConsensus
from .ransac import fit_polynomial_lsq, ransac_filter

DEFAULT_GT_DEGREE = 3
DEFAULT_GT_SAMPLES = 1000
DEFAULT_ASSOC_DISTANCE = 5.0
FILTER_METHODS = ("none", "ransac", "delaunay")


@dataclass(frozen=True)
class GroundTruthCurb:
    """One surveyed curb segment: an ordered polyline in the World frame."""

    segment_id: int
    points: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.points)
        if len(pts) < 2:
            raise ValueError("a curb segment needs at least 2 points")
        object.__setattr__(self, "points", pts)


def chamfer(p1, p2) -> float:
    """Symmetric mean of squared nearest-neighbor distances."""
    a = np.asarray(p1, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(p2, dtype=np.float64).reshape(-1, 3)
    if len(a) == 0 or len(b) == 0:
        raise EmptyInput("chamfer distance needs two nonempty sets")
    d_ab, _ = cKDTree(b).query(a, k=1)
    d_ba, _ = cKDTree(a).query(b, k=1)
    return float((d_ab**2).mean() + (d_ba**2).mean())


def sample_gt_curve(
    gt: GroundTruthCurb,
    degree: int = DEFAULT_GT_DEGREE,
    samples: int = DEFAULT_GT_SAMPLES,
) -> tuple[np.ndarray, bool]:
    """Points sampled uniformly in parameter along the GT curve.

    Fits a polynomial through the GT points and samples its parameter
    range; a degenerate fit falls back to densifying the raw polyline
    (flagged by the second return value).
    """
    try:
        model = fit_polynomial_lsq(gt.points, degree)
    except DegenerateInput:
        return _densify_polyline(gt.points, samples), True
    t = (gt.points - model.origin) @ model.param_axis
    grid = np.linspace(t.min(), t.max(), samples)
    return model.evaluate(grid), False


def _densify_polyline(points: np.ndarray, samples: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] == 0:
        return np.repeat(points[:1], samples, axis=0)
    grid = np.linspace(0.0, arc[-1], samples)
    out = np.empty((samples, 3))
    for k in range(3):
        out[:, k] = np.interp(grid, arc, points[:, k])
    return out


def normalized_l2(
    filtered,
    gt: GroundTruthCurb,
    degree: int = DEFAULT_GT_DEGREE,
    samples: int = DEFAULT_GT_SAMPLES,
) -> float:
    """Mean nearest distance from filtered points to the sampled GT curve."""
    pts = np.asarray(filtered, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyInput("no filtered points to score")
    curve, _ = sample_gt_curve(gt, degree, samples)
    d, _ = cKDTree(curve).query(pts, k=1)
    return float(d.mean())


@dataclass(frozen=True)
class SegmentAssociation:
    """Cluster-to-segment assignment with unmatched clusters kept aside."""

    mapping: dict  # cluster_id -> segment_id
    false_positives: tuple  # cluster ids farther than d_assoc from all GT


def associate_segments(
    clusters: CurbClusterSet,
    gt: list,
    d_assoc: float = DEFAULT_ASSOC_DISTANCE,
) -> SegmentAssociation:
    """Assign each cluster to the GT segment nearest its centroid (ties to
    the lower segment id); clusters beyond ``d_assoc`` stay unmatched."""
    segments = sorted(gt, key=lambda g: g.segment_id)
    mapping = {}
    unmatched = []
    for cluster in clusters.clusters:
        centroid = cluster.centroid.reshape(1, 3)
        dists = np.array(
            [float(polyline_distances(centroid, g.points)[0]) for g in segments]
        )
        best = int(np.argmin(dists))
        if dists[best] <= d_assoc:
            mapping[cluster.id] = segments[best].segment_id
        else:
            unmatched.append(cluster.id)
    return SegmentAssociation(mapping, tuple(unmatched))


@dataclass(frozen=True)
class ReportRow:
    method: str
    segment_id: int  # -1 marks the per-method aggregate row
    normalized_l2: float | None
    chamfer: float | None
    detected_points: int
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "segment_id": self.segment_id,
            "normalized_l2": self.normalized_l2,
            "chamfer": self.chamfer,
            "detected_points": self.detected_points,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple
    unmatched_clusters: dict = field(default_factory=dict)  # method -> count

    def method_rows(self, method: str, include_total: bool = False):
        return [
            r
            for r in self.rows
            if r.method == method and (include_total or r.segment_id >= 0)
        ]

    def total(self, method: str) -> "ReportRow":
        for r in self.rows:
            if r.method == method and r.segment_id == -1:
                return r
        raise KeyError(method)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "unmatched_clusters": dict(self.unmatched_clusters),
        }


def filter_seeds(seed: int, methods, next_id: int) -> dict:
    """Per-method arrays of per-cluster filter seeds, all derived from one
    seed.  Indexing by ``cluster.id % next_id`` keeps a cluster's stream
    stable under additions and removals of its siblings."""
    spawned = np.random.SeedSequence(seed).spawn(len(methods))
    return {
        method: stream.generate_state(max(int(next_id), 1))
        for method, stream in zip(methods, spawned)
    }


def _apply_filter(method: str, points: np.ndarray, params: dict, seed: int):
    """Returns (kept points, flags)."""
    if method == "none":
        return points, ()
    if method == "ransac":
        try:
            result = ransac_filter(
                points,
                inlier_tol=params.get("inlier_tol", 0.15),
                max_iters=params.get("max_iters", 500),
                degrees=params.get("degrees", (1, 2, 3)),
                seed=seed,
            )
            return result.inliers, ()
        except (NoConsensus, DegenerateInput) as exc:
            return points, (type(exc).__name__,)
    if method == "delaunay":
        if params.get("r_max") is not None:
            policy = RadiusPolicy.absolute(params["r_max"])
        else:
            policy = RadiusPolicy.adaptive(params.get("radius_alpha", 2.0))
        result = delaunay_filter(
            points,
            policy,
            axis_tolerance=params.get("axis_tolerance", 0.3),
        )
        return result.points, result.flags
    raise ValueError(f"unknown filter method {method!r}")


def evaluate(
    clusters: CurbClusterSet,
    gt: list,
    methods=FILTER_METHODS,
    d_assoc: float = DEFAULT_ASSOC_DISTANCE,
    gt_degree: int = DEFAULT_GT_DEGREE,
    gt_samples: int = DEFAULT_GT_SAMPLES,
    filter_params: dict | None = None,
    seed: int = 0,
) -> EvaluationReport:
    """Score every filter method per GT segment.

    Each cluster is filtered independently, grouped by its associated
    segment, and scored; stage failures become flagged rows instead of
    aborting the report.  A segment_id of -1 holds the per-method totals.
    """
    params = filter_params or {}
    assoc = associate_segments(clusters, gt, d_assoc)
    segment_ids = sorted(g.segment_id for g in gt)
    by_segment = {sid: [] for sid in segment_ids}
    for cluster in clusters.clusters:
        sid = assoc.mapping.get(cluster.id)
        if sid is not None:
            by_segment[sid].append(cluster)
    gt_by_id = {g.segment_id: g for g in gt}

    rows = []
    unmatched = {}
    seeds = filter_seeds(seed, methods, clusters.next_id)
    for method in methods:
        cluster_seeds = seeds[method]
        total_detected = 0
        seg_l2, seg_cd = [], []
        for sid in segment_ids:
            kept_parts = []
            flags = []
            for cluster in by_segment[sid]:
                kept, f = _apply_filter(
                    method,
                    cluster.points,
                    params,
                    int(cluster_seeds[cluster.id % len(cluster_seeds)]),
                )
                kept_parts.append(kept)
                flags.extend(f)
            kept = (
                np.concatenate([k for k in kept_parts if len(k)])
                if any(len(k) for k in kept_parts)
                else np.zeros((0, 3))
            )
            if len(kept) == 0:
                rows.append(
                    ReportRow(method, sid, None, None, 0, tuple(flags) + ("EmptyInput",))
                )
                continue
            l2 = normalized_l2(kept, gt_by_id[sid], gt_degree, gt_samples)
            curve, fallback = sample_gt_curve(gt_by_id[sid], gt_degree, gt_samples)
            if fallback:
                flags.append("gt_polyline_fallback")
            cd = chamfer(kept, curve)
            rows.append(ReportRow(method, sid, l2, cd, len(kept), tuple(flags)))
            total_detected += len(kept)
            seg_l2.append(l2)
            seg_cd.append(cd)
        rows.append(
            ReportRow(
                method,
                -1,
                float(np.mean(seg_l2)) if seg_l2 else None,
                float(np.mean(seg_cd)) if seg_cd else None,
                total_detected,
                () if seg_cd else ("EmptyInput",),
            )
        )
        unmatched[method] = len(assoc.false_positives)
    return EvaluationReport(tuple(rows), unmatched)
