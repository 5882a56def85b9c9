"""End-to-end orchestration: extract, cluster, filter, evaluate.

The CLI and the test harness both drive the pipeline through this module
so there is exactly one definition of "run the method on a scene".  All
randomness descends from the config seed through named substreams; the
per-cluster filter seeds are shared with the evaluation stage, so a
standalone ``filter`` run keeps exactly the points the report scored.

Frame extraction and per-cluster filtering are embarrassingly parallel
and honor ``jobs``; results are reassembled in input order, so the
output is the same at any worker count.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .association import associate_multi
from .clustering import CurbClusterSet, temporal_associate
from .config import PipelineConfig
from .evaluation import EvaluationReport, _apply_filter, evaluate, filter_seeds

STAGE_EVALUATE = "evaluate"
STAGE_FILTER = "filter"
STAGE_SYNTH = "synth"


def derive_seed(seed: int, stage: str) -> int:
    """Stable per-stage substream; removing or reordering one stage leaves
    the others' randomness untouched."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def _map_ordered(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def extract_scene(scene, cfg: PipelineConfig) -> list[np.ndarray]:
    """World-frame curb candidate points, one array per frame."""
    cameras = list(scene.cameras)

    def one(frame):
        cand = associate_multi(
            frame.cloud, cameras, list(frame.masks), cfg.bound, cfg.pixel_window
        )
        return frame.pose.apply(cand.points) if len(cand) else np.zeros((0, 3))

    return _map_ordered(one, list(scene.frames), cfg.jobs)


def cluster_candidates(world_frames, cfg: PipelineConfig) -> CurbClusterSet:
    """Fold per-frame candidates into curb segments.  Inherently
    sequential: each frame associates against the segments so far."""
    clusters = CurbClusterSet()
    for pts in world_frames:
        if len(pts):
            clusters = temporal_associate(
                clusters, pts, cfg.eps, cfg.min_pts, cfg.merge_threshold, cfg.boundary_k
            )
    return clusters


@dataclass(frozen=True)
class FilterOutcome:
    method: str
    cluster_id: int
    kept: np.ndarray
    flags: tuple


def filter_clusters(
    clusters: CurbClusterSet, cfg: PipelineConfig, methods=None
) -> list[FilterOutcome]:
    """Apply each filter method to each cluster, seeded exactly like the
    evaluation stage."""
    methods = tuple(methods or cfg.methods)
    seeds = filter_seeds(derive_seed(cfg.seed, STAGE_FILTER), methods, clusters.next_id)
    params = cfg.filter_params()
    tasks = [(m, c) for m in methods for c in clusters.clusters]

    def one(task):
        method, cluster = task
        stream = seeds[method]
        kept, flags = _apply_filter(
            method, cluster.points, params, int(stream[cluster.id % len(stream)])
        )
        return FilterOutcome(method, cluster.id, kept, flags)

    return _map_ordered(one, tasks, cfg.jobs)


def evaluate_clusters(clusters: CurbClusterSet, gt, cfg: PipelineConfig) -> EvaluationReport:
    return evaluate(
        clusters,
        list(gt),
        methods=cfg.methods,
        d_assoc=cfg.d_assoc,
        gt_degree=cfg.gt_degree,
        gt_samples=cfg.gt_samples,
        filter_params=cfg.filter_params(),
        seed=derive_seed(cfg.seed, STAGE_FILTER),
    )


@dataclass(frozen=True)
class PipelineResult:
    candidate_counts: tuple
    clusters: CurbClusterSet
    report: EvaluationReport
    flags: tuple = field(default=())

    @property
    def degenerate(self) -> bool:
        return bool(self.flags)


def run_pipeline(scene, cfg: PipelineConfig) -> PipelineResult:
    """The full chain on one scene."""
    candidates = extract_scene(scene, cfg)
    clusters = cluster_candidates(candidates, cfg)
    report = evaluate_clusters(clusters, scene.gt, cfg)
    flags = tuple(
        f"{row.method}/{row.segment_id}:{flag}"
        for row in report.rows
        for flag in row.flags
    )
    return PipelineResult(
        tuple(len(c) for c in candidates), clusters, report, flags
    )
