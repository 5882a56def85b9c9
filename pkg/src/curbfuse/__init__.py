"""Curb extraction from lidar sweeps fused with fisheye semantic masks.

The pipeline projects each lidar cloud into per-camera curb masks to
pick candidate points, accumulates them across frames into clusters,
prunes outliers with a Delaunay/Voronoi medial-axis filter (with a
RANSAC polynomial fit as the reference method), and scores the kept
points against ground-truth curb polylines.
"""

from .association import (
    CurbCandidateCloud,
    SemanticMask,
    associate,
    associate_multi,
    curb_pixel_mask_dilate,
)
from .clustering import (
    CurbCluster,
    CurbClusterSet,
    boundary_points,
    dbscan,
    merge_clusters,
    temporal_associate,
)
from .config import PipelineConfig
from .core import (
    BASE,
    WORLD,
    FrameId,
    LabeledPointCloud,
    PoseLog,
    RigidTransform,
    transform_cloud,
)
from .delaunay import (
    FilterResult,
    MedialAxis,
    RadiusPolicy,
    TetraMesh,
    VoronoiSubgraph,
    circumcenter,
    delaunay_filter,
)
from .errors import (
    ConfigError,
    CurbFuseError,
    DegenerateInput,
    EmptyInput,
    EmptySubgraph,
    FrameError,
    NoConsensus,
    NoPath,
    PoseGapError,
)
from .evaluation import (
    FILTER_METHODS,
    EvaluationReport,
    GroundTruthCurb,
    ReportRow,
    associate_segments,
    chamfer,
    evaluate,
    normalized_l2,
    sample_gt_curve,
)
from .fisheye import CloudProjection, FisheyeCamera, project_cloud
from .pipeline import (
    PipelineResult,
    cluster_candidates,
    derive_seed,
    evaluate_clusters,
    extract_scene,
    filter_clusters,
    run_pipeline,
)
from .ransac import (
    PolynomialModel,
    RansacResult,
    fit_polynomial_lsq,
    principal_frame,
    ransac_filter,
)
from .synth import (
    PrecisionRecall,
    SceneSpec,
    SynthFrame,
    SynthScene,
    default_cameras,
    end_to_end_truth_score,
    generate,
)

__version__ = "0.1.0"

__all__ = [
    "BASE",
    "CloudProjection",
    "ConfigError",
    "CurbCandidateCloud",
    "CurbCluster",
    "CurbClusterSet",
    "CurbFuseError",
    "DegenerateInput",
    "EmptyInput",
    "EmptySubgraph",
    "EvaluationReport",
    "FILTER_METHODS",
    "FilterResult",
    "FisheyeCamera",
    "FrameError",
    "FrameId",
    "GroundTruthCurb",
    "LabeledPointCloud",
    "MedialAxis",
    "NoConsensus",
    "NoPath",
    "PipelineConfig",
    "PipelineResult",
    "PolynomialModel",
    "PoseGapError",
    "PoseLog",
    "PrecisionRecall",
    "RadiusPolicy",
    "RansacResult",
    "ReportRow",
    "RigidTransform",
    "SceneSpec",
    "SemanticMask",
    "SynthFrame",
    "SynthScene",
    "TetraMesh",
    "VoronoiSubgraph",
    "WORLD",
    "associate",
    "associate_multi",
    "associate_segments",
    "boundary_points",
    "chamfer",
    "circumcenter",
    "cluster_candidates",
    "curb_pixel_mask_dilate",
    "dbscan",
    "default_cameras",
    "delaunay_filter",
    "derive_seed",
    "end_to_end_truth_score",
    "evaluate",
    "evaluate_clusters",
    "extract_scene",
    "filter_clusters",
    "fit_polynomial_lsq",
    "generate",
    "merge_clusters",
    "normalized_l2",
    "principal_frame",
    "project_cloud",
    "ransac_filter",
    "run_pipeline",
    "sample_gt_curve",
    "temporal_associate",
    "transform_cloud",
]
