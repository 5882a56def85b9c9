"""Report emission: delimited rows, JSON, and rendered figures.

Reports are written with stable row order and shortest-roundtrip float
formatting, so identical inputs produce byte-identical files; every row
carries the hash of the configuration that produced it.  Figures are
rendered headless and land next to the delimited output: a top-down
scene plot, per-method metric bars, and kept/dropped comparisons per
filter method.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .clustering import CurbClusterSet
from .config import PipelineConfig
from .delaunay import RadiusPolicy, delaunay_filter
from .evaluation import EvaluationReport
from .fileio import write_ply

_CSV_FIELDS = (
    "method",
    "segment_id",
    "normalized_l2",
    "chamfer",
    "detected_points",
    "flags",
    "config_hash",
)


def _sorted_rows(report: EvaluationReport):
    return sorted(report.rows, key=lambda r: (r.method, r.segment_id))


def write_report_csv(report: EvaluationReport, path, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_FIELDS)
        for row in _sorted_rows(report):
            w.writerow(
                [
                    row.method,
                    row.segment_id,
                    "" if row.normalized_l2 is None else repr(row.normalized_l2),
                    "" if row.chamfer is None else repr(row.chamfer),
                    row.detected_points,
                    "|".join(row.flags),
                    config_hash,
                ]
            )
    return path


def write_report_json(report: EvaluationReport, path, config: PipelineConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    config_hash = config.content_hash()
    doc = {
        "config": config.to_dict(),
        "config_hash": config_hash,
        "rows": [dict(r.to_dict(), config_hash=config_hash) for r in _sorted_rows(report)],
        "unmatched_clusters": dict(report.unmatched_clusters),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _cluster_palette(n: int):
    cmap = plt.get_cmap("tab10")
    return [cmap(i % 10) for i in range(n)]


def _draw_gt(ax, gt):
    for g in gt:
        ax.plot(g.points[:, 0], g.points[:, 1], "k--", linewidth=1.2)
        ax.annotate(
            f"gt {g.segment_id}",
            xy=(g.points[0, 0], g.points[0, 1]),
            fontsize=8,
            color="black",
        )


def render_scene_figure(clusters: CurbClusterSet, gt, path) -> Path:
    """Top-down view of the clustered candidates against the GT polylines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(9, 6))
    colors = _cluster_palette(len(clusters.clusters))
    for color, cluster in zip(colors, clusters.clusters):
        ax.scatter(
            cluster.points[:, 0],
            cluster.points[:, 1],
            s=2,
            color=color,
            label=f"cluster {cluster.id} ({len(cluster)})",
        )
    _draw_gt(ax, gt)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("curb clusters (world frame, top view)")
    if clusters.clusters:
        ax.legend(loc="best", fontsize=7, markerscale=3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_metric_figure(report: EvaluationReport, path) -> Path:
    """Aggregate normalized L2 and Chamfer per method, side by side."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    methods = sorted({r.method for r in report.rows})
    totals = {m: report.total(m) for m in methods}
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, metric, title in (
        (axes[0], "normalized_l2", "normalized L2 [m]"),
        (axes[1], "chamfer", "Chamfer distance [m$^2$]"),
    ):
        vals = [getattr(totals[m], metric) or 0.0 for m in methods]
        ax.bar(range(len(methods)), vals, color="steelblue")
        ax.set_xticks(range(len(methods)))
        ax.set_xticklabels(methods)
        ax.set_title(title)
        for i, v in enumerate(vals):
            ax.annotate(f"{v:.4f}", xy=(i, v), ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_filter_figure(clusters: CurbClusterSet, outcomes, gt, path) -> Path:
    """Kept versus dropped points per method, one panel each."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    methods = sorted({o.method for o in outcomes})
    fig, axes = plt.subplots(1, max(len(methods), 1), figsize=(5 * max(len(methods), 1), 5))
    axes = np.atleast_1d(axes)
    all_pts = (
        np.concatenate([c.points for c in clusters.clusters])
        if clusters.clusters
        else np.zeros((0, 3))
    )
    for ax, method in zip(axes, methods):
        kept_parts = [o.kept for o in outcomes if o.method == method and len(o.kept)]
        kept = np.concatenate(kept_parts) if kept_parts else np.zeros((0, 3))
        if len(all_pts):
            ax.scatter(all_pts[:, 0], all_pts[:, 1], s=2, color="0.8", label="dropped")
        if len(kept):
            ax.scatter(kept[:, 0], kept[:, 1], s=2, color="tab:blue", label="kept")
        _draw_gt(ax, gt)
        ax.set_aspect("equal")
        ax.set_title(f"{method}: {len(kept)}/{len(all_pts)} kept")
        ax.legend(loc="best", fontsize=7, markerscale=3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_debug_dump(clusters: CurbClusterSet, cfg: PipelineConfig, out_dir) -> list[Path]:
    """Per-cluster mesh/axis artifacts of the medial-axis filter: the
    tetrahedralization summary, the axis polyline, and a rendered overlay."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    policy = (
        RadiusPolicy.absolute(cfg.r_max)
        if cfg.r_max is not None
        else RadiusPolicy.adaptive(cfg.radius_alpha)
    )
    written = []
    for cluster in clusters.clusters:
        result = delaunay_filter(
            cluster.points, policy, cfg.axis_tolerance, keep_debug=True
        )
        base = out / f"cluster_{cluster.id:03d}"
        doc = {
            "cluster_id": cluster.id,
            "points": len(cluster),
            "kept": len(result.points),
            "flags": list(result.flags),
            "tets": [] if result.mesh is None else result.mesh.tets.tolist(),
            "subgraph_edges": []
            if result.subgraph is None
            else result.subgraph.edges.tolist(),
        }
        mesh_path = base.with_name(base.name + "_mesh.json")
        with open(mesh_path, "w") as fh:
            json.dump(doc, fh, sort_keys=True)
            fh.write("\n")
        written.append(mesh_path)
        if result.axis is not None:
            axis_path = base.with_name(base.name + "_axis.ply")
            write_ply(axis_path, result.axis.polyline)
            written.append(axis_path)

        fig, ax = plt.subplots(figsize=(8, 5))
        ax.scatter(cluster.points[:, 0], cluster.points[:, 1], s=2, color="0.8")
        if len(result.points):
            ax.scatter(result.points[:, 0], result.points[:, 1], s=2, color="tab:blue")
        if result.axis is not None:
            ax.plot(
                result.axis.polyline[:, 0],
                result.axis.polyline[:, 1],
                "r-",
                linewidth=1.5,
                label="medial axis",
            )
            ax.legend(loc="best", fontsize=8)
        ax.set_aspect("equal")
        ax.set_title(f"cluster {cluster.id}: {len(result.points)}/{len(cluster)} kept")
        fig.tight_layout()
        png_path = base.with_name(base.name + "_debug.png")
        fig.savefig(png_path, dpi=120)
        plt.close(fig)
        written.append(png_path)
    return written
