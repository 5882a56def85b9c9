"""Command line front end.

Subcommands mirror the pipeline stages: ``synth`` writes a generated
scene to disk, ``extract``/``cluster``/``filter`` run the intermediate
stages against a scene directory, ``evaluate`` produces the metric
report plus figures, and ``all`` chains everything from generation to
report.  Options resolve as flags > config file > defaults.

Exit codes: 0 clean, 1 completed but with degeneracy flags raised
somewhere in the run, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import PipelineConfig
from .errors import ConfigError, CurbFuseError
from .evaluation import FILTER_METHODS
from .fileio import read_scene, write_ply, write_scene
from .pipeline import (
    STAGE_SYNTH,
    cluster_candidates,
    derive_seed,
    extract_scene,
    filter_clusters,
    run_pipeline,
)
from .report import (
    render_filter_figure,
    render_metric_figure,
    render_scene_figure,
    write_debug_dump,
    write_report_csv,
    write_report_json,
)
from .synth import SceneSpec, generate

_SCENE_FLAGS = (
    ("layout", str),
    ("curve_radius", float),
    ("curb_count", int),
    ("curb_height", float),
    ("noise_sigma", float),
    ("outlier_rate", float),
    ("outlier_offset", float),
    ("n_frames", int),
    ("obstacles", int),
    ("length", float),
    ("curb_density", float),
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="top-level seed, overrides config")
    p.add_argument("--jobs", type=int, help="worker count for per-frame stages")


def _add_scene(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scene-json", help="JSON file of scene generator fields")
    for name, typ in _SCENE_FLAGS:
        p.add_argument("--" + name.replace("_", "-"), type=typ, dest=name)
    p.add_argument("--scene-seed", type=int, dest="scene_seed")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="curbfuse",
        description="curb extraction from lidar + fisheye semantics",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a scene directory")
    _add_common(p)
    _add_scene(p)

    p = sub.add_parser("extract", help="project clouds into curb masks")
    _add_common(p)
    p.add_argument("--scene", required=True, help="scene directory")

    p = sub.add_parser("cluster", help="extract and cluster curb candidates")
    _add_common(p)
    p.add_argument("--scene", required=True, help="scene directory")

    p = sub.add_parser("filter", help="run outlier filters on the clusters")
    _add_common(p)
    p.add_argument("--scene", required=True, help="scene directory")
    p.add_argument(
        "--method",
        choices=FILTER_METHODS + ("all",),
        default="all",
        help="filter method to run (default: all configured)",
    )
    p.add_argument(
        "--debug-dump",
        action="store_true",
        help="write per-cluster mesh/axis debug artifacts",
    )

    p = sub.add_parser("evaluate", help="score filtered clusters against GT")
    _add_common(p)
    p.add_argument("--scene", required=True, help="scene directory")

    p = sub.add_parser("all", help="synth + extract + cluster + filter + evaluate")
    _add_common(p)
    _add_scene(p)
    p.add_argument(
        "--debug-dump",
        action="store_true",
        help="write per-cluster mesh/axis debug artifacts",
    )
    return ap


def _resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    return cfg.with_overrides(seed=args.seed, jobs=args.jobs)


def _resolve_spec(args, cfg: PipelineConfig) -> SceneSpec:
    fields = {}
    if getattr(args, "scene_json", None):
        try:
            with open(args.scene_json) as fh:
                fields = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scene json: {exc}") from exc
        if not isinstance(fields, dict):
            raise ConfigError("scene json must hold an object")
    for name, _ in _SCENE_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if getattr(args, "scene_seed", None) is not None:
        fields["seed"] = args.scene_seed
    elif "seed" not in fields:
        # scene randomness hangs off the one top-level seed like every stage
        fields["seed"] = derive_seed(cfg.seed, STAGE_SYNTH)
    try:
        return SceneSpec(**fields)
    except TypeError as exc:
        raise ConfigError(f"unknown scene field: {exc}") from exc


def _write_config(cfg: PipelineConfig, out: Path) -> None:
    cfg.dump(out / "config.json")


def _write_clusters(clusters, out: Path) -> None:
    cdir = out / "clusters"
    summary = {
        "next_id": clusters.next_id,
        "clusters": [
            {"id": c.id, "points": len(c), "centroid": c.centroid.tolist()}
            for c in clusters.clusters
        ],
    }
    for c in clusters.clusters:
        write_ply(cdir / f"cluster_{c.id:03d}.ply", c.points)
    with open(out / "clusters.json", "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_outcomes(outcomes, out: Path) -> None:
    fdir = out / "filtered"
    doc: dict = {}
    for o in outcomes:
        write_ply(fdir / o.method / f"cluster_{o.cluster_id:03d}.ply", o.kept)
        doc.setdefault(o.method, {})[str(o.cluster_id)] = {
            "kept": len(o.kept),
            "flags": list(o.flags),
        }
    with open(out / "filter.json", "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _cmd_synth(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    spec = _resolve_spec(args, cfg)
    scene = generate(spec)
    write_scene(scene, out / "scene")
    _write_config(cfg, out)
    print(f"scene written to {out / 'scene'} ({len(scene.frames)} frames)")
    return 0


def _cmd_extract(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    scene = read_scene(args.scene)
    frames = extract_scene(scene, cfg)
    for frame, pts in zip(scene.frames, frames):
        write_ply(out / "candidates" / f"{frame.index:03d}.ply", pts)
    counts = {f"{frame.index:03d}": len(p) for frame, p in zip(scene.frames, frames)}
    with open(out / "extract.json", "w") as fh:
        json.dump({"candidates": counts, "config_hash": cfg.content_hash()}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_config(cfg, out)
    print(f"{sum(counts.values())} curb candidates across {len(frames)} frames")
    return 0


def _cmd_cluster(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    scene = read_scene(args.scene)
    clusters = cluster_candidates(extract_scene(scene, cfg), cfg)
    _write_clusters(clusters, out)
    _write_config(cfg, out)
    print(f"{len(clusters.clusters)} clusters, {clusters.total_points()} points")
    return 0


def _cmd_filter(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    scene = read_scene(args.scene)
    clusters = cluster_candidates(extract_scene(scene, cfg), cfg)
    methods = cfg.methods if args.method == "all" else (args.method,)
    outcomes = filter_clusters(clusters, cfg, methods)
    _write_outcomes(outcomes, out)
    if args.debug_dump:
        write_debug_dump(clusters, cfg, out / "debug")
    _write_config(cfg, out)
    flagged = sorted({f for o in outcomes for f in o.flags})
    print(f"filtered {len(clusters.clusters)} clusters with {len(methods)} methods")
    if flagged:
        print("flags raised: " + ", ".join(flagged), file=sys.stderr)
        return 1
    return 0


def _run_report(scene, cfg: PipelineConfig, out: Path, debug: bool) -> int:
    result = run_pipeline(scene, cfg)
    outcomes = filter_clusters(result.clusters, cfg)
    write_report_csv(result.report, out / "report.csv", cfg.content_hash())
    write_report_json(result.report, out / "report.json", cfg)
    figs = out / "figures"
    render_scene_figure(result.clusters, scene.gt, figs / "scene.png")
    render_metric_figure(result.report, figs / "metrics.png")
    render_filter_figure(result.clusters, outcomes, scene.gt, figs / "filters.png")
    if debug:
        write_debug_dump(result.clusters, cfg, out / "debug")
    _write_config(cfg, out)
    for method in cfg.methods:
        total = result.report.total(method)
        if total is None or total.chamfer is None:
            print(f"{method:>9s}: no matched clusters")
        else:
            print(
                f"{total.method:>9s}: l2={total.normalized_l2:.4f} "
                f"chamfer={total.chamfer:.4f} kept={total.detected_points}"
            )
    if result.degenerate:
        print("flags raised: " + ", ".join(sorted(set(result.flags))), file=sys.stderr)
        return 1
    return 0


def _cmd_evaluate(args, cfg: PipelineConfig) -> int:
    scene = read_scene(args.scene)
    return _run_report(scene, cfg, Path(args.out), debug=False)


def _cmd_all(args, cfg: PipelineConfig) -> int:
    out = Path(args.out)
    spec = _resolve_spec(args, cfg)
    scene = generate(spec)
    write_scene(scene, out / "scene")
    return _run_report(scene, cfg, out, debug=args.debug_dump)


_COMMANDS = {
    "synth": _cmd_synth,
    "extract": _cmd_extract,
    "cluster": _cmd_cluster,
    "filter": _cmd_filter,
    "evaluate": _cmd_evaluate,
    "all": _cmd_all,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CurbFuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
