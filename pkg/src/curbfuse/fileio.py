"""Disk formats for scenes, clouds and ground truth.

Point clouds travel as PLY (binary little-endian by default, ASCII on
request; either way the header says which, so readers need no settings).
Poses and truth labels are plain CSV, masks are 8-bit PNGs with a JSON
class-map sidecar, GT polylines are GeoJSON LineStrings.  A scene
directory bundles all of it and reads back into the same in-memory types
the generator produces, so every pipeline stage can run from disk.

Coordinates are stored as float64 everywhere; a written scene re-read
from disk is bit-identical to the generated one, which is what makes
byte-identical reports across runs possible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
from PIL import Image

from .core import BASE, WORLD, LabeledPointCloud, RigidTransform
from .association import SemanticMask
from .errors import ConfigError
from .evaluation import GroundTruthCurb
from .synth import SceneSpec, SynthFrame, SynthScene, default_cameras

_PLY_TYPES = {"float": ("<f4", "%.9g"), "double": ("<f8", "%.17g")}


def write_ply(path, points, binary: bool = True) -> None:
    """Write an (N, 3) array as PLY vertices with double precision."""
    pts = np.ascontiguousarray(np.asarray(points, dtype="<f8").reshape(-1, 3))
    fmt = "binary_little_endian" if binary else "ascii"
    header = (
        f"ply\nformat {fmt} 1.0\nelement vertex {len(pts)}\n"
        "property double x\nproperty double y\nproperty double z\nend_header\n"
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(pts.tobytes())
        else:
            np.savetxt(fh, pts, fmt="%.17g")


def read_ply(path) -> np.ndarray:
    """Read PLY vertices; scalar float/double properties only, extracting
    the x, y, z columns wherever they sit in the property list."""
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise ConfigError(f"{path}: not a PLY file")
        fmt = None
        count = None
        props: list[tuple[str, str]] = []  # (type, name) of the vertex element
        in_vertex = False
        while True:
            line = fh.readline()
            if not line:
                raise ConfigError(f"{path}: unterminated PLY header")
            words = line.decode("ascii").strip().split()
            if not words or words[0] == "comment":
                continue
            if words[0] == "format":
                fmt = words[1]
            elif words[0] == "element":
                in_vertex = words[1] == "vertex"
                if in_vertex:
                    count = int(words[2])
                elif int(words[2]) > 0:
                    raise ConfigError(f"{path}: unsupported element {words[1]}")
            elif words[0] == "property" and in_vertex:
                if words[1] == "list" or words[1] not in _PLY_TYPES:
                    raise ConfigError(f"{path}: unsupported property {words[1]}")
                props.append((words[1], words[2]))
            elif words[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise ConfigError(f"{path}: unsupported format {fmt}")
        if count is None or not {"x", "y", "z"} <= {name for _, name in props}:
            raise ConfigError(f"{path}: vertex element with x, y, z required")
        if fmt == "ascii":
            data = np.loadtxt(fh, dtype=np.float64, ndmin=2) if count else np.zeros((0, len(props)))
            cols = {name: data[:, i] for i, (_, name) in enumerate(props)}
        else:
            dtype = np.dtype([(name, _PLY_TYPES[t][0]) for t, name in props])
            raw = np.frombuffer(fh.read(count * dtype.itemsize), dtype=dtype, count=count)
            cols = {name: raw[name].astype(np.float64) for _, name in props}
    return np.column_stack([cols["x"], cols["y"], cols["z"]])


def write_poses_csv(path, records) -> None:
    """``records``: iterable of (timestamp, RigidTransform base->world)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "tx", "ty", "tz"] + [f"r{i}{j}" for i in range(3) for j in range(3)])
        for ts, pose in records:
            row = [ts, *pose.translation, *pose.rotation.reshape(-1)]
            w.writerow([f"{v:.17g}" for v in row])


def read_poses_csv(path) -> list[tuple[float, RigidTransform]]:
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            t = np.array([float(rec[k]) for k in ("tx", "ty", "tz")])
            r = np.array([float(rec[f"r{i}{j}"]) for i in range(3) for j in range(3)])
            out.append(
                (float(rec["timestamp"]), RigidTransform(r.reshape(3, 3), t, BASE, WORLD))
            )
    return out


def write_mask_png(path, mask: SemanticMask) -> None:
    if mask.labels.max(initial=0) > 255 or mask.labels.min(initial=0) < 0:
        raise ConfigError("mask class ids must fit 8-bit PNG")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask.labels.astype(np.uint8), mode="L").save(path)


def read_mask_png(path, curb_class: int) -> SemanticMask:
    grid = np.asarray(Image.open(path), dtype=np.int64)
    return SemanticMask(grid, curb_class)


def write_gt_geojson(path, gt) -> None:
    features = [
        {
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[float(v) for v in p] for p in g.points],
            },
            "properties": {"segment_id": int(g.segment_id)},
        }
        for g in sorted(gt, key=lambda g: g.segment_id)
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_gt_geojson(path) -> tuple[GroundTruthCurb, ...]:
    with open(path) as fh:
        doc = json.load(fh)
    out = []
    for feat in doc.get("features", []):
        geom = feat.get("geometry", {})
        if geom.get("type") != "LineString":
            raise ConfigError(f"{path}: GT features must be LineStrings")
        pts = np.asarray(geom["coordinates"], dtype=np.float64)
        if pts.shape[1] == 2:  # planar survey: curbs at unknown height
            pts = np.column_stack([pts, np.zeros(len(pts))])
        out.append(GroundTruthCurb(int(feat["properties"]["segment_id"]), pts))
    return tuple(sorted(out, key=lambda g: g.segment_id))


def write_truth_csv(path, frames) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "point", "label"])
        for fr in frames:
            for i, label in enumerate(fr.truth):
                w.writerow([fr.index, i, label])


def read_truth_csv(path) -> dict[int, np.ndarray]:
    rows: dict[int, list] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.setdefault(int(rec["frame"]), []).append((int(rec["point"]), rec["label"]))
    out = {}
    for frame, pairs in rows.items():
        pairs.sort()
        out[frame] = np.array([label for _, label in pairs], dtype="<U16")
    return out


def write_scene(scene: SynthScene, out_dir) -> Path:
    """Lay a scene out as ``frames/NNN.ply`` + per-camera mask PNGs, a pose
    log, GT polylines, truth labels and the generating spec."""
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    for fr in scene.frames:
        write_ply(out / "frames" / f"{fr.index:03d}.ply", fr.cloud.points)
        for k, mask in enumerate(fr.masks):
            write_mask_png(out / "frames" / f"{fr.index:03d}_cam{k}.png", mask)
    with open(out / "frames" / "labels.json", "w") as fh:
        json.dump(
            {"classes": scene.class_map, "curb_class": scene.class_map["curb"]},
            fh,
            indent=1,
            sort_keys=True,
        )
        fh.write("\n")
    write_poses_csv(out / "poses.csv", [(fr.timestamp, fr.pose) for fr in scene.frames])
    write_gt_geojson(out / "gt.geojson", scene.gt)
    write_truth_csv(out / "truth_labels.csv", scene.frames)
    spec = asdict(scene.spec)
    with open(out / "scene.json", "w") as fh:
        json.dump(spec, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return out


def read_scene(scene_dir) -> SynthScene:
    """Inverse of :func:`write_scene`; cameras are the generator's rig."""
    root = Path(scene_dir)
    if not (root / "scene.json").is_file():
        raise ConfigError(f"{root}: no scene.json (not a scene directory)")
    with open(root / "scene.json") as fh:
        spec = SceneSpec(**json.load(fh))
    with open(root / "frames" / "labels.json") as fh:
        label_doc = json.load(fh)
    curb_class = int(label_doc["curb_class"])
    poses = read_poses_csv(root / "poses.csv")
    truth = read_truth_csv(root / "truth_labels.csv")
    cameras = default_cameras()

    frames = []
    for index, (ts, pose) in enumerate(poses):
        pts = read_ply(root / "frames" / f"{index:03d}.ply")
        cloud = LabeledPointCloud(pts, BASE, timestamp=ts)
        masks = tuple(
            read_mask_png(root / "frames" / f"{index:03d}_cam{k}.png", curb_class)
            for k in range(len(cameras))
        )
        labels = truth.get(index, np.full(len(pts), "", dtype="<U16"))
        if len(labels) != len(pts):
            raise ConfigError(f"frame {index}: {len(labels)} labels for {len(pts)} points")
        frames.append(SynthFrame(index, ts, cloud, masks, pose, labels))
    gt = read_gt_geojson(root / "gt.geojson")
    class_map = {str(k): int(v) for k, v in label_doc["classes"].items()}
    return SynthScene(spec, cameras, tuple(frames), gt, class_map)
