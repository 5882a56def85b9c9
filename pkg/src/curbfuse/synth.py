"""Synthetic road scenes with exact ground truth.

Parametric layouts (straight road, constant-curvature road, intersection
with a traffic isle) are turned into per-frame lidar clouds, fisheye
semantic masks, a pose log and GT curb polylines.  Every generated point
carries a truth label so end-to-end precision/recall can be computed
without any manual annotation.

Curbs are two-face extrusions; the semantic curb class covers the band
within ``BAND_HALF_WIDTH`` of the top edge (the surveyed GT line), which
keeps the truth-label invariant (curb inliers within 3 sigma + 0.05 m of
GT) tight by construction.  Outliers are curb returns displaced along
their own camera ray, the one perturbation that survives mask association
unchanged, mimicking depth/sync error.  Scenes can park box-shaped
obstacles against a curb near the corridor end; at grazing range some of
their returns associate with the curb class like any clutter hugging the
curb line.

The survey can stop short of the physical curb (``survey_trim``), as real
surveys do: the sensor keeps returning curb points past the surveyed span,
and those un-surveyed returns thin out with the number of frames whose
view window still reaches them.  Un-surveyed curb returns score as
``other``: they are real geometry, but the GT map does not vouch for them.
Curbs can also carry short physical cuts (``curb_gaps``, think driveways
or drainage openings) where the face simply stops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BASE, WORLD, FrameId, LabeledPointCloud, RigidTransform
from .association import SemanticMask
from .errors import ConfigError
from .evaluation import GroundTruthCurb
from .fisheye import FisheyeCamera, project_cloud

TRUTH_OTHER = "other"
TRUTH_CURB = "curb_inlier"
TRUTH_OUTLIER = "outlier"

CLASS_MAP = {"road": 1, "sidewalk": 2, "curb": 3, "obstacle": 4}

BAND_HALF_WIDTH = 0.04  # curb class extends this far from the GT edge
STRIP_STANDOFF = 0.30  # surface strips start here; keeps them outside both filters
STRIP_WIDTH = 0.40
OUTLIER_MIN_DISPLACEMENT = 0.35  # below this a displaced return is indistinguishable

# parked-obstacle box, relative to the curb base line (road side)
OBSTACLE_LATERAL = (0.35, 0.60)
OBSTACLE_HEIGHT = (0.03, 0.27)
OBSTACLE_HALF_LENGTH = 1.1
OBSTACLE_END_SETBACK = 1.7  # box center this far before the curb end
# keep boxes light next to the curb returns: a heavy far-range mass would
# drag the batch centroid forward and flip the boundary anchor off the tip
OBSTACLE_DENSITY = 20.0  # returns per meter of box length per frame

_LAYOUTS = ("straight", "curve", "intersection_isle")


@dataclass(frozen=True)
class SceneSpec:
    """Parametric scene description; everything is seeded and pure."""

    layout: str = "straight"
    curve_radius: float = 15.0
    curb_count: int = 2
    curb_height: float = 0.15
    noise_sigma: float = 0.03
    outlier_rate: float = 0.0
    outlier_offset: float = 2.0
    n_frames: int = 10
    seed: int = 0
    length: float | None = None  # None: exactly the driven corridor
    road_half_width: float = 3.5
    curb_density: float = 32.0  # curb returns per meter at the near view edge
    surface_density: float = 1.5  # road/sidewalk returns per meter per frame
    obstacles: int = 0  # parked boxes per road curb, near the corridor end
    frame_step: float = 0.5  # outer-curb advance must stay under the merge threshold
    view_near: float = 4.0
    view_far: float = 16.0
    view_half_width: float = 8.0
    survey_trim: tuple = (0.0, 0.0)  # un-surveyed curb length at head/tail
    curb_gaps: tuple = ()  # (curb index, arclength start, width) cuts in the curb face

    def __post_init__(self):
        object.__setattr__(self, "survey_trim", tuple(self.survey_trim))
        object.__setattr__(self, "curb_gaps", tuple(tuple(g) for g in self.curb_gaps))
        if self.layout not in _LAYOUTS:
            raise ConfigError(f"layout must be one of {_LAYOUTS}, got {self.layout!r}")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if not 0 <= self.outlier_rate < 1:
            raise ConfigError("outlier_rate must lie in [0, 1)")
        if self.curb_count < 1:
            raise ConfigError("curb_count must be >= 1")
        if self.layout == "curve" and self.curve_radius <= self.road_half_width:
            raise ConfigError("curve_radius must exceed the road half width")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        if self.length is not None and self.length <= 0:
            raise ConfigError("length must be positive")
        if self.curb_density <= 0 or self.surface_density < 0:
            raise ConfigError("densities must be positive (surface may be zero)")
        if self.obstacles < 0:
            raise ConfigError("obstacles must be >= 0")
        if self.frame_step <= 0:
            raise ConfigError("frame_step must be positive")
        if not 0 < self.view_near < self.view_far:
            raise ConfigError("need 0 < view_near < view_far")
        if self.view_half_width <= self.road_half_width:
            raise ConfigError("view_half_width must exceed road_half_width")
        if len(self.survey_trim) != 2 or min(self.survey_trim) < 0:
            raise ConfigError("survey_trim must be two non-negative lengths")
        for gap in self.curb_gaps:
            if len(gap) != 3 or not 0 <= int(gap[0]) < self.curb_count or gap[2] <= 0:
                raise ConfigError("curb_gaps entries are (curb_index, start, width)")

    def resolved_length(self) -> float:
        if self.length is not None:
            return self.length
        return self.view_far - self.view_near + (self.n_frames - 1) * self.frame_step


@dataclass(frozen=True, eq=False)
class SynthFrame:
    index: int
    timestamp: float
    cloud: LabeledPointCloud  # base frame
    masks: tuple[SemanticMask, ...]  # one per camera
    pose: RigidTransform  # base -> world
    truth: np.ndarray  # (N,) unicode labels aligned with cloud.points


@dataclass(frozen=True, eq=False)
class SynthScene:
    spec: SceneSpec
    cameras: tuple[FisheyeCamera, ...]
    frames: tuple[SynthFrame, ...]
    gt: tuple[GroundTruthCurb, ...]
    class_map: dict = field(default_factory=lambda: dict(CLASS_MAP))

    def world_points(self) -> tuple[np.ndarray, np.ndarray]:
        """All frame points in the world frame plus their truth labels."""
        pts, labels = [], []
        for frame in self.frames:
            if len(frame.cloud):
                pts.append(frame.pose.apply(frame.cloud.points))
                labels.append(frame.truth)
        if not pts:
            return np.zeros((0, 3)), np.zeros(0, dtype="<U16")
        return np.concatenate(pts), np.concatenate(labels)


def _normalize_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _look_rotation(direction) -> np.ndarray:
    """Base->camera rotation with the optical axis along ``direction``,
    image right horizontal and image down completing the frame."""
    z = np.asarray(direction, dtype=np.float64)
    z = z / np.linalg.norm(z)
    x = np.cross(z, np.array([0.0, 0.0, 1.0]))
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z])


def default_cameras() -> tuple[FisheyeCamera, ...]:
    """Two forward-tilted fisheyes, one over each shoulder."""
    cams = []
    for k, yaw_deg in enumerate((35.0, -35.0)):
        yaw = math.radians(yaw_deg)
        pitch = math.radians(30.0)
        d = np.array(
            [math.cos(pitch) * math.cos(yaw), math.cos(pitch) * math.sin(yaw), -math.sin(pitch)]
        )
        rot = _look_rotation(d)
        center = np.array([1.4, 0.5 if yaw_deg > 0 else -0.5, 2.1])
        extrinsic = RigidTransform(rot, -rot @ center, BASE, FrameId.camera(k))
        cams.append(
            FisheyeCamera(
                fx=300.0,
                fy=300.0,
                cx=400.0,
                cy=300.0,
                k=(1.0, -0.05, 0.005, -0.0002),
                width=800,
                height=600,
                extrinsic=extrinsic,
            )
        )
    return tuple(cams)


@dataclass(frozen=True, eq=False)
class _CurbGeom:
    """Curb base line (z = 0) as a dense polyline with the lateral
    direction toward the raised side at each vertex."""

    segment_id: int
    verts: np.ndarray  # (V, 3)
    away: np.ndarray  # (V, 3) unit, horizontal
    arclen: np.ndarray  # (V,)

    @property
    def length(self) -> float:
        return float(self.arclen[-1])

    def at(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Interpolated base position and away direction at arclength t."""
        t = np.clip(t, 0.0, self.length)
        pos = np.column_stack(
            [np.interp(t, self.arclen, self.verts[:, k]) for k in range(3)]
        )
        away = np.column_stack(
            [np.interp(t, self.arclen, self.away[:, k]) for k in range(3)]
        )
        return pos, _normalize_rows(away)


def _polyline_geom(segment_id: int, verts: np.ndarray, away: np.ndarray) -> _CurbGeom:
    seg = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    arclen = np.concatenate([[0.0], np.cumsum(seg)])
    return _CurbGeom(segment_id, verts, away, arclen)


def _centerline(spec: SceneSpec, s: np.ndarray):
    """Road centerline position, tangent and left normal at arclength s."""
    if spec.layout == "curve":
        r = spec.curve_radius
        a = s / r
        pos = np.column_stack([r * np.sin(a), r * (1.0 - np.cos(a)), np.zeros_like(s)])
        tan = np.column_stack([np.cos(a), np.sin(a), np.zeros_like(s)])
    else:
        pos = np.column_stack([s, np.zeros_like(s), np.zeros_like(s)])
        tan = np.column_stack([np.ones_like(s), np.zeros_like(s), np.zeros_like(s)])
    left = np.column_stack([-tan[:, 1], tan[:, 0], np.zeros_like(s)])
    return pos, tan, left


def _build_curbs(spec: SceneSpec) -> list[_CurbGeom]:
    step = 0.05
    length = spec.resolved_length()
    s = np.linspace(0.0, length, int(length / step) + 1)
    pos, _, left = _centerline(spec, s)
    hw = spec.road_half_width
    curbs = []
    sid = 0
    road_curbs = spec.curb_count - (1 if spec.layout == "intersection_isle" else 0)
    for i in range(max(road_curbs, 0)):
        side = 1.0 if i % 2 == 0 else -1.0  # left first
        offset = (hw + 2.0 * (i // 2)) * side  # outer tiers 2 m further out
        verts = pos + offset * left
        curbs.append(_polyline_geom(sid, verts, side * left))
        sid += 1
    if spec.layout == "intersection_isle":
        # between the centerline and the left curb, clear of both by > the
        # cluster merge threshold so the isle stays its own segment
        center = np.array([length / 2.0, 0.9, 0.0])
        radius = 1.1
        angles = np.radians([90.0, 210.0, 330.0, 90.0])
        corners = center + radius * np.column_stack(
            [np.cos(angles), np.sin(angles), np.zeros_like(angles)]
        )
        verts = []
        for a, b in zip(corners[:-1], corners[1:]):
            n = max(int(np.linalg.norm(b - a) / step), 2)
            frac = np.linspace(0.0, 1.0, n, endpoint=False)
            verts.append(a + frac[:, None] * (b - a))
        verts.append(corners[-1:])
        verts = np.concatenate(verts)
        away = _normalize_rows(center - verts)  # raised side is the isle interior
        curbs.append(_polyline_geom(sid, verts, away))
    return curbs


def _band_points(geom: _CurbGeom, t: np.ndarray, u: np.ndarray, h: float) -> np.ndarray:
    """Curb-band surface point at arclength t and band offset u: negative u
    walks down the vertical face from the edge, positive u walks along the
    top face; |u| is the exact distance to the GT edge."""
    base, away = geom.at(t)
    pts = base.copy()
    pts[:, 2] = h
    top = u >= 0
    pts[top] += u[top, None] * away[top]
    pts[~top, 2] += u[~top]
    return pts


def _survey_span(spec: SceneSpec, geom: _CurbGeom) -> tuple[float, float]:
    """Surveyed arclength interval of one curb.  ``survey_trim`` cuts the
    ends of open segments (a survey rarely covers the whole block face);
    closed loops are always surveyed whole."""
    closed = bool(np.allclose(geom.verts[0], geom.verts[-1]))
    if closed:
        return 0.0, geom.length
    head, tail = spec.survey_trim
    hi = max(geom.length - tail, head + 1.0)  # never trim a survey out of existence
    return head, hi


def _gap_keep(spec: SceneSpec, curb_index: int, t: np.ndarray, length: float) -> np.ndarray:
    """Mask of arclength samples outside every cut of this curb.  A negative
    gap start counts back from the curb end, like sequence indexing."""
    keep = np.ones(len(t), dtype=bool)
    for idx, start, width in spec.curb_gaps:
        if int(idx) != curb_index:
            continue
        lo = start + length if start < 0 else start
        keep &= (t < lo) | (t >= lo + width)
    return keep


def _gt_polylines(spec: SceneSpec, curbs: list[_CurbGeom]) -> tuple[GroundTruthCurb, ...]:
    out = []
    for geom in curbs:
        lo, hi = _survey_span(spec, geom)
        t = np.concatenate([np.arange(lo, hi, 0.5), [hi]])
        base, _ = geom.at(t)
        pts = base.copy()
        pts[:, 2] = spec.curb_height
        out.append(GroundTruthCurb(geom.segment_id, pts))
    return tuple(out)


def _pose_at(spec: SceneSpec, s: float) -> RigidTransform:
    pos, tan, left = _centerline(spec, np.array([s]))
    rot = np.column_stack([tan[0], left[0], [0.0, 0.0, 1.0]])
    return RigidTransform(rot, pos[0], BASE, WORLD)


def _window_mask(points: np.ndarray, pose: RigidTransform, spec: SceneSpec) -> np.ndarray:
    """Forward corridor box in the pose frame.  The lateral cap (rather
    than a radial one) matters on bends: an ahead-slab alone re-admits the
    curb from across the curve, which would split the temporal chains."""
    rel = points - pose.translation
    ahead = rel @ pose.rotation[:, 0]
    lateral = rel @ pose.rotation[:, 1]
    return (
        (ahead >= spec.view_near)
        & (ahead <= spec.view_far)
        & (np.abs(lateral) <= spec.view_half_width)
    )


def _bool_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous True runs of a boolean vector as (first, last) pairs."""
    edges = np.flatnonzero(np.diff(np.concatenate([[0], mask.view(np.int8), [0]])))
    return [(int(a), int(b - 1)) for a, b in zip(edges[::2], edges[1::2])]


def _stratified_ts(
    rng: np.random.Generator, geom: _CurbGeom, pose: RigidTransform, spec: SceneSpec
) -> np.ndarray:
    """Arclength samples of one curb for one frame.

    Sample spacing stretches linearly with range (the 1/r falloff of a
    constant-angle scanner), one jittered return per stratum.  Two
    clustering needs hang on this exact shape: strata keep every in-window
    gap far below the DBSCAN eps, and the near-heavy mass keeps batch and
    cluster centroids behind their midpoints, so the furthest-from-centroid
    boundary always contains the tip the next frame has to merge onto.
    """
    probe = np.arange(0.0, geom.length + 0.125, 0.25)
    base, _ = geom.at(probe)
    ahead = (base - pose.translation) @ pose.rotation[:, 0]
    inside = _window_mask(base, pose, spec)
    ts = []
    for first, last in _bool_runs(inside):
        t, t_end = float(probe[first]), float(probe[last])
        while t <= t_end:
            a = float(np.interp(t, probe, ahead))
            # stretch capped at 3x so the far tail stays chained under eps
            w = min(max(a, spec.view_near), 3.0 * spec.view_near) / (
                spec.view_near * spec.curb_density
            )
            ts.append(t + w * (0.5 + 0.4 * (rng.random() - 0.5)))
            t += w
    return np.asarray(ts)


def _clipped_noise(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """Isotropic Gaussian with the vector norm clipped to 3 sigma, so the
    curb-inlier distance invariant holds for every point, not just 99.7%."""
    if sigma == 0.0 or n == 0:
        return np.zeros((n, 3))
    noise = rng.normal(scale=sigma, size=(n, 3))
    norms = np.linalg.norm(noise, axis=1)
    over = norms > 3.0 * sigma
    if over.any():
        noise[over] *= (3.0 * sigma / norms[over])[:, None]
    return noise


def _splat(mask: np.ndarray, cam: FisheyeCamera, cloud: LabeledPointCloud, class_id: int):
    proj = project_cloud(cam, cloud)
    if len(proj) == 0:
        return
    u = np.floor(proj.pixels[:, 0] + 0.5).astype(np.int64)
    v = np.floor(proj.pixels[:, 1] + 0.5).astype(np.int64)
    ok = (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)
    mask[v[ok], u[ok]] = class_id


def _render_masks(
    spec: SceneSpec,
    curbs: list[_CurbGeom],
    boxes: list[tuple[_CurbGeom, float]],
    pose: RigidTransform,
    cameras: tuple[FisheyeCamera, ...],
) -> tuple[SemanticMask, ...]:
    to_base = pose.inverse()
    surfaces = []  # (base-frame cloud, class_id), curb class splatted last
    for geom in curbs:
        t = np.arange(0.0, geom.length, 0.02)
        base, away = geom.at(t)
        for g in np.arange(STRIP_STANDOFF, STRIP_STANDOFF + STRIP_WIDTH, 0.03):
            road = base - g * away
            surfaces.append((road, CLASS_MAP["road"]))
            walk = base + g * away
            walk[:, 2] = spec.curb_height
            surfaces.append((walk, CLASS_MAP["sidewalk"]))
    for geom, t_c in boxes:
        t = np.arange(t_c - OBSTACLE_HALF_LENGTH, t_c + OBSTACLE_HALF_LENGTH, 0.04)
        base, away = geom.at(t)
        for lat in np.arange(OBSTACLE_LATERAL[0], OBSTACLE_LATERAL[1] + 1e-9, 0.05):
            for z in np.arange(OBSTACLE_HEIGHT[0], OBSTACLE_HEIGHT[1] + 1e-9, 0.06):
                face = base - lat * away
                face[:, 2] = z
                surfaces.append((face, CLASS_MAP["obstacle"]))
    for gi, geom in enumerate(curbs):
        t = np.arange(0.0, geom.length, 0.02)
        t = t[_gap_keep(spec, gi, t, geom.length)]
        for u in np.linspace(-BAND_HALF_WIDTH, BAND_HALF_WIDTH, 9):
            band = _band_points(geom, t, np.full_like(t, u), spec.curb_height)
            surfaces.append((band, CLASS_MAP["curb"]))
    clouds = []
    for pts_world, class_id in surfaces:
        keep = _window_mask(pts_world, pose, spec)
        if keep.any():
            clouds.append(
                (LabeledPointCloud(to_base.apply(pts_world[keep]), BASE), class_id)
            )

    masks = []
    for cam in cameras:
        grid = np.zeros((cam.height, cam.width), dtype=np.int64)
        for cloud, class_id in clouds:
            _splat(grid, cam, cloud, class_id)
        masks.append(SemanticMask(grid, CLASS_MAP["curb"]))
    return tuple(masks)


def _visible_any(cameras, base_pts: np.ndarray) -> np.ndarray:
    cloud = LabeledPointCloud(base_pts, BASE)
    seen = np.zeros(len(base_pts), dtype=bool)
    for cam in cameras:
        seen[project_cloud(cam, cloud).indices] = True
    return seen


def _displace_outliers(
    rng: np.random.Generator,
    base_pts: np.ndarray,
    picks: np.ndarray,
    cameras,
    spec: SceneSpec,
) -> tuple[np.ndarray, np.ndarray]:
    """Push picked points along their own camera ray by a uniform distance
    up to outlier_offset; the projected pixel is invariant under this move.
    Returns the updated points and the mask of actually moved ones."""
    centers = [cam.extrinsic.inverse().translation for cam in cameras]
    out = base_pts.copy()
    moved = np.zeros(len(base_pts), dtype=bool)
    for i in np.nonzero(picks)[0]:
        p = base_pts[i]
        center = None
        for cam, c in zip(cameras, centers):
            q = cam.extrinsic.apply(p)[0]
            if q[2] > 0:
                center = c
                break
        if center is None:
            continue  # only visible in the far hemisphere; leave untouched
        ray = p - center
        range_to_cam = float(np.linalg.norm(ray))
        ray = ray / range_to_cam
        m = rng.uniform(OUTLIER_MIN_DISPLACEMENT, spec.outlier_offset)
        if rng.random() < 0.5:
            m = -min(m, 0.7 * range_to_cam)  # never past the camera
        out[i] = p + m * ray
        moved[i] = True
    return out, moved


def _obstacle_boxes(
    spec: SceneSpec, curbs: list[_CurbGeom], rng: np.random.Generator
) -> list[tuple[_CurbGeom, float]]:
    """Parked boxes against the road side of each road curb, packed back
    from the corridor end.  The isle (last geom of that layout) gets none."""
    road_curbs = spec.curb_count - (1 if spec.layout == "intersection_isle" else 0)
    boxes = []
    for geom in curbs[:road_curbs]:
        for j in range(spec.obstacles):
            t_c = geom.length - OBSTACLE_END_SETBACK - 2.6 * j + rng.uniform(-0.3, 0.3)
            if t_c - OBSTACLE_HALF_LENGTH > 0.0:
                boxes.append((geom, t_c))
    return boxes


def generate(spec: SceneSpec) -> SynthScene:
    """Build the full scene; identical specs give bit-identical scenes."""
    cameras = default_cameras()
    curbs = _build_curbs(spec)
    gt = _gt_polylines(spec, curbs)
    streams = np.random.SeedSequence(spec.seed).spawn(spec.n_frames + 1)
    frame_streams, scene_stream = streams[:-1], streams[-1]
    boxes = _obstacle_boxes(spec, curbs, np.random.default_rng(scene_stream))

    frames = []
    for k in range(spec.n_frames):
        rng = np.random.default_rng(frame_streams[k])
        # start behind the curbs so the drive sweeps them end to end
        s_k = -spec.view_near + k * spec.frame_step
        pose = _pose_at(spec, s_k)
        to_base = pose.inverse()

        curb_world, curb_surveyed = [], []
        for gi, geom in enumerate(curbs):
            t = _stratified_ts(rng, geom, pose, spec)
            u = rng.uniform(-BAND_HALF_WIDTH, BAND_HALF_WIDTH, len(t))
            keep = _gap_keep(spec, gi, t, geom.length)
            t, u = t[keep], u[keep]
            lo, hi = _survey_span(spec, geom)
            curb_world.append(_band_points(geom, t, u, spec.curb_height))
            curb_surveyed.append((t >= lo) & (t <= hi))
        other_world = []
        for geom in curbs:
            n = int(round(spec.surface_density * geom.length))
            t = rng.uniform(0.0, geom.length, n)
            g = rng.uniform(STRIP_STANDOFF, STRIP_STANDOFF + STRIP_WIDTH, n)
            base, away = geom.at(t)
            road = base - g[:, None] * away
            walk = base + g[:, None] * away
            walk[:, 2] = spec.curb_height
            other_world.extend([road, walk])
        for geom, t_c in boxes:
            n = int(round(OBSTACLE_DENSITY * 2.0 * OBSTACLE_HALF_LENGTH))
            t = rng.uniform(t_c - OBSTACLE_HALF_LENGTH, t_c + OBSTACLE_HALF_LENGTH, n)
            lat = rng.uniform(*OBSTACLE_LATERAL, n)
            base, away = geom.at(t)
            box = base - lat[:, None] * away
            box[:, 2] = rng.uniform(*OBSTACLE_HEIGHT, n)
            other_world.append(box)

        curb_world = np.concatenate(curb_world)
        curb_surveyed = np.concatenate(curb_surveyed)
        other_world = np.concatenate(other_world)
        win = _window_mask(curb_world, pose, spec)
        curb_world, curb_surveyed = curb_world[win], curb_surveyed[win]
        other_world = other_world[_window_mask(other_world, pose, spec)]

        curb_base = to_base.apply(curb_world) if len(curb_world) else curb_world
        other_base = to_base.apply(other_world) if len(other_world) else other_world
        curb_base = curb_base + _clipped_noise(rng, len(curb_base), spec.noise_sigma)
        other_base = other_base + _clipped_noise(rng, len(other_base), spec.noise_sigma)

        seen = _visible_any(cameras, curb_base) if len(curb_base) else np.zeros(0, bool)
        curb_base = curb_base[seen]
        curb_surveyed = curb_surveyed[seen]

        # returns from un-surveyed curb stretches score as "other": they are
        # real geometry, but nothing in the GT map vouches for them
        truth = np.array(
            [TRUTH_CURB if s else TRUTH_OTHER for s in curb_surveyed]
            + [TRUTH_OTHER] * len(other_base),
            dtype="<U16",
        )
        pts = np.vstack([curb_base, other_base]) if len(curb_base) + len(other_base) else np.zeros((0, 3))
        if spec.outlier_rate > 0 and len(curb_base):
            picks = rng.random(len(curb_base)) < spec.outlier_rate
            if picks.any():
                displaced, moved = _displace_outliers(rng, curb_base, picks, cameras, spec)
                pts[: len(curb_base)] = displaced
                truth[np.nonzero(moved)[0]] = TRUTH_OUTLIER

        cloud = LabeledPointCloud(pts, BASE, timestamp=k * 0.1)
        masks = _render_masks(spec, curbs, boxes, pose, cameras)
        frames.append(SynthFrame(k, k * 0.1, cloud, masks, pose, truth))

    return SynthScene(spec, cameras, tuple(frames), gt)


@dataclass(frozen=True)
class PrecisionRecall:
    precision: float | None  # None when nothing was kept
    recall: float
    kept: int
    kept_curb: int
    total_curb: int

    @property
    def flags(self) -> tuple[str, ...]:
        return ("empty_output",) if self.precision is None else ()


def end_to_end_truth_score(scene: SynthScene, kept_world_points) -> PrecisionRecall:
    """Precision/recall of a pipeline's kept points against truth labels.

    Kept points are matched to generated scene points by position
    (tolerance 1e-6 m); the pipeline never alters coordinates, so every
    kept point matches exactly one generated point.
    """
    from scipy.spatial import cKDTree

    kept = np.asarray(kept_world_points, dtype=np.float64).reshape(-1, 3)
    all_pts, labels = scene.world_points()
    total_curb = int((labels == TRUTH_CURB).sum())
    if len(kept) == 0:
        return PrecisionRecall(None, 0.0, 0, 0, total_curb)
    d, idx = cKDTree(all_pts).query(kept, k=1)
    matched = d <= 1e-6
    kept_curb = int((labels[idx[matched]] == TRUTH_CURB).sum())
    precision = kept_curb / len(kept)
    recall = kept_curb / total_curb if total_curb else 0.0
    return PrecisionRecall(precision, recall, len(kept), kept_curb, total_curb)
