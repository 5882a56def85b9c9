"""Reference frames, rigid transforms and the labeled point-cloud container.

Everything downstream (projection, association, clustering, filtering)
moves point clouds between the vehicle base frame, per-sensor frames and
the world frame through the types defined here.  All values are immutable
after construction and all operations are pure.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import FrameError, PoseGapError

_ORTHO_TOL = 1e-9

# Nearest-pose lookup rejects records further than this from the query
# timestamp; stale poses are an error, never silently interpolated.
MAX_POSE_GAP_S = 0.050


@dataclass(frozen=True)
class FrameId:
    """Named reference frame.  Cameras are indexed (``camera0``, ``camera1``)."""

    tag: str

    @staticmethod
    def camera(k: int) -> "FrameId":
        return FrameId(f"camera{k}")

    def __str__(self) -> str:
        return self.tag


BASE = FrameId("base")
LIDAR_LEFT = FrameId("lidar_left")
LIDAR_RIGHT = FrameId("lidar_right")
IMU = FrameId("imu")
WORLD = FrameId("world")  # local tangent-plane approximation of UTM


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1 and pts.size == 3:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (N, 3) points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain NaN or Inf")
    return pts


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Maps points expressed in ``frame_from`` into ``frame_to``:
    p_to = rotation @ p_from + translation."""

    rotation: np.ndarray  # (3, 3) orthonormal, det +1
    translation: np.ndarray  # (3,)
    frame_from: FrameId
    frame_to: FrameId

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValueError("transform contains NaN or Inf")
        if np.max(np.abs(R.T @ R - np.eye(3))) > _ORTHO_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        self.rotation.setflags(write=False)
        self.translation.setflags(write=False)

    @staticmethod
    def identity(frame: FrameId) -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3), frame, frame)

    def apply(self, points) -> np.ndarray:
        pts = _as_points(points)
        return pts @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        return RigidTransform(
            self.rotation.T,
            -(self.rotation.T @ self.translation),
            self.frame_to,
            self.frame_from,
        )


def compose(t_ab: RigidTransform, t_bc: RigidTransform) -> RigidTransform:
    """T_ac = T_ab o T_bc, mapping frame c through b into a."""
    if t_ab.frame_from != t_bc.frame_to:
        raise FrameError(
            f"cannot chain {t_bc.frame_from}->{t_bc.frame_to} into "
            f"{t_ab.frame_from}->{t_ab.frame_to}"
        )
    return RigidTransform(
        t_ab.rotation @ t_bc.rotation,
        t_ab.rotation @ t_bc.translation + t_ab.translation,
        t_bc.frame_from,
        t_ab.frame_to,
    )


@dataclass(frozen=True, eq=False)
class LabeledPointCloud:
    """3D points in a single frame with optional per-point class labels."""

    points: np.ndarray  # (N, 3) float64
    frame: FrameId
    labels: np.ndarray | None = None  # (N,) int, optional
    timestamp: float = 0.0

    def __post_init__(self):
        pts = _as_points(self.points) if len(self.points) else np.zeros((0, 3))
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64).reshape(-1)
            if len(lab) != len(pts):
                raise ValueError(
                    f"labels ({len(lab)}) must match points ({len(pts)})"
                )
            object.__setattr__(self, "labels", lab)
            self.labels.setflags(write=False)
        self.points.setflags(write=False)

    def __len__(self) -> int:
        return len(self.points)


def transform_cloud(cloud: LabeledPointCloud, t: RigidTransform) -> LabeledPointCloud:
    """Re-express a cloud in ``t.frame_to``; labels and timestamp carry over."""
    if t.frame_from != cloud.frame:
        raise FrameError(
            f"cloud is in {cloud.frame}, transform expects {t.frame_from}"
        )
    return LabeledPointCloud(
        points=t.apply(cloud.points) if len(cloud) else cloud.points,
        frame=t.frame_to,
        labels=cloud.labels,
        timestamp=cloud.timestamp,
    )


@dataclass(frozen=True, eq=False)
class PoseLog:
    """Timestamped Base->World poses, one record per camera frame.

    Lookup is nearest-timestamp with a hard failure beyond
    ``MAX_POSE_GAP_S``; motion correction is out of scope so a stale pose
    must surface as an error rather than be interpolated.
    """

    timestamps: np.ndarray = field(default_factory=lambda: np.zeros(0))
    poses: tuple[RigidTransform, ...] = ()

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.float64).reshape(-1)
        if len(ts) != len(self.poses):
            raise ValueError("one pose per timestamp required")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            order = np.argsort(ts, kind="stable")
            ts = ts[order]
            object.__setattr__(self, "poses", tuple(self.poses[i] for i in order))
        object.__setattr__(self, "timestamps", ts)
        for pose in self.poses:
            if pose.frame_from != BASE or pose.frame_to != WORLD:
                raise FrameError("pose log records must map base -> world")

    def __len__(self) -> int:
        return len(self.poses)

    def nearest(self, timestamp: float, max_gap: float = MAX_POSE_GAP_S) -> RigidTransform:
        if len(self.poses) == 0:
            raise PoseGapError("pose log is empty")
        ts = self.timestamps
        i = bisect.bisect_left(ts.tolist(), timestamp)
        candidates = [j for j in (i - 1, i) if 0 <= j < len(ts)]
        best = min(candidates, key=lambda j: abs(ts[j] - timestamp))
        gap = abs(ts[best] - timestamp)
        if gap > max_gap:
            raise PoseGapError(
                f"nearest pose is {gap * 1e3:.1f} ms away (limit {max_gap * 1e3:.0f} ms)"
            )
        return self.poses[best]
