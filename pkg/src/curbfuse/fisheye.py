"""Fisheye camera model: equidistant polynomial radial projection.

The radial mapping is r(theta) = fx * d(theta) with
d(theta) = k1*theta + k2*theta^3 + k3*theta^5 + k4*theta^7, the common
four-coefficient odd-polynomial truncation of the generic fisheye model.
With k = [1, 0, 0, 0] this reduces to the ideal equidistant projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BASE, LabeledPointCloud, RigidTransform
from .errors import ConfigError, DegenerateInput, FrameError

DEFAULT_THETA_MAX = math.radians(100.0)
_MONOTONICITY_SAMPLES = 1024


@dataclass(frozen=True, eq=False)
class FisheyeCamera:
    """Intrinsics plus the Base->Camera extrinsic pose.

    ``k`` holds the four radial polynomial coefficients.  ``theta_max``
    bounds the accepted incidence angle; wide fisheyes may exceed the
    hemisphere, so the default is 100 degrees.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    k: tuple[float, float, float, float]
    width: int
    height: int
    extrinsic: RigidTransform
    theta_max: float = DEFAULT_THETA_MAX

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigError("principal point must lie inside the image")
        k = tuple(float(c) for c in self.k)
        if len(k) != 4:
            raise ConfigError("exactly 4 radial coefficients required")
        object.__setattr__(self, "k", k)
        if not (0 < self.theta_max <= math.pi):
            raise ConfigError("theta_max must lie in (0, pi]")
        theta = np.linspace(0.0, self.theta_max, _MONOTONICITY_SAMPLES)
        if np.any(np.diff(self._radial(theta)) <= 0):
            raise ConfigError(
                "radial polynomial is not strictly increasing on [0, theta_max]"
            )

    def _radial(self, theta):
        k1, k2, k3, k4 = self.k
        t2 = theta * theta
        return theta * (k1 + t2 * (k2 + t2 * (k3 + t2 * k4)))


def project(cam: FisheyeCamera, p_cam) -> tuple[float, float] | None:
    """Project one camera-frame point to pixel coordinates.

    Returns ``None`` when the point is out of view (incidence angle at or
    beyond ``theta_max``, or the pixel falls outside the image).
    """
    x, y, z = (float(v) for v in p_cam)
    if x == 0.0 and y == 0.0 and z == 0.0:
        raise DegenerateInput("point at the optical center cannot be projected")
    r_xy = math.hypot(x, y)
    theta = math.atan2(r_xy, z)
    if theta >= cam.theta_max:
        return None
    d = cam._radial(theta)
    if r_xy > 0.0:
        cos_phi, sin_phi = x / r_xy, y / r_xy
    else:
        cos_phi, sin_phi = 1.0, 0.0
    u = cam.fx * d * cos_phi + cam.cx
    v = cam.fy * d * sin_phi + cam.cy
    if 0.0 <= u < cam.width and 0.0 <= v < cam.height:
        return (u, v)
    return None


@dataclass(frozen=True, eq=False)
class CloudProjection:
    """Per-point projection of a cloud: parallel index/pixel arrays."""

    indices: np.ndarray  # (M,) indices into the input cloud
    pixels: np.ndarray  # (M, 2) float pixel coordinates (u, v)
    degenerate_count: int = 0

    def __len__(self) -> int:
        return len(self.indices)


def project_cloud(cam: FisheyeCamera, cloud: LabeledPointCloud) -> CloudProjection:
    """Project a base-frame cloud through the camera, culling out-of-view
    points.  Points at the exact optical center are skipped and counted."""
    if cloud.frame != BASE:
        raise FrameError(f"project_cloud expects a base-frame cloud, got {cloud.frame}")
    if len(cloud) == 0:
        return CloudProjection(np.zeros(0, dtype=np.intp), np.zeros((0, 2)))
    q = cam.extrinsic.apply(cloud.points)
    x, y, z = q[:, 0], q[:, 1], q[:, 2]
    degenerate = (x == 0.0) & (y == 0.0) & (z == 0.0)
    r_xy = np.hypot(x, y)
    theta = np.arctan2(r_xy, z)
    d = cam._radial(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_phi = np.where(r_xy > 0.0, x / np.where(r_xy > 0, r_xy, 1.0), 1.0)
        sin_phi = np.where(r_xy > 0.0, y / np.where(r_xy > 0, r_xy, 1.0), 0.0)
    u = cam.fx * d * cos_phi + cam.cx
    v = cam.fy * d * sin_phi + cam.cy
    keep = (
        ~degenerate
        & (theta < cam.theta_max)
        & (u >= 0.0)
        & (u < cam.width)
        & (v >= 0.0)
        & (v < cam.height)
    )
    indices = np.nonzero(keep)[0]
    pixels = np.column_stack([u[indices], v[indices]])
    return CloudProjection(indices, pixels, int(degenerate.sum()))
