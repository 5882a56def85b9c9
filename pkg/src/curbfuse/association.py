"""Fusion of lidar geometry with camera semantics.

Lidar points are projected into each fisheye image; points whose pixel
lands within a +/-``bound`` window of a curb-labeled pixel are selected.
Selected points keep their original base-frame 3D coordinates (the pixel
only gates selection; depth is never reconstructed from the image).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import LabeledPointCloud
from .errors import ConfigError
from .fisheye import FisheyeCamera, project_cloud

PixelWindow = str  # "chebyshev" (square, the +/-bound reading) or "euclidean" (disc)


@dataclass(frozen=True, eq=False)
class SemanticMask:
    """Per-pixel class-id grid produced by an external segmentation model."""

    labels: np.ndarray  # (height, width) int
    curb_class: int

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ConfigError(f"mask must be a 2D grid, got shape {lab.shape}")
        object.__setattr__(self, "labels", lab.astype(np.int64, copy=False))
        self.labels.setflags(write=False)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def _window_structure(bound: int, window: PixelWindow) -> np.ndarray:
    size = 2 * bound + 1
    if window == "chebyshev":
        return np.ones((size, size), dtype=bool)
    if window == "euclidean":
        dv, du = np.mgrid[-bound : bound + 1, -bound : bound + 1]
        return du * du + dv * dv <= bound * bound
    raise ConfigError(f"unknown pixel window {window!r}")


def curb_pixel_mask_dilate(
    mask: SemanticMask, bound: int, window: PixelWindow = "chebyshev"
) -> np.ndarray:
    """Bit grid that is set wherever some pixel within the +/-bound window
    carries the curb class."""
    if bound < 0:
        raise ConfigError("bound must be non-negative")
    curb = mask.labels == mask.curb_class
    if bound == 0:
        return curb
    return ndimage.binary_dilation(curb, structure=_window_structure(bound, window))


@dataclass(frozen=True, eq=False)
class CurbCandidateCloud:
    """Base-frame curb candidates with the image pixel that selected each
    point and its index into the source cloud."""

    points: np.ndarray  # (M, 3) base-frame coordinates, bit-identical to input
    source_pixel: np.ndarray  # (M, 2) unrounded (u, v)
    indices: np.ndarray  # (M,) indices into the source cloud
    timestamp: float = 0.0

    def __post_init__(self):
        if not (len(self.points) == len(self.source_pixel) == len(self.indices)):
            raise ValueError("points, source_pixel and indices must align")

    def __len__(self) -> int:
        return len(self.points)


def _round_half_up(values: np.ndarray) -> np.ndarray:
    # nearest integer, half-pixel ties deterministically toward +inf
    return np.floor(values + 0.5).astype(np.int64)


def associate(
    cloud: LabeledPointCloud,
    cam: FisheyeCamera,
    mask: SemanticMask,
    bound: int,
    window: PixelWindow = "chebyshev",
) -> CurbCandidateCloud:
    """Select base-frame points whose projected pixel (rounded to nearest
    integer, ties toward +inf) hits the dilated curb bit grid."""
    if (mask.width, mask.height) != (cam.width, cam.height):
        raise ConfigError(
            f"mask is {mask.width}x{mask.height}, camera expects "
            f"{cam.width}x{cam.height}"
        )
    proj = project_cloud(cam, cloud)
    bits = curb_pixel_mask_dilate(mask, bound, window)
    u = _round_half_up(proj.pixels[:, 0]) if len(proj) else np.zeros(0, dtype=np.int64)
    v = _round_half_up(proj.pixels[:, 1]) if len(proj) else np.zeros(0, dtype=np.int64)
    in_grid = (u >= 0) & (u < mask.width) & (v >= 0) & (v < mask.height)
    hit = np.zeros(len(proj), dtype=bool)
    hit[in_grid] = bits[v[in_grid], u[in_grid]]
    sel = np.nonzero(hit)[0]
    indices = proj.indices[sel]
    return CurbCandidateCloud(
        points=cloud.points[indices],
        source_pixel=proj.pixels[sel],
        indices=indices,
        timestamp=cloud.timestamp,
    )


def associate_multi(
    cloud: LabeledPointCloud,
    cams: list[FisheyeCamera],
    masks: list[SemanticMask],
    bound: int,
    window: PixelWindow = "chebyshev",
) -> CurbCandidateCloud:
    """Per-camera association with duplicates (a point selected through two
    cameras) deduplicated by point index; the first camera wins."""
    if len(cams) != len(masks):
        raise ConfigError("one mask per camera required")
    seen: set[int] = set()
    parts: list[CurbCandidateCloud] = []
    for cam, mask in zip(cams, masks):
        cand = associate(cloud, cam, mask, bound, window)
        fresh = np.array([i not in seen for i in cand.indices], dtype=bool)
        seen.update(int(i) for i in cand.indices)
        parts.append(
            CurbCandidateCloud(
                cand.points[fresh],
                cand.source_pixel[fresh],
                cand.indices[fresh],
                cloud.timestamp,
            )
        )
    if not parts:
        empty = np.zeros((0, 3))
        return CurbCandidateCloud(
            empty, np.zeros((0, 2)), np.zeros(0, dtype=np.intp), cloud.timestamp
        )
    order = np.argsort(np.concatenate([p.indices for p in parts]), kind="stable")
    points = np.concatenate([p.points for p in parts])[order]
    pixels = np.concatenate([p.source_pixel for p in parts])[order]
    indices = np.concatenate([p.indices for p in parts])[order]
    return CurbCandidateCloud(points, pixels, indices, cloud.timestamp)
