import math

import numpy as np
import pytest

from curbfuse import (
    BASE,
    ConfigError,
    FrameId,
    LabeledPointCloud,
    RigidTransform,
    SemanticMask,
    associate,
    associate_multi,
    curb_pixel_mask_dilate,
)
from curbfuse.association import _round_half_up
from curbfuse.fisheye import FisheyeCamera, project

CURB = 3


def _camera(k_index: int = 0) -> FisheyeCamera:
    return FisheyeCamera(
        fx=120.0,
        fy=120.0,
        cx=80.0,
        cy=60.0,
        k=(1.0, -0.05, 0.005, -0.0002),
        width=160,
        height=120,
        extrinsic=RigidTransform(np.eye(3), np.zeros(3), BASE, FrameId.camera(k_index)),
    )


def _random_mask(rng, cam, n_curb: int = 120) -> SemanticMask:
    labels = np.zeros((cam.height, cam.width), dtype=np.int64)
    ys = rng.integers(0, cam.height, n_curb)
    xs = rng.integers(0, cam.width, n_curb)
    labels[ys, xs] = CURB
    labels[rng.integers(0, cam.height, 40), rng.integers(0, cam.width, 40)] = 1
    return SemanticMask(labels, CURB)


def _forward_cloud(rng, n: int) -> LabeledPointCloud:
    # points in front of the camera, most of them projecting in-image
    pts = np.column_stack(
        [
            rng.uniform(-3.0, 3.0, n),
            rng.uniform(-2.5, 2.5, n),
            rng.uniform(0.5, 9.0, n),
        ]
    )
    return LabeledPointCloud(pts, BASE, timestamp=0.25)


def brute_candidate_indices(cloud, cam, mask, bound, window) -> list[int]:
    """Per-point oracle: project with the scalar model, round, and scan
    every curb pixel for one within the bound."""
    curb_vu = np.argwhere(mask.labels == mask.curb_class)
    out = []
    for i, p in enumerate(cloud.points):
        uv = project(cam, cam.extrinsic.apply(p.reshape(1, 3))[0])
        if uv is None:
            continue
        u = math.floor(uv[0] + 0.5)
        v = math.floor(uv[1] + 0.5)
        if not (0 <= u < mask.width and 0 <= v < mask.height):
            continue
        dv = np.abs(curb_vu[:, 0] - v)
        du = np.abs(curb_vu[:, 1] - u)
        if window == "chebyshev":
            ok = np.any(np.maximum(du, dv) <= bound)
        else:
            ok = np.any(du * du + dv * dv <= bound * bound)
        if ok:
            out.append(i)
    return out


@pytest.mark.parametrize("window", ["chebyshev", "euclidean"])
@pytest.mark.parametrize("bound", [0, 1, 2, 3, 5])
def test_associate_matches_bruteforce(bound, window):
    rng = np.random.default_rng(100 + bound)
    cam = _camera()
    mask = _random_mask(rng, cam)
    cloud = _forward_cloud(rng, 400)
    cand = associate(cloud, cam, mask, bound, window)
    want = brute_candidate_indices(cloud, cam, mask, bound, window)
    assert list(cand.indices) == want
    assert len(want) > 0  # the construction must actually exercise the rule


def test_candidate_points_are_bit_identical_to_input():
    rng = np.random.default_rng(110)
    cam = _camera()
    mask = _random_mask(rng, cam)
    cloud = _forward_cloud(rng, 300)
    cand = associate(cloud, cam, mask, 2)
    assert np.array_equal(cand.points, cloud.points[cand.indices])
    assert cand.timestamp == cloud.timestamp
    assert len(cand.source_pixel) == len(cand.points)


def test_round_half_up_ties():
    vals = np.array([-1.5, -0.5, 0.5, 1.5, 2.49999, 2.5])
    assert list(_round_half_up(vals)) == [-1, 0, 1, 2, 2, 3]


def test_dilation_shapes():
    labels = np.zeros((7, 7), dtype=np.int64)
    labels[3, 3] = CURB
    mask = SemanticMask(labels, CURB)
    assert curb_pixel_mask_dilate(mask, 0).sum() == 1
    assert curb_pixel_mask_dilate(mask, 1, "chebyshev").sum() == 9
    assert curb_pixel_mask_dilate(mask, 1, "euclidean").sum() == 5  # plus shape
    assert curb_pixel_mask_dilate(mask, 2, "chebyshev").sum() == 25
    assert curb_pixel_mask_dilate(mask, 2, "euclidean").sum() == 13
    with pytest.raises(ConfigError):
        curb_pixel_mask_dilate(mask, -1)
    with pytest.raises(ConfigError):
        curb_pixel_mask_dilate(mask, 1, "manhattan")


def test_bound_zero_requires_exact_hit():
    cam = _camera()
    labels = np.zeros((cam.height, cam.width), dtype=np.int64)
    labels[60, 80] = CURB  # the principal point pixel
    mask = SemanticMask(labels, CURB)
    on_axis = LabeledPointCloud(np.array([[0.0, 0.0, 4.0]]), BASE)
    assert len(associate(on_axis, cam, mask, 0)) == 1
    labels2 = np.zeros_like(labels)
    labels2[59, 81] = CURB  # diagonal neighbor
    mask2 = SemanticMask(labels2, CURB)
    assert len(associate(on_axis, cam, mask2, 0)) == 0
    assert len(associate(on_axis, cam, mask2, 1)) == 1


def test_associate_multi_dedup_first_camera_wins():
    rng = np.random.default_rng(111)
    cam0, cam1 = _camera(0), _camera(1)
    mask = _random_mask(rng, cam0)
    cloud = _forward_cloud(rng, 200)
    single = associate(cloud, cam0, mask, 2)
    both = associate_multi(cloud, [cam0, cam1], [mask, mask], 2)
    # identical cameras: the union adds nothing and indices stay unique
    assert list(both.indices) == list(single.indices)
    assert len(np.unique(both.indices)) == len(both.indices)
    assert np.array_equal(both.source_pixel, single.source_pixel)


def test_associate_multi_merges_disjoint_views():
    rng = np.random.default_rng(112)
    cam0, cam1 = _camera(0), _camera(1)
    full = _random_mask(rng, cam0)
    empty = SemanticMask(np.zeros((cam0.height, cam0.width), dtype=np.int64), CURB)
    cloud = _forward_cloud(rng, 200)
    only0 = associate_multi(cloud, [cam0, cam1], [full, empty], 2)
    only1 = associate_multi(cloud, [cam0, cam1], [empty, full], 2)
    assert list(only0.indices) == list(only1.indices)
    with pytest.raises(ConfigError):
        associate_multi(cloud, [cam0, cam1], [full], 2)


def test_mask_dimension_mismatch():
    cam = _camera()
    wrong = SemanticMask(np.zeros((10, 10), dtype=np.int64), CURB)
    cloud = _forward_cloud(np.random.default_rng(113), 10)
    with pytest.raises(ConfigError):
        associate(cloud, cam, wrong, 1)


def test_semantic_mask_write_protected():
    mask = SemanticMask(np.zeros((4, 4), dtype=np.int64), CURB)
    with pytest.raises(ValueError):
        mask.labels[0, 0] = 1
