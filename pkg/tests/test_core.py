import numpy as np
import pytest
from helpers import random_rotation

from curbfuse import (
    BASE,
    WORLD,
    FrameError,
    FrameId,
    LabeledPointCloud,
    PoseLog,
    PoseGapError,
    RigidTransform,
    transform_cloud,
)
from curbfuse.core import IMU, compose


def _random_transform(rng, frame_from=BASE, frame_to=WORLD):
    return RigidTransform(
        random_rotation(rng), rng.normal(size=3), frame_from, frame_to
    )


def test_identity_is_noop():
    t = RigidTransform.identity(BASE)
    pts = np.arange(12.0).reshape(4, 3)
    assert np.array_equal(t.apply(pts), pts)


def test_apply_matches_matrix_form():
    rng = np.random.default_rng(0)
    for _ in range(20):
        t = _random_transform(rng)
        pts = rng.normal(size=(30, 3))
        want = (t.rotation @ pts.T).T + t.translation
        assert np.allclose(t.apply(pts), want, atol=1e-14)


def test_inverse_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        t = _random_transform(rng)
        pts = rng.normal(size=(50, 3)) * 10
        back = t.inverse().apply(t.apply(pts))
        assert np.allclose(back, pts, atol=1e-12)
        assert t.inverse().frame_from == WORLD
        assert t.inverse().frame_to == BASE


def test_compose_matches_sequential_application():
    rng = np.random.default_rng(2)
    t_wb = _random_transform(rng, BASE, WORLD)
    t_bi = _random_transform(rng, IMU, BASE)
    chained = compose(t_wb, t_bi)
    assert chained.frame_from == IMU
    assert chained.frame_to == WORLD
    pts = rng.normal(size=(40, 3))
    assert np.allclose(chained.apply(pts), t_wb.apply(t_bi.apply(pts)), atol=1e-13)


def test_compose_rejects_frame_mismatch():
    rng = np.random.default_rng(3)
    t_wb = _random_transform(rng, BASE, WORLD)
    with pytest.raises(FrameError):
        compose(t_wb, t_wb)


def test_rotation_validation():
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3) * 2.0, np.zeros(3), BASE, WORLD)
    reflection = np.diag([1.0, 1.0, -1.0])  # orthonormal but det -1
    with pytest.raises(ValueError):
        RigidTransform(reflection, np.zeros(3), BASE, WORLD)
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3), np.array([0.0, np.nan, 0.0]), BASE, WORLD)


def test_transform_arrays_are_write_protected():
    t = RigidTransform.identity(BASE)
    with pytest.raises(ValueError):
        t.rotation[0, 0] = 5.0
    with pytest.raises(ValueError):
        t.translation[0] = 5.0


def test_apply_rejects_bad_shapes():
    t = RigidTransform.identity(BASE)
    with pytest.raises(ValueError):
        t.apply(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        t.apply(np.array([[0.0, 0.0, np.inf]]))


def test_frame_id_camera_tags():
    assert FrameId.camera(0) == FrameId("camera0")
    assert FrameId.camera(1) != FrameId.camera(2)
    assert str(FrameId.camera(3)) == "camera3"


def test_transform_cloud_carries_labels_and_frame():
    rng = np.random.default_rng(4)
    t = _random_transform(rng, BASE, WORLD)
    labels = np.array([1, 2, 3], dtype=np.int64)
    cloud = LabeledPointCloud(rng.normal(size=(3, 3)), BASE, labels, timestamp=1.5)
    out = transform_cloud(cloud, t)
    assert out.frame == WORLD
    assert out.timestamp == 1.5
    assert np.array_equal(out.labels, labels)
    assert np.allclose(out.points, t.apply(cloud.points))
    with pytest.raises(FrameError):
        transform_cloud(out, t)  # already in the target frame


def test_labeled_cloud_validation():
    with pytest.raises(ValueError):
        LabeledPointCloud(np.zeros((3, 3)), BASE, labels=np.zeros(2, dtype=np.int64))


def test_pose_log_nearest_and_gap():
    rng = np.random.default_rng(5)
    stamps = np.array([0.0, 0.1, 0.2, 0.3])
    poses = [_random_transform(rng) for _ in stamps]
    log = PoseLog(stamps, poses)
    assert log.nearest(0.1) is poses[1]
    assert log.nearest(0.11) is poses[1]
    assert log.nearest(0.26) is poses[3]
    with pytest.raises(PoseGapError):
        log.nearest(0.42)  # 120 ms past the last record
    with pytest.raises(PoseGapError):
        PoseLog(np.zeros(0), []).nearest(0.0)


def test_pose_log_sorts_records():
    rng = np.random.default_rng(6)
    p0, p1 = _random_transform(rng), _random_transform(rng)
    log = PoseLog(np.array([0.2, 0.1]), [p0, p1])
    assert log.nearest(0.1) is p1
    assert log.nearest(0.2) is p0


def test_pose_log_validation():
    rng = np.random.default_rng(7)
    with pytest.raises(ValueError):
        PoseLog(np.array([0.0, 0.1]), [_random_transform(rng)])
    wrong_way = _random_transform(rng, WORLD, BASE)
    with pytest.raises(FrameError):
        PoseLog(np.array([0.0]), [wrong_way])
