import math

import numpy as np
import pytest
from helpers import random_rotation

from curbfuse import (
    BASE,
    ConfigError,
    DegenerateInput,
    FisheyeCamera,
    FrameError,
    FrameId,
    LabeledPointCloud,
    RigidTransform,
    project_cloud,
)
from curbfuse.core import WORLD
from curbfuse.fisheye import project


def _camera(rng=None, **overrides) -> FisheyeCamera:
    if rng is None:
        extrinsic = RigidTransform(np.eye(3), np.zeros(3), BASE, FrameId.camera(0))
    else:
        extrinsic = RigidTransform(
            random_rotation(rng), rng.normal(size=3), BASE, FrameId.camera(0)
        )
    fields = dict(
        fx=300.0,
        fy=310.0,
        cx=400.0,
        cy=300.0,
        k=(1.0, -0.05, 0.005, -0.0002),
        width=800,
        height=600,
        extrinsic=extrinsic,
    )
    fields.update(overrides)
    return FisheyeCamera(**fields)


def _radial_ref(k, theta: float) -> float:
    k1, k2, k3, k4 = k
    return (
        k1 * theta + k2 * theta**3 + k3 * theta**5 + k4 * theta**7
    )


def test_project_matches_polynomial_by_hand():
    cam = _camera()
    for theta in (0.1, 0.5, 1.2):
        # ray in the x/z plane: phi = 0, so u - cx = fx * d(theta), v = cy
        p = (math.sin(theta), 0.0, math.cos(theta))
        u, v = project(cam, p)
        assert abs(u - (cam.fx * _radial_ref(cam.k, theta) + cam.cx)) < 1e-12
        assert abs(v - cam.cy) < 1e-12


def test_project_is_scale_invariant():
    cam = _camera()
    uv1 = project(cam, (0.3, -0.2, 1.0))
    uv2 = project(cam, (3.0, -2.0, 10.0))
    assert np.allclose(uv1, uv2, atol=1e-12)


def test_project_on_axis_hits_principal_point():
    cam = _camera()
    assert project(cam, (0.0, 0.0, 5.0)) == (cam.cx, cam.cy)


def test_project_gates():
    cam = _camera()
    with pytest.raises(DegenerateInput):
        project(cam, (0.0, 0.0, 0.0))
    assert project(cam, (0.0, 0.0, -1.0)) is None  # theta = pi >= theta_max
    # incidence right at theta_max is culled
    t = cam.theta_max
    assert project(cam, (math.sin(t), 0.0, math.cos(t))) is None
    # steep ray whose pixel lands outside the 800x600 image
    theta = 1.7
    assert cam.theta_max > theta
    assert cam.fx * cam._radial(theta) + cam.cx > cam.width
    assert project(cam, (math.sin(theta), 0.0, math.cos(theta))) is None


def test_project_cloud_matches_scalar_reference():
    rng = np.random.default_rng(21)
    cam = _camera(rng)
    pts = rng.normal(size=(500, 3)) * 4.0
    cloud = LabeledPointCloud(pts, BASE)
    proj = project_cloud(cam, cloud)

    want = {}
    for i, p_base in enumerate(pts):
        p_cam = cam.extrinsic.apply(p_base.reshape(1, 3))[0]
        uv = project(cam, p_cam)
        if uv is not None:
            want[i] = uv
    assert list(proj.indices) == sorted(want)
    for idx, uv in zip(proj.indices, proj.pixels):
        assert np.allclose(uv, want[idx], atol=1e-9)


def test_project_cloud_counts_optical_center_hits():
    cam = _camera()  # identity extrinsic: the optical center is the origin
    pts = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 2.0], [0.0, 0.0, 0.0]])
    proj = project_cloud(cam, LabeledPointCloud(pts, BASE))
    assert proj.degenerate_count == 2
    assert list(proj.indices) == [1]


def test_project_cloud_requires_base_frame():
    cam = _camera()
    cloud = LabeledPointCloud(np.ones((2, 3)), WORLD)
    with pytest.raises(FrameError):
        project_cloud(cam, cloud)


def test_project_cloud_empty():
    cam = _camera()
    proj = project_cloud(cam, LabeledPointCloud(np.zeros((0, 3)), BASE))
    assert len(proj) == 0 and proj.degenerate_count == 0


def test_camera_validation():
    with pytest.raises(ConfigError):
        _camera(fx=-1.0)
    with pytest.raises(ConfigError):
        _camera(cx=900.0)  # principal point outside the image
    with pytest.raises(ConfigError):
        _camera(k=(1.0, 0.0, 0.0))
    with pytest.raises(ConfigError):
        _camera(theta_max=4.0)
    # d(theta) = theta - 5 theta^3 turns over inside the field of view
    with pytest.raises(ConfigError):
        _camera(k=(1.0, -5.0, 0.0, 0.0))


def test_radial_monotone_on_default_coefficients():
    cam = _camera()
    theta = np.linspace(0.0, cam.theta_max, 2000)
    d = cam._radial(theta)
    assert np.all(np.diff(d) > 0)
