import numpy as np
import pytest

from curbfuse import (
    DegenerateInput,
    NoConsensus,
    fit_polynomial_lsq,
    principal_frame,
    ransac_filter,
)


def _planted_cubic(rng, n=300, c3=0.02, z_c3=0.005):
    t = np.sort(rng.uniform(-6.0, 6.0, n))
    t = t - t.mean()
    # balance both coordinates against the linear moment so the principal
    # frame's first axis is exactly the t direction and the planted curve
    # stays polynomial in the fitted frame
    bal = (t**4).sum() / (t**2).sum()
    y = c3 * (t**3 - bal * t)
    z = z_c3 * (t**3 - bal * t)
    return np.column_stack([t, y, z])


def _plant_outliers(rng, pts, frac=0.3, lo=1.5, hi=4.0):
    m = int(len(pts) * frac / (1.0 - frac))
    t = rng.uniform(pts[:, 0].min(), pts[:, 0].max(), m)
    angle = rng.uniform(0, 2 * np.pi, m)
    radius = rng.uniform(lo, hi, m)
    out = np.column_stack(
        [t, radius * np.cos(angle), radius * np.sin(angle)]
    )
    return out


def test_principal_frame_is_orthonormal_and_axis_aligned():
    rng = np.random.default_rng(60)
    pts = _planted_cubic(rng)
    origin, basis = principal_frame(pts)
    assert np.allclose(basis @ basis.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(basis) > 0.99
    assert abs(basis[0] @ np.array([1.0, 0.0, 0.0])) > 0.95
    assert np.allclose(origin, pts.mean(axis=0))


def test_principal_frame_sign_deterministic():
    rng = np.random.default_rng(61)
    pts = rng.normal(size=(100, 3)) * np.array([5.0, 1.0, 0.2])
    _, b1 = principal_frame(pts)
    _, b2 = principal_frame(pts[::-1].copy())
    assert np.allclose(b1, b2, atol=1e-9)
    # the dominant component of each of the first two rows is positive
    for row in b1[:2]:
        assert row[np.argmax(np.abs(row))] > 0


def test_principal_frame_rejects_isotropic():
    # a perfect cube grid has a fully degenerate covariance spectrum
    g = np.linspace(-1, 1, 4)
    cube = np.array([[x, y, z] for x in g for y in g for z in g])
    with pytest.raises(DegenerateInput):
        principal_frame(cube)


def test_lsq_fit_recovers_planted_polynomial():
    rng = np.random.default_rng(62)
    pts = _planted_cubic(rng)
    model = fit_polynomial_lsq(pts, 3)
    assert model.degree == 3
    assert np.max(model.residuals(pts)) < 1e-9
    # evaluate() reproduces the curve on its own parameter range
    t = (pts - model.origin) @ model.param_axis
    curve = model.evaluate(np.sort(t))
    assert np.max(model.residuals(curve)) < 1e-9


def test_lsq_fit_validation():
    rng = np.random.default_rng(63)
    pts = _planted_cubic(rng, n=40)
    with pytest.raises(DegenerateInput):
        fit_polynomial_lsq(pts, 0)
    with pytest.raises(DegenerateInput):
        fit_polynomial_lsq(pts[:3], 3)


def test_ransac_recovers_planted_cubic_with_outliers():
    for seed in range(5):
        rng = np.random.default_rng(200 + seed)
        inliers = _planted_cubic(rng)
        outliers = _plant_outliers(rng, inliers)
        pts = np.concatenate([inliers, outliers])
        result = ransac_filter(pts, seed=seed)
        kept = {tuple(p) for p in result.inliers}
        assert kept == {tuple(p) for p in inliers}
        assert result.consensus == len(inliers)
        assert result.model.degree <= 3


def test_ransac_full_consensus_on_noiseless_data():
    rng = np.random.default_rng(64)
    pts = _planted_cubic(rng)
    result = ransac_filter(pts, seed=1)
    assert result.consensus == len(pts)
    assert result.model.degree <= 3


def test_ransac_parsimony_prefers_lowest_degree():
    rng = np.random.default_rng(65)
    t = np.sort(rng.uniform(-5, 5, 200))
    line = np.column_stack([t, 0.4 * t, -0.1 * t])
    result = ransac_filter(line, seed=2)
    assert result.model.degree == 1  # cubics fit a line too; lowest wins
    assert result.consensus == 200

    quad = np.column_stack([t, 0.05 * t**2, 0.02 * t])
    result2 = ransac_filter(quad, seed=2)
    assert result2.model.degree == 2
    assert result2.consensus == 200


def test_ransac_no_consensus_on_scatter():
    rng = np.random.default_rng(66)
    pts = rng.uniform(-5, 5, size=(60, 3))
    with pytest.raises(NoConsensus):
        ransac_filter(pts, inlier_tol=1e-6, seed=3)


def test_ransac_deterministic_per_seed():
    rng = np.random.default_rng(67)
    pts = np.concatenate(
        [_planted_cubic(rng, n=150), rng.uniform(-6, 6, size=(50, 3))]
    )
    r1 = ransac_filter(pts, seed=9)
    r2 = ransac_filter(pts, seed=9)
    assert np.array_equal(r1.inliers, r2.inliers)
    assert r1.consensus == r2.consensus
    assert r1.to_dict() == r2.to_dict()


def test_ransac_too_few_points():
    with pytest.raises(DegenerateInput):
        ransac_filter(np.zeros((3, 3)))


def test_result_unpacks():
    rng = np.random.default_rng(68)
    pts = _planted_cubic(rng, n=80)
    inliers, model = ransac_filter(pts, seed=4)
    assert len(inliers) == 80
    assert model.degree <= 3
