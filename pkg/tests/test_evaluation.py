import numpy as np
import pytest

from curbfuse import (
    CurbCluster,
    CurbClusterSet,
    EmptyInput,
    FILTER_METHODS,
    GroundTruthCurb,
    associate_segments,
    chamfer,
    evaluate,
    normalized_l2,
    sample_gt_curve,
)
from curbfuse.evaluation import filter_seeds


def chamfer_ref(a: np.ndarray, b: np.ndarray) -> float:
    """O(n^2) oracle: squared nearest-neighbor means both ways."""
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())


def _cluster_set(*point_sets) -> CurbClusterSet:
    clusters = tuple(
        CurbCluster.build(i, pts) for i, pts in enumerate(point_sets)
    )
    return CurbClusterSet(clusters, next_id=len(clusters))


def _line_gt(segment_id=0, y=0.0, length=10.0) -> GroundTruthCurb:
    xs = np.arange(0.0, length + 0.5, 0.5)
    return GroundTruthCurb(
        segment_id, np.column_stack([xs, np.full_like(xs, y), np.zeros_like(xs)])
    )


def test_chamfer_matches_bruteforce_oracle():
    rng = np.random.default_rng(70)
    for _ in range(30):
        a = rng.normal(size=(int(rng.integers(1, 60)), 3))
        b = rng.normal(size=(int(rng.integers(1, 60)), 3))
        assert abs(chamfer(a, b) - chamfer_ref(a, b)) < 1e-9


def test_chamfer_symmetric_and_zero_on_identical():
    rng = np.random.default_rng(71)
    a = rng.normal(size=(40, 3))
    b = rng.normal(size=(25, 3))
    assert chamfer(a, b) == chamfer(b, a)
    assert chamfer(a, a) == 0.0


def test_chamfer_rejects_empty():
    with pytest.raises(EmptyInput):
        chamfer(np.zeros((0, 3)), np.zeros((3, 3)))
    with pytest.raises(EmptyInput):
        chamfer(np.zeros((3, 3)), np.zeros((0, 3)))


def test_sample_gt_curve_follows_straight_segment():
    gt = _line_gt()
    curve, fallback = sample_gt_curve(gt, degree=3, samples=500)
    assert not fallback
    assert len(curve) == 500
    assert np.max(np.abs(curve[:, 1])) < 1e-9
    assert abs(curve[:, 0].min() - 0.0) < 1e-9
    assert abs(curve[:, 0].max() - 10.0) < 1e-9


def test_sample_gt_curve_degenerate_fallback():
    # two coincident vertices cannot fix a frame: densify the raw polyline
    gt = GroundTruthCurb(0, np.array([[1.0, 2.0, 0.5], [1.0, 2.0, 0.5]]))
    curve, fallback = sample_gt_curve(gt, degree=3, samples=64)
    assert fallback
    assert len(curve) == 64
    assert np.allclose(curve, [1.0, 2.0, 0.5])


def test_normalized_l2_hand_value():
    gt = _line_gt()
    rng = np.random.default_rng(72)
    xs = rng.uniform(0.5, 9.5, 200)
    pts = np.column_stack([xs, np.full(200, 0.1), np.zeros(200)])
    # every point sits 0.1 m off the fitted line
    assert abs(normalized_l2(pts, gt) - 0.1) < 1e-3
    with pytest.raises(EmptyInput):
        normalized_l2(np.zeros((0, 3)), gt)


def test_associate_segments_planted():
    near0 = np.random.default_rng(73).normal(0, 0.05, size=(30, 3)) + [5.0, 0.1, 0]
    near1 = np.random.default_rng(74).normal(0, 0.05, size=(30, 3)) + [5.0, 7.1, 0]
    far = np.random.default_rng(75).normal(0, 0.05, size=(10, 3)) + [5.0, 30.0, 0]
    clusters = _cluster_set(near0, near1, far)
    gt = [_line_gt(0, y=0.0), _line_gt(1, y=7.0)]
    assoc = associate_segments(clusters, gt, d_assoc=5.0)
    assert assoc.mapping == {0: 0, 1: 1}
    assert assoc.false_positives == (2,)


def test_associate_segments_tie_goes_to_lower_id():
    mid = np.zeros((10, 3)) + [5.0, 3.5, 0.0]  # equidistant from y=0 and y=7
    clusters = _cluster_set(mid)
    gt = [_line_gt(0, y=0.0), _line_gt(1, y=7.0)]
    assoc = associate_segments(clusters, gt, d_assoc=5.0)
    assert assoc.mapping == {0: 0}
    # ordering of the gt list must not matter
    assoc2 = associate_segments(clusters, gt[::-1], d_assoc=5.0)
    assert assoc2.mapping == {0: 0}


def _noisy_line_cluster(rng, y, n=400, outliers=0):
    pts = np.column_stack(
        [
            rng.uniform(0, 10, n),
            rng.normal(y, 0.02, n),
            rng.uniform(0, 0.15, n),
        ]
    )
    if outliers:
        off = np.column_stack(
            [
                rng.uniform(0, 10, outliers),
                rng.normal(y + 3.0, 0.3, outliers),
                rng.uniform(0, 0.3, outliers),
            ]
        )
        pts = np.concatenate([pts, off])
    return pts


def test_evaluate_report_shape_and_totals():
    rng = np.random.default_rng(76)
    clusters = _cluster_set(
        _noisy_line_cluster(rng, 0.0, outliers=30),
        _noisy_line_cluster(rng, 7.0, outliers=30),
    )
    gt = [_line_gt(0, y=0.0), _line_gt(1, y=7.0)]
    report = evaluate(clusters, gt, seed=5)
    assert len(report.rows) == len(FILTER_METHODS) * 3  # 2 segments + total
    for method in FILTER_METHODS:
        rows = report.method_rows(method)
        total = report.total(method)
        assert {r.segment_id for r in rows} == {0, 1}
        assert total.detected_points == sum(r.detected_points for r in rows)
        assert abs(total.chamfer - np.mean([r.chamfer for r in rows])) < 1e-12
        assert abs(total.normalized_l2 - np.mean([r.normalized_l2 for r in rows])) < 1e-12
        assert report.unmatched_clusters[method] == 0
    none_total = report.total("none")
    assert none_total.detected_points == clusters.total_points()
    # the filters must not beat the planted truth: outliers off the line
    # inflate the unfiltered chamfer
    assert report.total("delaunay").chamfer < none_total.chamfer
    assert report.total("ransac").chamfer < none_total.chamfer


def test_evaluate_unmatched_segment_gets_empty_row():
    rng = np.random.default_rng(77)
    clusters = _cluster_set(_noisy_line_cluster(rng, 0.0))
    gt = [_line_gt(0, y=0.0), _line_gt(1, y=40.0)]  # nothing near segment 1
    report = evaluate(clusters, gt, seed=6)
    for method in FILTER_METHODS:
        empty = [r for r in report.method_rows(method) if r.segment_id == 1]
        assert len(empty) == 1
        assert empty[0].normalized_l2 is None
        assert empty[0].chamfer is None
        assert empty[0].detected_points == 0
        assert "EmptyInput" in empty[0].flags


def test_evaluate_with_no_clusters():
    report = evaluate(CurbClusterSet(), [_line_gt(0)], seed=7)
    for method in FILTER_METHODS:
        total = report.total(method)
        assert total.detected_points == 0
        assert total.chamfer is None
        assert "EmptyInput" in total.flags


def test_evaluate_deterministic():
    rng = np.random.default_rng(78)
    clusters = _cluster_set(_noisy_line_cluster(rng, 0.0, outliers=40))
    gt = [_line_gt(0, y=0.0)]
    r1 = evaluate(clusters, gt, seed=11)
    r2 = evaluate(clusters, gt, seed=11)
    assert r1.to_dict() == r2.to_dict()


def test_filter_seeds_shape_and_determinism():
    s1 = filter_seeds(42, FILTER_METHODS, 5)
    s2 = filter_seeds(42, FILTER_METHODS, 5)
    assert set(s1) == set(FILTER_METHODS)
    for method in FILTER_METHODS:
        assert len(s1[method]) == 5
        assert np.array_equal(s1[method], s2[method])
    # the per-method streams differ from one another
    assert not np.array_equal(s1["ransac"], s1["delaunay"])
    assert len(filter_seeds(42, FILTER_METHODS, 0)["none"]) == 1
