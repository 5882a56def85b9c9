"""Robust polynomial baseline filter.

Clusters are parameterized along their principal direction and fitted with
per-degree RANSAC; the degree is chosen automatically by best consensus
with a parsimony tie-break.  Serves as the comparison method for the
medial-axis filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import DegenerateInput, NoConsensus

DEFAULT_INLIER_TOL = 0.15
DEFAULT_MAX_ITERS = 500
DEFAULT_DEGREES = (1, 2, 3)
DEFAULT_MIN_CONSENSUS = 0.2

_EIG_SEPARATION = 1e-9


def _cluster_points(cluster) -> np.ndarray:
    pts = getattr(cluster, "points", cluster)
    return np.asarray(pts, dtype=np.float64).reshape(-1, 3)


def principal_frame(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centroid and right-handed orthonormal basis (rows), first row the
    principal direction.  Eigenvector signs are fixed so the largest
    magnitude component is positive, keeping the frame deterministic."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    cov = centered.T @ centered / max(len(points), 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    if evals[0] <= 0 or (evals[0] - evals[1]) / evals[0] <= _EIG_SEPARATION:
        raise DegenerateInput("principal direction is not well separated")
    e0, e1 = evecs[:, 0], evecs[:, 1]
    for e in (e0, e1):
        if e[np.argmax(np.abs(e))] < 0:
            e *= -1.0
    e2 = np.cross(e0, e1)
    return centroid, np.stack([e0, e1, e2])


@dataclass(frozen=True, eq=False)
class PolynomialModel:
    """Curb curve y(t), z(t) in a local frame along the cluster axis.

    Coefficients are in ascending powers of t; ``basis`` rows are
    (param_axis, lateral, vertical) of the local frame.
    """

    degree: int
    coeffs_y: np.ndarray
    coeffs_z: np.ndarray
    param_axis: np.ndarray
    origin: np.ndarray
    basis: np.ndarray  # (3, 3) rows: axis, lateral, vertical

    def local(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.origin) @ self.basis.T

    def residuals(self, points: np.ndarray) -> np.ndarray:
        """Perpendicular distance to the curve in the local frame."""
        t, y, z = self.local(points).T
        ry = y - np.polynomial.polynomial.polyval(t, self.coeffs_y)
        rz = z - np.polynomial.polynomial.polyval(t, self.coeffs_z)
        return np.hypot(ry, rz)

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        y = np.polynomial.polynomial.polyval(t, self.coeffs_y)
        z = np.polynomial.polynomial.polyval(t, self.coeffs_z)
        local = np.stack([t, y, z], axis=1)
        return self.origin + local @ self.basis


def _fit_in_frame(t, y, z, degree: int) -> tuple[np.ndarray, np.ndarray]:
    design = np.vander(t, degree + 1, increasing=True)
    if np.linalg.matrix_rank(design) < degree + 1:
        raise DegenerateInput("rank-deficient design matrix")
    cy, *_ = np.linalg.lstsq(design, y, rcond=None)
    cz, *_ = np.linalg.lstsq(design, z, rcond=None)
    return cy, cz


def fit_polynomial_lsq(points, degree: int) -> PolynomialModel:
    """Least-squares polynomial fit in the cluster's own principal frame."""
    pts = _cluster_points(points)
    if degree < 1:
        raise DegenerateInput("degree must be >= 1")
    if len(pts) < degree + 1:
        raise DegenerateInput(f"{len(pts)} points cannot fix degree {degree}")
    origin, basis = principal_frame(pts)
    t, y, z = ((pts - origin) @ basis.T).T
    cy, cz = _fit_in_frame(t, y, z, degree)
    return PolynomialModel(degree, cy, cz, basis[0].copy(), origin, basis)


@dataclass(frozen=True, eq=False)
class RansacResult:
    inliers: np.ndarray
    model: PolynomialModel
    consensus: int
    seed: int

    def __iter__(self):
        return iter((self.inliers, self.model))

    def to_dict(self) -> dict:
        return {
            "degree": int(self.model.degree),
            "origin": [float(v) for v in self.model.origin],
            "axis": [float(v) for v in self.model.param_axis],
            "coeffs_y": [float(v) for v in self.model.coeffs_y],
            "coeffs_z": [float(v) for v in self.model.coeffs_z],
            "consensus": int(self.consensus),
            "seed": int(self.seed),
        }


def ransac_filter(
    cluster,
    inlier_tol: float = DEFAULT_INLIER_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    degrees=DEFAULT_DEGREES,
    min_consensus: float = DEFAULT_MIN_CONSENSUS,
    seed: int = 0,
) -> RansacResult:
    """Best-consensus polynomial over candidate degrees.

    The parameterizing frame comes from the whole cluster so every trial
    and the final refit score residuals consistently.  Within 1% of the
    best consensus, the lowest degree wins.  Raises ``NoConsensus`` when
    no degree reaches the minimum consensus fraction.
    """
    pts = _cluster_points(cluster)
    degrees = tuple(degrees)
    if len(pts) < max(degrees) + 1:
        raise DegenerateInput(f"{len(pts)} points cannot fix degree {max(degrees)}")
    origin, basis = principal_frame(pts)
    t, y, z = ((pts - origin) @ basis.T).T
    n = len(pts)
    need = max(int(ceil(min_consensus * n)), 2)

    streams = np.random.SeedSequence(seed).spawn(len(degrees))
    best: dict[int, tuple[int, np.ndarray]] = {}
    for degree, stream in zip(degrees, streams):
        rng = np.random.default_rng(stream)
        sample_size = degree + 1
        best_count = 0
        best_mask = None
        for _ in range(max_iters):
            idx = rng.choice(n, size=sample_size, replace=False)
            try:
                cy, cz = _fit_in_frame(t[idx], y[idx], z[idx], degree)
            except DegenerateInput:
                continue
            ry = y - np.polynomial.polynomial.polyval(t, cy)
            rz = z - np.polynomial.polynomial.polyval(t, cz)
            mask = np.hypot(ry, rz) <= inlier_tol
            count = int(mask.sum())
            if count > best_count:
                best_count = count
                best_mask = mask
                if count == n:
                    break
        if best_mask is not None:
            best[degree] = (best_count, best_mask)

    if not best or max(c for c, _ in best.values()) < need:
        raise NoConsensus(f"no degree reached {need} supporting points")

    top = max(c for c, _ in best.values())
    winner = min(d for d, (c, _) in best.items() if c >= top * 0.99)
    _, mask = best[winner]

    # refit on the consensus set in the fixed frame, then re-extract once
    cy, cz = _fit_in_frame(t[mask], y[mask], z[mask], winner)
    ry = y - np.polynomial.polynomial.polyval(t, cy)
    rz = z - np.polynomial.polynomial.polyval(t, cz)
    final_mask = np.hypot(ry, rz) <= inlier_tol
    if not final_mask.any():
        final_mask = mask
    model = PolynomialModel(winner, cy, cz, basis[0].copy(), origin, basis)
    return RansacResult(pts[final_mask], model, int(final_mask.sum()), int(seed))
