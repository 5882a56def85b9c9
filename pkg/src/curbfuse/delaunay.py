"""Delaunay/Voronoi outlier filter.

A cluster is tetrahedralized (incremental Bowyer-Watson over a super
tetrahedron, sign-exact predicates), the Voronoi dual sub-graph is formed
by discarding tetrahedra with large circumradii, the medial axis is the
shortest Euclidean path through that sub-graph, and points close to the
axis survive.  Degeneracies fall back to pass-through with a flag rather
than aborting the pipeline.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DegenerateInput, EmptySubgraph, NoPath
from .predicates import EPS_GEOM, insphere, orient3d

_SUPER_SCALE = 1e3
_SUPER_RETRIES = 3
_EXACT_DIAMETER_LIMIT = 5000

DEFAULT_RADIUS_ALPHA = 2.0
DEFAULT_AXIS_TOLERANCE = 0.3


class _MeshFailure(Exception):
    """Internal: construction became inconsistent; retry with a larger
    super tetrahedron."""


@dataclass(frozen=True, eq=False)
class TetraMesh:
    """Tetrahedralization of a point set with face adjacency.

    ``tets`` rows index into ``points`` and are positively oriented;
    ``face_adjacency`` holds pairs of tet indices sharing a triangular
    face.
    """

    points: np.ndarray  # (N, 3)
    tets: np.ndarray  # (M, 4) int
    face_adjacency: np.ndarray  # (K, 2) int


@dataclass(frozen=True, eq=False)
class RadiusPolicy:
    """Circumradius filter: ``absolute`` keeps radius <= value, ``adaptive``
    keeps radius <= value * median(all radii)."""

    kind: str
    value: float

    @staticmethod
    def absolute(r_max: float) -> "RadiusPolicy":
        return RadiusPolicy("absolute", float(r_max))

    @staticmethod
    def adaptive(alpha: float = DEFAULT_RADIUS_ALPHA) -> "RadiusPolicy":
        return RadiusPolicy("adaptive", float(alpha))

    def threshold(self, radii: np.ndarray) -> float:
        if self.kind == "absolute":
            return self.value
        if self.kind == "adaptive":
            return self.value * float(np.median(radii))
        raise ValueError(f"unknown radius policy {self.kind!r}")


@dataclass(frozen=True, eq=False)
class VoronoiSubgraph:
    """Circumcenters of the kept tetrahedra, linked by face adjacency."""

    centers: np.ndarray  # (V, 3)
    radii: np.ndarray  # (V,)
    tet_indices: np.ndarray  # (V,) into the source mesh
    edges: np.ndarray  # (E, 2) vertex index pairs

    def __len__(self) -> int:
        return len(self.centers)


@dataclass(frozen=True, eq=False)
class MedialAxis:
    """Shortest-path polyline of circumcenters through the sub-graph."""

    polyline: np.ndarray  # (P, 3)
    vertex_indices: np.ndarray  # (P,) sub-graph vertex ids


def circumcenter(p0, p1, p2, p3) -> tuple[np.ndarray, float]:
    """Center and radius of the sphere through four non-coplanar points,
    solved from the linear system equating squared distances."""
    pts = np.asarray([p0, p1, p2, p3], dtype=np.float64)
    a = 2.0 * (pts[1:] - pts[0])
    sq = (pts * pts).sum(axis=1)
    b = sq[1:] - sq[0]
    det = np.linalg.det(a)
    if abs(det) <= EPS_GEOM:
        raise DegenerateInput("coplanar points have no circumsphere")
    center = np.linalg.solve(a, b)
    radius = float(np.linalg.norm(pts[0] - center))
    return center, radius


def _circumspheres(points: np.ndarray, tets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized circumcenters/radii; near-singular tets get radius inf."""
    p = points[tets]  # (M, 4, 3)
    a = 2.0 * (p[:, 1:, :] - p[:, :1, :])  # (M, 3, 3)
    sq = (p * p).sum(axis=2)
    b = sq[:, 1:] - sq[:, :1]
    det = np.linalg.det(a)
    ok = np.abs(det) > EPS_GEOM
    centers = np.full((len(tets), 3), np.nan)
    radii = np.full(len(tets), np.inf)
    if ok.any():
        centers[ok] = np.linalg.solve(a[ok], b[ok][..., None])[..., 0]
        radii[ok] = np.linalg.norm(p[ok, 0, :] - centers[ok], axis=1)
    return centers, radii


def _super_vertices(pts: np.ndarray, scale: float) -> np.ndarray:
    center = pts.mean(axis=0)
    radius = float(np.linalg.norm(pts - center, axis=1).max())
    radius = max(radius, 1.0)
    # regular tetrahedron with insphere radius scale*radius (circumradius 3x)
    circum = 3.0 * scale * radius
    dirs = np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=np.float64
    ) / np.sqrt(3.0)
    return center + circum * dirs


def _tet_faces(verts):
    return (
        (verts[1], verts[2], verts[3]),
        (verts[0], verts[2], verts[3]),
        (verts[0], verts[1], verts[3]),
        (verts[0], verts[1], verts[2]),
    )


def _face_key(a, b, c):
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
        if a > b:
            a, b = b, a
    return (a, b, c)


class _Builder:
    """One Bowyer-Watson construction attempt over a fixed super tet."""

    def __init__(self, coords: list[tuple[float, float, float]], n_real: int):
        self.coords = coords
        self.n_real = n_real
        self.tets: dict[int, tuple[int, int, int, int]] = {}
        self.faces: dict[tuple[int, int, int], list[int]] = {}
        self.next_id = 0
        self.last_tet = None
        s = (n_real, n_real + 1, n_real + 2, n_real + 3)
        base = s if orient3d(*(coords[v] for v in s)) > 0 else (s[1], s[0], s[2], s[3])
        self._add_tet(base)

    def _add_tet(self, verts) -> int:
        tid = self.next_id
        self.next_id += 1
        self.tets[tid] = verts
        for f in _tet_faces(verts):
            self.faces.setdefault(_face_key(*f), []).append(tid)
        self.last_tet = tid
        return tid

    def _remove_tet(self, tid: int) -> None:
        for f in _tet_faces(self.tets[tid]):
            key = _face_key(*f)
            owners = self.faces[key]
            owners.remove(tid)
            if not owners:
                del self.faces[key]
        del self.tets[tid]

    def _neighbor(self, tid: int, key) -> int | None:
        for owner in self.faces.get(key, ()):
            if owner != tid:
                return owner
        return None

    def _contains(self, tid: int, p) -> bool:
        verts = self.tets[tid]
        coords = self.coords
        for vi in range(4):
            face = tuple(verts[j] for j in range(4) if j != vi)
            s_opp = 1.0 if vi in (1, 3) else -1.0
            s_p = orient3d(coords[face[0]], coords[face[1]], coords[face[2]], p)
            if s_p * s_opp < 0:
                return False
        return True

    def _locate(self, p) -> int:
        cur = self.last_tet if self.last_tet in self.tets else next(iter(self.tets))
        coords = self.coords
        cap = 4 * len(self.tets) + 64
        for _ in range(cap):
            verts = self.tets[cur]
            moved = False
            for vi in range(4):
                face = tuple(verts[j] for j in range(4) if j != vi)
                s_opp = 1.0 if vi in (1, 3) else -1.0
                s_p = orient3d(coords[face[0]], coords[face[1]], coords[face[2]], p)
                if s_p * s_opp < 0:
                    nxt = self._neighbor(cur, _face_key(*face))
                    if nxt is None:
                        raise _MeshFailure("walk left the super tetrahedron")
                    cur = nxt
                    moved = True
                    break
            if not moved:
                return cur
        for tid in self.tets:  # degenerate walk cycle: exact linear fallback
            if self._contains(tid, p):
                return tid
        raise _MeshFailure("point not located in any tetrahedron")

    def _in_conflict(self, tid: int, p) -> bool:
        a, b, c, d = (self.coords[v] for v in self.tets[tid])
        return insphere(a, b, c, d, p) > 0

    def insert(self, idx: int) -> None:
        p = self.coords[idx]
        seed = self._locate(p)
        if not self._in_conflict(seed, p):
            if any(self.coords[v] == p for v in self.tets[seed]):
                return  # exact duplicate
            raise _MeshFailure("containing tetrahedron not in conflict")
        cavity = {seed}
        stack = [seed]
        boundary = []  # (face key, outward face as stored)
        while stack:
            tid = stack.pop()
            for face in _tet_faces(self.tets[tid]):
                key = _face_key(*face)
                nb = self._neighbor(tid, key)
                if nb is None:
                    boundary.append(face)
                elif nb not in cavity:
                    if self._in_conflict(nb, p):
                        cavity.add(nb)
                        stack.append(nb)
                    else:
                        boundary.append(face)
        for tid in cavity:
            self._remove_tet(tid)
        coords = self.coords
        for (u, v, w) in boundary:
            s = orient3d(coords[u], coords[v], coords[w], p)
            if s == 0:
                raise _MeshFailure("new tetrahedron is flat")
            verts = (u, v, w, idx) if s > 0 else (u, w, v, idx)
            self._add_tet(verts)

    def finish(self) -> tuple[list[tuple[int, int, int, int]], np.ndarray]:
        kept = [t for t in self.tets.values() if max(t) < self.n_real]
        return kept, np.asarray(self.coords[: self.n_real])


def _check_hull_coverage(points: np.ndarray, kept: list, n_expected_boundary_only=True) -> bool:
    """Every face owned by a single tet must support the whole point set
    (no point strictly beyond it); otherwise the Bowyer-Watson result is
    missing tetrahedra near the hull and needs a larger super tet."""
    owners: dict[tuple[int, int, int], list[int]] = {}
    for ti, verts in enumerate(kept):
        for f in _tet_faces(verts):
            owners.setdefault(_face_key(*f), []).append(ti)
    scale = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0))) or 1.0
    tol = 1e-7 * scale
    for key, tids in owners.items():
        if len(tids) != 1:
            continue
        verts = kept[tids[0]]
        opp = next(v for v in verts if v not in key)
        a, b, c = (points[k] for k in key)
        normal = np.cross(b - a, c - a)
        nn = np.linalg.norm(normal)
        if nn == 0:
            return False
        normal = normal / nn
        if np.dot(normal, points[opp] - a) > 0:
            normal = -normal  # outward: inner vertex on the negative side
        if np.max((points - a) @ normal) > tol:
            return False
    return True


def tetrahedralize(points) -> TetraMesh:
    """Delaunay tetrahedralization by incremental insertion.

    Insertion runs in input order; cospherical ties resolve by strict
    conflict testing, so earlier-inserted points win (a deterministic
    index-order perturbation).  Raises ``DegenerateInput`` for fewer than
    5 points or an (almost) coplanar set.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 5:
        raise DegenerateInput("tetrahedralization needs at least 5 points")
    unique, first_index = np.unique(pts, axis=0, return_index=True)
    if len(unique) < 5:
        raise DegenerateInput("fewer than 5 distinct points")
    centered = unique - unique.mean(axis=0)
    if np.linalg.svd(centered, compute_uv=False)[2] <= EPS_GEOM:
        raise DegenerateInput("points are coplanar within tolerance")

    scale = _SUPER_SCALE
    failure = "construction failed"
    for _ in range(_SUPER_RETRIES):
        coords = [tuple(row) for row in unique]
        coords.extend(tuple(row) for row in _super_vertices(unique, scale))
        builder = _Builder(coords, len(unique))
        try:
            for i in range(len(unique)):
                builder.insert(i)
            kept, _ = builder.finish()
            if kept and _check_hull_coverage(unique, kept):
                remap = first_index  # unique row -> original point index
                tets = np.asarray(
                    [[remap[v] for v in verts] for verts in kept], dtype=np.intp
                )
                return TetraMesh(pts, tets, _face_adjacency(tets))
            failure = "hull coverage check failed"
        except _MeshFailure as exc:
            failure = str(exc)
        scale *= 100.0
    raise DegenerateInput(f"tetrahedralization did not stabilize: {failure}")


def _face_adjacency(tets: np.ndarray) -> np.ndarray:
    owners: dict[tuple[int, int, int], list[int]] = {}
    for ti, verts in enumerate(tets):
        for f in combinations(sorted(map(int, verts)), 3):
            owners.setdefault(f, []).append(ti)
    pairs = [tuple(t) for t in owners.values() if len(t) == 2]
    if not pairs:
        return np.zeros((0, 2), dtype=np.intp)
    return np.asarray(sorted(pairs), dtype=np.intp)


def voronoi_subgraph(mesh: TetraMesh, policy: RadiusPolicy) -> VoronoiSubgraph:
    """Dual sub-graph of the mesh restricted to small-circumradius tets."""
    centers, radii = _circumspheres(mesh.points, mesh.tets)
    threshold = policy.threshold(radii)
    keep = radii <= threshold
    if not keep.any():
        raise EmptySubgraph(
            f"radius filter at {threshold:.3g} removed all {len(radii)} tetrahedra"
        )
    kept_idx = np.nonzero(keep)[0]
    new_index = np.full(len(radii), -1, dtype=np.intp)
    new_index[kept_idx] = np.arange(len(kept_idx))
    edges = [
        (new_index[a], new_index[b])
        for a, b in mesh.face_adjacency
        if keep[a] and keep[b]
    ]
    edges_arr = (
        np.asarray(edges, dtype=np.intp) if edges else np.zeros((0, 2), dtype=np.intp)
    )
    return VoronoiSubgraph(centers[kept_idx], radii[kept_idx], kept_idx, edges_arr)


def _dijkstra(n: int, adjacency, source: int, target: int):
    dist = np.full(n, np.inf)
    prev = np.full(n, -1, dtype=np.intp)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for v, w in adjacency[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, prev


def medial_axis(g: VoronoiSubgraph, start, end) -> MedialAxis:
    """Shortest Euclidean path through the sub-graph between the vertices
    nearest to ``start`` and ``end`` (ties to the lower vertex index)."""
    if len(g) == 0:
        raise EmptySubgraph("empty sub-graph has no medial axis")
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    source = int(np.argmin(np.linalg.norm(g.centers - start, axis=1)))
    target = int(np.argmin(np.linalg.norm(g.centers - end, axis=1)))
    if source == target:
        idx = np.asarray([source], dtype=np.intp)
        return MedialAxis(g.centers[idx], idx)
    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(len(g))]
    for a, b in g.edges:
        w = float(np.linalg.norm(g.centers[a] - g.centers[b]))
        adjacency[a].append((int(b), w))
        adjacency[b].append((int(a), w))
    for nbrs in adjacency:
        nbrs.sort()
    dist, prev = _dijkstra(len(g), adjacency, source, target)
    if not np.isfinite(dist[target]):
        raise NoPath(f"vertices {source} and {target} are disconnected")
    path = [target]
    while path[-1] != source:
        path.append(int(prev[path[-1]]))
    path.reverse()
    idx = np.asarray(path, dtype=np.intp)
    return MedialAxis(g.centers[idx], idx)


def farthest_pair(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The two points realizing the diameter; exact for small sets, via the
    convex hull above ``_EXACT_DIAMETER_LIMIT`` points."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) > _EXACT_DIAMETER_LIMIT:
        try:
            from scipy.spatial import ConvexHull

            pts = pts[ConvexHull(pts).vertices]
        except Exception:
            pass  # degenerate hull: fall through to the exact scan
    best = (0, 0)
    best_d = -1.0
    chunk = 512
    for lo in range(0, len(pts), chunk):
        block = pts[lo : lo + chunk]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        i, j = np.unravel_index(np.argmax(d2), d2.shape)
        if d2[i, j] > best_d:
            best_d = float(d2[i, j])
            best = (lo + int(i), int(j))
    return pts[best[0]].copy(), pts[best[1]].copy()


def polyline_distances(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Min distance from each point to the polyline (point-to-segment)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    line = np.asarray(polyline, dtype=np.float64).reshape(-1, 3)
    if len(line) == 1:
        return np.linalg.norm(pts - line[0], axis=1)
    a = line[:-1]
    d = line[1:] - a
    dd = (d * d).sum(axis=1)
    dd_safe = np.where(dd > 0, dd, 1.0)
    out = np.full(len(pts), np.inf)
    chunk = 2048
    for lo in range(0, len(pts), chunk):
        block = pts[lo : lo + chunk]
        ap = block[:, None, :] - a[None, :, :]  # (B, S, 3)
        t = np.clip((ap * d[None, :, :]).sum(axis=2) / dd_safe[None, :], 0.0, 1.0)
        closest = a[None, :, :] + t[..., None] * d[None, :, :]
        dists = np.linalg.norm(block[:, None, :] - closest, axis=2)
        out[lo : lo + chunk] = dists.min(axis=1)
    return out


@dataclass(frozen=True, eq=False)
class FilterResult:
    """Inlier subset plus degeneracy flags and optional debug geometry."""

    points: np.ndarray
    flags: tuple[str, ...] = ()
    mesh: TetraMesh | None = None
    subgraph: VoronoiSubgraph | None = None
    axis: MedialAxis | None = None

    @property
    def degenerate(self) -> bool:
        return bool(self.flags)


def _largest_component(g: VoronoiSubgraph) -> np.ndarray:
    parent = np.arange(len(g))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in g.edges:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(len(g))])
    counts = np.bincount(roots)
    return np.nonzero(roots == int(np.argmax(counts)))[0]


def delaunay_filter(
    cluster_points,
    radius_policy: RadiusPolicy | None = None,
    axis_tolerance: float = DEFAULT_AXIS_TOLERANCE,
    keep_debug: bool = False,
) -> FilterResult:
    """Full filter pipeline for one cluster.

    Degenerate inputs (too few points, coplanar, unstable construction) and
    an emptied sub-graph pass every point through with a flag; a
    disconnected sub-graph falls back to a partial axis inside the largest
    connected component between its two farthest vertices.
    """
    policy = radius_policy or RadiusPolicy.adaptive()
    pts = np.asarray(cluster_points, dtype=np.float64).reshape(-1, 3)
    try:
        mesh = tetrahedralize(pts)
    except DegenerateInput:
        return FilterResult(pts, ("degenerate_passthrough",))
    try:
        graph = voronoi_subgraph(mesh, policy)
    except EmptySubgraph:
        return FilterResult(pts, ("empty_subgraph_passthrough",))
    start, end = farthest_pair(pts)
    flags: tuple[str, ...] = ()
    try:
        axis = medial_axis(graph, start, end)
    except NoPath:
        comp = _largest_component(graph)
        sub_centers = graph.centers[comp]
        c_start, c_end = farthest_pair(sub_centers)
        keep_edges = np.isin(graph.edges, comp).all(axis=1)
        relabel = np.full(len(graph), -1, dtype=np.intp)
        relabel[comp] = np.arange(len(comp))
        component = VoronoiSubgraph(
            sub_centers,
            graph.radii[comp],
            graph.tet_indices[comp],
            relabel[graph.edges[keep_edges]]
            if keep_edges.any()
            else np.zeros((0, 2), dtype=np.intp),
        )
        axis = medial_axis(component, c_start, c_end)
        flags = ("partial_axis",)
    inliers = pts[polyline_distances(pts, axis.polyline) <= axis_tolerance]
    if keep_debug:
        return FilterResult(inliers, flags, mesh, graph, axis)
    return FilterResult(inliers, flags)
