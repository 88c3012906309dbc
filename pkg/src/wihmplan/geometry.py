"""Convex-polygon primitives, prismatic object models, and surface unfolding.

All values are immutable after construction and safe to share across
concurrent planner instances; every operation here is a pure function.
Units are meters and radians throughout.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGeometryError, InvalidModelError, UngraspableObjectError

# Tolerance for internal invariant checks (double precision headroom at
# centimeter scale) vs. user-facing feasibility decisions.
GEOM_TOL = 1e-9
FEAS_TOL = 1e-6

_DEDUPE_TOL = 1e-12
_COLLINEAR_TOL = 1e-12


def _rot2(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


class ConvexPolygon2:
    """Convex polygon stored counterclockwise with collinear vertices removed.

    Construction canonicalizes the vertex list (orientation, duplicate and
    collinear removal) and rejects non-convex or degenerate input.
    """

    __slots__ = ("vertices", "_normals", "_offsets", "_seg_starts", "_seg_dirs", "_seg_len2")

    def __init__(self, vertices) -> None:
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidGeometryError(f"expected an (n, 2) vertex array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidGeometryError("polygon vertices must be finite")
        pts = _dedupe(pts)
        if pts.shape[0] < 3:
            raise InvalidGeometryError("polygon needs at least 3 distinct vertices")
        if _signed_area(pts) < 0.0:
            pts = pts[::-1].copy()
        pts = _strip_collinear(pts)
        if pts.shape[0] < 3:
            raise InvalidGeometryError("polygon is degenerate after collinear removal")
        cross = _edge_crosses(pts)
        if np.any(cross <= 0.0):
            raise InvalidGeometryError("polygon is not convex")
        if _signed_area(pts) <= GEOM_TOL * GEOM_TOL:
            raise InvalidGeometryError("polygon area is not positive")
        pts.setflags(write=False)
        self.vertices = pts
        # Inward half-plane form: inside iff normals @ p - offsets >= 0 for all edges.
        edges = np.roll(pts, -1, axis=0) - pts
        normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        self._normals = normals
        self._offsets = np.einsum("ij,ij->i", normals, pts)
        self._normals.setflags(write=False)
        self._offsets.setflags(write=False)
        self._seg_starts = pts
        self._seg_dirs = edges
        self._seg_len2 = np.einsum("ij,ij->i", edges, edges)

    def __repr__(self) -> str:
        return f"ConvexPolygon2({self.vertices.tolist()})"

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def contains_point(self, p, tol: float = GEOM_TOL) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(self._normals @ p - self._offsets >= -tol))

    def contains_points(self, pts, tol: float = GEOM_TOL) -> np.ndarray:
        """Vectorized containment for an (m, 2) point array."""
        pts = np.asarray(pts, dtype=float)
        margins = pts @ self._normals.T - self._offsets
        return np.all(margins >= -tol, axis=1)

    def halfplanes(self) -> tuple[np.ndarray, np.ndarray]:
        """Inward unit normals and offsets: inside iff N @ p - b >= 0."""
        return self._normals, self._offsets

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        area = cross.sum() / 2.0
        return ((v + w) * cross[:, None]).sum(axis=0) / (6.0 * area)


def _dedupe(pts: np.ndarray) -> np.ndarray:
    keep = []
    n = pts.shape[0]
    for i in range(n):
        if not keep or np.linalg.norm(pts[i] - pts[keep[-1]]) > _DEDUPE_TOL:
            keep.append(i)
    if len(keep) > 1 and np.linalg.norm(pts[keep[0]] - pts[keep[-1]]) <= _DEDUPE_TOL:
        keep.pop()
    return pts[keep]


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)) / 2.0


def _edge_crosses(pts: np.ndarray) -> np.ndarray:
    e = np.roll(pts, -1, axis=0) - pts
    e_next = np.roll(e, -1, axis=0)
    return e[:, 0] * e_next[:, 1] - e[:, 1] * e_next[:, 0]


def _strip_collinear(pts: np.ndarray) -> np.ndarray:
    changed = True
    while changed and pts.shape[0] > 3:
        cross = _edge_crosses(pts)
        # cross[i] involves vertex i+1; drop one collinear vertex per pass.
        idx = np.nonzero(np.abs(cross) <= _COLLINEAR_TOL)[0]
        if idx.size == 0:
            changed = False
        else:
            pts = np.delete(pts, (idx[0] + 1) % pts.shape[0], axis=0)
    if pts.shape[0] == 3 and np.any(np.abs(_edge_crosses(pts)) <= _COLLINEAR_TOL):
        return pts[:2]
    return pts


def polygon_area(p: ConvexPolygon2) -> float:
    """Shoelace area of a convex polygon, in m^2."""
    return _signed_area(p.vertices)


def point_to_polygon_distance(c, p: ConvexPolygon2) -> float:
    """Distance from a point to a convex polygon; 0 if inside or on the boundary."""
    return float(points_to_polygon_distance(np.asarray(c, dtype=float)[None, :], p)[0])


def points_to_polygon_distance(pts, p: ConvexPolygon2) -> np.ndarray:
    """Distances from each of m query points to the polygon (0 when inside)."""
    pts = np.asarray(pts, dtype=float)
    margins = pts @ p._normals.T - p._offsets          # (m, k)
    inside = np.all(margins >= -GEOM_TOL, axis=1)
    rel = pts[:, None, :] - p._seg_starts[None, :, :]  # (m, k, 2)
    t = np.einsum("mkj,kj->mk", rel, p._seg_dirs) / p._seg_len2
    np.clip(t, 0.0, 1.0, out=t)
    diff = rel - t[:, :, None] * p._seg_dirs[None, :, :]
    d2 = np.einsum("mkj,mkj->mk", diff, diff)
    out = np.sqrt(d2.min(axis=1))
    out[inside] = 0.0
    return out


def convex_intersection(a: ConvexPolygon2, b: ConvexPolygon2) -> ConvexPolygon2 | None:
    """Clip a against b's half-planes; returns None when the overlap is empty."""
    out = [v for v in a.vertices]
    normals, offsets = b.halfplanes()
    for n, off in zip(normals, offsets):
        if not out:
            return None
        inp = out
        out = []
        prev = inp[-1]
        d_prev = float(n @ prev) - off
        for cur in inp:
            d_cur = float(n @ cur) - off
            if d_cur >= 0.0:
                if d_prev < 0.0:
                    t = d_prev / (d_prev - d_cur)
                    out.append(prev + t * (cur - prev))
                out.append(cur)
            elif d_prev >= 0.0:
                t = d_prev / (d_prev - d_cur)
                out.append(prev + t * (cur - prev))
            prev, d_prev = cur, d_cur
    if len(out) < 3:
        return None
    pts = _dedupe(np.asarray(out))
    if pts.shape[0] < 3 or abs(_signed_area(pts)) <= 1e-16:
        return None
    try:
        return ConvexPolygon2(pts)
    except InvalidGeometryError:
        return None


def intersection_area(a: ConvexPolygon2, b: ConvexPolygon2) -> float:
    inter = convex_intersection(a, b)
    return 0.0 if inter is None else polygon_area(inter)


@dataclass(frozen=True)
class RigidTransform3:
    """Proper rigid transform: x -> rotation @ x + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        rot = np.array(self.rotation, dtype=float)
        tr = np.array(self.translation, dtype=float)
        if rot.shape != (3, 3) or tr.shape != (3,):
            raise InvalidGeometryError("rigid transform needs a 3x3 rotation and 3-vector")
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > GEOM_TOL or abs(np.linalg.det(rot) - 1.0) > GEOM_TOL:
            raise InvalidGeometryError("rotation must be orthonormal with determinant +1")
        rot.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> RigidTransform3:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def rot_x(cls, angle: float, translation=(0.0, 0.0, 0.0)) -> RigidTransform3:
        c, s = math.cos(angle), math.sin(angle)
        return cls(np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float), translation)

    @classmethod
    def rot_y(cls, angle: float, translation=(0.0, 0.0, 0.0)) -> RigidTransform3:
        c, s = math.cos(angle), math.sin(angle)
        return cls(np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float), translation)

    @classmethod
    def rot_z(cls, angle: float, translation=(0.0, 0.0, 0.0)) -> RigidTransform3:
        c, s = math.cos(angle), math.sin(angle)
        return cls(np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float), translation)

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: RigidTransform3) -> RigidTransform3:
        return RigidTransform3(self.rotation @ other.rotation,
                               self.rotation @ other.translation + self.translation)

    def __matmul__(self, other: RigidTransform3) -> RigidTransform3:
        return self.compose(other)

    def inverse(self) -> RigidTransform3:
        rt = self.rotation.T
        return RigidTransform3(rt, -(rt @ self.translation))


@dataclass(frozen=True, eq=False)
class Face:
    """One planar face: a convex polygon in a local (u, v) frame on the object."""

    id: int
    polygon: ConvexPolygon2
    frame: RigidTransform3  # maps face-local (u, v, 0) to object coordinates
    outward_normal: np.ndarray

    def __post_init__(self) -> None:
        n = np.asarray(self.outward_normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > GEOM_TOL:
            raise InvalidGeometryError(f"face {self.id}: outward normal must be unit length")
        if np.max(np.abs(n - self.frame.rotation[:, 2])) > GEOM_TOL:
            raise InvalidGeometryError(f"face {self.id}: normal must equal the frame z-axis")
        n.setflags(write=False)
        object.__setattr__(self, "outward_normal", n)

    def to_object(self, uv) -> np.ndarray:
        """Lift face-local 2D points into object coordinates."""
        arr = np.asarray(uv, dtype=float)
        single = arr.ndim == 1
        pts = np.atleast_2d(arr)
        pts3 = np.concatenate([pts, np.zeros((pts.shape[0], 1))], axis=1)
        out = self.frame.apply(pts3)
        return out[0] if single else out


@dataclass(frozen=True, eq=False)
class SharedEdge:
    """The edge two faces share, expressed in each face's local frame.

    Endpoint rows correspond across faces: row k in both arrays is the same
    3D point on the object.
    """

    faces: tuple[int, int]
    endpoints: dict[int, np.ndarray]

    def endpoints_in(self, face_id: int) -> np.ndarray:
        return self.endpoints[face_id]

    def length(self) -> float:
        pts = next(iter(self.endpoints.values()))
        return float(np.linalg.norm(pts[1] - pts[0]))


@dataclass(frozen=True, eq=False)
class ObjectModel:
    """Convex right prism: faces, adjacency, and parallel (graspable) face pairs.

    The model itself is immutable; `scratch` holds internal memo tables for
    derived quantities (orientation bases, containment verdicts) that are
    pure functions of the model, so concurrent readers at worst recompute.
    """

    name: str
    faces: tuple[Face, ...]
    adjacency: dict[tuple[int, int], SharedEdge]
    parallel_pairs: tuple[tuple[int, int], ...]
    cross_section: ConvexPolygon2
    height: float
    lateral_count: int
    scratch: dict = field(default_factory=dict, repr=False, compare=False)

    def face(self, face_id: int) -> Face:
        return self.faces[face_id]

    def shared_edge(self, a: int, b: int) -> SharedEdge:
        return self.adjacency[(min(a, b), max(a, b))]

    def neighbors(self, face_id: int) -> list[int]:
        out = []
        for (i, j) in self.adjacency:
            if i == face_id:
                out.append(j)
            elif j == face_id:
                out.append(i)
        return sorted(out)

    def pair_width(self, pair_index: int) -> float:
        i, j = self.parallel_pairs[pair_index]
        fi, fj = self.faces[i], self.faces[j]
        return abs(float(fi.outward_normal @ (fj.frame.translation - fi.frame.translation)))

    def pair_of_faces(self, a: int, b: int) -> int:
        key = {a, b}
        for idx, pair in enumerate(self.parallel_pairs):
            if set(pair) == key:
                return idx
        raise InvalidModelError(f"faces {a} and {b} do not form a parallel pair")

    def validate(self) -> None:
        """Cross-check adjacency and parallel-pair invariants (1e-9 tolerances)."""
        for (i, j), edge in self.adjacency.items():
            pi = self.faces[i].to_object(edge.endpoints_in(i))
            pj = self.faces[j].to_object(edge.endpoints_in(j))
            if np.max(np.abs(pi - pj)) > GEOM_TOL:
                raise InvalidModelError(f"shared edge ({i},{j}) does not coincide in 3D")
            li = np.linalg.norm(np.diff(edge.endpoints_in(i), axis=0))
            lj = np.linalg.norm(np.diff(edge.endpoints_in(j), axis=0))
            if abs(li - lj) > GEOM_TOL:
                raise InvalidModelError(f"shared edge ({i},{j}) length mismatch")
        for i, j in self.parallel_pairs:
            dot = float(self.faces[i].outward_normal @ self.faces[j].outward_normal)
            if abs(dot + 1.0) > GEOM_TOL:
                raise InvalidModelError(f"pair ({i},{j}) normals are not opposing")


def build_prism(cross_section: ConvexPolygon2, height: float, name: str = "prism") -> ObjectModel:
    """Extrude a convex cross-section along +z into a right prism model.

    Faces 0..k-1 are the lateral rectangles (one per cross-section edge, in
    order), face k is the bottom cap (outward -z), face k+1 the top cap.
    Raises UngraspableObjectError when the cross-section has no antiparallel
    edge pair, since a parallel-jaw grip then has nothing to hold.
    """
    if height <= 0.0:
        raise InvalidGeometryError("prism height must be positive")
    cs = cross_section.vertices
    k = cs.shape[0]
    faces: list[Face] = []
    for i in range(k):
        a, b = cs[i], cs[(i + 1) % k]
        edge = b - a
        length = float(np.linalg.norm(edge))
        d3 = np.array([edge[0], edge[1], 0.0]) / length
        n3 = np.array([edge[1], -edge[0], 0.0]) / length
        rot = np.column_stack([d3, [0.0, 0.0, 1.0], n3])
        frame = RigidTransform3(rot, np.array([a[0], a[1], 0.0]))
        poly = ConvexPolygon2([(0.0, 0.0), (length, 0.0), (length, height), (0.0, height)])
        faces.append(Face(i, poly, frame, n3))
    bottom_id, top_id = k, k + 1
    bottom_rot = np.diag([1.0, -1.0, -1.0])  # local (u, v) -> object (u, -v), normal -z
    bottom_poly = ConvexPolygon2(np.column_stack([cs[:, 0], -cs[:, 1]]))
    faces.append(Face(bottom_id, bottom_poly, RigidTransform3(bottom_rot, np.zeros(3)),
                      np.array([0.0, 0.0, -1.0])))
    top_poly = ConvexPolygon2(cs)
    faces.append(Face(top_id, top_poly, RigidTransform3(np.eye(3), np.array([0.0, 0.0, height])),
                      np.array([0.0, 0.0, 1.0])))

    adjacency: dict[tuple[int, int], SharedEdge] = {}

    def add_edge(i: int, j: int, pts_i: np.ndarray, pts_j: np.ndarray) -> None:
        key = (min(i, j), max(i, j))
        adjacency[key] = SharedEdge((i, j), {i: np.asarray(pts_i, float), j: np.asarray(pts_j, float)})

    for i in range(k):
        j = (i + 1) % k
        li = float(np.linalg.norm(cs[j] - cs[i]))
        add_edge(i, j, [(li, 0.0), (li, height)], [(0.0, 0.0), (0.0, height)])
        a, b = cs[i], cs[(i + 1) % k]
        add_edge(i, bottom_id, [(0.0, 0.0), (li, 0.0)], [(a[0], -a[1]), (b[0], -b[1])])
        add_edge(i, top_id, [(0.0, height), (li, height)], [(a[0], a[1]), (b[0], b[1])])

    pairs: list[tuple[int, int]] = []
    for i in range(k):
        for j in range(i + 1, k):
            dot = float(faces[i].outward_normal @ faces[j].outward_normal)
            if abs(dot + 1.0) <= GEOM_TOL:
                pairs.append((i, j))
    if not pairs:
        raise UngraspableObjectError(
            f"{name}: cross-section has no parallel edge pair, nothing to grip")
    pairs.append((bottom_id, top_id))

    model = ObjectModel(name=name, faces=tuple(faces), adjacency=adjacency,
                        parallel_pairs=tuple(pairs), cross_section=cross_section,
                        height=float(height), lateral_count=k)
    model.validate()
    return model


@dataclass(frozen=True)
class PlanarIsometry:
    """Orientation-preserving 2D rigid map: p -> rot @ p + trans."""

    rot: np.ndarray
    trans: np.ndarray

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts @ self.rot.T + self.trans

    def compose(self, other: PlanarIsometry) -> PlanarIsometry:
        return PlanarIsometry(self.rot @ other.rot, self.rot @ other.trans + self.trans)

    @classmethod
    def identity(cls) -> PlanarIsometry:
        return cls(np.eye(2), np.zeros(2))


@dataclass(frozen=True, eq=False)
class UnfoldedMap:
    """All faces rotated flat into one plane, keeping the base face fixed.

    Straight-line distances in this plane equal surface distances for paths
    crossing the single shared edge used to place each face; longer paths are
    approximated by the BFS tree layout.
    """

    base_face: int
    placements: dict[int, PlanarIsometry]
    unfolded_polygons: dict[int, ConvexPolygon2]

    def to_plane(self, face_id: int, uv) -> np.ndarray:
        return self.placements[face_id].apply(uv)


def unfold(obj: ObjectModel, base: int) -> UnfoldedMap:
    """Flatten every face into the base face's plane by BFS over shared edges.

    Each face is rotated about the edge shared with its BFS parent; the two
    planar images of that edge coincide exactly, so the map is an isometry
    on each face.
    """
    if base < 0 or base >= len(obj.faces):
        raise InvalidModelError(f"base face {base} does not exist")
    placements: dict[int, PlanarIsometry] = {base: PlanarIsometry.identity()}
    queue = deque([base])
    while queue:
        parent = queue.popleft()
        for child in obj.neighbors(parent):
            if child in placements:
                continue
            edge = obj.shared_edge(parent, child)
            ep = edge.endpoints_in(parent)
            ec = edge.endpoints_in(child)
            dp = ep[1] - ep[0]
            dc = ec[1] - ec[0]
            ang = math.atan2(dc[0] * dp[1] - dc[1] * dp[0], float(dc @ dp))
            rot = _rot2(ang)
            step = PlanarIsometry(rot, ep[0] - rot @ ec[0])
            placements[child] = placements[parent].compose(step)
            queue.append(child)
    if len(placements) != len(obj.faces):
        raise InvalidModelError("face adjacency graph is disconnected")
    polygons = {fid: ConvexPolygon2(placements[fid].apply(obj.faces[fid].polygon.vertices))
                for fid in placements}
    return UnfoldedMap(base_face=base, placements=placements, unfolded_polygons=polygons)
