"""Grasp-contact states, the 9-action space, feasibility, and transitions.

State convention
----------------
The object pose is tracked relative to the hand and table, not as a full
world pose.  A state pins down the world orientation implicitly:

* the support face's outward normal points straight down (world -z),
* the left contact face's outward normal points toward the left finger
  (world -x), so the grasp squeeze axis is world x,
* world y is then the in-grasp-plane horizontal direction.

Slides translate one finger's contact along the face direction that is
currently horizontal (one finger grips while the other lets the object
slip).  Contact up/down shifts move both contacts along the gravity-aligned
face direction: up rides gravity while the support holds the object, down
is a push against the support surface.  In-hand rotation spins the object
about the vertical axis through the grasp centroid onto the next parallel
face pair, with the world-fixed finger pads re-expressed in the new faces'
frames.  A pivot tips the object over a support-face edge parallel to the
squeeze axis: contact centers stay put on their faces while the pad
orientation rotates in-face by the tipping angle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    InfeasibleActionError,
    InvalidInputError,
    InvalidModelError,
    InvalidStateError,
)
from .geometry import (
    FEAS_TOL,
    GEOM_TOL,
    ConvexPolygon2,
    ObjectModel,
    convex_intersection,
    polygon_area,
)

_WORLD_DOWN = np.array([0.0, 0.0, -1.0])
_WORLD_UP = np.array([0.0, 0.0, 1.0])
_LEFT_NORMAL = np.array([-1.0, 0.0, 0.0])  # world direction of the left face's outward normal
_WORLD_Y = np.array([0.0, 1.0, 0.0])


class ActionKind(enum.IntEnum):
    """The 9 manipulation primitives, in canonical (deterministic) order.

    The rotation labels follow the convention that ROTATE_CCW advances the
    grasp onto the next parallel pair in ascending face order (for the
    counterclockwise-ordered cross-sections built by build_prism).
    """

    SLIDE_LEFT_UP = 0
    SLIDE_LEFT_DOWN = 1
    SLIDE_RIGHT_UP = 2
    SLIDE_RIGHT_DOWN = 3
    ROTATE_CW = 4
    ROTATE_CCW = 5
    MOVE_CONTACT_UP = 6
    MOVE_CONTACT_DOWN = 7
    PIVOT = 8


@dataclass(frozen=True)
class Action:
    """One primitive with its step size (m for slides/moves, rad otherwise).

    arc_radius is the effective lever arm (half the grasp width) used to
    convert rotation/pivot angles into arc-length costs; it is 0 for
    translational primitives.
    """

    kind: ActionKind
    magnitude: float
    arc_radius: float = 0.0

    def __post_init__(self) -> None:
        if not (self.magnitude > 0.0 and math.isfinite(self.magnitude)):
            raise InvalidInputError("action magnitude must be positive and finite")


@dataclass(frozen=True)
class ContactRegion:
    """A finger pad's rectangular footprint on one face, in face-local coords."""

    face: int
    center: np.ndarray
    orientation: float
    pad_width: float
    pad_height: float

    def __post_init__(self) -> None:
        c = self.center
        if not (isinstance(c, np.ndarray) and c.shape == (2,)):
            c = np.asarray(c, dtype=float)
            if c.shape != (2,):
                raise InvalidStateError("contact center must be a 2-vector")
            object.__setattr__(self, "center", c)
        if not (math.isfinite(c[0]) and math.isfinite(c[1])):
            raise InvalidStateError("contact center must be finite")
        if self.pad_width <= 0.0 or self.pad_height <= 0.0:
            raise InvalidStateError("pad dimensions must be positive")

    def corners(self) -> np.ndarray:
        """The rectangle's 4 vertices, counterclockwise in the face frame."""
        cached = getattr(self, "_corners", None)
        if cached is None:
            hw, hh = self.pad_width / 2.0, self.pad_height / 2.0
            local = np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
            c, s = math.cos(self.orientation), math.sin(self.orientation)
            rot = np.array([[c, s], [-s, c]])  # transposed, for the right-multiply below
            cached = local @ rot + self.center
            cached.setflags(write=False)
            object.__setattr__(self, "_corners", cached)
        return cached

    def polygon(self) -> ConvexPolygon2:
        return ConvexPolygon2(self.corners())

    def area(self) -> float:
        return self.pad_width * self.pad_height


@dataclass(frozen=True)
class GraspState:
    """Both finger contacts plus which faces are gripped and rested on."""

    left: ContactRegion
    right: ContactRegion
    grasp_pair: int
    support_face: int
    horizontal_axis: np.ndarray  # world-horizontal direction in the left face frame

    def __post_init__(self) -> None:
        h = self.horizontal_axis
        if not (isinstance(h, np.ndarray) and h.shape == (2,)):
            h = np.asarray(h, dtype=float)
            if h.shape != (2,):
                raise InvalidStateError("horizontal_axis must be a 2-vector")
            object.__setattr__(self, "horizontal_axis", h)
        if abs(math.sqrt(float(h[0]) ** 2 + float(h[1]) ** 2) - 1.0) > FEAS_TOL:
            raise InvalidStateError("horizontal_axis must be unit length")

    def validate(self, obj: ObjectModel) -> None:
        pair = obj.parallel_pairs[self.grasp_pair]
        if {self.left.face, self.right.face} != set(pair):
            raise InvalidStateError(
                f"contact faces {self.left.face}/{self.right.face} do not form pair {pair}")
        if self.support_face in pair:
            raise InvalidStateError("support face cannot be a gripped face")
        n_s = obj.face(self.support_face).outward_normal
        n_l = obj.face(self.left.face).outward_normal
        if abs(float(n_s @ n_l)) > FEAS_TOL:
            raise InvalidStateError(
                "support face must be perpendicular to the gripped faces")
        ctx = world_context(self, obj)
        if np.max(np.abs(ctx.left_axes[0] - self.horizontal_axis)) > FEAS_TOL:
            raise InvalidStateError("horizontal_axis is inconsistent with the support face")
        for region in (self.left, self.right):
            if not _contained(obj, region, tol=FEAS_TOL):
                raise InvalidStateError(
                    f"contact rectangle leaves face {region.face}")

    @classmethod
    def create(cls, obj: ObjectModel, left_face: int, right_face: int, support_face: int,
               left_center, right_center, pad_width: float, pad_height: float,
               left_orientation: float | None = None,
               right_orientation: float | None = None) -> GraspState:
        """Build a state, deriving pad orientations/horizontal axis when omitted.

        The canonical pad orientation aligns the pad u-axis with the world
        horizontal direction.
        """
        try:
            pair_idx = obj.pair_of_faces(left_face, right_face)
        except InvalidModelError as exc:
            raise InvalidStateError(str(exc)) from exc
        rot = _object_rotation(obj, support_face, left_face)
        axes_l = _face_axes(rot, obj, left_face)
        axes_r = _face_axes(rot, obj, right_face)
        if left_orientation is None:
            left_orientation = math.atan2(axes_l[0][1], axes_l[0][0])
        if right_orientation is None:
            right_orientation = math.atan2(axes_r[0][1], axes_r[0][0])
        state = cls(
            left=ContactRegion(left_face, np.asarray(left_center, float),
                               float(left_orientation), pad_width, pad_height),
            right=ContactRegion(right_face, np.asarray(right_center, float),
                                float(right_orientation), pad_width, pad_height),
            grasp_pair=pair_idx,
            support_face=support_face,
            horizontal_axis=axes_l[0],
        )
        state.validate(obj)
        return state


@dataclass(frozen=True)
class GoalRegion:
    """A convex target patch on one face."""

    face: int
    polygon: ConvexPolygon2


@dataclass(frozen=True)
class ResolutionConfig:
    """Step sizes and parametric feasibility limits for the action space."""

    slide_step: float = 0.005
    z_step: float = 0.005
    rotation_step: float = 0.0  # filled by derive_resolutions
    pivot_step: float = 0.0     # filled by derive_resolutions
    min_grasp_width: float = 0.005
    max_grasp_width: float = 0.15
    max_length_width_ratio: float = 3.0
    pad_width: float = 0.02
    pad_height: float = 0.02
    table_clearance: float = 0.0

    def validate(self) -> None:
        for name in ("slide_step", "z_step", "rotation_step", "pivot_step",
                     "min_grasp_width", "max_grasp_width", "max_length_width_ratio",
                     "pad_width", "pad_height"):
            if getattr(self, name) <= 0.0:
                raise InvalidInputError(f"resolution parameter {name} must be positive")
        if self.table_clearance < 0.0:
            raise InvalidInputError("table_clearance must be non-negative")


def derive_resolutions(obj: ObjectModel, base: ResolutionConfig) -> ResolutionConfig:
    """Fill the geometry-derived angular steps for an object.

    The in-hand rotation step is the angular spacing between consecutive
    parallel lateral pairs of the cross-section; the pivot step is the
    exterior angle at a lateral/end-cap edge (pi/2 for right prisms).
    """
    angles = []
    for i, j in obj.parallel_pairs:
        if i >= obj.lateral_count or j >= obj.lateral_count:
            continue  # cap pair has no cross-section direction
        n = obj.face(i).outward_normal
        ang = math.atan2(n[1], n[0]) % math.pi
        angles.append(ang)
    angles.sort()
    if len(angles) <= 1:
        rotation_step = math.pi
    else:
        gaps = [angles[k + 1] - angles[k] for k in range(len(angles) - 1)]
        gaps.append(math.pi - angles[-1] + angles[0])
        rotation_step = min(g for g in gaps if g > GEOM_TOL)
    n_lat = obj.face(0).outward_normal
    n_cap = obj.face(obj.lateral_count).outward_normal
    pivot_step = math.acos(max(-1.0, min(1.0, float(n_lat @ n_cap))))
    cfg = replace(base, rotation_step=rotation_step, pivot_step=pivot_step)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# World-frame derivation

@dataclass(frozen=True)
class WorldContext:
    """World-frame quantities implied by a state's support/grasp alignment."""

    rotation: np.ndarray      # object -> world rotation
    z_offset: float           # world z translation putting the support plane at z=0
    left_axes: tuple[np.ndarray, np.ndarray]   # (horizontal, up) in left face frame
    right_axes: tuple[np.ndarray, np.ndarray]
    left_center_world: np.ndarray
    right_center_world: np.ndarray
    grasp_width: float


def _cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def _rot_z3(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_x3(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


# Columns: left-face normal, horizontal in-plane direction, support normal.
_BASIS_WORLD = np.column_stack([_LEFT_NORMAL, _cross3(_WORLD_DOWN, _LEFT_NORMAL), _WORLD_DOWN])


def _object_rotation(obj: ObjectModel, support_face: int, left_face: int) -> np.ndarray:
    n_s = obj.face(support_face).outward_normal
    n_l = obj.face(left_face).outward_normal
    if abs(float(n_s @ n_l)) > FEAS_TOL:
        raise InvalidStateError("support face is not perpendicular to the gripped faces")
    basis_obj = np.column_stack([n_l, _cross3(n_s, n_l), n_s])
    return _BASIS_WORLD @ basis_obj.T


def _pose(obj: ObjectModel, support_face: int, left_face: int) -> tuple[np.ndarray, float]:
    """Object->world rotation and z-offset, memoized per (support, left) pair."""
    key = ("pose", support_face, left_face)
    hit = obj.scratch.get(key)
    if hit is None:
        rot = _object_rotation(obj, support_face, left_face)
        rot.setflags(write=False)
        tz = -float(rot[2] @ obj.face(support_face).frame.translation)
        hit = (rot, tz)
        obj.scratch[key] = hit
    return hit


def _face_axes(rot: np.ndarray, obj: ObjectModel, face_id: int) -> tuple[np.ndarray, np.ndarray]:
    rw = rot @ obj.face(face_id).frame.rotation
    horiz = rw[1, :2]  # row y of rw == world-y expressed along the face u/v axes
    up = rw[2, :2]
    horiz = horiz / math.sqrt(horiz[0] ** 2 + horiz[1] ** 2)
    up = up / math.sqrt(up[0] ** 2 + up[1] ** 2)
    horiz.setflags(write=False)
    up.setflags(write=False)
    return horiz, up


def _axes_cached(obj: ObjectModel, support_face: int, left_face: int,
                 face_id: int) -> tuple[np.ndarray, np.ndarray]:
    key = ("axes", support_face, left_face, face_id)
    hit = obj.scratch.get(key)
    if hit is None:
        rot, _ = _pose(obj, support_face, left_face)
        hit = _face_axes(rot, obj, face_id)
        obj.scratch[key] = hit
    return hit


def _lift_center(obj: ObjectModel, region: ContactRegion) -> np.ndarray:
    frame = obj.face(region.face).frame
    return (frame.rotation[:, 0] * region.center[0]
            + frame.rotation[:, 1] * region.center[1]
            + frame.translation)


def world_context(s: GraspState, obj: ObjectModel) -> WorldContext:
    rot, tz = _pose(obj, s.support_face, s.left.face)
    p_l = rot @ _lift_center(obj, s.left)
    p_r = rot @ _lift_center(obj, s.right)
    p_l[2] += tz
    p_r[2] += tz
    return WorldContext(
        rotation=rot,
        z_offset=tz,
        left_axes=_axes_cached(obj, s.support_face, s.left.face, s.left.face),
        right_axes=_axes_cached(obj, s.support_face, s.left.face, s.right.face),
        left_center_world=p_l,
        right_center_world=p_r,
        grasp_width=_pair_width_cached(obj, s.grasp_pair),
    )


def _pair_width_cached(obj: ObjectModel, pair_index: int) -> float:
    key = ("width", pair_index)
    hit = obj.scratch.get(key)
    if hit is None:
        hit = obj.pair_width(pair_index)
        obj.scratch[key] = hit
    return hit


def _region_key(region: ContactRegion) -> tuple:
    return (region.face, round(region.center[0] * 1e9), round(region.center[1] * 1e9),
            round(region.orientation * 1e9), region.pad_width, region.pad_height)


def _contained(obj: ObjectModel, region: ContactRegion, tol: float = FEAS_TOL) -> bool:
    key = ("contained", tol, *_region_key(region))
    hit = obj.scratch.get(key)
    if hit is None:
        normals, offsets = obj.face(region.face).polygon.halfplanes()
        margins = region.corners() @ normals.T - offsets
        hit = bool(np.all(margins >= -tol))
        obj.scratch[key] = hit
    return hit


def _clearance_ok(obj: ObjectModel, rot: np.ndarray, tz: float, region: ContactRegion,
                  clearance: float) -> bool:
    if clearance <= 0.0:
        return True  # a convex body on its support plane has no point below z = 0
    face = obj.face(region.face)
    corners3 = face.to_object(region.corners())
    z = (corners3 @ rot.T)[:, 2] + tz
    return bool(np.all(z >= clearance - FEAS_TOL))


# ---------------------------------------------------------------------------
# Action generation and transitions

def successors(s: GraspState, obj: ObjectModel,
               cfg: ResolutionConfig) -> list[tuple[Action, GraspState]]:
    """All feasible (action, resulting state) pairs, in canonical kind order.

    The search relies on this order for deterministic tie-breaking.
    """
    out: list[tuple[Action, GraspState]] = []
    ctx = world_context(s, obj)
    for kind in (ActionKind.SLIDE_LEFT_UP, ActionKind.SLIDE_LEFT_DOWN,
                 ActionKind.SLIDE_RIGHT_UP, ActionKind.SLIDE_RIGHT_DOWN):
        action = Action(kind, cfg.slide_step)
        nxt = _try_slide(s, action, obj, ctx)
        if nxt is not None:
            out.append((action, nxt))
    for kind in (ActionKind.ROTATE_CW, ActionKind.ROTATE_CCW):
        found = _find_rotation(obj, s.support_face, s.left.face,
                               ccw=(kind == ActionKind.ROTATE_CCW))
        if found is None:
            continue
        magnitude, _ = found
        action = Action(kind, magnitude, arc_radius=ctx.grasp_width / 2.0)
        nxt = _checked_rotation(s, action, obj, ctx, cfg)
        if nxt is not None:
            out.append((action, nxt))
    for kind in (ActionKind.MOVE_CONTACT_UP, ActionKind.MOVE_CONTACT_DOWN):
        action = Action(kind, cfg.z_step)
        nxt = _try_move(s, action, obj, ctx, cfg)
        if nxt is not None:
            out.append((action, nxt))
    pivot = find_pivot_edge(s, obj)
    if pivot is not None:
        action = Action(ActionKind.PIVOT, abs(pivot.angle), arc_radius=ctx.grasp_width / 2.0)
        nxt = _try_pivot(s, action, obj, ctx, cfg)
        if nxt is not None:
            out.append((action, nxt))
    return out


def valid_actions(s: GraspState, obj: ObjectModel, cfg: ResolutionConfig) -> list[Action]:
    """All primitives whose feasibility predicates pass in state s."""
    return [action for action, _ in successors(s, obj, cfg)]


def transition(s: GraspState, a: Action, obj: ObjectModel) -> GraspState:
    """Apply one primitive; raises InfeasibleActionError if preconditions fail."""
    ctx = world_context(s, obj)
    kind = a.kind
    if kind in (ActionKind.SLIDE_LEFT_UP, ActionKind.SLIDE_LEFT_DOWN,
                ActionKind.SLIDE_RIGHT_UP, ActionKind.SLIDE_RIGHT_DOWN):
        nxt = _try_slide(s, a, obj, ctx)
    elif kind in (ActionKind.ROTATE_CW, ActionKind.ROTATE_CCW):
        nxt = _apply_rotation(s, a, obj, ctx)
    elif kind in (ActionKind.MOVE_CONTACT_UP, ActionKind.MOVE_CONTACT_DOWN):
        nxt = _try_move(s, a, obj, ctx, None)
    elif kind == ActionKind.PIVOT:
        nxt = _try_pivot(s, a, obj, ctx, None)
    else:  # pragma: no cover - exhaustive enum
        raise InfeasibleActionError(f"unknown action kind {kind}")
    if nxt is None:
        raise InfeasibleActionError(f"{kind.name} (magnitude {a.magnitude:g}) is infeasible here")
    return nxt


def _with_center(region: ContactRegion, center: np.ndarray) -> ContactRegion:
    return ContactRegion(region.face, center, region.orientation,
                         region.pad_width, region.pad_height)


def _try_slide(s: GraspState, a: Action, obj: ObjectModel, ctx: WorldContext) -> GraspState | None:
    sign = 1.0 if a.kind in (ActionKind.SLIDE_LEFT_UP, ActionKind.SLIDE_RIGHT_UP) else -1.0
    left_finger = a.kind in (ActionKind.SLIDE_LEFT_UP, ActionKind.SLIDE_LEFT_DOWN)
    region = s.left if left_finger else s.right
    axis = ctx.left_axes[0] if left_finger else ctx.right_axes[0]
    moved = _with_center(region, region.center + sign * a.magnitude * axis)
    if not _contained(obj, moved):
        return None
    if left_finger:
        return GraspState(moved, s.right, s.grasp_pair, s.support_face, s.horizontal_axis)
    return GraspState(s.left, moved, s.grasp_pair, s.support_face, s.horizontal_axis)


def _try_move(s: GraspState, a: Action, obj: ObjectModel, ctx: WorldContext,
              cfg: ResolutionConfig | None) -> GraspState | None:
    sign = 1.0 if a.kind == ActionKind.MOVE_CONTACT_UP else -1.0
    new_left = _with_center(s.left, s.left.center + sign * a.magnitude * ctx.left_axes[1])
    new_right = _with_center(s.right, s.right.center + sign * a.magnitude * ctx.right_axes[1])
    clearance = cfg.table_clearance if cfg is not None else 0.0
    for region in (new_left, new_right):
        if not _contained(obj, region):
            return None
        if not _clearance_ok(obj, ctx.rotation, ctx.z_offset, region, clearance):
            return None
    return GraspState(new_left, new_right, s.grasp_pair, s.support_face, s.horizontal_axis)


def _find_rotation(obj: ObjectModel, support_face: int, left_face: int,
                   ccw: bool) -> tuple[float, int] | None:
    """Smallest spin about vertical that lands the pads on another pair."""
    key = ("rotation-candidate", support_face, left_face, ccw)
    if key in obj.scratch:
        return obj.scratch[key]
    rot, _ = _pose(obj, support_face, left_face)
    best: tuple[float, int] | None = None
    for pair_idx, pair in enumerate(obj.parallel_pairs):
        for candidate_left in pair:
            if candidate_left == left_face:
                continue
            n_w = rot @ obj.face(candidate_left).outward_normal
            if abs(float(n_w @ _WORLD_UP)) > FEAS_TOL:
                continue  # spinning about vertical keeps normals' z; must already be horizontal
            phi = math.atan2(
                n_w[0] * _LEFT_NORMAL[1] - n_w[1] * _LEFT_NORMAL[0],
                float(n_w[:2] @ _LEFT_NORMAL[:2]),
            )
            # ccw selects the negative world spin (see ActionKind docstring)
            if not ccw and phi <= FEAS_TOL:
                phi += 2.0 * math.pi
            if ccw and phi >= -FEAS_TOL:
                phi -= 2.0 * math.pi
            if ccw:
                phi = -phi  # compare magnitudes
            if phi <= FEAS_TOL or phi > math.pi + FEAS_TOL:
                continue
            if best is None or phi < best[0] - GEOM_TOL:
                best = (phi, pair_idx)
    obj.scratch[key] = best
    return best


def _checked_rotation(s: GraspState, a: Action, obj: ObjectModel, ctx: WorldContext,
                      cfg: ResolutionConfig) -> GraspState | None:
    nxt = _apply_rotation(s, a, obj, ctx)
    if nxt is None:
        return None
    width = _pair_width_cached(obj, nxt.grasp_pair)
    if not (cfg.min_grasp_width - FEAS_TOL <= width <= cfg.max_grasp_width + FEAS_TOL):
        return None
    # Length-to-width limit: too-elongated grips cannot generate the spin moment.
    sigma = -1.0 if a.kind == ActionKind.ROTATE_CCW else 1.0
    rot_new = _rot_z3(sigma * a.magnitude) @ ctx.rotation
    face = obj.face(nxt.left.face)
    verts_y = (rot_new @ face.to_object(face.polygon.vertices).T)[1]
    extent = float(verts_y.max() - verts_y.min())
    if extent / width > cfg.max_length_width_ratio + FEAS_TOL:
        return None
    return nxt


def _apply_rotation(s: GraspState, a: Action, obj: ObjectModel,
                    ctx: WorldContext) -> GraspState | None:
    sigma = -1.0 if a.kind == ActionKind.ROTATE_CCW else 1.0
    phi = sigma * a.magnitude
    rz = _rot_z3(phi)
    rot_new = rz @ ctx.rotation

    target = None
    for pair_idx, pair in enumerate(obj.parallel_pairs):
        for candidate_left in pair:
            n_w = rot_new @ obj.face(candidate_left).outward_normal
            if np.max(np.abs(n_w - _LEFT_NORMAL)) <= FEAS_TOL:
                other = pair[0] if pair[1] == candidate_left else pair[1]
                target = (pair_idx, candidate_left, other)
    if target is None:
        return None
    pair_idx, new_left_face, new_right_face = target
    if s.support_face in (new_left_face, new_right_face):
        return None

    centroid = (ctx.left_center_world + ctx.right_center_world) / 2.0
    offset = np.array([0.0, 0.0, ctx.z_offset])

    def transport(region: ContactRegion, new_face_id: int,
                  pad_world: np.ndarray) -> ContactRegion | None:
        face_old = obj.face(region.face)
        face_new = obj.face(new_face_id)
        rot_face_new = rot_new @ face_new.frame.rotation
        t_new = rz @ (ctx.rotation @ face_new.frame.translation + offset - centroid) + centroid
        local3 = rot_face_new.T @ (pad_world - t_new)
        # The pad keeps its world (y, z); the face u/v axes have no world-x
        # component, so the face-plane coordinates ignore the pad's x.
        center = local3[:2]
        pad_dir_world = (ctx.rotation @ face_old.frame.rotation) @ np.array(
            [math.cos(region.orientation), math.sin(region.orientation), 0.0])
        e = rot_face_new.T @ pad_dir_world
        theta = math.atan2(e[1], e[0])
        moved = ContactRegion(new_face_id, center, theta, region.pad_width, region.pad_height)
        return moved if _contained(obj, moved) else None

    new_left = transport(s.left, new_left_face, ctx.left_center_world)
    new_right = transport(s.right, new_right_face, ctx.right_center_world)
    if new_left is None or new_right is None:
        return None
    horiz = _face_axes(rot_new, obj, new_left_face)[0]
    return GraspState(left=new_left, right=new_right, grasp_pair=pair_idx,
                      support_face=s.support_face, horizontal_axis=horiz)


@dataclass(frozen=True)
class PivotEdgeInfo:
    """The forward pivot available in a state: tipping angle, landing face,
    and a world point on the support edge being tipped over."""

    angle: float  # signed world rotation about +x that lays the new face flat
    new_support: int
    edge_point_world: np.ndarray


def find_pivot_edge(s: GraspState, obj: ObjectModel) -> PivotEdgeInfo | None:
    """Locate the support edge parallel to the squeeze axis on the +y side.

    Tipping is only defined over such an edge: the grasp axis must coincide
    with the rotation axis so the gripped faces stay vertical.
    """
    key = ("pivot-edge", s.support_face, s.left.face)
    if key in obj.scratch:
        return obj.scratch[key]
    rot, tz = _pose(obj, s.support_face, s.left.face)
    support = obj.face(s.support_face)
    rot_support = rot @ support.frame.rotation
    t_support = rot @ support.frame.translation + np.array([0.0, 0.0, tz])
    centroid_w = rot_support[:, :2] @ support.polygon.centroid + t_support
    info = None
    for neighbor in obj.neighbors(s.support_face):
        edge = obj.shared_edge(s.support_face, neighbor)
        pts = edge.endpoints_in(s.support_face)
        d_w = rot_support[:, :2] @ (pts[1] - pts[0])
        d_w /= math.sqrt(float(d_w @ d_w))
        if abs(d_w[1]) > FEAS_TOL or abs(d_w[2]) > FEAS_TOL:
            continue  # pivot axis must lie along the squeeze axis
        mid_w = rot_support[:, :2] @ ((pts[0] + pts[1]) / 2.0) + t_support
        if mid_w[1] <= centroid_w[1]:
            continue  # only tip toward +y
        n_new_w = rot @ obj.face(neighbor).outward_normal
        chi = math.atan2(
            n_new_w[1] * _WORLD_DOWN[2] - n_new_w[2] * _WORLD_DOWN[1],
            float(n_new_w[1:] @ _WORLD_DOWN[1:]),
        )
        info = PivotEdgeInfo(chi, neighbor, mid_w)
        break
    obj.scratch[key] = info
    return info


def _try_pivot(s: GraspState, a: Action, obj: ObjectModel, ctx: WorldContext,
               cfg: ResolutionConfig | None) -> GraspState | None:
    found = find_pivot_edge(s, obj)
    if found is None:
        return None
    chi, new_support = found.angle, found.new_support
    if abs(abs(chi) - a.magnitude) > FEAS_TOL:
        return None
    rot_new = _rot_x3(chi) @ ctx.rotation

    def rotate_in_face(region: ContactRegion) -> ContactRegion | None:
        face = obj.face(region.face)
        pad_dir_world = (ctx.rotation @ face.frame.rotation) @ np.array(
            [math.cos(region.orientation), math.sin(region.orientation), 0.0])
        e = (rot_new @ face.frame.rotation).T @ pad_dir_world
        moved = ContactRegion(region.face, region.center, math.atan2(e[1], e[0]),
                              region.pad_width, region.pad_height)
        return moved if _contained(obj, moved) else None

    new_left = rotate_in_face(s.left)
    new_right = rotate_in_face(s.right)
    if new_left is None or new_right is None:
        return None
    support_pt = rot_new @ obj.face(new_support).frame.translation
    tz_new = -float(support_pt @ _WORLD_UP)
    clearance = cfg.table_clearance if cfg is not None else 0.0
    for region in (new_left, new_right):
        if not _clearance_ok(obj, rot_new, tz_new, region, clearance):
            return None
    horiz = _face_axes(rot_new, obj, new_left.face)[0]
    return GraspState(left=new_left, right=new_right, grasp_pair=s.grasp_pair,
                      support_face=new_support, horizontal_axis=horiz)


# ---------------------------------------------------------------------------
# Goal-overlap metrics

def _covered_area(region: ContactRegion, goals: list[GoalRegion]) -> float:
    """Area of the pad covered by the union of same-face goals.

    Inclusion-exclusion over goal subsets; intersections of convex polygons
    stay convex, and goal counts per face are small.
    """
    pad = region.polygon()
    same_face = [g.polygon for g in goals if g.face == region.face]
    if not same_face:
        return 0.0
    total = 0.0
    n = len(same_face)
    for mask in range(1, 1 << n):
        inter: ConvexPolygon2 | None = pad
        bits = 0
        for i in range(n):
            if mask >> i & 1:
                bits += 1
                inter = convex_intersection(inter, same_face[i])
                if inter is None:
                    break
        if inter is not None:
            total += (1.0 if bits % 2 == 1 else -1.0) * polygon_area(inter)
    return total


def region_outside_goal(s: GraspState, goals: list[GoalRegion]) -> float:
    """Total pad area (both fingers) left outside the goal regions, in m^2."""
    total = 0.0
    for region in (s.left, s.right):
        total += region.area() - _covered_area(region, goals)
    return max(0.0, total)


def overlap_ratio(s: GraspState, goals: list[GoalRegion]) -> tuple[float, float]:
    """Per-finger fraction of pad area inside the goals on its face."""
    out = []
    for region in (s.left, s.right):
        area = region.area()
        if area <= 0.0:
            raise InvalidStateError("contact region has zero area")
        ratio = min(1.0, max(0.0, _covered_area(region, goals) / area))
        if ratio > 1.0 - 1e-9:
            ratio = 1.0  # swallow clipping round-off for fully covered pads
        out.append(ratio)
    return out[0], out[1]


def state_key(s: GraspState, quantum: float = 1e-7) -> tuple:
    """Hashable lattice key for duplicate detection in search.

    Action steps are orders of magnitude larger than the quantum, so equal
    states collide and distinct lattice points never do.
    """
    def q(x: float) -> int:
        return int(round(x / quantum))

    def angle_key(theta: float) -> int:
        twopi = 2.0 * math.pi
        r = theta % twopi
        if twopi - r < 5e-8:
            r = 0.0
        return q(r)

    return (
        s.grasp_pair, s.support_face, s.left.face,
        q(s.left.center[0]), q(s.left.center[1]), angle_key(s.left.orientation),
        q(s.right.center[0]), q(s.right.center[1]), angle_key(s.right.orientation),
    )
