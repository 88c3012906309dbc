"""File formats: JSON objects/goals/states/plans/configs, CSV trajectories.

All writers emit sorted-key JSON so identical inputs produce byte-identical
files.  Loaders validate module invariants up front and name the offending
file and field in every error.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .errors import InvalidGeometryError, InvalidInputError, WihmplanError
from .geometry import ConvexPolygon2, ObjectModel, UnfoldedMap, build_prism
from .kinematics import PivotChain, Waypoint, rotation_to_quaternion
from .planner import CostConfig, Plan
from .transition import (
    Action,
    ActionKind,
    ContactRegion,
    GoalRegion,
    GraspState,
    ResolutionConfig,
)


def read_json(path: str | Path):
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InvalidInputError(f"{path}: file not found")
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: malformed JSON ({exc})")


def _require(data: dict, field: str, path) -> object:
    if field not in data:
        raise InvalidInputError(f"{path}: missing required field '{field}'")
    return data[field]


def dump_json(payload, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_object(path: str | Path) -> ObjectModel:
    data = read_json(path)
    name = str(data.get("name", Path(path).stem))
    units = data.get("units", "m")
    if units != "m":
        raise InvalidInputError(f"{path}: field 'units' must be 'm', got {units!r}")
    try:
        cross_section = ConvexPolygon2(_require(data, "cross_section", path))
    except InvalidGeometryError as exc:
        raise InvalidInputError(f"{path}: field 'cross_section' invalid: {exc}")
    height = float(_require(data, "height", path))
    return build_prism(cross_section, height, name=name)


def load_goals(path: str | Path, obj: ObjectModel) -> list[GoalRegion]:
    data = read_json(path)
    if not isinstance(data, list) or not data:
        raise InvalidInputError(f"{path}: expected a non-empty list of goal regions")
    goals = []
    for i, entry in enumerate(data):
        face = int(_require(entry, "face", path))
        if face < 0 or face >= len(obj.faces):
            raise InvalidInputError(f"{path}: goal {i} field 'face' = {face} does not exist")
        try:
            poly = ConvexPolygon2(_require(entry, "polygon", path))
        except InvalidGeometryError as exc:
            raise InvalidInputError(f"{path}: goal {i} field 'polygon' invalid: {exc}")
        for v in poly.vertices:
            if not obj.face(face).polygon.contains_point(v, tol=1e-6):
                raise InvalidInputError(
                    f"{path}: goal {i} polygon leaves face {face}")
        goals.append(GoalRegion(face, poly))
    return goals


def load_state(path: str | Path, obj: ObjectModel, resolution: ResolutionConfig) -> GraspState:
    data = read_json(path)
    sides = {}
    for side in ("left", "right"):
        entry = _require(data, side, path)
        sides[side] = {
            "face": int(_require(entry, "face", path)),
            "center": [float(v) for v in _require(entry, "center", path)],
            "orientation": entry.get("orientation"),
            "pad_width": float(entry.get("pad_width", resolution.pad_width)),
            "pad_height": float(entry.get("pad_height", resolution.pad_height)),
        }
    support = int(_require(data, "support_face", path))
    if sides["left"]["pad_width"] != sides["right"]["pad_width"] or \
            sides["left"]["pad_height"] != sides["right"]["pad_height"]:
        raise InvalidInputError(f"{path}: left/right pad dimensions must match")
    try:
        return GraspState.create(
            obj,
            left_face=sides["left"]["face"],
            right_face=sides["right"]["face"],
            support_face=support,
            left_center=sides["left"]["center"],
            right_center=sides["right"]["center"],
            pad_width=sides["left"]["pad_width"],
            pad_height=sides["left"]["pad_height"],
            left_orientation=sides["left"]["orientation"],
            right_orientation=sides["right"]["orientation"],
        )
    except WihmplanError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def load_configs(path: str | Path | None) -> tuple[ResolutionConfig, CostConfig]:
    if path is None:
        return ResolutionConfig(), CostConfig()
    data = read_json(path)
    res_fields = {f.name for f in dataclasses.fields(ResolutionConfig)}
    cost_fields = {f.name for f in dataclasses.fields(CostConfig)}
    res_data = data.get("resolution", {})
    cost_data = data.get("cost", {})
    for key in res_data:
        if key not in res_fields:
            raise InvalidInputError(f"{path}: unknown resolution field '{key}'")
    for key in cost_data:
        if key not in cost_fields:
            raise InvalidInputError(f"{path}: unknown cost field '{key}'")
    return ResolutionConfig(**res_data), CostConfig(**cost_data)


def load_chain(path: str | Path) -> PivotChain:
    data = read_json(path)
    kwargs = {}
    for name in ("d1", "theta_finger", "d2", "d3"):
        kwargs[name] = float(_require(data, name, path))
    # d4 (contact-to-edge distance) is normally derived from the plan state
    for name in ("d4", "theta_contact", "theta_pivot"):
        kwargs[name] = float(data.get(name, 0.0))
    return PivotChain(**kwargs)


# ---------------------------------------------------------------------------
# State / plan serialization

def region_to_dict(region: ContactRegion) -> dict:
    return {
        "face": region.face,
        "center": [float(region.center[0]), float(region.center[1])],
        "orientation": float(region.orientation),
        "pad_width": float(region.pad_width),
        "pad_height": float(region.pad_height),
    }


def state_to_dict(state: GraspState) -> dict:
    return {
        "left": region_to_dict(state.left),
        "right": region_to_dict(state.right),
        "grasp_pair": state.grasp_pair,
        "support_face": state.support_face,
        "horizontal_axis": [float(state.horizontal_axis[0]), float(state.horizontal_axis[1])],
    }


def region_from_dict(data: dict) -> ContactRegion:
    return ContactRegion(
        face=int(data["face"]),
        center=np.array([float(v) for v in data["center"]]),
        orientation=float(data["orientation"]),
        pad_width=float(data["pad_width"]),
        pad_height=float(data["pad_height"]),
    )


def state_from_dict(data: dict) -> GraspState:
    return GraspState(
        left=region_from_dict(data["left"]),
        right=region_from_dict(data["right"]),
        grasp_pair=int(data["grasp_pair"]),
        support_face=int(data["support_face"]),
        horizontal_axis=np.array([float(v) for v in data["horizontal_axis"]]),
    )


def action_to_dict(action: Action) -> dict:
    return {
        "kind": action.kind.name,
        "magnitude": float(action.magnitude),
        "arc_radius": float(action.arc_radius),
    }


def action_from_dict(data: dict) -> Action:
    return Action(
        kind=ActionKind[str(data["kind"])],
        magnitude=float(data["magnitude"]),
        arc_radius=float(data.get("arc_radius", 0.0)),
    )


def plan_to_dict(plan_: Plan) -> dict:
    return {
        "status": plan_.status,
        "actions": [action_to_dict(a) for a in plan_.actions],
        "states": [state_to_dict(s) for s in plan_.states],
        "step_costs": [float(c) for c in plan_.step_costs],
        "total_action_cost": float(plan_.total_action_cost),
        "terminal_outside_area": float(plan_.terminal_outside_area),
        "objective": float(plan_.objective),
        "tradeoff_weight": float(plan_.tradeoff_weight),
        "expansions": plan_.expansions,
    }


def plan_from_dict(data: dict) -> Plan:
    return Plan(
        actions=[action_from_dict(a) for a in data["actions"]],
        states=[state_from_dict(s) for s in data["states"]],
        step_costs=[float(c) for c in data["step_costs"]],
        total_action_cost=float(data["total_action_cost"]),
        terminal_outside_area=float(data["terminal_outside_area"]),
        objective=float(data["objective"]),
        status=str(data["status"]),
        tradeoff_weight=float(data["tradeoff_weight"]),
        expansions=int(data.get("expansions", 0)),
    )


def save_plan(plan_: Plan, path: str | Path) -> None:
    dump_json(plan_to_dict(plan_), path)


def load_plan(path: str | Path) -> Plan:
    return plan_from_dict(read_json(path))


# ---------------------------------------------------------------------------
# Trajectories and debug rendering

def write_trajectory_csv(waypoints: list[Waypoint], path: str | Path) -> None:
    lines = ["step,x,y,z,qw,qx,qy,qz"]
    for wp in waypoints:
        x, y, z = (float(v) for v in wp.pose.translation)
        qw, qx, qy, qz = rotation_to_quaternion(wp.pose.rotation)
        lines.append(f"{wp.index},{x!r},{y!r},{z!r},{qw!r},{qx!r},{qy!r},{qz!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_unfold_svg(obj: ObjectModel, umap: UnfoldedMap,
                      goals: list[GoalRegion] | None, path: str | Path) -> None:
    """Write the unfolded face layout (plus goal images) as a simple SVG."""
    polys = [(fid, poly.vertices) for fid, poly in sorted(umap.unfolded_polygons.items())]
    all_pts = np.concatenate([pts for _, pts in polys])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    scale = 720.0 / span
    margin = 24.0

    def svg_pts(pts: np.ndarray) -> str:
        mapped = (pts - lo) * scale + margin
        # SVG y grows downward; flip to keep the layout upright.
        height = (hi - lo)[1] * scale + 2 * margin
        return " ".join(f"{p[0]:.2f},{height - p[1]:.2f}" for p in mapped)

    width = (hi - lo)[0] * scale + 2 * margin
    height = (hi - lo)[1] * scale + 2 * margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}">'
    ]
    for fid, pts in polys:
        style = "fill:#dfe8f5;stroke:#44506b;stroke-width:1.5"
        if fid == umap.base_face:
            style = "fill:#f5e6c8;stroke:#8a6d1f;stroke-width:2"
        parts.append(f'<polygon points="{svg_pts(pts)}" style="{style}" />')
        center = (pts.min(axis=0) + pts.max(axis=0)) / 2.0
        mapped = (center - lo) * scale + margin
        parts.append(
            f'<text x="{mapped[0]:.1f}" y="{height - mapped[1]:.1f}" '
            f'font-size="14" text-anchor="middle">{fid}</text>')
    for goal in goals or []:
        pts = umap.to_plane(goal.face, goal.polygon.vertices)
        parts.append(
            f'<polygon points="{svg_pts(pts)}" '
            'style="fill:#9fd0a0;fill-opacity:0.7;stroke:#22662a;stroke-width:1.5" />')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
