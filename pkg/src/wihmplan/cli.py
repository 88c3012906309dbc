"""Command-line entry point: plan, simulate, benchmark, trajectory, unfold.

Exit codes: 0 success, 2 bad input or usage, 3 benchmark threshold
violation, 4 planning did not reach the goal exactly.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from . import io as io_mod
from .errors import WihmplanError
from .geometry import unfold
from .kinematics import PivotChain, RigidTransform3, Waypoint, ee_to_pivot, full_pivot_trajectory
from .planner import plan as run_planner
from .transition import ActionKind, derive_resolutions, find_pivot_edge, world_context

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_THRESHOLD = 3
EXIT_PLANNING = 4

log = logging.getLogger("wihmplan")


def _default_config() -> str | None:
    return os.environ.get("WIHMPLAN_CONFIG") or None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wihmplan",
                                     description="Region-based within-hand manipulation planner")
    parser.add_argument("--verbose", action="store_true", help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="search for a manipulation plan")
    p_plan.add_argument("--object", required=True)
    p_plan.add_argument("--goals", required=True)
    p_plan.add_argument("--start", required=True)
    p_plan.add_argument("--config", default=_default_config())
    p_plan.add_argument("--out", required=True)

    p_sim = sub.add_parser("simulate", help="replay a plan, optionally with noise")
    p_sim.add_argument("--plan", required=True)
    p_sim.add_argument("--object", required=True)
    p_sim.add_argument("--start", required=True)
    p_sim.add_argument("--config", default=_default_config())
    p_sim.add_argument("--noise", type=float, default=None, help="uniform +-eta step noise (m)")
    p_sim.add_argument("--trials", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)

    p_bench = sub.add_parser("benchmark", help="run a task suite and emit a report")
    p_bench.add_argument("--suite", required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--json-out", default=None)

    p_traj = sub.add_parser("trajectory", help="emit end-effector waypoints for a plan")
    p_traj.add_argument("--plan", required=True)
    p_traj.add_argument("--object", required=True)
    p_traj.add_argument("--chain", required=True)
    p_traj.add_argument("--steps", type=int, default=25, help="waypoints per pivot stage")
    p_traj.add_argument("--out", required=True)

    p_unfold = sub.add_parser("unfold", help="render the unfolded face layout as SVG")
    p_unfold.add_argument("--object", required=True)
    p_unfold.add_argument("--face", type=int, required=True)
    p_unfold.add_argument("--goals", default=None)
    p_unfold.add_argument("--out", required=True)
    return parser


def _cmd_plan(args) -> int:
    obj = io_mod.load_object(args.object)
    resolution, cost = io_mod.load_configs(args.config)
    resolution = derive_resolutions(obj, resolution)
    goals = io_mod.load_goals(args.goals, obj)
    start = io_mod.load_state(args.start, obj, resolution)
    plan_ = run_planner(obj, start, goals, resolution, cost)
    io_mod.save_plan(plan_, args.out)
    log.info("status=%s actions=%d cost=%.6g objective=%.6g",
             plan_.status, len(plan_.actions), plan_.total_action_cost, plan_.objective)
    return EXIT_OK if plan_.status == "exact-goal" else EXIT_PLANNING


def _cmd_simulate(args) -> int:
    obj = io_mod.load_object(args.object)
    resolution, _ = io_mod.load_configs(args.config)
    resolution = derive_resolutions(obj, resolution)
    start = io_mod.load_state(args.start, obj, resolution)
    plan_ = io_mod.load_plan(args.plan)
    if args.noise is None:
        result = bench_mod.simulate(plan_, obj, start)
        payload = {
            "mode": "noiseless",
            "executed": result.executed,
            "failed": result.failed,
            "final_state": io_mod.state_to_dict(result.final_state),
        }
    else:
        payload = bench_mod.noise_robustness(plan_, obj, start, eta=args.noise,
                                             trials=args.trials, seed=args.seed)
        payload["mode"] = "noise"
    io_mod.dump_json(payload, args.out)
    return EXIT_OK


def _load_suite(path: str) -> tuple[list[bench_mod.TaskSpec], dict]:
    data = io_mod.read_json(path)
    base = Path(path).parent
    tasks = []
    for i, entry in enumerate(data.get("tasks", [])):
        for field in ("name", "object", "start", "goals"):
            if field not in entry:
                raise WihmplanError(f"{path}: task {i} missing field '{field}'")
        obj = io_mod.load_object(base / entry["object"])
        config_path = entry.get("config")
        resolution, cost = io_mod.load_configs(base / config_path if config_path else None)
        resolution = derive_resolutions(obj, resolution)
        start = io_mod.load_state(base / entry["start"], obj, resolution)
        goals = io_mod.load_goals(base / entry["goals"], obj)
        tasks.append(bench_mod.TaskSpec(
            name=entry["name"], obj=obj, start=start, goals=goals,
            resolution=resolution, cost=cost, trials=int(entry.get("trials", 1))))
    return tasks, data.get("thresholds", {})


def _cmd_benchmark(args) -> int:
    tasks, thresholds = _load_suite(args.suite)
    report = bench_mod.run_benchmark(tasks)
    bench_mod.emit_report(report, args.out)
    if args.json_out:
        bench_mod.emit_report(report, args.json_out, fmt="json")
    violations = []
    min_overlap = thresholds.get("min_mean_overlap")
    if min_overlap is not None and report.overall["mean_overlap"] < min_overlap:
        violations.append(
            f"mean_overlap {report.overall['mean_overlap']:.4f} < {min_overlap}")
    max_time = thresholds.get("max_task_planning_time_s")
    if max_time is not None:
        slow = [r.task for r in report.rows if r.planning_time_s > max_time]
        if slow:
            violations.append(f"planning time over {max_time}s: {', '.join(slow)}")
    if thresholds.get("require_all_solved"):
        unsolved = [r.task for r in report.rows if r.status != "exact-goal"]
        if unsolved:
            violations.append(f"unsolved tasks: {', '.join(unsolved)}")
    for violation in violations:
        log.error("threshold violated: %s", violation)
    return EXIT_THRESHOLD if violations else EXIT_OK


def _cmd_trajectory(args) -> int:
    obj = io_mod.load_object(args.object)
    chain = io_mod.load_chain(args.chain)
    plan_ = io_mod.load_plan(args.plan)
    waypoints = plan_waypoints(plan_, obj, chain, steps_per_stage=args.steps)
    io_mod.write_trajectory_csv(waypoints, args.out)
    return EXIT_OK


def plan_waypoints(plan_, obj, chain: PivotChain, steps_per_stage: int = 25) -> list[Waypoint]:
    """Concatenated end-effector waypoints for every pivot/shift in a plan.

    Slides and in-hand rotations are finger-internal and emit no arm motion.
    The pose chain starts at the identity and stays continuous across
    actions.
    """
    from .kinematics import contact_shift_displacement

    current = RigidTransform3.identity()
    out: list[Waypoint] = [Waypoint(0, current)]
    for action, state in zip(plan_.actions, plan_.states[:-1]):
        if action.kind in (ActionKind.MOVE_CONTACT_UP, ActionKind.MOVE_CONTACT_DOWN):
            direction = "up" if action.kind == ActionKind.MOVE_CONTACT_UP else "down"
            delta = contact_shift_displacement(direction, action.magnitude)
            current = RigidTransform3(current.rotation, current.translation + delta)
            out.append(Waypoint(len(out), current))
        elif action.kind == ActionKind.PIVOT:
            info = find_pivot_edge(state, obj)
            if info is None:
                raise WihmplanError("plan contains a pivot that is infeasible in its state")
            ctx = world_context(state, obj)
            d4 = math.hypot(ctx.left_center_world[1] - info.edge_point_world[1],
                            ctx.left_center_world[2] - info.edge_point_world[2])
            pivot_chain = PivotChain(
                d1=chain.d1, theta_finger=chain.theta_finger, d2=chain.d2,
                d3=chain.d3, d4=d4, theta_contact=chain.theta_contact,
                theta_pivot=action.magnitude)
            anchor = current @ ee_to_pivot(pivot_chain)
            for wp in full_pivot_trajectory(pivot_chain, action.magnitude,
                                            steps_per_stage, world_pivot=anchor)[1:]:
                out.append(Waypoint(len(out), wp.pose))
            current = out[-1].pose
    return out


def _cmd_unfold(args) -> int:
    obj = io_mod.load_object(args.object)
    goals = io_mod.load_goals(args.goals, obj) if args.goals else None
    umap = unfold(obj, args.face)
    io_mod.render_unfold_svg(obj, umap, goals, args.out)
    return EXIT_OK


_COMMANDS = {
    "plan": _cmd_plan,
    "simulate": _cmd_simulate,
    "benchmark": _cmd_benchmark,
    "trajectory": _cmd_trajectory,
    "unfold": _cmd_unfold,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except WihmplanError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


def main(argv: list[str] | None = None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
