from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from wihmplan.cli import main

from conftest import FIXTURES


@pytest.fixture()
def workdir(tmp_path: Path) -> Path:
    for name in ("square_prism.json", "sq_t1_shift_start.json", "sq_t1_shift_goals.json",
                 "chain.json"):
        shutil.copy(FIXTURES / name, tmp_path / name)
    return tmp_path


def run_cli(*argv: str) -> int:
    return main(list(argv))


class TestPlanCommand:
    def test_happy_path_writes_plan(self, workdir):
        out = workdir / "plan.json"
        code = run_cli("plan", "--object", str(workdir / "square_prism.json"),
                       "--goals", str(workdir / "sq_t1_shift_goals.json"),
                       "--start", str(workdir / "sq_t1_shift_start.json"),
                       "--out", str(out))
        assert code == 0
        data = json.loads(out.read_text())
        assert data["status"] == "exact-goal"
        assert len(data["actions"]) >= 1

    def test_missing_required_flag_usage_error(self, workdir, capsys):
        code = run_cli("plan", "--object", str(workdir / "square_prism.json"),
                       "--start", str(workdir / "sq_t1_shift_start.json"),
                       "--out", str(workdir / "p.json"))
        assert code == 2

    def test_unknown_subcommand_usage_error(self):
        assert run_cli("frobnicate") == 2

    def test_nonexistent_file_input_error(self, workdir):
        code = run_cli("plan", "--object", str(workdir / "nope.json"),
                       "--goals", str(workdir / "sq_t1_shift_goals.json"),
                       "--start", str(workdir / "sq_t1_shift_start.json"),
                       "--out", str(workdir / "p.json"))
        assert code == 2

    def test_nonconvex_goal_named_in_error(self, workdir, caplog):
        bad = workdir / "bad_goals.json"
        bad.write_text(json.dumps([
            {"face": 0, "polygon": [[0, 0], [0.02, 0], [0.002, 0.002], [0, 0.02]]},
        ]))
        code = run_cli("plan", "--object", str(workdir / "square_prism.json"),
                       "--goals", str(bad),
                       "--start", str(workdir / "sq_t1_shift_start.json"),
                       "--out", str(workdir / "p.json"))
        assert code == 2
        assert any("goal 0" in rec.message for rec in caplog.records)

    def test_start_outside_face_input_error(self, workdir, caplog):
        bad = workdir / "bad_start.json"
        bad.write_text(json.dumps({
            "left": {"face": 0, "center": [0.5, 0.5]},
            "right": {"face": 2, "center": [0.02, 0.02]},
            "support_face": 4,
        }))
        code = run_cli("plan", "--object", str(workdir / "square_prism.json"),
                       "--goals", str(workdir / "sq_t1_shift_goals.json"),
                       "--start", str(bad),
                       "--out", str(workdir / "p.json"))
        assert code == 2

    def test_unreachable_goal_exits_planning_failure(self, workdir):
        sliver = workdir / "sliver_goals.json"
        sliver.write_text(json.dumps([
            {"face": 0, "polygon": [[0, 0.095], [0.04, 0.095], [0.04, 0.1], [0, 0.1]]},
            {"face": 2, "polygon": [[0, 0.095], [0.04, 0.095], [0.04, 0.1], [0, 0.1]]},
        ]))
        budget = workdir / "budget.json"
        budget.write_text(json.dumps({"cost": {"node_budget": 2000}}))
        code = run_cli("plan", "--object", str(workdir / "square_prism.json"),
                       "--goals", str(sliver),
                       "--start", str(workdir / "sq_t1_shift_start.json"),
                       "--config", str(budget),
                       "--out", str(workdir / "p.json"))
        assert code == 4
        assert json.loads((workdir / "p.json").read_text())["status"] == "best-effort"


class TestSimulateCommand:
    def test_noiseless_roundtrip(self, workdir):
        plan_path = workdir / "plan.json"
        run_cli("plan", "--object", str(workdir / "square_prism.json"),
                "--goals", str(workdir / "sq_t1_shift_goals.json"),
                "--start", str(workdir / "sq_t1_shift_start.json"),
                "--out", str(plan_path))
        out = workdir / "sim.json"
        code = run_cli("simulate", "--plan", str(plan_path),
                       "--object", str(workdir / "square_prism.json"),
                       "--start", str(workdir / "sq_t1_shift_start.json"),
                       "--out", str(out))
        assert code == 0
        data = json.loads(out.read_text())
        assert data["mode"] == "noiseless"
        assert data["failed"] is False

    def test_noise_mode_stats(self, workdir):
        plan_path = workdir / "plan.json"
        run_cli("plan", "--object", str(workdir / "square_prism.json"),
                "--goals", str(workdir / "sq_t1_shift_goals.json"),
                "--start", str(workdir / "sq_t1_shift_start.json"),
                "--out", str(plan_path))
        out = workdir / "noise.json"
        code = run_cli("simulate", "--plan", str(plan_path),
                       "--object", str(workdir / "square_prism.json"),
                       "--start", str(workdir / "sq_t1_shift_start.json"),
                       "--noise", "0.002", "--trials", "50", "--seed", "3",
                       "--out", str(out))
        assert code == 0
        data = json.loads(out.read_text())
        assert data["mode"] == "noise"
        assert data["trials"] == 50
        assert 0 <= data["failures"] <= 50


class TestDeterminism:
    def test_plan_and_simulate_byte_identical(self, workdir):
        paths = []
        for tag in ("a", "b"):
            plan_path = workdir / f"plan_{tag}.json"
            sim_path = workdir / f"sim_{tag}.json"
            assert run_cli("plan", "--object", str(workdir / "square_prism.json"),
                           "--goals", str(workdir / "sq_t1_shift_goals.json"),
                           "--start", str(workdir / "sq_t1_shift_start.json"),
                           "--out", str(plan_path)) == 0
            assert run_cli("simulate", "--plan", str(plan_path),
                           "--object", str(workdir / "square_prism.json"),
                           "--start", str(workdir / "sq_t1_shift_start.json"),
                           "--out", str(sim_path)) == 0
            paths.append((plan_path, sim_path))
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()


class TestTrajectoryCommand:
    def test_pivot_plan_emits_waypoints(self, workdir):
        shutil.copy(FIXTURES / "sq_t3_caps_start.json", workdir / "start.json")
        shutil.copy(FIXTURES / "sq_t3_caps_goals.json", workdir / "goals.json")
        plan_path = workdir / "plan.json"
        assert run_cli("plan", "--object", str(workdir / "square_prism.json"),
                       "--goals", str(workdir / "goals.json"),
                       "--start", str(workdir / "start.json"),
                       "--out", str(plan_path)) == 0
        traj = workdir / "traj.csv"
        code = run_cli("trajectory", "--plan", str(plan_path),
                       "--object", str(workdir / "square_prism.json"),
                       "--chain", str(workdir / "chain.json"),
                       "--steps", "10", "--out", str(traj))
        assert code == 0
        lines = traj.read_text().strip().splitlines()
        assert lines[0] == "step,x,y,z,qw,qx,qy,qz"
        assert len(lines) > 10  # pivot stages expand into many waypoints


class TestUnfoldCommand:
    def test_svg_written(self, workdir):
        out = workdir / "layout.svg"
        code = run_cli("unfold", "--object", str(workdir / "square_prism.json"),
                       "--face", "4", "--goals", str(workdir / "sq_t1_shift_goals.json"),
                       "--out", str(out))
        assert code == 0
        content = out.read_text()
        assert content.startswith("<svg")
        assert content.count("<polygon") >= 6 + 2  # all faces plus goal images


class TestBenchmarkCommand:
    def test_threshold_violation_exit_code(self, workdir, tmp_path):
        suite = {
            "tasks": [{"name": "impossible", "object": "square_prism.json",
                       "start": "sq_t1_shift_start.json",
                       "goals": "sliver_goals.json", "config": "budget.json"}],
            "thresholds": {"require_all_solved": True},
        }
        (workdir / "sliver_goals.json").write_text(json.dumps([
            {"face": 0, "polygon": [[0, 0.095], [0.04, 0.095], [0.04, 0.1], [0, 0.1]]},
            {"face": 2, "polygon": [[0, 0.095], [0.04, 0.095], [0.04, 0.1], [0, 0.1]]},
        ]))
        (workdir / "budget.json").write_text(json.dumps({"cost": {"node_budget": 2000}}))
        (workdir / "suite.json").write_text(json.dumps(suite))
        code = run_cli("benchmark", "--suite", str(workdir / "suite.json"),
                       "--out", str(workdir / "report.csv"))
        assert code == 3
        assert (workdir / "report.csv").exists()

    def test_passing_single_task_suite(self, workdir):
        suite = {
            "tasks": [{"name": "sq_t1", "object": "square_prism.json",
                       "start": "sq_t1_shift_start.json",
                       "goals": "sq_t1_shift_goals.json"}],
            "thresholds": {"min_mean_overlap": 0.7, "require_all_solved": True},
        }
        (workdir / "suite.json").write_text(json.dumps(suite))
        code = run_cli("benchmark", "--suite", str(workdir / "suite.json"),
                       "--out", str(workdir / "report.csv"),
                       "--json-out", str(workdir / "report.json"))
        assert code == 0
        assert (workdir / "report.json").exists()
