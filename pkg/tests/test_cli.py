import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from scenec import cli
from scenec.apicheck import bundled_index_path
from scenec.emit import load_scene

from support import CATALOG, CLEAN_LOG, PLANS, trajectory_csv
from test_plan import MINIMAL

DANGLING = MINIMAL + ("  - name: lamp\n    construction:\n      kind: procedural\n      size: [0.2, 0.2, 0.5]\n"
                      "    topology:\n      role: child\n      ref: desk\n      relation: place_on\n")


def run(*argv):
    return cli.main([str(a) for a in argv])


def compile_golden(tmp_path, name="robot_office", *extra):
    out = tmp_path / name
    code = run("compile", "--plan", PLANS / f"{name}.plan", "--catalog", CATALOG, "--out", out, *extra)
    return code, out


@pytest.mark.parametrize("name", ["fsi_tank", "outdoor_vehicle", "robot_office"])
def test_compile_golden_exits_zero(tmp_path, name):
    code, out = compile_golden(tmp_path, name)
    assert code == 0
    report = json.loads((out / "scene_report.json").read_text())
    assert report["violations"] == [] and report["report"]["verdict"] == "accept"
    assert not (out / "skeleton.py").exists()


def test_compile_is_byte_stable(tmp_path):
    _, a = compile_golden(tmp_path / "a", "fsi_tank", "--emit-skeleton")
    _, b = compile_golden(tmp_path / "b", "fsi_tank", "--emit-skeleton")
    for f in ("scene.json", "scene_report.json", "skeleton.py"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_dangling_reference_reports_its_location(tmp_path, capsys):
    plan = tmp_path / "bad.plan"
    plan.write_text(DANGLING)
    assert run("compile", "--plan", plan, "--out", tmp_path / "o") == 1
    err = capsys.readouterr().err
    assert "line 22, column 12" in err and "desk" in err
    report = json.loads((tmp_path / "o" / "scene_report.json").read_text())
    assert report["error"]["kind"] == "dangling_reference" and not (tmp_path / "o" / "scene.json").exists()


def test_missing_size_needs_clarification(tmp_path, capsys):
    plan = tmp_path / "p.plan"
    plan.write_text(MINIMAL.replace("      size: {x: 2.0, y: 1.0, z: 0.75}\n", ""))
    assert run("compile", "--plan", plan, "--out", tmp_path / "o") == 1
    assert "needs_clarification" in capsys.readouterr().err


def test_catalog_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.CATALOG_ENV, str(CATALOG))
    assert run("compile", "--plan", PLANS / "robot_office.plan", "--out", tmp_path) == 0
    monkeypatch.delenv(cli.CATALOG_ENV)
    assert run("compile", "--plan", PLANS / "robot_office.plan", "--out", tmp_path) == 1


@pytest.mark.parametrize("argv", [
    ["compile", "--plan", "/nonexistent.plan", "--out", "{tmp}"],
    ["compile", "--plan", str(PLANS / "robot_office.plan"), "--catalog", "{tmp}/cat.json", "--out", "{tmp}"],
    ["check-api", "--source", "/nonexistent.py"],
    ["check-api", "--source", "{tmp}/s.py", "--index", "{tmp}/cat.json"],
    ["frobnicate"],
    ["compile", "--plan"],
])
def test_configuration_errors_exit_two(tmp_path, argv):
    (tmp_path / "cat.json").write_text("{broken")
    (tmp_path / "s.py").write_text("import pychrono\n")
    assert run(*[a.replace("{tmp}", str(tmp_path)) for a in argv]) == 2


def test_check_api_on_emitted_skeleton(tmp_path, capsys):
    _, out = compile_golden(tmp_path, "robot_office", "--emit-skeleton")
    assert run("check-api", "--source", out / "skeleton.py") == 0
    raw = json.loads(bundled_index_path().read_text())
    raw["symbols"] = [s for s in raw["symbols"] if s["path"] != "pychrono.ChBody.SetPos"]
    (tmp_path / "idx.json").write_text(json.dumps(raw))
    capsys.readouterr()
    assert run("check-api", "--source", out / "skeleton.py", "--index", tmp_path / "idx.json", "--json") == 1
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "reject" and {f["category"] for f in report["failures"]} == {"api_error"}


def test_unparseable_source_fails(tmp_path):
    (tmp_path / "s.py").write_text("def (:\n")
    assert run("check-api", "--source", tmp_path / "s.py") == 1


@pytest.fixture
def compiled(tmp_path):
    _, out = compile_golden(tmp_path)
    scene = load_scene((out / "scene.json").read_text())
    (out / "run.log").write_text(CLEAN_LOG)
    return out, scene


def judge(out, traj_text, report=None):
    (out / "traj.csv").write_text(traj_text)
    argv = ["judge", "--plan", PLANS / "robot_office.plan", "--scene", out / "scene.json",
            "--traj", out / "traj.csv", "--log", out / "run.log"]
    return run(*argv, *(["--out", report] if report else []))


def test_judge_accepts_and_is_byte_identical(compiled):
    out, scene = compiled
    traj = trajectory_csv(scene, {"robot": lambda t: (0.5 * t, 0.0, 0.0)})
    assert judge(out, traj, out / "r1.json") == 0
    assert judge(out, traj, out / "r2.json") == 0
    assert (out / "r1.json").read_bytes() == (out / "r2.json").read_bytes()
    assert json.loads((out / "r1.json").read_text())["verdict"] == "accept"


def test_judge_rejects_tunneling(compiled, capsys):
    out, scene = compiled
    traj = trajectory_csv(scene, {"robot": lambda t: (0.5 * t, 0.0, -2.0 * t)})
    assert judge(out, traj) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["failures"][0]["evidence"]["check"] == "tunneling"


@pytest.mark.parametrize("traj", ["t,name\n", "t,name,px,py,pz\n0,robot,0,0,inf\n", "t,name,px,py,pz\n0,ghost,0,0,0\n"])
def test_judge_bad_inputs_exit_two(compiled, traj):
    out, _ = compiled
    assert judge(out, traj) == 2


def test_judge_malformed_scene_exits_two(compiled):
    out, scene = compiled
    (out / "scene.json").write_text("{}")
    assert judge(out, trajectory_csv(scene)) == 2


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "d" / "f.txt"
    cli.write_atomic(target, "one\n")
    cli.write_atomic(target, "two\n")
    assert target.read_text() == "two\n" and os.listdir(target.parent) == ["f.txt"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    target = tmp_path / "f.txt"
    cli.write_atomic(target, "old\n")
    with pytest.raises(TypeError):
        cli.write_atomic(target, None)
    assert target.read_text() == "old\n" and os.listdir(tmp_path) == ["f.txt"]


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "scenec.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("scenec ")
