import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scenec.apicheck import bundled_index, check_source
from scenec.emit import SCENE_FORMAT, emit_scene, emit_skeleton, load_scene, look_at_quaternion
from scenec.geometry import Orientation
from scenec.resolver import resolve_scene

from support import GOLDEN, floor, make_plan, random_plan


@pytest.mark.parametrize("name", GOLDEN)
def test_scene_round_trip_is_exact(golden, name):
    plan, scene = golden[name]
    text = emit_scene(scene, plan)
    back = load_scene(text)
    assert back.bodies == scene.bodies and back.cameras == scene.cameras
    assert emit_scene(back, plan) == text
    assert json.loads(text)["format"] == SCENE_FORMAT


@given(st.integers(0, 10**6))
def test_random_scene_round_trip(seed):
    plan = random_plan(seed)
    scene = resolve_scene(plan)
    text = emit_scene(scene, plan)
    assert load_scene(text).bodies == scene.bodies
    assert emit_scene(load_scene(text), plan) == text


@pytest.mark.parametrize("name", GOLDEN)
def test_skeleton_passes_api_check(golden, name):
    plan, scene = golden[name]
    src = emit_skeleton(scene, plan)
    compile(src, name, "exec")
    assert check_source(src, bundled_index()).ok


def test_sensor_cams_emit_camera_blocks():
    plan = make_plan([floor()], cameras=[{"template": "top_down"}, {"template": "side_minus_y"}],
                     recording="sensor_cams")
    src = emit_skeleton(resolve_scene(plan), plan)
    assert src.count("ChCameraSensor(") == 2 and "import pychrono.sensor" in src
    assert check_source(src, bundled_index()).ok


def test_vsg_mode_has_no_sensor_import():
    plan = make_plan([floor()], cameras=[{"template": "perspective"}])
    src = emit_skeleton(resolve_scene(plan), plan)
    assert "pychrono.sensor" not in src and "AddCamera(" in src


def test_fluid_scene_builds_fsi_problem(golden):
    plan, scene = golden["fsi_tank"]
    src = emit_skeleton(scene, plan)
    assert "AddBoxFluid(" in src and "fsi.Initialize()" in src


def test_skeleton_writes_the_judge_formats(golden):
    plan, scene = golden["robot_office"]
    src = emit_skeleton(scene, plan)
    assert "t,name,px,py,pz,vx,vy,vz" in src and "SIM_DONE" in src


@pytest.mark.parametrize("position, target, yaw", [((0, 0, 0), (1, 0, 0), 0.0), ((0, 0, 0), (0, 1, 0), 90.0),
                                                   ((1, 1, 0), (0, 1, 0), 180.0)])
def test_look_at_level_heading(position, target, yaw):
    q = look_at_quaternion(position, target, (0.0, 0.0, 1.0))
    assert q == pytest.approx(Orientation(yaw).quaternion(), abs=1e-12) or \
        q == pytest.approx(tuple(-c for c in Orientation(yaw).quaternion()), abs=1e-12)
