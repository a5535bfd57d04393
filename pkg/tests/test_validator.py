import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scenec.resolver import moved, resolve_scene
from scenec.validator import ALL_CHECKS, FLOAT_FRACTION_TOL, blocking, check_scene, flank_pairs

from support import GOLDEN, corrupt_aabb, floor, make_plan, mutate, obj, random_plan


def ids(violations):
    return {v.check_id for v in violations}


def shift(scene, name, dx=0.0, dy=0.0, dz=0.0):
    b = scene.bodies[name]
    return scene.with_body(moved(b, position=np.add(b.position, (dx, dy, dz))))


def build(objects):
    plan = make_plan(objects)
    return plan, resolve_scene(plan)


@pytest.mark.parametrize("name", GOLDEN)
def test_golden_scenes_are_clean(golden, name):
    plan, scene = golden[name]
    assert check_scene(scene, plan) == []


BRIDGE = [obj("a", (2, 2, 1), pos=(-2, 0, 0.5)), obj("b", (2, 2, 1), pos=(2, 0, 0.5)),
          obj("br", (0.5, 1, 0.1), ref=["a", "b"], rel=["bridge_between_a_and_b", "flush_with_platform_top"])]


def test_bridge_outside_its_flanks():
    plan, scene = build(BRIDGE)
    bad = check_scene(shift(scene, "br", dx=3.0), plan, checks=("bridge_between",))
    assert len(bad) == 2 and {v.subjects for v in bad} == {("br", "a", "b")}
    assert sorted(v.measured for v in bad) == [pytest.approx(1.0), pytest.approx(3.0)]


def test_bridge_span_overrun_only():
    plan, scene = build(BRIDGE)
    br = scene.bodies["br"]
    wide = scene.with_body(moved(br, extents=(2.5, 1.0, 0.1)))
    bad = check_scene(wide, plan, checks=("bridge_between",))
    assert [v.measured for v in bad] == [pytest.approx(0.25)]


TANK = [obj("tank", (4, 2, 1.5), primitive="generated_boundary"),
        obj("water", ref="tank", rel="fills_container_lower_half", primitive="fluid_domain", fixed=False),
        obj("raft", (1, 1, 0.2), ref="water", rel="floats_at_surface", fixed=False, density=500.0),
        obj("crate", (0.5, 0.5, 0.5), ref="tank", rel="place_in")]


def test_floats_violation_reports_measured_and_limit():
    plan, scene = build(TANK)
    bad = check_scene(shift(scene, "raft", dz=-0.3 * 0.2), plan, checks=("floats_at_surface",))
    (v,) = bad
    assert v.subjects == ("raft", "water")
    assert v.measured == pytest.approx(0.3, abs=1e-9) and v.limit == FLOAT_FRACTION_TOL
    d = v.to_dict()
    assert d["measured"] == {"value": v.measured, "units": "1"} and d["severity"] == "error"


def test_tank_scene_clean():
    plan, scene = build(TANK)
    assert check_scene(scene, plan) == []


def test_containment_breach():
    plan, scene = build(TANK)
    bad = check_scene(shift(scene, "crate", dz=1.5), plan, checks=("containment",))
    assert [(v.subjects, round(v.measured, 9)) for v in bad] == [(("crate", "tank"), 0.5)]


def test_interpenetration_depth():
    plan, scene = build([floor(), obj("t", (1, 1, 1), ref="floor", rel="place_on"),
                         obj("c", (0.5, 0.5, 0.5), ref="t", rel="front_of")])
    bad = check_scene(shift(scene, "c", dx=-0.2), plan, checks=("interpenetration",))
    assert [(v.subjects, round(v.measured, 9)) for v in bad] == [(("t", "c"), 0.2)]


def test_touching_faces_do_not_interpenetrate():
    plan, scene = build([floor(), obj("t", (1, 1, 1), ref="floor", rel="place_on"),
                         obj("c", (0.5, 0.5, 0.5), ref="t", rel="adjacent_plus_y_bottom_flush")])
    assert check_scene(scene, plan, checks=("interpenetration",)) == []


def test_camera_up_must_oppose_gravity():
    plan = make_plan([floor()], cameras=[{"template": "side_plus_x"}, {"template": "top_down"}])
    scene = resolve_scene(plan)
    assert check_scene(scene, plan, checks=("camera_up",)) == []
    tilted = dataclasses.replace(scene, cameras=(dataclasses.replace(scene.cameras[0], up=(0.0, 1.0, 0.0)),
                                                 dataclasses.replace(scene.cameras[1], up=(0.0, 0.0, 1.0))))
    bad = check_scene(tilted, plan, checks=("camera_up",))
    assert [v.subjects for v in bad] == [("camera[0]",), ("camera[1]",)]


def test_flank_pairs_on_planar_sides_are_advisory():
    objs = [floor(), obj("t", (1, 1, 1), ref="floor", rel="place_on"),
            obj("f", (0.5, 0.5, 0.5), ref="t", rel="front_of"),
            obj("b", (0.5, 0.5, 0.5), ref="t", rel="back_of")]
    plan, scene = build(objs)
    assert flank_pairs(plan) == [("t", "f", "FRONT_OF", "b", "BACK_OF", True)]
    bad = check_scene(shift(scene, "f", dx=-1.0), plan, checks=("flank_sides",))
    assert [v.severity for v in bad] == ["advisory"] and blocking(bad) == []


def test_flank_pairs_on_adjacency_block():
    objs = [obj("t", (1, 1, 1), pos=(0, 0, 0.5)),
            obj("p", (0.5, 0.5, 0.5), ref="t", rel="adjacent_plus_x_centers"),
            obj("m", (0.5, 0.5, 0.5), ref="t", rel="adjacent_minus_x_centers")]
    plan, scene = build(objs)
    bad = check_scene(shift(scene, "m", dx=1.0), plan, checks=("flank_sides",))
    assert [(v.subjects, v.severity) for v in bad] == [(("m", "t"), "error")]


def test_corrupted_bounds_detected():
    plan, scene = build(TANK)
    bad = check_scene(corrupt_aabb(scene, "crate", 1e-4), plan, checks=("aabb_consistency",))
    assert [v.subjects for v in bad] == [("crate",)] and bad[0].measured == pytest.approx(1e-4)


def test_non_finite_pose_stops_later_checks():
    plan, scene = build(TANK)
    b = scene.bodies["crate"]
    broken = scene.with_body(dataclasses.replace(b, position=(float("nan"), 0.0, 0.0)))
    bad = check_scene(broken, plan)
    assert ids(bad) == {"pose_finite"}


def test_relation_residual_names_the_equation():
    plan, scene = build(TANK)
    bad = check_scene(shift(scene, "crate", dy=0.1), plan, checks=("relation_residual",))
    assert bad and all(v.subjects[0] == "crate" for v in bad)
    assert max(v.measured for v in bad) == pytest.approx(0.1)


def test_all_checks_registered():
    assert len(ALL_CHECKS) == 9 and len(set(ALL_CHECKS)) == 9


@given(st.integers(0, 10**6), st.integers(0, 2**32 - 1))
def test_any_mutation_is_detected(seed, rseed):
    plan = random_plan(seed)
    scene = resolve_scene(plan)
    bad, desc = mutate(scene, np.random.default_rng(rseed))
    assert blocking(check_scene(bad, plan)), desc
