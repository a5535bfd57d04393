"""Resolved-scene documents and simulator script skeletons.

Scene documents are JSON with ``repr`` floats, so every coordinate
round-trips exactly. The skeleton is a straight-line script: body
creation, camera setup, a fixed-step loop and writers for the trajectory
and log formats the judge reads.
"""

from __future__ import annotations

import json
import math
import re

import numpy as np

from .geometry import Convention, Frame, GravityAxis, Orientation, WorldAabb, union_all
from .plan import DEFAULT_DENSITY, DEFAULT_DURATION, DEFAULT_TIME_STEP, RecordingMode, SimulationPlan
from .resolver import Body, CameraPose, RelationBinding, ResolvedScene, Surface

SCENE_FORMAT = "scenec.scene/1"
TRAJECTORY_FILE = "trajectory.csv"
LOG_FILE = "simulation.log"
TRAJECTORY_HEADER = "t,name,px,py,pz,vx,vy,vz"
SENTINEL = "SIM_DONE"
SAMPLE_PERIOD = 0.01
FSI_SPACING = 0.02


def _body_dict(b: Body) -> dict:
    return {
        "name": b.name,
        "kind": b.kind,
        "primitive": b.primitive,
        "asset_key": b.asset_key,
        "asset_type": b.asset_type,
        "factory": b.factory,
        "collision_proxy": b.collision_proxy,
        "convention": b.convention.value,
        "position": list(b.position),
        "rotation_deg": list(b.rotation_deg),
        "quaternion_wxyz": list(b.orientation.quaternion()),
        "extents": list(b.extents),
        "declared_extents": None if b.declared_extents is None else list(b.declared_extents),
        "aabb": b.aabb.to_dict(),
        "fixed": b.fixed,
        "is_dynamic": b.is_dynamic,
        "fsi_registration": b.fsi_registration,
        "density": b.density,
        "is_fluid": b.is_fluid,
        "seed": b.seed,
    }


def scene_to_dict(scene: ResolvedScene, plan: SimulationPlan | None = None) -> dict:
    out: dict = {"format": SCENE_FORMAT}
    if plan is not None:
        sp = plan.simulation_parameters
        out["plan_type"] = None if plan.plan_type is None else plan.plan_type.value
        out["recording_mode"] = (plan.recording_mode or RecordingMode.VSG_ONLY).value
        out["time_step"] = sp.time_step if sp.time_step is not None else DEFAULT_TIME_STEP
        out["simulation_duration"] = sp.simulation_duration if sp.simulation_duration is not None else DEFAULT_DURATION
        out["gravity"] = list(sp.gravity_vector())
    out["frame"] = {"gravity_axis": scene.frame.gravity_axis.value, "camera_up": list(scene.frame.camera_up)}
    out["bodies"] = [_body_dict(b) for b in scene.bodies.values()]
    out["order"] = list(scene.order)
    out["surfaces"] = {
        k: {"height": s.height, "floor": s.floor, "fluid": s.fluid, "container": s.container, "density": s.density}
        for k, s in scene.surfaces.items()
    }
    out["groups"] = {k: list(v) for k, v in scene.groups.items()}
    out["cameras"] = [
        {"step": c.step, "template": c.template, "position": list(c.position), "target": list(c.target), "up": list(c.up)}
        for c in scene.cameras
    ]
    out["bindings"] = [
        {"child": b.child, "refs": list(b.refs), "relation": b.relation, "params": b.params} for b in scene.bindings
    ]
    out["scene_bounds"] = scene.scene_bounds.to_dict()
    return out


def emit_scene(scene: ResolvedScene, plan: SimulationPlan | None = None) -> str:
    return json.dumps(scene_to_dict(scene, plan), indent=2, allow_nan=False) + "\n"


def _t3(v) -> tuple[float, float, float]:
    return tuple(float(x) for x in v)


def load_scene(text: str) -> ResolvedScene:
    """Rebuild a :class:`ResolvedScene` from :func:`emit_scene` output."""
    data = json.loads(text)
    if data.get("format") != SCENE_FORMAT:
        raise ValueError(f"not a scene document (format {data.get('format')!r})")
    bodies = {}
    for rec in data["bodies"]:
        rot = rec["rotation_deg"]
        bodies[rec["name"]] = Body(
            name=rec["name"],
            kind=rec["kind"],
            primitive=rec["primitive"],
            convention=Convention(rec["convention"]),
            position=_t3(rec["position"]),
            orientation=Orientation(deg_z=float(rot[2]), deg_x=float(rot[0])),
            extents=_t3(rec["extents"]),
            declared_extents=None if rec["declared_extents"] is None else _t3(rec["declared_extents"]),
            aabb=WorldAabb(_t3(rec["aabb"]["min"]), _t3(rec["aabb"]["max"])),
            fixed=rec["fixed"],
            is_dynamic=rec["is_dynamic"],
            fsi_registration=rec["fsi_registration"],
            density=rec["density"],
            is_fluid=rec["is_fluid"],
            asset_key=rec["asset_key"],
            asset_type=rec["asset_type"],
            collision_proxy=rec["collision_proxy"],
            factory=rec["factory"],
            seed=rec["seed"],
        )
    surfaces = {k: Surface(v["height"], v["floor"], v["fluid"], v["container"], v["density"])
                for k, v in data["surfaces"].items()}
    cams = tuple(CameraPose(_t3(c["position"]), _t3(c["target"]), _t3(c["up"]), c["step"], c["template"])
                 for c in data["cameras"])
    bindings = tuple(RelationBinding(b["child"], tuple(b["refs"]), b["relation"], b["params"]) for b in data["bindings"])
    bounds = union_all(b.aabb for b in bodies.values()) or WorldAabb((0.0,) * 3, (0.0,) * 3)
    return ResolvedScene(
        frame=Frame(GravityAxis(data["frame"]["gravity_axis"])),
        bodies=bodies,
        order=tuple(data["order"]),
        bindings=bindings,
        surfaces=surfaces,
        groups={k: tuple(v) for k, v in data["groups"].items()},
        scene_bounds=bounds,
        cameras=cams,
    )


# -- skeleton --------------------------------------------------------------------


def look_at_quaternion(position, target, up) -> tuple[float, float, float, float]:
    """(w, x, y, z) rotating +X onto the view direction with +Z toward ``up``."""
    f = np.asarray(target, dtype=float) - np.asarray(position, dtype=float)
    f /= np.linalg.norm(f)
    left = np.cross(np.asarray(up, dtype=float), f)
    if np.linalg.norm(left) < 1e-12:
        left = np.cross((1.0, 0.0, 0.0) if abs(f[0]) < 0.9 else (0.0, 1.0, 0.0), f)
    left /= np.linalg.norm(left)
    u = np.cross(f, left)
    m = np.column_stack([f, left, u])
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        q = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = ((m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = ((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s)
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = ((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s)
    return tuple(float(v) for v in q)


def _f(v: float) -> str:
    return repr(float(v))


def _vec(v) -> str:
    return f"chrono.ChVector3d({', '.join(_f(x) for x in v)})"


def _quat(q) -> str:
    return f"chrono.ChQuaterniond({', '.join(_f(x) for x in q)})"


def _ident(name: str, used: set[str]) -> str:
    base = "body_" + re.sub(r"\W", "_", name)
    ident, i = base, 2
    while ident in used:
        ident, i = f"{base}_{i}", i + 1
    used.add(ident)
    return ident


def _body_lines(b: Body, var: str) -> list[str]:
    sx, sy, sz = b.extents
    rho = _f(b.density if b.density is not None else DEFAULT_DENSITY)
    lines = [f"# {b.name}: {b.primitive or b.asset_type or b.kind}, {'fixed' if b.fixed else 'dynamic'}"]
    if b.collision_proxy:
        lines.append(f"# collision proxy: {b.collision_proxy}")
    if b.factory:
        lines.append(f"# factory: {b.factory}")
    if b.is_container:
        lines.append(f"{var} = chrono.ChBody()")
    elif b.kind == "asset" and b.asset_type in (None, "mesh"):
        lines.append(f"{var} = chrono.ChBodyEasyMesh({json.dumps(b.asset_key)}, {rho}, "
                     "compute_mass=True, visualize=True, collide=True)")
    elif b.primitive == "sphere":
        lines.append(f"{var} = chrono.ChBodyEasySphere({_f(sx / 2)}, {rho}, visualize=True, collide=True)")
    elif b.primitive == "cylinder":
        lines.append(f"{var} = chrono.ChBodyEasyCylinder(chrono.ChAxis_Z, {_f(sx / 2)}, {_f(sz)}, {rho}, "
                     "visualize=True, collide=True)")
    else:
        # boxes, and a box proxy for assets without a mesh loader
        lines.append(f"{var} = chrono.ChBodyEasyBox({_f(sx)}, {_f(sy)}, {_f(sz)}, {rho}, visualize=True, collide=True)")
    center = b.aabb.centroid
    lines += [
        f"{var}.SetName({json.dumps(b.name)})",
        f"{var}.SetPos({_vec(center)})",
        f"{var}.SetRot({_quat(b.orientation.quaternion())})",
        f"{var}.SetFixed({b.fixed})",
        f"system.Add({var})",
        "",
    ]
    return lines


def emit_skeleton(scene: ResolvedScene, plan: SimulationPlan) -> str:
    sp = plan.simulation_parameters
    dt = sp.time_step if sp.time_step is not None else DEFAULT_TIME_STEP
    duration = sp.simulation_duration if sp.simulation_duration is not None else DEFAULT_DURATION
    g = sp.gravity_vector()
    mode = plan.recording_mode or RecordingMode.VSG_ONLY
    fluids = [b for b in scene.bodies.values() if b.is_fluid]
    solids = [b for b in scene.bodies.values() if not b.is_fluid]
    sample_every = max(1, int(round(SAMPLE_PERIOD / dt)))

    L = ['"""Simulation script skeleton with resolved poses as literals."""', "", "import pychrono as chrono"]
    if fluids:
        L.append("import pychrono.fsi as chrono_fsi")
    if mode is RecordingMode.SENSOR_CAMS:
        L.append("import pychrono.sensor as chrono_sens")
    else:
        L.append("import pychrono.vsg as chrono_vsg")
    L += [
        "",
        f"TIME_STEP = {_f(dt)}",
        f"DURATION = {_f(duration)}",
        f"SAMPLE_EVERY = {sample_every}",
        "",
        "system = chrono.ChSystemNSC()",
        f"system.SetGravitationalAcceleration({_vec(g)})",
        "",
        "ground = chrono.ChBody()",
        "ground.SetFixed(True)",
        "system.Add(ground)",
        "",
    ]
    used: set[str] = set()
    var_of = {}
    for b in solids:
        var_of[b.name] = _ident(b.name, used)
        L += _body_lines(b, var_of[b.name])

    if fluids:
        L.append(f"fsi = chrono_fsi.ChFsiProblemCartesian(system, {_f(FSI_SPACING)})")
        for b in solids:
            if b.is_container:
                L.append(f"fsi.AddBoxContainer({_vec(b.extents)}, {_vec(b.position)})")
        for b in fluids:
            L.append(f"# fluid volume {b.name}")
            rho = b.density if b.density is not None else DEFAULT_DENSITY
            L.append(f"fsi.AddBoxFluid({_vec(b.aabb.sizes)}, {_vec(b.aabb.centroid)}, {_f(rho)})")
        for b in solids:
            if b.fsi_registration == "fsi_solid":
                L.append(f"fsi.AddRigidBody({var_of[b.name]}, True)")
        L += ["fsi.Initialize()", ""]

    cams = list(scene.cameras)
    if mode is RecordingMode.SENSOR_CAMS:
        L.append("manager = chrono_sens.ChSensorManager(system)")
        for i, c in enumerate(cams):
            q = look_at_quaternion(c.position, c.target, c.up)
            L += [
                f"# camera {i}: step {c.step}, {c.template or 'explicit'}",
                f"cam_{i} = chrono_sens.ChCameraSensor(ground, 30.0, chrono.ChFramed({_vec(c.position)}, {_quat(q)}), "
                "1280, 720, 1.0472)",
                f'cam_{i}.SetName("camera_{i}")',
                f'cam_{i}.PushFilter(chrono_sens.ChFilterSave("frames/camera_{i}/"))',
                f"manager.AddSensor(cam_{i})",
            ]
        L.append("")
    else:
        L += [
            "vis = chrono_vsg.ChVisualSystemVSG()",
            "vis.AttachSystem(system)",
            f"vis.SetWindowTitle({json.dumps('scene')})",
        ]
        if cams:
            L.append(f"vis.AddCamera({_vec(cams[0].position)}, {_vec(cams[0].target)})")
        L += ["vis.Initialize()", ""]

    L += [
        f'traj = open("{TRAJECTORY_FILE}", "w")',
        f'traj.write("{TRAJECTORY_HEADER}\\n")',
        f'log = open("{LOG_FILE}", "w")',
        f'log.write("INFO | scene built with {len(solids)} bodies and {len(fluids)} fluid volumes\\n")',
        "",
        "",
        "def record(t):",
    ]
    if not solids:
        L.append("    return None")
    for b in solids:
        var = var_of[b.name]
        # rows carry the scene-document position (floor point for generated boundaries)
        dz = b.aabb.centroid[2] - b.position[2]
        pz = "p.z" if dz == 0 else f"p.z - {_f(dz)}"
        L += [
            f"    p = {var}.GetPos()",
            f"    v = {var}.GetPosDt()",
            f'    traj.write(f"{{t!r}},{b.name},{{p.x!r}},{{p.y!r}},{{{pz}!r}},{{v.x!r}},{{v.y!r}},{{v.z!r}}\\n")',
        ]
    stepper = "fsi" if fluids else "system"
    L += [
        "",
        "",
        "step = 0",
        "record(system.GetChTime())",
        "while system.GetChTime() < DURATION - 0.5 * TIME_STEP:",
        f"    {stepper}.DoStepDynamics(TIME_STEP)",
        "    step += 1",
        "    if step % SAMPLE_EVERY == 0:",
        "        record(system.GetChTime())",
    ]
    if mode is RecordingMode.SENSOR_CAMS:
        L.append("        manager.Update()")
    else:
        L.append("        vis.Render()")
    L += [
        "",
        'log.write(f"INFO | reached t = {system.GetChTime()!r}\\n")',
        f'log.write("{SENTINEL}\\n")',
        "traj.close()",
        "log.close()",
        "",
    ]
    return "\n".join(L)
