"""Self-checks over a resolved scene.

Check ids:

* ``pose_finite`` - every plan object present with finite pose, rotation and extents
* ``bridge_between`` - spanning bodies lie strictly between their two refs
* ``flank_sides`` - flank pairs sit on opposite sides of their shared neighbour
* ``floats_at_surface`` - submerged fraction equals the density ratio
* ``interpenetration`` - no two solids overlap beyond tolerance
* ``containment`` - contained bodies lie inside their container
* ``camera_up`` - camera up anti-parallel to gravity (perpendicular for top-down views)
* ``relation_residual`` - every relation equation, default rule, yaw and extent re-derived
* ``aabb_consistency`` - stored bounds match the stored pose and extents

The residual check restates each predicate as anchor equalities written
independently of the resolver's placement code, so a perturbed pose or
size fails here even when it happens to keep the scene collision-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import vocabulary as V
from .geometry import BoxExtent, Convention, Orientation, WorldAabb, normalize_deg, reflect_yaw, union_all, world_aabb
from .plan import DEFAULT_DENSITY, ObjectSpec, SimulationPlan
from .resolver import (
    CONTACT_TOL,
    RELATIVE_SIDE_YAW,
    SPAWN_CLEARANCE,
    Body,
    ResolvedScene,
    anywhere_candidates,
    bridge_gap,
    random_yaw,
    rebuild_aabb,
)

INTERPENETRATION_TOL = 1e-6
RESIDUAL_TOL = 1e-9
FLOAT_FRACTION_TOL = 1e-9
CAMERA_TOL = 1e-9

ALL_CHECKS = (
    "pose_finite", "aabb_consistency", "bridge_between", "flank_sides", "floats_at_surface",
    "interpenetration", "containment", "camera_up", "relation_residual",
)


@dataclass(frozen=True)
class Violation:
    check_id: str
    subjects: tuple[str, ...]
    message: str
    measured: float | None = None
    limit: float | None = None
    units: str = "m"
    severity: str = "error"  # or "advisory"

    def to_dict(self) -> dict:
        out = {"check_id": self.check_id, "subjects": list(self.subjects), "message": self.message,
               "severity": self.severity}
        if self.measured is not None:
            out["measured"] = {"value": self.measured, "units": self.units}
            out["limit"] = {"value": self.limit, "units": self.units}
        return out


def blocking(violations: Iterable[Violation]) -> list[Violation]:
    return [v for v in violations if v.severity == "error"]


def check_scene(
    scene: ResolvedScene,
    plan: SimulationPlan,
    checks: Sequence[str] = ALL_CHECKS,
    interpenetration_tol: float = INTERPENETRATION_TOL,
    containment_tol: float = CONTACT_TOL,
) -> list[Violation]:
    """Run the selected checks; violations are returned, never raised."""
    out: list[Violation] = []
    for check in checks:
        fn = _CHECKS[check]
        if check == "interpenetration":
            out.extend(fn(scene, plan, interpenetration_tol))
        elif check == "containment":
            out.extend(fn(scene, plan, containment_tol))
        else:
            out.extend(fn(scene, plan))
        if check == "pose_finite" and out:
            # later checks assume finite numbers
            break
    return out


# -- (a) presence and finiteness ---------------------------------------------


def _check_pose_finite(scene: ResolvedScene, plan: SimulationPlan) -> list[Violation]:
    out = []
    for obj in plan.objects:
        body = scene.bodies.get(obj.name)
        if body is None:
            out.append(Violation("pose_finite", (obj.name,), "object missing from the resolved scene"))
            continue
        values = list(body.position) + list(body.rotation_deg) + list(body.extents)
        if not all(math.isfinite(v) for v in values):
            out.append(Violation("pose_finite", (obj.name,), "non-finite pose, rotation or extent"))
    for name in scene.bodies:
        if name not in plan.names:
            out.append(Violation("pose_finite", (name,), "scene body not declared in the plan"))
    return out


def _check_aabb(scene: ResolvedScene, plan: SimulationPlan) -> list[Violation]:
    out = []
    for body in scene.bodies.values():
        expect = rebuild_aabb(body)
        err = max(abs(a - b) for a, b in zip(body.aabb.min + body.aabb.max, expect.min + expect.max))
        if err > RESIDUAL_TOL:
            out.append(Violation("aabb_consistency", (body.name,), "stored bounds disagree with pose and extents",
                                 err, RESIDUAL_TOL))
    return out


# -- (b) bridges ---------------------------------------------------------------


def _check_bridges(scene: ResolvedScene, plan: SimulationPlan) -> list[Violation]:
    out = []
    for obj in plan.objects:
        if "BRIDGE_BETWEEN_A_AND_B" not in obj.topology.relation_keys:
            continue
        a, b = (scene.bodies[r].aabb for r in obj.topology.ref)
        axis, lo, hi = bridge_gap(a, b)
        body = scene.bodies[obj.name].aabb
        c_lo, c_hi = sorted((a.center(axis), b.center(axis)))
        c = body.center(axis)
        if not c_lo < c < c_hi:
            miss = max(c_lo - c, c - c_hi, 0.0)
            out.append(Violation("bridge_between", (obj.name,) + obj.topology.ref,
                                 f"span midpoint {c:g} not strictly between ref centers [{c_lo:g}, {c_hi:g}] on {'xy'[axis]}",
                                 miss, 0.0))
        overrun = max(lo - body.min[axis], body.max[axis] - hi)
        if overrun > CONTACT_TOL:
            out.append(Violation("bridge_between", (obj.name,) + obj.topology.ref,
                                 f"span [{body.min[axis]:g}, {body.max[axis]:g}] leaves the gap [{lo:g}, {hi:g}]",
                                 overrun, CONTACT_TOL))
    return out


# -- (c) flank pairs -----------------------------------------------------------


def flank_pairs(plan: SimulationPlan) -> list[tuple[str, str, str, str, str, bool]]:
    """(ref, child_a, rel_a, child_b, rel_b, advisory) for opposite-signed side relations on a shared ref."""
    by_ref: dict[str, list[tuple[str, str]]] = {}
    for obj in plan.objects:
        if len(obj.topology.ref) != 1:
            continue
        for rel in obj.topology.relation_keys:
            if rel in V.SIDE_PREDICATES:
                by_ref.setdefault(obj.topology.ref[0], []).append((obj.name, rel))
    pairs = []
    for ref, items in by_ref.items():
        for i, (na, ra) in enumerate(items):
            for nb, rb in items[i + 1:]:
                sa, sb = V.side_of(ra), V.side_of(rb)
                if sa[0] != sb[0] or sa[1] == sb[1]:
                    continue
                adj_a, adj_b = ra.startswith("ADJACENT_"), rb.startswith("ADJACENT_")
                if adj_a != adj_b:
                    continue
                pairs.append((ref, na, ra, nb, rb, not adj_a))
    return pairs


def _check_flanks(scene: ResolvedScene, plan: SimulationPlan) -> list[Violation]:
    out = []
    for ref, na, ra, nb, rb, advisory in flank_pairs(plan):
        r = scene.bodies[ref].aabb
        for name, rel in ((na, ra), (nb, rb)):
            axis, sign = V.side_of(rel)
            box = scene.bodies[name].aabb
            # how far the flank reaches back across the neighbour's face
            intrusion = (r.max[axis] - box.min[axis]) if sign > 0 else (box.max[axis] - r.min[axis])
            if intrusion > CONTACT_TOL:
                out.append(Violation("flank_sides", (name, ref),
                                     f"{name!r} ({rel}) is not on the {'+' if sign > 0 else '-'}{'xy'[axis]} side of {ref!r}",
                                     intrusion, CONTACT_TOL, severity="advisory" if advisory else "error"))
    return out


# -- (d) floating ----------------------------------------------------------------


def _fluid_for(ref: str, plan: SimulationPlan, scene: ResolvedScene) -> str | None:
    """Name of the fluid body a surface-anchored relation reads from."""
    if scene.bodies[ref].is_fluid:
        return ref
    for obj in plan.objects:
        if obj.topology.ref and obj.topology.ref[0] == ref and any(k in V.FILLING for k in obj.topology.relation_keys):
            return obj.name
    return None


def _density_of(obj: ObjectSpec, body: Body) -> float | None:
    return obj.construction.density if obj.construction.density is not None else body.density


def _check_floats(scene: ResolvedScene, plan: SimulationPlan) -> list[Violation]:
    out = []
    for obj in plan.objects:
        if "FLOATS_AT_SURFACE" not in obj.topology.relation_keys:
            continue
        body = scene.bodies[obj.name]
        fluid_name = _fluid_for(obj.topology.ref[0], plan, scene)
        if fluid_name is None:
            out.append(Violation("floats_at_surface", (obj.name,), "no fluid surface found for the reference"))
            continue
        fluid = scene.bodies[fluid_name]
        surface = fluid.aabb.top_z
        rho_body = _density_of(obj, body)
        box = body.aabb
        if rho_body is None:
            err = abs(box.center_z - surface)
            if err > RESIDUAL_TOL:
                out.append(Violation("floats_at_surface", (obj.name, fluid_name),
                                     "body without density must be centered on the surface", err, RESIDUAL_TOL))
            continue
        rho_fluid = fluid.density if fluid.density is not None else DEFAULT_DENSITY
        fraction = (surface - box.bottom_z) / box.size(2)
        expected = rho_body / rho_fluid
        err = abs(fraction - expected)
        if err > FLOAT_FRACTION_TOL:
            out.append(Violation("floats_at_surface", (obj.name, fluid_name),
                                 f"submerged fraction {fraction:.12g} differs from density ratio {expected:.12g}",
                                 err, FLOAT_FRACTION_TOL, units="1"))
    return out


# -- (e) interpenetration --------------------------------------------------------


def _hollow_pairs(plan: SimulationPlan) -> set[frozenset]:
    pairs = set()
    for obj in plan.objects:
        if "PLACE_IN" in obj.topology.relation_keys:
            pairs.add(frozenset((obj.name, obj.topology.ref[0])))
    return pairs


def _check_interpenetration(scene: ResolvedScene, plan: SimulationPlan, tol: float) -> list[Violation]:
    out = []
    solids = [b for b in scene.bodies.values() if not b.is_fluid]
    hollow = _hollow_pairs(plan)
    for i, a in enumerate(solids):
        for b in solids[i + 1:]:
            if frozenset((a.name, b.name)) in hollow:
                continue
            if a.is_container and a.aabb.contains(b.aabb, tol, axes=(0, 1)):
                continue
            if b.is_container and b.aabb.contains(a.aabb, tol, axes=(0, 1)):
                continue
            depth = min(a.aabb.overlap_depth(b.aabb))
            if depth > tol:
                out.append(Violation("interpenetration", (a.name, b.name),
                                     f"{a.name!r} and {b.name!r} overlap by {depth:.6g} m", depth, tol))
    return out


# -- (f) containment -------------------------------------------------------------


def _check_containment(scene: ResolvedScene, plan: SimulationPlan, tol: float) -> list[Violation]:
    out = []
    for obj in plan.objects:
        keys = obj.topology.relation_keys
        box = scene.bodies[obj.name].aabb
        container = None
        if "PLACE_IN" in keys or (any(k in V.FILLING for k in keys) and obj.topology.ref
                                  and not scene.bodies[obj.topology.ref[0]].is_fluid):
            container = obj.topology.ref[0]
        if container is None:
            continue
        c = scene.bodies[container].aabb
        excess = max(max(c.min[i] - box.min[i], box.max[i] - c.max[i]) for i in range(3))
        if excess > tol:
            out.append(Violation("containment", (obj.name, container),
                                 f"{obj.name!r} extends {excess:.6g} m outside {container!r}", excess, tol))
    for obj in plan.objects:
        if "SUBMERGED" not in obj.topology.relation_keys:
            continue
        fluid = _fluid_for(obj.topology.ref[0], plan, scene)
        if fluid is None:
            continue
        f = scene.bodies[fluid].aabb
        box = scene.bodies[obj.name].aabb
        excess = max(box.top_z - f.top_z, f.bottom_z - box.bottom_z)
        if excess > tol:
            out.append(Violation("containment", (obj.name, fluid),
                                 f"submerged {obj.name!r} leaves the fluid column by {excess:.6g} m", excess, tol))
    return out


# -- (g) cameras -------------------------------------------------------------------


def _check_cameras(scene: ResolvedScene, plan: SimulationPlan) -> list[Violation]:
    out = []
    g_up = np.array(scene.frame.camera_up)
    for i, cam in enumerate(scene.cameras):
        up = np.array(cam.up, dtype=float)
        view = np.array(cam.target, dtype=float) - np.array(cam.position, dtype=float)
        label = f"camera[{i}]"
        n_up, n_view = np.linalg.norm(up), np.linalg.norm(view)
        if n_up == 0 or n_view == 0:
            out.append(Violation("camera_up", (label,), "degenerate camera (zero up or zero view direction)"))
            continue
        up, view = up / n_up, view / n_view
        looks_down = np.linalg.norm(np.cross(view, g_up)) <= CAMERA_TOL
        if looks_down:
            err = abs(float(up @ g_up))
            if err > CAMERA_TOL:
                out.append(Violation("camera_up", (label,), "top-down camera up must be perpendicular to gravity",
                                     err, CAMERA_TOL, units="1"))
            continue
        err = float(np.linalg.norm(up - g_up))
        if err > CAMERA_TOL:
            out.append(Violation("camera_up", (label,), f"camera up {tuple(cam.up)} is not anti-parallel to gravity",
                                 err, CAMERA_TOL, units="1"))
    return out


# -- (h) relation residuals -----------------------------------------------------


class _Residuals:
    def __init__(self, name: str):
        self.name = name
        self.items: list[tuple[str, float, float]] = []

    def eq(self, label: str, measured: float, expected: float) -> None:
        self.items.append((label, float(measured), float(expected)))

    def violations(self) -> list[Violation]:
        out = []
        for label, m, e in self.items:
            err = abs(m - e) if math.isfinite(m) and math.isfinite(e) else math.inf
            if err > RESIDUAL_TOL:
                out.append(Violation("relation_residual", (self.name,), f"{label}: got {m!r}, expected {e!r}",
                                     err, RESIDUAL_TOL))
        return out


def _yaw_err(a: float, b: float) -> float:
    return abs(normalize_deg(a - b))


def _owned(keys: Sequence[str]) -> set[str]:
    out: set[str] = set()
    for k in keys:
        out |= V.RELATIONS[k].determines
    return out


def _vec(v) -> tuple[float, float, float]:
    if isinstance(v, dict):
        return (float(v.get("x", 0.0)), float(v.get("y", 0.0)), float(v.get("z", 0.0)))
    return tuple(float(x) for x in v)


def _fills_from_container(obj: ObjectSpec, scene: ResolvedScene) -> bool:
    keys = obj.topology.relation_keys
    return (obj.construction.is_fluid and bool(obj.topology.ref) and not scene.bodies[obj.topology.ref[0]].is_fluid
            and any(k in ("FILLS_CONTAINER_TO_TOP", "FILLS_CONTAINER_LOWER_HALF", "FREE_SURFACE_AT") for k in keys))


def _expected_surface(obj: ObjectSpec, container: WorldAabb) -> float:
    keys = obj.topology.relation_keys
    p = obj.topology.params
    if "FILLS_CONTAINER_TO_TOP" in keys:
        return container.top_z
    if "FILLS_CONTAINER_LOWER_HALF" in keys:
        return container.bottom_z + float(p.get("fraction", 0.5)) * (container.top_z - container.bottom_z)
    return float(p["height"])


def _anywhere_cell(scene: ResolvedScene, obj: ObjectSpec, body: Body,
                   placed: WorldAabb) -> tuple[float, float, float] | None:
    """First free grid cell (min corner) for a PLACE-ANYWHERE body, recomputed from earlier bodies."""
    idx = scene.order.index(obj.name)
    obstacles = [scene.bodies[n].aabb for n in scene.order[:idx] if not scene.bodies[n].is_fluid]
    size = placed.sizes
    support = scene.bodies[obj.topology.ref[0]].aabb if obj.topology.ref else None
    bottom = support.top_z if support is not None else float(obj.topology.params.get("base_z", 0.0))
    region = support if support is not None else union_all(obstacles)
    for mx, my in anywhere_candidates(region, (size[0], size[1]), inside=support is not None):
        lo = (mx, my, bottom)
        hi = (mx + size[0], my + size[1], bottom + size[2])
        clear = True
        for o in obstacles:
            if all(min(hi[i], o.max[i]) - max(lo[i], o.min[i]) > INTERPENETRATION_TOL for i in range(3)):
                clear = False
                break
        if clear:
            return lo
    return None


def _check_residuals(scene: ResolvedScene, plan: SimulationPlan) -> list[Violation]:
    out: list[Violation] = []
    for obj in plan.objects:
        out.extend(_object_residuals(scene, plan, obj).violations())
    return out


def _object_residuals(scene: ResolvedScene, plan: SimulationPlan, obj: ObjectSpec) -> _Residuals:
    res = _Residuals(obj.name)
    body = scene.bodies[obj.name]
    # relation equations act on the box as placed, before rotation-only predicates turn it in place
    rot = obj.pose.rotation_deg or (0.0, 0.0, 0.0)
    place_yaw = _expected_yaw(scene, obj, body, rot[2], rotation_only=False)
    B = placement_box(body, place_yaw)
    keys = obj.topology.relation_keys
    params = obj.topology.params
    refs = [scene.bodies[r].aabb for r in obj.topology.ref]
    R = refs[0] if refs else None
    owned = _owned(keys)
    gap = float(params.get("gap", 0.0))

    # extents
    declared = obj.construction.size if obj.construction.kind == "procedural" else body.declared_extents
    if _fills_from_container(obj, scene):
        h = _expected_surface(obj, R)
        expected_ext = [R.max_x - R.min_x, R.max_y - R.min_y, h - R.bottom_z]
    else:
        expected_ext = list(declared)
        if "HEIGHT" in keys:
            expected_ext[2] = float(params["height"])
        if "BRIDGE_BETWEEN_A_AND_B" in keys:
            axis, lo, hi = bridge_gap(refs[0], refs[1])
            length = float(params["span_length"]) if "span_length" in params else hi - lo
            yaw = place_yaw % 180.0
            local = axis if yaw == 0.0 else 1 - axis
            expected_ext[local] = length
    for i in range(3):
        res.eq(f"extent {'xyz'[i]}", body.extents[i], expected_ext[i])

    # tilt and yaw
    fluid_fit = _fills_from_container(obj, scene)
    res.eq("rotation x", 0.0, _yaw_err(body.orientation.deg_x, 0.0 if fluid_fit else rot[0]))
    res.eq("rotation z", 0.0, _yaw_err(body.orientation.deg_z, _expected_yaw(scene, obj, body, rot[2])))

    # relation equations
    for rel in keys:
        if rel == "LEFT_OF":
            res.eq("LEFT_OF min_y", B.min_y, R.max_y + gap)
        elif rel == "RIGHT_OF":
            res.eq("RIGHT_OF max_y", B.max_y, R.min_y - gap)
        elif rel == "FRONT_OF":
            res.eq("FRONT_OF min_x", B.min_x, R.max_x + gap)
        elif rel == "BACK_OF":
            res.eq("BACK_OF max_x", B.max_x, R.min_x - gap)
        elif rel == "PLACE_ON_BASE":
            res.eq("PLACE_ON_BASE bottom_z", B.bottom_z, float(params.get("base_z", 0.0)))
        elif rel == "ALIGN_LEFT":
            res.eq("ALIGN_LEFT max_y", B.max_y, R.max_y)
        elif rel == "ALIGN_RIGHT":
            res.eq("ALIGN_RIGHT min_y", B.min_y, R.min_y)
        elif rel == "ALIGN_FRONT":
            res.eq("ALIGN_FRONT max_x", B.max_x, R.max_x)
        elif rel == "ALIGN_BACK":
            res.eq("ALIGN_BACK min_x", B.min_x, R.min_x)
        elif rel == "ALIGN_CENTER_LR":
            res.eq("ALIGN_CENTER_LR center_y", B.center_y, R.center_y)
        elif rel == "ALIGN_CENTER_FB":
            res.eq("ALIGN_CENTER_FB center_x", B.center_x, R.center_x)
        elif rel in ("PLACE_ON", "PLACED_ON_TOP"):
            res.eq(f"{rel} bottom_z", B.bottom_z, R.top_z)
        elif rel == "SPAWNED_ON_TOP":
            res.eq("SPAWNED_ON_TOP bottom_z", B.bottom_z, R.top_z + SPAWN_CLEARANCE)
        elif rel == "CENTERED_ON_REF":
            res.eq("CENTERED_ON_REF center_x", B.center_x, R.center_x)
            res.eq("CENTERED_ON_REF center_y", B.center_y, R.center_y)
            res.eq("CENTERED_ON_REF bottom_z", B.bottom_z, R.top_z)
        elif rel == "PLACE_IN":
            res.eq("PLACE_IN bottom_z", B.bottom_z, R.bottom_z)
        elif rel == "PLACE_ANYWHERE":
            cell = _anywhere_cell(scene, obj, body, B)
            if cell is None:
                res.eq("PLACE_ANYWHERE cell", math.inf, 0.0)
            else:
                res.eq("PLACE_ANYWHERE min_x", B.min_x, cell[0])
                res.eq("PLACE_ANYWHERE min_y", B.min_y, cell[1])
                res.eq("PLACE_ANYWHERE bottom_z", B.bottom_z, cell[2])
        elif rel in V.ADJACENT:
            axis, sign = V.side_of(rel)
            if sign > 0:
                res.eq(f"{rel} min_{'xy'[axis]}", B.min[axis], R.max[axis])
            else:
                res.eq(f"{rel} max_{'xy'[axis]}", B.max[axis], R.min[axis])
            if rel.endswith("TOP_FLUSH"):
                res.eq(f"{rel} top_z", B.top_z, R.top_z)
            elif rel.endswith("BOTTOM_FLUSH"):
                res.eq(f"{rel} bottom_z", B.bottom_z, R.bottom_z)
            else:
                res.eq(f"{rel} center_z", B.center_z, R.center_z)
        elif rel in ("FILLS_CONTAINER_TO_TOP", "FILLS_CONTAINER_LOWER_HALF", "CONTAINS_FLUID"):
            res.eq(f"{rel} bottom_z", B.bottom_z, R.bottom_z)
            if rel != "CONTAINS_FLUID":
                res.eq(f"{rel} surface", B.top_z, _expected_surface(obj, R))
        elif rel == "FREE_SURFACE_AT":
            res.eq("FREE_SURFACE_AT surface", B.top_z, float(params["height"]))
            if fluid_fit:
                res.eq("FREE_SURFACE_AT bottom_z", B.bottom_z, R.bottom_z)
        elif rel in V.WATER_SURFACE or rel == "SUBMERGED":
            fluid = _fluid_for(obj.topology.ref[0], plan, scene)
            if fluid is None:
                res.eq(f"{rel} surface", math.inf, 0.0)
                continue
            F = scene.bodies[fluid].aabb
            h = F.top_z
            if rel == "BOTTOM_FLUSH_WATER_SURFACE":
                res.eq(f"{rel} bottom_z", B.bottom_z, h)
            elif rel == "CENTER_AT_WATER_SURFACE":
                res.eq(f"{rel} center_z", B.center_z, h)
            elif rel == "TOP_FLUSH_WATER_SURFACE":
                res.eq(f"{rel} top_z", B.top_z, h)
            elif "depth" in params:
                res.eq("SUBMERGED top_z", B.top_z, h - float(params["depth"]))
            else:
                res.eq("SUBMERGED bottom_z", B.bottom_z, F.bottom_z)
        elif rel == "FLOATS_AT_SURFACE":
            pass  # fraction check (d)
        elif rel == "BRIDGE_BETWEEN_A_AND_B":
            axis, lo, hi = bridge_gap(refs[0], refs[1])
            res.eq("BRIDGE midpoint", B.center(axis), (lo + hi) / 2)
        elif rel == "FLUSH_WITH_PLATFORM_TOP":
            tops = [r.top_z for r in refs]
            res.eq("FLUSH_WITH_PLATFORM_TOP top_z", B.top_z, sum(tops) / len(tops))
        elif rel == "SYMMETRY_ALONG":
            src = scene.bodies[obj.topology.ref[0]].aabb
            m = 1 if params["axis"] == "x" else 0
            if "at" in params:
                at = float(params["at"])
            elif "about" in params:
                at = scene.bodies[params["about"]].aabb.center(m)
            else:
                at = 0.0
            for i in range(3):
                want = 2 * at - src.center(i) if i == m else src.center(i)
                res.eq(f"SYMMETRY_ALONG center {'xyz'[i]}", B.center(i), want)
        elif rel == "COPY_GROUP":
            src = scene.bodies[obj.topology.ref[0]].aabb
            members = [o.name for o in plan.objects if "GROUP" in o.topology.relation_keys
                       and o.topology.params.get("group") == params["group"]]
            if "offset" in params:
                t = _vec(params["offset"])
            else:
                anchor = union_all(scene.bodies[n].aabb for n in members).centroid
                target = _vec(params["anchor"])
                t = tuple(target[i] - anchor[i] for i in range(3))
            for i in range(3):
                res.eq(f"COPY_GROUP center {'xyz'[i]}", B.center(i), src.center(i) + t[i])

    # default rule for every axis no relation owns
    pos = obj.pose.position or (0.0, 0.0, 0.0)
    bridged = "BRIDGE_BETWEEN_A_AND_B" in keys
    span_axis = bridge_gap(refs[0], refs[1])[0] if bridged else None
    for axis in (0, 1):
        if "xy"[axis] in owned or axis == span_axis:
            continue
        if not refs:
            res.eq(f"pose {'xy'[axis]}", body.position[axis], pos[axis])
        elif bridged:
            res.eq(f"default center_{'xy'[axis]}", B.center(axis), (refs[0].center(axis) + refs[1].center(axis)) / 2)
        else:
            res.eq(f"default center_{'xy'[axis]}", B.center(axis), R.center(axis))
    if "z" not in owned:
        if not refs:
            if body.convention is Convention.BOUNDARY_FLOOR:
                res.eq("pose floor z", B.bottom_z, pos[2])
            else:
                res.eq("pose z", B.center_z, pos[2])
        elif bridged:
            res.eq("default top_z", B.top_z, min(refs[0].top_z, refs[1].top_z))
        else:
            res.eq("default bottom_z", B.bottom_z, R.bottom_z)
    return res


def placement_box(body: Body, yaw: float) -> WorldAabb:
    """AABB of ``body`` about its center with yaw ``yaw`` in place of its final heading."""
    if math.isnan(yaw):
        return body.aabb
    o = Orientation(deg_z=normalize_deg(yaw), deg_x=body.orientation.deg_x)
    return world_aabb(BoxExtent(*body.extents), body.aabb.centroid, o, Convention.CENTER, body.primitive)


def _expected_yaw(scene: ResolvedScene, obj: ObjectSpec, body: Body, pose_yaw: float,
                  rotation_only: bool = True) -> float:
    """Final yaw of ``obj``; with ``rotation_only=False`` the yaw it was placed with."""
    keys = obj.topology.relation_keys
    params = obj.topology.params
    refs = obj.topology.ref
    if _fills_from_container(obj, scene):
        return 0.0
    yaw = normalize_deg(pose_yaw)
    if "SYMMETRY_ALONG" in keys:
        src = scene.bodies[refs[0]]
        yaw = reflect_yaw(src.orientation.deg_z, 1 if params["axis"] == "x" else 0)
    if "COPY_GROUP" in keys:
        yaw = scene.bodies[refs[0]].orientation.deg_z
    if not rotation_only:
        return yaw
    target = params.get("target", refs[0] if refs else None)
    for rel in keys:
        if rel in ("FACING_FRONT", "FACING_LEFT", "FACING_BACK", "FACING_RIGHT"):
            yaw = V.CARDINAL_YAW[rel[len("FACING_"):]]
        elif rel in ("FACING_TO", "FACING_OPPOSITE_TO"):
            t = scene.bodies[target].aabb
            dx, dy = t.center_x - body.aabb.center_x, t.center_y - body.aabb.center_y
            yaw = math.degrees(math.atan2(dy, dx))
            if rel == "FACING_OPPOSITE_TO":
                yaw += 180.0
        elif rel == "FACING_SAME_AS":
            yaw = scene.bodies[target].orientation.deg_z
        elif rel == "RANDOM_ROT":
            seed = params.get("seed", body.seed)
            if body.seed is None or seed != body.seed:
                return math.nan
            yaw = random_yaw(seed)
        elif rel == "ORIENT_BY_RELATIVE_SIDE":
            side = next(V.side_of(k) for k in keys if k in V.SIDE_PREDICATES)
            yaw = RELATIVE_SIDE_YAW[side]
    return yaw


_CHECKS = {
    "pose_finite": _check_pose_finite,
    "aabb_consistency": _check_aabb,
    "bridge_between": _check_bridges,
    "flank_sides": _check_flanks,
    "floats_at_surface": _check_floats,
    "interpenetration": _check_interpenetration,
    "containment": _check_containment,
    "camera_up": _check_cameras,
    "relation_residual": _check_residuals,
}
