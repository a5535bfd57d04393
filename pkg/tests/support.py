"""Shared builders for the test suite: plan dicts, random plans, mutations, synthetic runs."""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np

from scenec import vocabulary as V
from scenec.geometry import Orientation, normalize_deg
from scenec.plan import apply_defaults, plan_from_dict
from scenec.resolver import ResolvedScene, moved

DATA = Path(__file__).parent / "data"
PLANS = DATA / "plans"
CATALOG = DATA / "catalog.json"
GOLDEN = ("fsi_tank", "outdoor_vehicle", "robot_office")


# -- plan dicts ------------------------------------------------------------------


def obj(name, size=None, rel=None, ref=None, params=None, primitive="box", pos=None, rot=None,
        fixed=True, dynamic=None, density=None, kind="procedural", **construction):
    """One object record in the interchange form."""
    c = {"kind": kind, **construction}
    if kind == "procedural":
        c["primitive"] = primitive
    if size is not None:
        c["size"] = list(size)
    if density is not None:
        c["density"] = density
    topo = {"role": "child" if ref else "base"}
    if ref:
        topo["ref"] = ref
    if rel:
        topo["relation"] = rel
    if params:
        topo["params"] = dict(params)
    out = {"name": name, "construction": c, "topology": topo, "fixed": fixed,
           "is_dynamic": (not fixed) if dynamic is None else dynamic}
    pose = {}
    if pos is not None:
        pose["position"] = list(pos)
    if rot is not None:
        pose["rotation_deg"] = list(rot)
    if pose:
        out["pose"] = pose
    return out


def plan_dict(objects, cameras=(), motion=(), plan_type="scene", gravity=-9.81, recording="vsg_only"):
    return {
        "plan_type": plan_type,
        "simulation_parameters": {"time_step": 0.001, "simulation_duration": 2.0, "gravity": gravity},
        "objectives": ["test scene"],
        "recording_mode": recording,
        "objects": list(objects),
        "implementation_steps": [{
            "description": "build",
            "objects": [o["name"] for o in objects],
            "cameras": list(cameras),
            "motion_expectations": list(motion),
        }],
        "clarifications_needed": [],
    }


def make_plan(objects, **kw):
    return apply_defaults(plan_from_dict(plan_dict(objects, **kw)))


def floor(name="floor", size=(10.0, 10.0, 0.2), pos=(0.0, 0.0, -0.1)):
    return obj(name, size, pos=pos)


# -- random schema-valid plans ------------------------------------------------------

ISLAND_PITCH = 30.0
SIDES = ("FRONT_OF", "BACK_OF", "LEFT_OF", "RIGHT_OF")


def _u(rng, lo, hi) -> float:
    return round(float(rng.uniform(lo, hi)), 3)


class _Gen:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.objects: list[dict] = []
        self.late: list[dict] = []
        self.groups: list[tuple[str, str, tuple]] = []
        self.has_container = False
        self.n = 0

    def name(self, stem: str) -> str:
        self.n += 1
        return f"{stem}_{self.n}"

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def chance(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    # layout island: floor, hub, one object per side, a stack on top
    def layout(self, ox: float) -> None:
        rng = self.rng
        fz = _u(rng, -0.5, 0.5)
        fl = self.name("floor")
        floor_size = (_u(rng, 8, 12), _u(rng, 8, 12), _u(rng, 0.1, 0.4))
        if self.chance(0.3):
            self.objects.append(obj(fl, floor_size, rel="place_on_base", params={"base_z": fz},
                                    pos=(ox, _u(rng, -1, 1), 0.0)))
        else:
            self.objects.append(obj(fl, floor_size, pos=(ox, _u(rng, -1, 1), fz + floor_size[2] / 2)))
        hub = self.name("hub")
        hub_size = (_u(rng, 0.8, 2.0), _u(rng, 0.8, 2.0), _u(rng, 0.4, 1.2))
        hub_rel = self.pick(["place_on", "placed_on_top", "spawned_on_top", "centered_on_ref"])
        rels = [hub_rel]
        if hub_rel == "placed_on_top" and self.chance(0.5):
            rels.append(self.pick(["align_center_lr", "align_center_fb"]))
        self.objects.append(obj(hub, hub_size, ref=fl, rel=rels))

        for side in SIDES:
            if not self.chance(0.8):
                continue
            self.side_child(hub, hub_size, side)
        if self.chance(0.7):
            self.stack(hub, hub_size)
        if self.chance(0.4):
            self.late.append(self.anywhere(fl))

    def side_child(self, hub: str, hub_size, side: str) -> None:
        rng = self.rng
        axis = 0 if side in ("FRONT_OF", "BACK_OF") else 1
        other = 1 - axis
        sign = "PLUS" if side in ("FRONT_OF", "LEFT_OF") else "MINUS"
        name = self.name("side")
        size = [0.0, 0.0, _u(rng, 0.2, 1.5)]
        size[axis] = _u(rng, 0.3, 1.2)
        size[other] = _u(rng, 0.2, hub_size[other])
        params = {}
        primitive = "box"
        turn = self.pick([None, None, "side", "cardinal", "free"])
        if turn in ("side", "cardinal", "free"):
            # turning in place must not grow the footprint
            size[other] = size[axis] = min(size[axis], size[other])
            if turn == "free":
                primitive = "cylinder"
        if self.chance(0.5):
            mode = self.pick(["TOP_FLUSH", "BOTTOM_FLUSH", "CENTERS"])
            if mode != "BOTTOM_FLUSH":
                size[2] = _u(rng, 0.1, hub_size[2])
            rels = [f"adjacent_{sign.lower()}_{'xy'[axis]}_{mode.lower()}"]
        else:
            rels = [side.lower()]
            if self.chance(0.6):
                params["gap"] = _u(rng, 0.0, 0.8)
        orth = self.pick([None, "face", "center"])
        if orth == "face":
            rels.append(self.pick(["align_front", "align_back"] if other == 0 else ["align_left", "align_right"]))
        elif orth == "center":
            rels.append("align_center_fb" if other == 0 else "align_center_lr")
        if rels[0].startswith(("front", "back", "left", "right")) and self.chance(0.2):
            rels.append("height")
            params["height"] = _u(rng, 0.2, 1.5)
        if turn == "side":
            rels.append("orient_by_relative_side")
        elif turn == "cardinal":
            rels.append(self.pick(["facing_front", "facing_back", "facing_left", "facing_right"]))
        elif turn == "free":
            kind = self.pick(["facing_to", "facing_opposite_to", "random_rot", "facing_same_as"])
            rels.append(kind)
            if kind == "random_rot":
                params["seed"] = int(rng.integers(0, 2**31))
        grouped = self.chance(0.3)
        if grouped:
            g = f"g{self.n}"
            rels.append("group")
            params["group"] = g
        self.objects.append(obj(name, size, ref=hub, rel=rels, params=params or None, primitive=primitive,
                                fixed=self.chance(0.5)))
        if grouped:
            self.groups.append((g, name, tuple(size)))

    def stack(self, hub: str, hub_size) -> None:
        rng = self.rng
        below, below_size = hub, hub_size
        for _ in range(int(rng.integers(1, 3))):
            name = self.name("top")
            size = (_u(rng, 0.1, below_size[0]), _u(rng, 0.1, below_size[1]), _u(rng, 0.1, 0.6))
            rel = self.pick(["placed_on_top", "spawned_on_top", "place_on", "centered_on_ref"])
            rels = [rel]
            if rel != "centered_on_ref" and self.chance(0.5):
                rels.append(self.pick(["align_left", "align_right", "align_center_lr"]))
                rels.append(self.pick(["align_front", "align_back", "align_center_fb"]))
            self.objects.append(obj(name, size, ref=below, rel=rels, fixed=False))
            below, below_size = name, size

    def anywhere(self, support: str | None) -> dict:
        rng = self.rng
        name = self.name("loose")
        d = _u(rng, 0.15, 0.5)
        rels = ["place_anywhere"]
        params = {}
        if self.chance(0.5):
            rels.append("random_rot")
            params["seed"] = int(rng.integers(0, 2**31))
        return obj(name, (d, d, _u(rng, 0.1, 0.8)), ref=support, rel=rels, params=params or None,
                   primitive="cylinder", fixed=False)

    # tank island: container, fluid, floaters, flanking platforms and a bridge
    def tank(self, ox: float) -> None:
        rng = self.rng
        self.has_container = True
        H = _u(rng, 1.0, 2.0)
        tank_size = (_u(rng, 3.0, 5.0), _u(rng, 2.5, 4.0), H)
        tk = self.name("tank")
        z0 = _u(rng, 0.0, 0.5)
        self.objects.append(obj(tk, tank_size, primitive="generated_boundary", pos=(ox, 0.0, z0),
                                fsi_registration="boundary"))
        bridged = self.chance(0.6)
        crate = not bridged and self.chance(0.4)
        water = self.name("water")
        if bridged or crate:
            fill = self.pick(["fills_container_lower_half", "free_surface_at"])
        else:
            fill = self.pick(["fills_container_lower_half", "fills_container_to_top", "free_surface_at",
                              "contains_fluid"])
        params, size = {}, None
        frac = _u(rng, 0.3, 0.6)
        if fill == "fills_container_lower_half" and self.chance(0.5):
            params["fraction"] = frac
        elif fill == "fills_container_lower_half":
            frac = 0.5
        elif fill == "free_surface_at":
            params["height"] = round(z0 + frac * H, 6)
        elif fill == "contains_fluid":
            size = (tank_size[0], tank_size[1], round(frac * H, 6))
        self.objects.append(obj(water, size, ref=tk, rel=fill, params=params or None, primitive="fluid_domain",
                                fixed=False, density=self.pick([None, 1000.0, 1025.0]), fsi_registration="fluid"))
        if crate:
            d = (_u(rng, 0.2, tank_size[0] - 0.2), _u(rng, 0.2, tank_size[1] - 0.2), _u(rng, 0.1, 0.2 * H))
            self.objects.append(obj(self.name("crate"), d, ref=tk, rel="place_in", fixed=False))
        else:
            n_float = int(rng.integers(1, 3))
            for k in range(n_float):
                self.floater(water, tank_size, H, n_float, k)
        if bridged:
            a, b = self.name("pad"), self.name("pad")
            ph = round(H + z0, 6)
            pa = (_u(rng, 1.5, 3.0), _u(rng, 2.0, 3.5), ph)
            pb = (_u(rng, 1.5, 3.0), _u(rng, 2.0, 3.5), ph)
            self.objects.append(obj(a, pa, ref=tk, rel="adjacent_minus_x_top_flush"))
            self.objects.append(obj(b, pb, ref=tk, rel="adjacent_plus_x_top_flush"))
            bsize = (1.0, _u(rng, 0.3, min(pa[1], pb[1], tank_size[1] - 0.1)), _u(rng, 0.02, 0.1 * H))
            params = {}
            if self.chance(0.3):
                params["span_length"] = round(tank_size[0] * _u(rng, 0.5, 1.0), 6)
            self.objects.append(obj(self.name("bridge"), bsize, ref=[a, b],
                                    rel=["bridge_between_a_and_b", "flush_with_platform_top"],
                                    params=params or None))
            if self.chance(0.5):
                car = (_u(rng, 0.3, pa[0]), _u(rng, 0.3, pa[1]), _u(rng, 0.3, 1.0))
                self.objects.append(obj(self.name("car"), car, ref=a, rel=["spawned_on_top", "facing_front"],
                                        fixed=False))

    def floater(self, water: str, tank_size, H: float, n: int, k: int) -> None:
        rng = self.rng
        sy_max = tank_size[1] / n - 0.05
        size = (_u(rng, 0.2, tank_size[0] - 0.1), _u(rng, 0.2, sy_max), _u(rng, 0.05, 0.25 * H))
        rel = self.pick(["floats_at_surface", "floats_at_surface", "center_at_water_surface",
                         "top_flush_water_surface", "bottom_flush_water_surface", "submerged"])
        rels, params, density = [rel], {}, None
        if rel == "floats_at_surface":
            density = self.pick([None, _u(rng, 50.0, 950.0)])
        elif rel == "submerged" and self.chance(0.5):
            params["depth"] = _u(rng, 0.0, 0.05)
        if n > 1:
            rels.append("align_left" if k == 0 else "align_right")
        self.objects.append(obj(self.name("float"), size, ref=water, rel=rels, params=params or None,
                                fixed=False, density=density, fsi_registration="fsi_solid"))

    def finish(self) -> dict:
        rng = self.rng
        for g, src, size in self.groups:
            if self.chance(0.5):
                self.objects.append(obj(self.name("copy"), size, ref=src, rel="copy_group",
                                        params={"group": g, "offset": [0.0, 20.0, 0.0]}, fixed=True))
            if self.chance(0.5):
                self.objects.append(obj(self.name("mirror"), size, ref=src, rel="symmetry_along",
                                        params={"axis": "x", "at": -12.0}, fixed=True))
        objects = self.objects + self.late
        templates = list(V.CAMERA_TEMPLATES[:6]) + (list(V.CAMERA_TEMPLATES[6:]) if self.has_container else [])
        cams = [{"template": self.pick(templates)} for _ in range(int(rng.integers(0, 3)))]
        return plan_dict(objects, cameras=cams, plan_type="fsi_in_scene" if self.has_container else "scene")


def random_plan_dict(seed: int) -> dict:
    """A schema-valid plan built only from recipes whose geometry cannot collide."""
    rng = np.random.default_rng(seed)
    g = _Gen(rng)
    for i in range(int(rng.integers(1, 4))):
        if rng.random() < 0.4:
            g.tank(i * ISLAND_PITCH)
        else:
            g.layout(i * ISLAND_PITCH)
    return g.finish()


def random_plan(seed: int):
    return apply_defaults(plan_from_dict(random_plan_dict(seed)))


# -- mutations -------------------------------------------------------------------------

MUTATION_MIN = 1e-4  # 100x the coarsest geometric tolerance


def mutate(scene: ResolvedScene, rng: np.random.Generator) -> tuple[ResolvedScene, str]:
    """Perturb one body's position, size or yaw by at least MUTATION_MIN."""
    names = sorted(scene.bodies)
    name = names[int(rng.integers(len(names)))]
    body = scene.bodies[name]
    mag = float(10 ** rng.uniform(math.log10(MUTATION_MIN), 0))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    kind = ("move", "resize", "turn")[int(rng.integers(3))]
    axis = int(rng.integers(3))
    if kind == "move":
        pos = list(body.position)
        pos[axis] += sign * mag
        return scene.with_body(moved(body, position=pos)), f"move {name} {'xyz'[axis]} {sign * mag:+.3g}"
    if kind == "resize":
        ext = list(body.extents)
        ext[axis] = ext[axis] + mag if sign > 0 or ext[axis] <= 2 * mag else ext[axis] - mag
        return scene.with_body(moved(body, extents=ext)), f"resize {name} {'xyz'[axis]} by {mag:.3g}"
    deg = sign * max(mag * 90.0, 0.01)
    o = Orientation(deg_z=normalize_deg(body.orientation.deg_z + deg), deg_x=body.orientation.deg_x)
    return scene.with_body(moved(body, orientation=o)), f"turn {name} {deg:+.3g} deg"


def corrupt_aabb(scene: ResolvedScene, name: str, dz: float) -> ResolvedScene:
    b = scene.bodies[name]
    box = dataclasses.replace(b.aabb, min=(b.aabb.min[0], b.aabb.min[1], b.aabb.min[2] + dz),
                              max=(b.aabb.max[0], b.aabb.max[1], b.aabb.max[2] + dz))
    return scene.with_body(dataclasses.replace(b, aabb=box))


# -- synthetic runs -----------------------------------------------------------------------

CLEAN_LOG = "INFO | system initialised\nINFO | stepping\nSIM_DONE\n"


def trajectory_csv(scene: ResolvedScene, motion=None, n: int = 11, dt: float = 0.1, velocity: bool = True) -> str:
    """One row per tracked body per sample; ``motion[name](t)`` returns a displacement."""
    motion = motion or {}
    rows = ["t,name,px,py,pz,vx,vy,vz" if velocity else "t,name,px,py,pz"]
    for k in range(n):
        t = round(k * dt, 9)
        for name in sorted(scene.bodies):
            b = scene.bodies[name]
            if b.is_fluid:
                continue
            d = motion.get(name, lambda _t: (0.0, 0.0, 0.0))(t)
            p = [b.position[i] + d[i] for i in range(3)]
            vals = [repr(t), name] + [repr(v) for v in p]
            if velocity:
                vals += ["0.0", "0.0", "0.0"]
            rows.append(",".join(vals))
    return "\n".join(rows) + "\n"


# -- acceptance ledger --------------------------------------------------------------------

ACCEPTANCE: list[str] = []


def record(criterion: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {title} ({detail})"
    ACCEPTANCE.append(line)
    print(line)
    return ok
