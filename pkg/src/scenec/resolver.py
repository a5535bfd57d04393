"""Ground symbolic topology relations into metric poses.

For each object, in dependency order:

1. resolve full extents (plan size, catalog entry, HEIGHT, fluid fill,
   bridge span);
2. pick the position convention (``boundary_floor`` for generated
   containers, ``center`` otherwise);
3. apply each relation to the AABB anchors (min/max/center per axis,
   bottom_z/top_z), filling unconstrained axes with the default rule;
4. derive the serialized position from the final box, then apply
   rotation-only predicates about that fixed position.

Placement predicates each own a disjoint set of axes, so their order inside
one object does not change the result.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import vocabulary as V
from .catalog import EMPTY_CATALOG, AssetCatalog
from .errors import MissingAssetError, ResolveError
from .geometry import (
    BoxExtent,
    Convention,
    Frame,
    GravityAxis,
    Orientation,
    WorldAabb,
    cos_sin_deg,
    half_extents,
    normalize_deg,
    reflect_yaw,
    union_all,
    world_aabb,
    yaw_for_facing,
)
from .plan import DEFAULT_DENSITY, ObjectSpec, Severity, SimulationPlan, validate_schema

logger = logging.getLogger(__name__)

Vec3 = tuple[float, float, float]

SPAWN_CLEARANCE = 0.02
DEFAULT_GAP = 0.0
CAMERA_DISTANCE_FACTOR = 1.5
INSIDE_WALL_INSET = 0.1
INSIDE_WALL_HEIGHT_FRACTION = 0.75
ANYWHERE_PITCH = 0.25
COPLANAR_TOL = 1e-6
CONTACT_TOL = 1e-9
OVERLAP_TOL = 1e-6
DEFAULT_FLUID_DENSITY = DEFAULT_DENSITY


@dataclass(frozen=True)
class RelationBinding:
    child: str
    refs: tuple[str, ...]
    relation: str  # canonical name
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Surface:
    height: float
    floor: float
    fluid: str
    container: str | None
    density: float


@dataclass(frozen=True)
class Body:
    name: str
    kind: str
    primitive: str | None
    convention: Convention
    position: Vec3
    orientation: Orientation
    extents: Vec3
    declared_extents: Vec3 | None
    aabb: WorldAabb
    fixed: bool
    is_dynamic: bool
    fsi_registration: str
    density: float | None
    is_fluid: bool
    asset_key: str | None = None
    asset_type: str | None = None
    collision_proxy: str | None = None
    factory: str | None = None
    seed: int | None = None

    @property
    def rotation_deg(self) -> Vec3:
        return (self.orientation.deg_x, 0.0, self.orientation.deg_z)

    @property
    def is_container(self) -> bool:
        return self.primitive == "generated_boundary"

    @property
    def shape(self) -> str | None:
        return self.primitive


@dataclass(frozen=True)
class CameraPose:
    position: Vec3
    target: Vec3
    up: Vec3
    step: int
    template: str | None = None


@dataclass(frozen=True)
class ResolvedScene:
    frame: Frame
    bodies: dict[str, Body]
    order: tuple[str, ...]
    bindings: tuple[RelationBinding, ...]
    surfaces: dict[str, Surface]
    groups: dict[str, tuple[str, ...]]
    scene_bounds: WorldAabb
    cameras: tuple[CameraPose, ...]

    @property
    def poses(self) -> dict[str, tuple[Vec3, Orientation]]:
        return {n: (b.position, b.orientation) for n, b in self.bodies.items()}

    @property
    def aabbs(self) -> dict[str, WorldAabb]:
        return {n: b.aabb for n, b in self.bodies.items()}

    @property
    def free_surfaces(self) -> dict[str, float]:
        return {k: s.height for k, s in self.surfaces.items()}

    @property
    def base_plane(self) -> float:
        return self.scene_bounds.bottom_z

    def with_body(self, body: Body) -> "ResolvedScene":
        bodies = dict(self.bodies)
        bodies[body.name] = body
        return dataclasses.replace(self, bodies=bodies)


# -- placement accumulator ---------------------------------------------------


class Placement:
    """Per-axis center unknowns of one body, set through its AABB anchors."""

    def __init__(self, name: str, extents: Vec3, orientation: Orientation = Orientation(), shape: str | None = None):
        self.name = name
        self.extents = tuple(float(v) for v in extents)
        self.orientation = orientation
        self.shape = shape
        self.center: list[float | None] = [None, None, None]
        self.owner: list[str | None] = [None, None, None]

    @property
    def half(self) -> np.ndarray:
        return half_extents(BoxExtent(*self.extents), self.orientation, self.shape)

    def size(self, axis: int) -> float:
        return float(2 * self.half[axis])

    def set_center(self, axis: int, value: float, by: str) -> None:
        if self.owner[axis] is not None and self.owner[axis] != by:
            raise ResolveError("conflicting_relations", self.name,
                               f"{by} and {self.owner[axis]} both place axis {'xyz'[axis]}")
        self.center[axis] = float(value)
        self.owner[axis] = by

    def set_min(self, axis: int, value: float, by: str) -> None:
        self.set_center(axis, value + self.half[axis], by)

    def set_max(self, axis: int, value: float, by: str) -> None:
        self.set_center(axis, value - self.half[axis], by)

    def set_size(self, axis: int, world_size: float) -> None:
        """Override the extent that maps onto world ``axis`` (axis-aligned yaw only)."""
        ext = list(self.extents)
        if axis == 2:
            ext[2] = world_size
        else:
            yaw = self.orientation.deg_z % 180.0
            if self.orientation.deg_x % 360.0 != 0 or yaw not in (0.0, 90.0):
                raise ResolveError("unsupported_rotation", self.name, "size override needs an axis-aligned yaw")
            local = axis if yaw == 0.0 else 1 - axis
            ext[local] = world_size
        if world_size <= 0:
            raise ResolveError("no_fit", self.name, f"derived extent {world_size!r} is not positive")
        self.extents = tuple(ext)

    def aabb(self) -> WorldAabb:
        if any(c is None for c in self.center):
            raise ResolveError("unplaced", self.name, "placement incomplete")
        return world_aabb(BoxExtent(*self.extents), tuple(self.center), self.orientation, Convention.CENTER, self.shape)


# -- predicate families --------------------------------------------------------


def resolve_planar(p: Placement, ref: WorldAabb | None, predicate: str, gap: float = DEFAULT_GAP,
                   base_z: float = 0.0) -> None:
    """LEFT-OF / RIGHT-OF / FRONT-OF / BACK-OF / PLACE-ON-BASE."""
    rel = V.canonical(predicate)
    if rel == "PLACE_ON_BASE":
        p.set_min(2, base_z, rel)
        return
    if ref is None:
        raise ResolveError("missing_reference", p.name, f"{rel} needs a reference")
    if rel == "LEFT_OF":
        p.set_min(1, ref.max_y + gap, rel)
    elif rel == "RIGHT_OF":
        p.set_max(1, ref.min_y - gap, rel)
    elif rel == "FRONT_OF":
        p.set_min(0, ref.max_x + gap, rel)
    elif rel == "BACK_OF":
        p.set_max(0, ref.min_x - gap, rel)
    else:
        raise ValueError(f"not a planar predicate: {predicate}")


def resolve_alignment(p: Placement, ref: WorldAabb, predicate: str) -> None:
    rel = V.canonical(predicate)
    if rel == "ALIGN_LEFT":
        p.set_max(1, ref.max_y, rel)
    elif rel == "ALIGN_RIGHT":
        p.set_min(1, ref.min_y, rel)
    elif rel == "ALIGN_FRONT":
        p.set_max(0, ref.max_x, rel)
    elif rel == "ALIGN_BACK":
        p.set_min(0, ref.min_x, rel)
    elif rel == "ALIGN_CENTER_LR":
        p.set_center(1, ref.center_y, rel)
    elif rel == "ALIGN_CENTER_FB":
        p.set_center(0, ref.center_x, rel)
    else:
        raise ValueError(f"not an alignment predicate: {predicate}")


def resolve_support(p: Placement, ref: WorldAabb, template: str, height: float | None = None) -> None:
    """PLACE-ON, PLACE-IN, the on-top templates and HEIGHT.

    Footprint containment for on-top templates and the fit of PLACE-IN are
    checked once the whole placement is known (:func:`check_support`).
    """
    rel = V.canonical(template)
    if rel == "HEIGHT":
        if height is None or height <= 0:
            raise ResolveError("bad_param", p.name, "HEIGHT needs a positive height")
        p.set_size(2, float(height))
    elif rel in ("PLACE_ON", "PLACED_ON_TOP"):
        p.set_min(2, ref.top_z, rel)
    elif rel == "SPAWNED_ON_TOP":
        p.set_min(2, ref.top_z + SPAWN_CLEARANCE, rel)
    elif rel == "CENTERED_ON_REF":
        p.set_center(0, ref.center_x, rel)
        p.set_center(1, ref.center_y, rel)
        p.set_min(2, ref.top_z, rel)
    elif rel == "PLACE_IN":
        p.set_min(2, ref.bottom_z, rel)
    else:
        raise ValueError(f"not a support template: {template}")


def check_support(name: str, child: WorldAabb, ref: WorldAabb, template: str) -> None:
    rel = V.canonical(template)
    if rel in ("PLACE_ON", "PLACED_ON_TOP", "SPAWNED_ON_TOP", "CENTERED_ON_REF"):
        for axis in (0, 1):
            if child.size(axis) > ref.size(axis) + CONTACT_TOL:
                raise ResolveError("footprint_too_large", name,
                                   f"{rel}: footprint {child.size(axis):g} m exceeds reference {ref.size(axis):g} m on {'xy'[axis]}")
        if not ref.contains(child, CONTACT_TOL, axes=(0, 1)):
            raise ResolveError("overhang", name, f"{rel}: footprint extends past the reference top face")
    elif rel == "PLACE_IN":
        for axis in (0, 1):
            if not (child.min[axis] > ref.min[axis] and child.max[axis] < ref.max[axis]):
                raise ResolveError("no_fit", name, f"PLACE-IN: does not fit strictly inside the container on {'xy'[axis]}")
        if not child.top_z < ref.top_z:
            raise ResolveError("no_fit", name, "PLACE-IN: taller than the container interior")


def resolve_adjacent(p: Placement, ref: WorldAabb, template: str) -> None:
    """ADJACENT_{PLUS,MINUS}_{X,Y}_{TOP_FLUSH,BOTTOM_FLUSH,CENTERS}."""
    rel = V.canonical(template)
    parts = rel.split("_")
    if len(parts) < 4 or parts[0] != "ADJACENT" or rel not in V.ADJACENT:
        raise ValueError(f"not an adjacency template: {template}")
    axis = "XY".index(parts[2])
    if parts[1] == "PLUS":
        p.set_min(axis, ref.max[axis], rel)
    else:
        p.set_max(axis, ref.min[axis], rel)
    mode = "_".join(parts[3:])
    if mode == "TOP_FLUSH":
        p.set_max(2, ref.top_z, rel)
    elif mode == "BOTTOM_FLUSH":
        p.set_min(2, ref.bottom_z, rel)
    else:
        p.set_center(2, ref.center_z, rel)


def floating_draft(rho_body: float, rho_fluid: float, height: float) -> float:
    """Submerged depth of a uniform floating box: ``(rho_body / rho_fluid) * height``."""
    return rho_body / rho_fluid * height


def fill_surface(template: str, container: WorldAabb, params: Mapping | None = None) -> float:
    rel = V.canonical(template)
    params = params or {}
    if rel == "FILLS_CONTAINER_TO_TOP":
        return container.top_z
    if rel == "FILLS_CONTAINER_LOWER_HALF":
        fraction = float(params.get("fraction", 0.5))
        if not 0 < fraction <= 1:
            raise ResolveError("bad_param", None, f"fill fraction {fraction!r} outside (0, 1]")
        return container.bottom_z + fraction * container.size(2)
    raise ValueError(f"not a fill template: {template}")


def resolve_fluid(
    p: Placement,
    template: str,
    surface: Surface | None = None,
    container: WorldAabb | None = None,
    params: Mapping | None = None,
    density: float | None = None,
) -> float | None:
    """Fluid-surface relations.

    For filling relations ``p`` is the fluid volume and the registered free
    surface height is returned. For surface-anchored relations ``p`` is the
    solid and ``surface`` must be given.
    """
    rel = V.canonical(template)
    params = params or {}
    if rel in ("FILLS_CONTAINER_TO_TOP", "FILLS_CONTAINER_LOWER_HALF"):
        h = fill_surface(rel, container, params)
        _fit_fluid_to_container(p, container, h - container.bottom_z)
        p.set_min(2, container.bottom_z, rel)
        return h
    if rel == "FREE_SURFACE_AT":
        h = float(params["height"])
        if container is not None:
            if not container.bottom_z < h <= container.top_z + CONTACT_TOL:
                raise ResolveError("no_fit", p.name, f"free surface {h:g} outside container [{container.bottom_z:g}, {container.top_z:g}]")
            _fit_fluid_to_container(p, container, h - container.bottom_z)
        p.set_max(2, h, rel)
        return h
    if rel == "CONTAINS_FLUID":
        if container is None:
            raise ResolveError("missing_reference", p.name, "CONTAINS-FLUID needs a container")
        if p.size(2) > container.size(2) + CONTACT_TOL:
            raise ResolveError("no_fit", p.name, "fluid column taller than its container")
        p.set_min(2, container.bottom_z, rel)
        return container.bottom_z + p.size(2)

    if surface is None:
        raise ResolveError("no_surface", p.name, f"{rel} needs a registered free surface")
    h = surface.height
    if rel == "BOTTOM_FLUSH_WATER_SURFACE":
        p.set_min(2, h, rel)
    elif rel == "CENTER_AT_WATER_SURFACE":
        p.set_center(2, h, rel)
    elif rel == "TOP_FLUSH_WATER_SURFACE":
        p.set_max(2, h, rel)
    elif rel == "FLOATS_AT_SURFACE":
        if density is None:
            p.set_center(2, h, rel)
        else:
            if density >= surface.density:
                raise ResolveError("would_sink", p.name,
                                   f"density {density:g} >= fluid density {surface.density:g}; the body cannot float")
            p.set_min(2, h - floating_draft(density, surface.density, p.size(2)), rel)
    elif rel == "SUBMERGED":
        if "depth" in params:
            p.set_max(2, h - float(params["depth"]), rel)
        else:
            p.set_min(2, surface.floor, rel)
        top = p.center[2] + p.half[2]
        if top > h + CONTACT_TOL or p.center[2] - p.half[2] < surface.floor - CONTACT_TOL:
            raise ResolveError("no_fit", p.name, "does not fit between the fluid floor and the free surface")
    else:
        raise ValueError(f"not a fluid template: {template}")
    return None


def _fit_fluid_to_container(p: Placement, container: WorldAabb, depth: float) -> None:
    if depth <= 0:
        raise ResolveError("no_fit", p.name, "fluid depth is not positive")
    p.orientation = Orientation()
    p.extents = (container.size(0), container.size(1), depth)


def bridge_span_axis(ref_a: WorldAabb, ref_b: WorldAabb) -> int:
    dx = abs(ref_a.center_x - ref_b.center_x)
    dy = abs(ref_a.center_y - ref_b.center_y)
    return 0 if dx >= dy else 1


def bridge_gap(ref_a: WorldAabb, ref_b: WorldAabb) -> tuple[int, float, float]:
    """Span axis and the facing-gap interval between two platforms."""
    axis = bridge_span_axis(ref_a, ref_b)
    lo, hi = sorted((ref_a, ref_b), key=lambda b: (b.center(axis), b.min[axis]))
    return axis, lo.max[axis], hi.min[axis]


def platform_top(name: str, refs: list[WorldAabb]) -> float:
    tops = [r.top_z for r in refs]
    if max(tops) - min(tops) > COPLANAR_TOL:
        raise ResolveError("non_coplanar", name, f"platform tops differ by {max(tops) - min(tops):g} m")
    return sum(tops) / len(tops)


def resolve_bridge(p: Placement, ref_a: WorldAabb, ref_b: WorldAabb | None, template: str,
                   span_length: float | None = None) -> None:
    """BRIDGE_BETWEEN_A_AND_B sets the span axis and length; FLUSH_WITH_PLATFORM_TOP the top face."""
    rel = V.canonical(template)
    if rel == "FLUSH_WITH_PLATFORM_TOP":
        refs = [ref_a] if ref_b is None else [ref_a, ref_b]
        p.set_max(2, platform_top(p.name, refs), rel)
        return
    if rel != "BRIDGE_BETWEEN_A_AND_B":
        raise ValueError(f"not a bridge template: {template}")
    axis, lo, hi = bridge_gap(ref_a, ref_b)
    width = hi - lo
    if width <= 0:
        raise ResolveError("no_gap", p.name, f"references overlap on {'xy'[axis]}; nothing to span")
    length = width if span_length is None else float(span_length)
    if length > width + CONTACT_TOL:
        raise ResolveError("no_fit", p.name, f"span length {length:g} exceeds the gap {width:g}")
    p.set_size(axis, length)
    p.set_center(axis, (lo + hi) / 2, rel)


def group_anchor(aabbs: Iterable[WorldAabb]) -> Vec3:
    return union_all(aabbs).centroid


def mirror_plane(params: Mapping, about: WorldAabb | None) -> tuple[int, float]:
    """Coordinate axis reflected by SYMMETRY-ALONG and the plane position on it."""
    axis = params.get("axis")
    if axis not in ("x", "y"):
        raise ResolveError("bad_param", None, "SYMMETRY-ALONG needs axis x or y")
    m = 1 if axis == "x" else 0
    if "at" in params:
        return m, float(params["at"])
    if about is not None:
        return m, about.center(m)
    return m, 0.0


def resolve_group(members: Mapping[str, tuple[Vec3, float]], predicate: str, params: Mapping | None = None,
                  anchor: Vec3 | None = None) -> dict[str, tuple[Vec3, float]]:
    """Poses (center, yaw) of a member set under GROUP / COPY-GROUP / SYMMETRY-ALONG.

    GROUP returns the members unchanged (their offsets are frozen relative
    to ``anchor``); COPY-GROUP translates every member by ``params.offset``
    or onto ``params.anchor``; SYMMETRY-ALONG mirrors centers and headings
    about the plane given by ``params.axis`` and ``params.at``.
    """
    rel = V.canonical(predicate)
    params = params or {}
    if rel == "GROUP":
        return dict(members)
    if rel == "COPY_GROUP":
        t = copy_translation(params, anchor)
        return {n: (tuple(c[i] + t[i] for i in range(3)), yaw) for n, (c, yaw) in members.items()}
    if rel == "SYMMETRY_ALONG":
        m, at = mirror_plane(params, None)
        out = {}
        for n, (c, yaw) in members.items():
            c2 = list(c)
            c2[m] = 2 * at - c[m]
            out[n] = (tuple(c2), reflect_yaw(yaw, m))
        return out
    raise ValueError(f"not a grouping predicate: {predicate}")


def copy_translation(params: Mapping, anchor: Vec3 | None) -> Vec3:
    if "offset" in params:
        return _vec(params["offset"])
    if "anchor" in params:
        if anchor is None:
            raise ResolveError("bad_param", None, "COPY-GROUP anchor needs the group anchor")
        target = _vec(params["anchor"])
        return tuple(target[i] - anchor[i] for i in range(3))
    raise ResolveError("bad_param", None, "COPY-GROUP needs offset or anchor")


def _vec(v) -> Vec3:
    if isinstance(v, dict):
        v = [v.get("x", 0.0), v.get("y", 0.0), v.get("z", 0.0)]
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ResolveError("bad_param", None, f"expected a 3-vector, got {v!r}")
    return tuple(float(x) for x in v)


RELATIVE_SIDE_YAW = {(0, 1): 180.0, (0, -1): 0.0, (1, 1): -90.0, (1, -1): 90.0}


def random_yaw(seed: int) -> float:
    return normalize_deg(float(np.random.default_rng(seed).uniform(0.0, 360.0)))


def derive_seed(global_seed: int, name: str) -> int:
    return int(np.random.SeedSequence([int(global_seed), zlib.crc32(name.encode("utf-8"))]).generate_state(1)[0])


def resolve_orientation(
    predicate: str,
    subject_center: tuple[float, float] | None = None,
    target_center: tuple[float, float] | None = None,
    reference_yaw: float | None = None,
    seed: int | None = None,
    side: tuple[int, int] | None = None,
) -> float:
    """Yaw in degrees for a rotation-only predicate (placement is untouched)."""
    rel = V.canonical(predicate)
    if rel == "RANDOM_ROT":
        if seed is None:
            raise ResolveError("missing_seed", None, "RANDOM-ROT needs an explicit seed")
        return random_yaw(seed)
    if rel == "ORIENT_BY_RELATIVE_SIDE":
        if side is None:
            raise ResolveError("missing_side", None, "ORIENT-BY-RELATIVE-SIDE needs a side placement")
        return RELATIVE_SIDE_YAW[side]
    try:
        return yaw_for_facing(rel, subject_center, target_center, reference_yaw)
    except ValueError as exc:
        raise ResolveError("bad_facing", None, str(exc)) from None


def resolve_camera(template: str, scene_bounds: WorldAabb, frame: Frame = Frame(),
                   container: WorldAabb | None = None, k: float = CAMERA_DISTANCE_FACTOR) -> tuple[Vec3, Vec3, Vec3]:
    """(position, target, up) for a camera template."""
    t = V.canonical(template)
    ua = frame.up_axis
    up = frame.camera_up
    c = list(scene_bounds.centroid)
    d = k * max(scene_bounds.sizes)
    if t.startswith("SIDE_"):
        _, sign, axis = t.split("_")
        a, s = "XYZ".index(axis), (1 if sign == "PLUS" else -1)
        pos = list(c)
        pos[a] = scene_bounds.face(a, s) + s * d
        return tuple(pos), tuple(c), up
    if t == "TOP_DOWN":
        pos = list(c)
        pos[ua] = scene_bounds.max[ua] + d
        return tuple(pos), tuple(c), (1.0, 0.0, 0.0)
    if t == "PERSPECTIVE":
        off = d / math.sqrt(3.0)
        return tuple(scene_bounds.max[i] + off for i in range(3)), tuple(c), up
    if t.startswith("INSIDE_"):
        if container is None:
            raise ResolveError("no_container", None, f"{t} needs an enclosing container")
        _, sign, axis, _ = t.split("_")
        a, s = "XY".index(axis), (1 if sign == "PLUS" else -1)
        pos = list(container.centroid)
        pos[a] = container.face(a, s) - s * INSIDE_WALL_INSET
        pos[ua] = container.min[ua] + INSIDE_WALL_HEIGHT_FRACTION * container.size(ua)
        target = list(container.centroid)
        target[ua] = pos[ua]
        return tuple(pos), tuple(target), up
    raise ValueError(f"unknown camera template {template!r}")


# -- PLACE-ANYWHERE grid scan -------------------------------------------------


def anywhere_candidates(region: WorldAabb | None, footprint: tuple[float, float], inside: bool):
    """Yield candidate footprint min corners, row-major from the region's min corner."""
    if region is None:
        yield (-footprint[0] / 2, -footprint[1] / 2)
        return
    x0, y0 = region.min_x, region.min_y
    if inside:
        nx = math.floor((region.max_x - footprint[0] - x0) / ANYWHERE_PITCH + 1e-9)
        ny = math.floor((region.max_y - footprint[1] - y0) / ANYWHERE_PITCH + 1e-9)
    else:
        # the last row/column starts at or past the region max and is always free
        nx = math.ceil((region.max_x - x0) / ANYWHERE_PITCH)
        ny = math.ceil((region.max_y - y0) / ANYWHERE_PITCH)
    for j in range(ny + 1):
        for i in range(nx + 1):
            yield (x0 + i * ANYWHERE_PITCH, y0 + j * ANYWHERE_PITCH)


def blocked(candidate: WorldAabb, obstacles: Iterable[WorldAabb], tol: float = OVERLAP_TOL) -> bool:
    return any(min(candidate.overlap_depth(o)) > tol for o in obstacles)


def anywhere_obstacles(scene_bodies: Mapping[str, "Body"], before: Iterable[str]) -> list[WorldAabb]:
    return [scene_bodies[n].aabb for n in before if not scene_bodies[n].is_fluid]


def resolve_anywhere(p: Placement, obstacles: list[WorldAabb], base_z: float = 0.0,
                     support: WorldAabb | None = None) -> None:
    """PLACE-ANYWHERE: first free grid cell, bottom on the base plane (or on ``support``'s top)."""
    h = p.half
    fp = (float(2 * h[0]), float(2 * h[1]))
    bottom = support.top_z if support is not None else base_z
    if support is not None:
        region = support
    else:
        region = union_all(obstacles)
    for mx, my in anywhere_candidates(region, fp, inside=support is not None):
        cand = WorldAabb((mx, my, bottom), (mx + fp[0], my + fp[1], bottom + float(2 * h[2])))
        if not blocked(cand, obstacles):
            p.set_min(0, mx, "PLACE_ANYWHERE")
            p.set_min(1, my, "PLACE_ANYWHERE")
            p.set_min(2, bottom, "PLACE_ANYWHERE")
            return
    raise ResolveError("no_fit", p.name, "PLACE-ANYWHERE found no free location")


# -- scene resolution -----------------------------------------------------------


def bindings_of(obj: ObjectSpec) -> list[RelationBinding]:
    return [RelationBinding(obj.name, obj.topology.ref, rel, obj.topology.params) for rel in obj.topology.relation_keys]


def dependencies(plan: SimulationPlan) -> dict[str, list[str]]:
    """Objects each object must wait for."""
    deps: dict[str, list[str]] = {o.name: [] for o in plan.objects}
    group_members: dict[str, list[str]] = {}
    fillers: dict[str, list[str]] = {}
    for o in plan.objects:
        keys = o.topology.relation_keys
        if "GROUP" in keys:
            group_members.setdefault(o.topology.params.get("group"), []).append(o.name)
        if any(k in V.FILLING for k in keys) and o.topology.ref:
            fillers.setdefault(o.topology.ref[0], []).append(o.name)
    for o in plan.objects:
        d = deps[o.name]
        keys = o.topology.relation_keys
        d.extend(o.topology.ref)
        for key in ("target", "about"):
            if key in o.topology.params:
                d.append(o.topology.params[key])
        if "COPY_GROUP" in keys:
            d.extend(group_members.get(o.topology.params.get("group"), []))
        if any(k in V.SURFACE_ANCHORED for k in keys) and o.topology.ref:
            d.extend(f for f in fillers.get(o.topology.ref[0], []) if f != o.name)
        deps[o.name] = list(dict.fromkeys(d))
    return deps


def dependency_order(plan: SimulationPlan) -> list[str]:
    """Topological order of objects, ties broken by plan order."""
    deps = dependencies(plan)
    index = {o.name: i for i, o in enumerate(plan.objects)}
    remaining = {n: set(d) for n, d in deps.items()}
    done: list[str] = []
    placed: set[str] = set()
    while len(done) < len(index):
        ready = [n for n in index if n not in placed and remaining[n] <= placed]
        if not ready:
            cycle = sorted((n for n in index if n not in placed), key=index.get)
            raise ResolveError("cyclic_topology", cycle[0], f"cyclic topology among {', '.join(cycle)}")
        nxt = min(ready, key=index.get)
        done.append(nxt)
        placed.add(nxt)
    return done


def frame_for(plan: SimulationPlan) -> Frame:
    return Frame.from_gravity(plan.simulation_parameters.gravity_vector())


class _SceneBuilder:
    def __init__(self, plan: SimulationPlan, catalog: AssetCatalog, seed: int | None):
        self.plan = plan
        self.catalog = catalog
        self.seed = seed
        self.frame = frame_for(plan)
        self.bodies: dict[str, Body] = {}
        self.surfaces: dict[str, Surface] = {}
        self.groups: dict[str, list[str]] = {}
        self.order: list[str] = []

    def ref_box(self, name: str) -> WorldAabb:
        return self.bodies[name].aabb

    def extents_for(self, obj: ObjectSpec) -> tuple[Vec3 | None, float | None, dict]:
        c = obj.construction
        extra: dict = {}
        if c.kind == "asset":
            try:
                entry = self.catalog.lookup(c)
            except MissingAssetError as exc:
                raise ResolveError("missing_catalog_entry", obj.name, str(exc), clarify=True) from None
            if entry.native_frame != "z_up_native":
                raise ResolveError("unsupported_native_frame", obj.name,
                                   f"native frame {entry.native_frame!r} is not supported")
            extra = {"collision_proxy": entry.collision_proxy, "asset_type": c.asset_type or entry.asset_type,
                     "factory": c.factory if c.factory is not None else entry.factory}
            density = c.density if c.density is not None else entry.density
            return entry.extents.as_tuple(), density, extra
        return c.size, c.density, extra

    def build_body(self, obj: ObjectSpec) -> Body:
        keys = obj.topology.relation_keys
        params = obj.topology.params
        refs = obj.topology.ref
        declared, density, extra = self.extents_for(obj)
        is_fluid = obj.construction.is_fluid
        if is_fluid and density is None:
            density = DEFAULT_FLUID_DENSITY
        fills_from_container = is_fluid and refs and any(
            k in ("FILLS_CONTAINER_TO_TOP", "FILLS_CONTAINER_LOWER_HALF", "FREE_SURFACE_AT") for k in keys)
        if declared is None and not fills_from_container:
            raise ResolveError("missing_extent", obj.name, "size is not specified and cannot be derived", clarify=True)

        rot = obj.pose.rotation_deg or (0.0, 0.0, 0.0)
        base_orientation = Orientation(deg_z=normalize_deg(rot[2]), deg_x=normalize_deg(rot[0]))
        p = Placement(obj.name, declared or (1.0, 1.0, 1.0), base_orientation, obj.construction.primitive)
        convention = Convention.BOUNDARY_FLOOR if obj.construction.primitive == "generated_boundary" else Convention.CENTER
        ref_boxes = [self.ref_box(r) for r in refs]
        primary = ref_boxes[0] if ref_boxes else None
        surface_out: Surface | None = None
        seed_used = None
        yaw_override: float | None = None

        # sizes first
        if "HEIGHT" in keys:
            resolve_support(p, primary, "HEIGHT", height=params.get("height"))
        if "BRIDGE_BETWEEN_A_AND_B" in keys:
            resolve_bridge(p, ref_boxes[0], ref_boxes[1], "BRIDGE_BETWEEN_A_AND_B", params.get("span_length"))

        for rel in keys:
            fam = V.RELATIONS[rel].family
            if rel in ("HEIGHT", "BRIDGE_BETWEEN_A_AND_B", "GROUP") or fam == "orientation":
                continue
            if fam == "planar":
                resolve_planar(p, primary, rel, gap=float(params.get("gap", DEFAULT_GAP)),
                               base_z=float(params.get("base_z", 0.0)))
            elif fam == "alignment":
                resolve_alignment(p, primary, rel)
            elif rel == "PLACE_ANYWHERE":
                resolve_anywhere(p, anywhere_obstacles(self.bodies, self.order),
                                 base_z=float(params.get("base_z", 0.0)), support=primary)
            elif fam in ("support", "on_top"):
                resolve_support(p, primary, rel)
            elif fam == "adjacent":
                resolve_adjacent(p, primary, rel)
            elif rel in V.FILLING:
                container = None
                if refs and not self.bodies[refs[0]].is_fluid:
                    container = primary
                h = resolve_fluid(p, rel, container=container, params=params)
                surface_out = Surface(
                    height=h,
                    floor=container.bottom_z if container is not None else p.center[2] - p.half[2],
                    fluid=obj.name,
                    container=refs[0] if container is not None else None,
                    density=density,
                )
            elif rel in V.SURFACE_ANCHORED:
                surf = self.surfaces.get(refs[0])
                resolve_fluid(p, rel, surface=surf, params=params, density=None if is_fluid else density)
            elif rel == "FLUSH_WITH_PLATFORM_TOP":
                resolve_bridge(p, ref_boxes[0], ref_boxes[1] if len(ref_boxes) > 1 else None, rel)
            elif rel == "SYMMETRY_ALONG":
                about = self.ref_box(params["about"]) if "about" in params else None
                m, at = mirror_plane(params, about)
                src = self.bodies[refs[0]]
                if (src.aabb.min[m] + OVERLAP_TOL < at < src.aabb.max[m] - OVERLAP_TOL
                        and not params.get("allow_overlap", False) and not src.is_fluid):
                    raise ResolveError("mirror_overlap", obj.name,
                                       f"mirror plane {'xy'[m]}={at:g} cuts through {src.name!r}")
                (c2, yaw2), = resolve_group({src.name: (src.aabb.centroid, src.orientation.deg_z)},
                                            rel, {**params, "at": at}).values()
                yaw_override = yaw2
                p.orientation = Orientation(deg_z=yaw2, deg_x=p.orientation.deg_x)
                for axis in range(3):
                    p.set_center(axis, c2[axis], rel)
            elif rel == "COPY_GROUP":
                group = params["group"]
                members = self.groups.get(group, [])
                anchor = group_anchor(self.bodies[m].aabb for m in members)
                src = self.bodies[refs[0]]
                (c2, yaw2), = resolve_group({src.name: (src.aabb.centroid, src.orientation.deg_z)},
                                            rel, params, anchor=anchor).values()
                yaw_override = yaw2
                p.orientation = Orientation(deg_z=yaw2, deg_x=p.orientation.deg_x)
                for axis in range(3):
                    p.set_center(axis, c2[axis], rel)
            else:  # pragma: no cover - vocabulary is closed
                raise ResolveError("unknown_relation", obj.name, rel)

        self.apply_defaults(p, obj, ref_boxes, keys, convention)

        for rel in keys:
            if rel == "PLACE_IN" or V.RELATIONS[rel].family == "on_top" or rel == "PLACE_ON":
                check_support(obj.name, p.aabb(), primary, rel)

        # rotation-only predicates keep the position fixed
        orient = [k for k in keys if V.RELATIONS[k].family == "orientation"]
        yaw = yaw_override if yaw_override is not None else p.orientation.deg_z
        for rel in orient:
            target_name = params.get("target", refs[0] if refs else None)
            kw: dict = {}
            if rel in ("FACING_TO", "FACING_OPPOSITE_TO"):
                tb = self.ref_box(target_name)
                kw = {"subject_center": (p.center[0], p.center[1]), "target_center": (tb.center_x, tb.center_y)}
            elif rel == "FACING_SAME_AS":
                kw = {"reference_yaw": self.bodies[target_name].orientation.deg_z}
            elif rel == "RANDOM_ROT":
                seed_used = self.seed_for(obj)
                kw = {"seed": seed_used}
            elif rel == "ORIENT_BY_RELATIVE_SIDE":
                side = next(V.side_of(k) for k in keys if k in V.SIDE_PREDICATES)
                kw = {"side": side}
            try:
                yaw = resolve_orientation(rel, **kw)
            except ResolveError as exc:
                raise ResolveError(exc.kind, obj.name, exc.message) from None
        orientation = Orientation(deg_z=yaw, deg_x=p.orientation.deg_x)

        center = tuple(p.center)
        extents = p.extents
        aabb = world_aabb(BoxExtent(*extents), center, orientation, Convention.CENTER, obj.construction.primitive)
        if convention is Convention.BOUNDARY_FLOOR:
            position = (center[0], center[1], aabb.bottom_z)
        else:
            position = center

        if surface_out is not None:
            self.surfaces[obj.name] = surface_out
            if surface_out.container is not None:
                self.surfaces[surface_out.container] = surface_out
        if "GROUP" in keys:
            self.groups.setdefault(params["group"], []).append(obj.name)

        return Body(
            name=obj.name,
            kind=obj.construction.kind,
            primitive=obj.construction.primitive,
            convention=convention,
            position=tuple(float(v) for v in position),
            orientation=orientation,
            extents=tuple(float(v) for v in extents),
            declared_extents=None if declared is None else tuple(float(v) for v in declared),
            aabb=aabb,
            fixed=bool(obj.fixed),
            is_dynamic=obj.dynamic,
            fsi_registration=obj.fsi_registration or ("fluid" if is_fluid else "none"),
            density=density,
            is_fluid=is_fluid,
            asset_key=obj.construction.asset_key,
            asset_type=extra.get("asset_type", obj.construction.asset_type),
            collision_proxy=extra.get("collision_proxy"),
            factory=extra.get("factory", obj.construction.factory),
            seed=seed_used,
        )

    def seed_for(self, obj: ObjectSpec) -> int:
        s = obj.topology.params.get("seed")
        if isinstance(s, int) and not isinstance(s, bool):
            return s
        if self.seed is not None:
            return derive_seed(self.seed, obj.name)
        raise ResolveError("missing_seed", obj.name, "RANDOM-ROT needs params.seed or a global --seed")

    def apply_defaults(self, p: Placement, obj: ObjectSpec, ref_boxes: list[WorldAabb], keys, convention) -> None:
        pos = obj.pose.position or (0.0, 0.0, 0.0)
        if not ref_boxes:
            for axis in (0, 1):
                if p.center[axis] is None:
                    p.set_center(axis, pos[axis], "pose")
            if p.center[2] is None:
                if convention is Convention.BOUNDARY_FLOOR:
                    p.set_min(2, pos[2], "pose")
                else:
                    p.set_center(2, pos[2], "pose")
            return
        bridged = "BRIDGE_BETWEEN_A_AND_B" in keys
        for axis in (0, 1):
            if p.center[axis] is None:
                if bridged:
                    p.set_center(axis, (ref_boxes[0].center(axis) + ref_boxes[1].center(axis)) / 2, "default")
                else:
                    p.set_center(axis, ref_boxes[0].center(axis), "default")
        if p.center[2] is None:
            if bridged:
                p.set_max(2, min(ref_boxes[0].top_z, ref_boxes[1].top_z), "default")
            else:
                p.set_min(2, ref_boxes[0].bottom_z, "default")

    def cameras(self) -> list[CameraPose]:
        bounds = union_all(b.aabb for b in self.bodies.values())
        out = []
        for i, step in enumerate(self.plan.implementation_steps):
            for cam in step.cameras:
                if cam.template is None:
                    out.append(CameraPose(cam.position, cam.target, cam.up, i))
                    continue
                container = None
                if V.canonical(cam.template).startswith("INSIDE_"):
                    container = self.enclosing_container(cam.params.get("container"))
                k = float(cam.params.get("distance_factor", CAMERA_DISTANCE_FACTOR))
                pos, target, up = resolve_camera(cam.template, bounds, self.frame, container, k)
                out.append(CameraPose(pos, target, up, i, V.canonical(cam.template)))
        return out

    def enclosing_container(self, name: str | None) -> WorldAabb | None:
        if name is not None:
            return self.bodies[name].aabb
        containers = [b for b in self.bodies.values() if b.is_container]
        if not containers:
            return None
        best = max(containers, key=lambda b: b.aabb.size(0) * b.aabb.size(1))
        return best.aabb


def resolve_scene(plan: SimulationPlan, catalog: AssetCatalog | None = None, seed: int | None = None) -> ResolvedScene:
    """Resolve every object's pose; pure in ``(plan, catalog, seed)``."""
    catalog = EMPTY_CATALOG if catalog is None else catalog
    for issue in validate_schema(plan):
        if issue.severity is Severity.FATAL:
            raise ResolveError(issue.code, issue.subject, issue.message)
    builder = _SceneBuilder(plan, catalog, seed)
    if builder.frame.gravity_axis is GravityAxis.NEG_Y:
        logger.warning("gravity along -y is experimental: placement still treats z as height")
    by_name = {o.name: o for o in plan.objects}
    for name in dependency_order(plan):
        try:
            body = builder.build_body(by_name[name])
        except ResolveError as exc:
            if exc.subject is None:
                raise ResolveError(exc.kind, name, exc.message, exc.clarify) from None
            raise
        builder.bodies[name] = body
        builder.order.append(name)
    try:
        cameras = builder.cameras()
    except ResolveError as exc:
        raise ResolveError(exc.kind, exc.subject or "cameras", exc.message) from None
    bodies = {o.name: builder.bodies[o.name] for o in plan.objects}
    bindings = tuple(b for o in plan.objects for b in bindings_of(o))
    bounds = union_all(b.aabb for b in bodies.values()) or WorldAabb((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    return ResolvedScene(
        frame=builder.frame,
        bodies=bodies,
        order=tuple(builder.order),
        bindings=bindings,
        surfaces=dict(builder.surfaces),
        groups={k: tuple(v) for k, v in builder.groups.items()},
        scene_bounds=bounds,
        cameras=tuple(cameras),
    )


def rebuild_aabb(body: Body) -> WorldAabb:
    """AABB implied by a body's own pose and extents."""
    center = list(body.position)
    if body.convention is Convention.BOUNDARY_FLOOR:
        h = half_extents(BoxExtent(*body.extents), body.orientation, body.primitive)
        center[2] += h[2]
    return world_aabb(BoxExtent(*body.extents), tuple(center), body.orientation, Convention.CENTER, body.primitive)


def moved(body: Body, position: Vec3 | None = None, orientation: Orientation | None = None,
          extents: Vec3 | None = None) -> Body:
    """Copy of ``body`` with a new pose/size and a consistent AABB."""
    b = dataclasses.replace(
        body,
        position=body.position if position is None else tuple(position),
        orientation=body.orientation if orientation is None else orientation,
        extents=body.extents if extents is None else tuple(extents),
    )
    return dataclasses.replace(b, aabb=rebuild_aabb(b))
