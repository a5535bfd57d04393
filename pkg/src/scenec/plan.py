"""Simulation-plan data model: parsing, schema checks, defaults and serialization."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

from . import grammar, vocabulary
from .errors import PlanError

Vec3 = tuple[float, float, float]


class PlanType(str, Enum):
    SCENE = "scene"
    MBS = "mbs"
    MBS_IN_SCENE = "mbs_in_scene"
    FSI_IN_SCENE = "fsi_in_scene"


class RecordingMode(str, Enum):
    VSG_ONLY = "vsg_only"
    SENSOR_CAMS = "sensor_cams"


class FsiRegistration(str, Enum):
    BOUNDARY = "boundary"
    FLUID = "fluid"
    FSI_SOLID = "fsi_solid"
    NON_FSI = "non_fsi"
    NONE = "none"


KINDS = ("procedural", "asset")
ROLES = ("base", "child")
ASSET_TYPES = ("mesh", "urdf", "vehicle_json", "wrapper_vehicle")
KNOWN_PRIMITIVES = ("box", "sphere", "cylinder", "fluid_domain", "generated_boundary")
FLUID_PRIMITIVES = ("fluid_domain",)

# params entries that name other objects
OBJECT_PARAMS = ("target", "about", "container")

DEFAULT_TIME_STEP = 0.001
DEFAULT_DURATION = 10.0
DEFAULT_GRAVITY = -9.81
DEFAULT_RECORDING = RecordingMode.VSG_ONLY
DEFAULT_DENSITY = 1000.0


@dataclass(frozen=True)
class Construction:
    kind: str
    primitive: str | None = None
    size: Vec3 | None = None
    density: float | None = None
    catalog: str | None = None
    asset_type: str | None = None
    filename: str | None = None
    factory: str | None = None  # opaque, passed through verbatim

    @property
    def asset_key(self) -> str | None:
        if self.catalog is None or self.filename is None:
            return None
        return f"{self.catalog}/{self.filename}"

    @property
    def is_fluid(self) -> bool:
        return self.primitive in FLUID_PRIMITIVES


@dataclass(frozen=True)
class Topology:
    role: str = "base"
    ref: tuple[str, ...] = ()
    relation: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)

    @property
    def relation_keys(self) -> tuple[str, ...]:
        return tuple(vocabulary.canonical(r) for r in self.relation)


@dataclass(frozen=True)
class Pose:
    position: Vec3 | None = None
    rotation_deg: Vec3 | None = None


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    construction: Construction
    topology: Topology = field(default_factory=Topology)
    pose: Pose = field(default_factory=Pose)
    fixed: bool | None = None
    is_dynamic: bool | None = None
    fsi_registration: str | None = None
    description: str | None = None

    @property
    def dynamic(self) -> bool:
        if self.is_dynamic is not None:
            return self.is_dynamic
        return not bool(self.fixed)


@dataclass(frozen=True)
class CameraSpec:
    position: Vec3 | None = None
    target: Vec3 | None = None
    up: Vec3 | None = None
    template: str | None = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StepSpec:
    description: str = ""
    objects: tuple[str, ...] = ()
    cameras: tuple[CameraSpec, ...] = ()
    motion_expectations: tuple[str, ...] = ()


@dataclass(frozen=True)
class SimulationParameters:
    time_step: float | None = None
    simulation_duration: float | None = None
    gravity: float | Vec3 | None = None

    def gravity_vector(self) -> Vec3:
        g = DEFAULT_GRAVITY if self.gravity is None else self.gravity
        if isinstance(g, tuple):
            return g
        return (0.0, 0.0, -abs(float(g)))


@dataclass(frozen=True)
class SimulationPlan:
    plan_type: PlanType | None
    simulation_parameters: SimulationParameters = field(default_factory=SimulationParameters)
    objectives: tuple[str, ...] = ()
    recording_mode: RecordingMode | None = None
    objects: tuple[ObjectSpec, ...] = ()
    implementation_steps: tuple[StepSpec, ...] = ()
    clarifications_needed: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def object(self, name: str) -> ObjectSpec:
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(o.name for o in self.objects)


# -- binding parsed values onto the model -----------------------------------


class _Binder:
    def __init__(self, locs: dict):
        self.locs = locs
        self.warnings: list[str] = []

    def loc(self, path: tuple) -> tuple[int | None, int | None]:
        while path:
            if path in self.locs:
                return self.locs[path]
            path = path[:-1]
        return (None, None)

    def fail(self, path: tuple, message: str, kind: str = "schema") -> PlanError:
        line, col = self.loc(path)
        return PlanError(f"{_fmt_path(path)}: {message}", line, col, kind=kind)

    def warn_unknown(self, mapping: dict, allowed: Iterable[str], path: tuple) -> None:
        for key in mapping:
            if key not in allowed:
                line, col = self.loc(path + (key,))
                self.warnings.append(f"line {line}, column {col}: unknown key {_fmt_path(path + (key,))!r} ignored")

    def mapping(self, value: Any, path: tuple, allow_none: bool = True) -> dict:
        if value is None and allow_none:
            return {}
        if not isinstance(value, dict):
            raise self.fail(path, f"expected a mapping, got {_describe(value)}", "type")
        return value

    def number(self, value: Any, path: tuple) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(path, f"expected a number, got {_describe(value)}", "type")
        if not math.isfinite(value):
            raise self.fail(path, "expected a finite number", "type")
        return float(value)

    def opt_number(self, value: Any, path: tuple) -> float | None:
        return None if value is None else self.number(value, path)

    def boolean(self, value: Any, path: tuple) -> bool | None:
        if value is None:
            return None
        if not isinstance(value, bool):
            raise self.fail(path, f"expected true or false, got {_describe(value)}", "type")
        return value

    def text(self, value: Any, path: tuple) -> str | None:
        if value is None:
            return None
        if isinstance(value, (dict, list)):
            raise self.fail(path, f"expected text, got {_describe(value)}", "type")
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    def identifier(self, value: Any, path: tuple) -> str:
        if not isinstance(value, str) or not value:
            raise self.fail(path, f"expected an identifier, got {_describe(value)}", "type")
        return value

    def enum(self, value: Any, path: tuple, choices: Iterable[str]) -> str:
        choices = tuple(choices)
        if value not in choices:
            raise self.fail(path, f"unknown value {value!r}; expected one of {', '.join(choices)}", "enum")
        return value

    def vec3(self, value: Any, path: tuple) -> Vec3:
        if isinstance(value, dict):
            if set(value) != {"x", "y", "z"}:
                raise self.fail(path, f"expected keys x, y, z; got {', '.join(value) or 'none'}", "type")
            items = [(("x",), value["x"]), (("y",), value["y"]), (("z",), value["z"])]
        elif isinstance(value, list):
            if len(value) != 3:
                raise self.fail(path, f"expected 3 components, got {len(value)}", "type")
            items = [((i,), v) for i, v in enumerate(value)]
        else:
            raise self.fail(path, f"expected a 3-vector, got {_describe(value)}", "type")
        return tuple(self.number(v, path + p) for p, v in items)  # type: ignore[return-value]

    def names(self, value: Any, path: tuple) -> tuple[str, ...]:
        if value is None:
            return ()
        if isinstance(value, str):
            return (value,)
        if not isinstance(value, list):
            raise self.fail(path, f"expected a name or list of names, got {_describe(value)}", "type")
        return tuple(self.identifier(v, path + (i,)) for i, v in enumerate(value))

    def text_list(self, value: Any, path: tuple) -> tuple[str, ...]:
        if value is None:
            return ()
        if not isinstance(value, list):
            raise self.fail(path, f"expected a list, got {_describe(value)}", "type")
        return tuple(self.text(v, path + (i,)) for i, v in enumerate(value))


def _describe(value: Any) -> str:
    if value is None:
        return "nothing"
    if isinstance(value, bool):
        return "a boolean"
    if isinstance(value, dict):
        return "a mapping"
    if isinstance(value, list):
        return f"a list of {len(value)}"
    if isinstance(value, (int, float)):
        return f"the number {value!r}"
    return repr(value)


def _fmt_path(path: tuple) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out


_SECTIONS = (
    "plan_type", "simulation_parameters", "objectives", "recording_mode",
    "objects", "implementation_steps", "clarifications_needed",
)
_TITLES = ("Proposed Simulation Plan", "Simulation Plan")


def parse_plan(text: str) -> SimulationPlan:
    """Parse a plan document.

    Raises :class:`PlanError` (with line/column) on grammar errors, unknown
    enum values, duplicate object names and dangling references. Unknown
    keys do not fail; they are collected in ``plan.warnings``.
    """
    doc = grammar.parse_document(text)
    binder = _Binder(doc.locs)
    for title in doc.titles:
        if title not in _TITLES:
            binder.warnings.append(f"unrecognised title line {title!r} ignored")
    binder.warn_unknown(doc.sections, _SECTIONS, ())
    return _bind_plan(doc.sections, binder)


def plan_from_dict(data: dict) -> SimulationPlan:
    """Build a plan from the structured interchange form (see :func:`plan_to_dict`)."""
    binder = _Binder({})
    if not isinstance(data, dict):
        raise PlanError("plan document must be a mapping", kind="type")
    binder.warn_unknown(data, _SECTIONS, ())
    return _bind_plan(data, binder)


def _bind_plan(sec: dict, b: _Binder) -> SimulationPlan:
    plan_type = None
    if sec.get("plan_type") is not None:
        plan_type = PlanType(b.enum(sec["plan_type"], ("plan_type",), (p.value for p in PlanType)))

    sp_raw = b.mapping(sec.get("simulation_parameters"), ("simulation_parameters",))
    b.warn_unknown(sp_raw, ("time_step", "simulation_duration", "gravity"), ("simulation_parameters",))
    gravity = sp_raw.get("gravity")
    gpath = ("simulation_parameters", "gravity")
    if gravity is not None:
        gravity = b.vec3(gravity, gpath) if isinstance(gravity, (list, dict)) else b.number(gravity, gpath)
    params = SimulationParameters(
        time_step=b.opt_number(sp_raw.get("time_step"), ("simulation_parameters", "time_step")),
        simulation_duration=b.opt_number(sp_raw.get("simulation_duration"), ("simulation_parameters", "simulation_duration")),
        gravity=gravity,
    )
    for key in ("time_step", "simulation_duration"):
        v = getattr(params, key)
        if v is not None and v <= 0:
            raise b.fail(("simulation_parameters", key), f"must be > 0, got {v!r}")

    recording = None
    if sec.get("recording_mode") is not None:
        recording = RecordingMode(b.enum(sec["recording_mode"], ("recording_mode",), (m.value for m in RecordingMode)))

    raw_objects = sec.get("objects")
    if raw_objects is None:
        raw_objects = []
    if not isinstance(raw_objects, list):
        raise b.fail(("objects",), "expected a list of objects", "type")
    objects = [_bind_object(o, ("objects", i), b) for i, o in enumerate(raw_objects)]

    seen: dict[str, int] = {}
    for i, obj in enumerate(objects):
        if obj.name in seen:
            raise b.fail(("objects", i, "name"), f"duplicate object name {obj.name!r}", "duplicate_name")
        seen[obj.name] = i

    raw_steps = sec.get("implementation_steps") or []
    if not isinstance(raw_steps, list):
        raise b.fail(("implementation_steps",), "expected a list of steps", "type")
    steps = [_bind_step(s, ("implementation_steps", i), b) for i, s in enumerate(raw_steps)]

    plan = SimulationPlan(
        plan_type=plan_type,
        simulation_parameters=params,
        objectives=b.text_list(sec.get("objectives"), ("objectives",)),
        recording_mode=recording,
        objects=tuple(objects),
        implementation_steps=tuple(steps),
        clarifications_needed=b.text_list(sec.get("clarifications_needed"), ("clarifications_needed",)),
    )
    _check_references(plan, seen, b)
    return dataclasses.replace(plan, warnings=tuple(b.warnings))


_OBJECT_KEYS = ("name", "construction", "topology", "pose", "fixed", "is_dynamic", "fsi_registration", "description")
_CONSTRUCTION_KEYS = ("kind", "primitive", "size", "density", "catalog", "asset_type", "filename", "factory")


def _bind_object(raw: Any, path: tuple, b: _Binder) -> ObjectSpec:
    raw = b.mapping(raw, path, allow_none=False)
    b.warn_unknown(raw, _OBJECT_KEYS, path)
    if "name" not in raw:
        raise b.fail(path, "object has no name", "missing")
    name = b.identifier(raw["name"], path + ("name",))

    cpath = path + ("construction",)
    craw = b.mapping(raw.get("construction"), cpath)
    b.warn_unknown(craw, _CONSTRUCTION_KEYS, cpath)
    if "kind" not in craw:
        raise b.fail(cpath, f"object {name!r} has no construction.kind", "missing")
    kind = b.enum(craw["kind"], cpath + ("kind",), KINDS)
    primitive = b.text(craw.get("primitive"), cpath + ("primitive",))
    if primitive is not None and primitive not in KNOWN_PRIMITIVES:
        b.warnings.append(f"{_fmt_path(cpath + ('primitive',))}: primitive {primitive!r} is not a built-in shape")
    size = None
    if craw.get("size") is not None:
        size = b.vec3(craw["size"], cpath + ("size",))
        if any(s <= 0 for s in size):
            raise b.fail(cpath + ("size",), f"size components must be > 0 (full extents), got {size}")
    density = b.opt_number(craw.get("density"), cpath + ("density",))
    if density is not None and density <= 0:
        raise b.fail(cpath + ("density",), f"density must be > 0, got {density!r}")
    asset_type = b.text(craw.get("asset_type"), cpath + ("asset_type",))
    if asset_type is not None:
        b.enum(asset_type, cpath + ("asset_type",), ASSET_TYPES)
    construction = Construction(
        kind=kind,
        primitive=primitive,
        size=size,
        density=density,
        catalog=b.text(craw.get("catalog"), cpath + ("catalog",)),
        asset_type=asset_type,
        filename=b.text(craw.get("filename"), cpath + ("filename",)),
        factory=b.text(craw.get("factory"), cpath + ("factory",)),
    )

    tpath = path + ("topology",)
    traw = b.mapping(raw.get("topology"), tpath)
    b.warn_unknown(traw, ("role", "ref", "relation", "params"), tpath)
    role = "base"
    if traw:
        if "role" not in traw:
            raise b.fail(tpath, f"object {name!r} topology has no role", "missing")
        role = b.enum(traw["role"], tpath + ("role",), ROLES)
    refs = b.names(traw.get("ref"), tpath + ("ref",))
    relations = b.names(traw.get("relation"), tpath + ("relation",))
    tparams = b.mapping(traw.get("params"), tpath + ("params",))
    for i, rel in enumerate(relations):
        rpath = tpath + ("relation",) if len(relations) == 1 and isinstance(traw.get("relation"), str) else tpath + ("relation", i)
        info = vocabulary.lookup(rel)
        if info is None:
            raise b.fail(rpath, f"unknown relation {rel!r}", "enum")
        if len(refs) > info.max_refs or (role == "child" and len(refs) < info.min_refs):
            want = str(info.min_refs) if info.min_refs == info.max_refs else f"{info.min_refs}-{info.max_refs}"
            raise b.fail(rpath, f"relation {rel!r} takes {want} reference(s), got {len(refs)}")
        if role == "base" and info.min_refs > 0:
            raise b.fail(rpath, f"relation {rel!r} needs a reference; base objects have none")
    if role == "child" and (not refs or not relations):
        raise b.fail(tpath, f"child object {name!r} needs both ref and relation", "missing")
    if role == "base" and refs:
        raise b.fail(tpath + ("ref",), f"base object {name!r} must not have a ref")
    for key in OBJECT_PARAMS:
        if key in tparams:
            b.identifier(tparams[key], tpath + ("params", key))
    topology = Topology(role=role, ref=refs, relation=relations, params=tparams)

    ppath = path + ("pose",)
    praw = b.mapping(raw.get("pose"), ppath)
    b.warn_unknown(praw, ("position", "rotation_deg"), ppath)
    pose = Pose(
        position=None if praw.get("position") is None else b.vec3(praw["position"], ppath + ("position",)),
        rotation_deg=None if praw.get("rotation_deg") is None else b.vec3(praw["rotation_deg"], ppath + ("rotation_deg",)),
    )
    fsi = raw.get("fsi_registration")
    if fsi is not None:
        fsi = b.enum(fsi, path + ("fsi_registration",), (r.value for r in FsiRegistration))
    return ObjectSpec(
        name=name,
        construction=construction,
        topology=topology,
        pose=pose,
        fixed=b.boolean(raw.get("fixed"), path + ("fixed",)),
        is_dynamic=b.boolean(raw.get("is_dynamic"), path + ("is_dynamic",)),
        fsi_registration=fsi,
        description=b.text(raw.get("description"), path + ("description",)),
    )


def _bind_step(raw: Any, path: tuple, b: _Binder) -> StepSpec:
    raw = b.mapping(raw, path, allow_none=False)
    b.warn_unknown(raw, ("description", "objects", "cameras", "motion_expectations"), path)
    cams_raw = raw.get("cameras") or []
    if not isinstance(cams_raw, list):
        raise b.fail(path + ("cameras",), "expected a list of cameras", "type")
    cameras = []
    for i, c in enumerate(cams_raw):
        cpath = path + ("cameras", i)
        c = b.mapping(c, cpath, allow_none=False)
        b.warn_unknown(c, ("position", "target", "up", "template", "params"), cpath)
        template = None
        if c.get("template") is not None:
            template = b.identifier(c["template"], cpath + ("template",))
            if not vocabulary.is_camera_template(template):
                raise b.fail(cpath + ("template",), f"unknown camera template {template!r}", "enum")
        vecs = {k: (None if c.get(k) is None else b.vec3(c[k], cpath + (k,))) for k in ("position", "target", "up")}
        if template is None and any(v is None for v in vecs.values()):
            raise b.fail(cpath, "camera needs position, target and up, or a template", "missing")
        if vecs["up"] is not None and all(u == 0 for u in vecs["up"]):
            raise b.fail(cpath + ("up",), "camera up vector must be nonzero")
        cparams = b.mapping(c.get("params"), cpath + ("params",))
        if "container" in cparams:
            b.identifier(cparams["container"], cpath + ("params", "container"))
        cameras.append(CameraSpec(template=template, params=cparams, **vecs))
    return StepSpec(
        description=b.text(raw.get("description"), path + ("description",)) or "",
        objects=b.names(raw.get("objects"), path + ("objects",)),
        cameras=tuple(cameras),
        motion_expectations=b.names(raw.get("motion_expectations"), path + ("motion_expectations",)),
    )


def _check_references(plan: SimulationPlan, index: dict[str, int], b: _Binder) -> None:
    def dangling(path: tuple, what: str, name: str, owner: str) -> PlanError:
        return b.fail(path, f"{owner} references unknown object {name!r} ({what})", "dangling_reference")

    for i, obj in enumerate(plan.objects):
        tpath = ("objects", i, "topology")
        for j, ref in enumerate(obj.topology.ref):
            if ref not in index:
                rpath = tpath + ("ref",) if len(obj.topology.ref) == 1 else tpath + ("ref", j)
                raise dangling(rpath, "topology.ref", ref, f"object {obj.name!r}")
        for key in OBJECT_PARAMS:
            target = obj.topology.params.get(key)
            if target is not None and target not in index:
                raise dangling(tpath + ("params", key), f"params.{key}", target, f"object {obj.name!r}")
    for i, step in enumerate(plan.implementation_steps):
        spath = ("implementation_steps", i)
        for field_name in ("objects", "motion_expectations"):
            for j, name in enumerate(getattr(step, field_name)):
                if name not in index:
                    raise dangling(spath + (field_name, j), field_name, name, f"step {i}")
        for j, cam in enumerate(step.cameras):
            container = cam.params.get("container")
            if container is not None and container not in index:
                raise dangling(spath + ("cameras", j, "params", "container"), "camera container", container, f"step {i}")


# -- schema issues and defaults --------------------------------------------


class Severity(str, Enum):
    FATAL = "fatal"
    NEEDS_CLARIFICATION = "needs_clarification"
    DEFAULTABLE = "defaultable"


@dataclass(frozen=True)
class SchemaIssue:
    severity: Severity
    code: str
    path: str
    message: str
    subject: str | None = None
    default: Any = None

    def to_dict(self) -> dict:
        out = {"severity": self.severity.value, "code": self.code, "path": self.path, "message": self.message}
        if self.subject is not None:
            out["subject"] = self.subject
        if self.default is not None:
            out["default"] = list(self.default) if isinstance(self.default, tuple) else self.default
        return out


def _needs_size(obj: ObjectSpec) -> bool:
    keys = obj.topology.relation_keys
    if obj.construction.is_fluid and any(k.startswith("FILLS_") for k in keys):
        return False
    if obj.construction.is_fluid and "FREE_SURFACE_AT" in keys and obj.topology.ref:
        return False
    return True


def validate_schema(plan: SimulationPlan, catalog=None) -> list[SchemaIssue]:
    """Sort plan gaps and contradictions into fatal / needs_clarification / defaultable.

    Defaultable issues carry the value :func:`apply_defaults` inserts.
    When ``catalog`` is given, asset objects missing from it are reported
    as needs_clarification.
    """
    issues: list[SchemaIssue] = []
    F, C, D = Severity.FATAL, Severity.NEEDS_CLARIFICATION, Severity.DEFAULTABLE

    if plan.plan_type is None:
        issues.append(SchemaIssue(C, "missing_plan_type", "plan_type", "plan_type is not specified"))
    sp = plan.simulation_parameters
    if sp.time_step is None:
        issues.append(SchemaIssue(D, "missing_time_step", "simulation_parameters.time_step",
                                  "time_step not given", default=DEFAULT_TIME_STEP))
    if sp.simulation_duration is None:
        issues.append(SchemaIssue(D, "missing_duration", "simulation_parameters.simulation_duration",
                                  "simulation_duration not given", default=DEFAULT_DURATION))
    if sp.gravity is None:
        issues.append(SchemaIssue(D, "missing_gravity", "simulation_parameters.gravity",
                                  "gravity not given", default=DEFAULT_GRAVITY))
    elif isinstance(sp.gravity, tuple):
        gx, gy, gz = sp.gravity
        if not ((gx == 0 and gy == 0 and gz <= 0) or (gx == 0 and gz == 0 and gy < 0)):
            issues.append(SchemaIssue(F, "unsupported_gravity", "simulation_parameters.gravity",
                                      f"gravity {sp.gravity} is not along -z or -y"))
    if plan.recording_mode is None:
        issues.append(SchemaIssue(D, "missing_recording_mode", "recording_mode",
                                  "recording_mode not given", default=DEFAULT_RECORDING.value))

    by_name = {o.name: o for o in plan.objects}
    groups = {
        o.topology.params.get("group") for o in plan.objects if "GROUP" in o.topology.relation_keys
    }
    for i, obj in enumerate(plan.objects):
        p = f"objects[{i}]"
        c = obj.construction
        keys = obj.topology.relation_keys
        params = obj.topology.params
        if obj.fixed and obj.is_dynamic:
            issues.append(SchemaIssue(F, "fixed_and_dynamic", p, f"{obj.name!r} is both fixed and dynamic", obj.name))
        if obj.fixed is None:
            issues.append(SchemaIssue(D, "missing_fixed", f"{p}.fixed", "fixed not given", obj.name,
                                      default=(obj.is_dynamic is False)))
        if obj.is_dynamic is None:
            issues.append(SchemaIssue(D, "missing_is_dynamic", f"{p}.is_dynamic", "is_dynamic not given", obj.name,
                                      default=not bool(obj.fixed)))
        if obj.fsi_registration is None:
            issues.append(SchemaIssue(D, "missing_fsi_registration", f"{p}.fsi_registration",
                                      "fsi_registration not given", obj.name,
                                      default="fluid" if c.is_fluid else "none"))
        if c.kind == "procedural":
            if c.size is None and _needs_size(obj):
                issues.append(SchemaIssue(C, "missing_size", f"{p}.construction.size",
                                          f"size of {obj.name!r} is not specified and cannot be derived", obj.name))
            if c.density is None and (obj.dynamic or c.is_fluid):
                issues.append(SchemaIssue(D, "missing_density", f"{p}.construction.density",
                                          "density not given", obj.name, default=_default_density(obj, by_name)))
        else:
            if c.catalog is None or c.filename is None:
                issues.append(SchemaIssue(C, "missing_asset_key", f"{p}.construction",
                                          f"asset {obj.name!r} needs catalog and filename", obj.name))
            elif catalog is not None and c.asset_key not in catalog:
                issues.append(SchemaIssue(C, "missing_catalog_entry", f"{p}.construction",
                                          f"no catalog entry for {c.asset_key!r}", obj.name))
        rot = obj.pose.rotation_deg
        if rot is not None and rot[1] != 0:
            issues.append(SchemaIssue(F, "unsupported_rotation", f"{p}.pose.rotation_deg",
                                      "rotation about y is not part of the Rz*Rx orientation algebra", obj.name))

        owner: dict[str, str] = {}
        for rel in keys:
            for q in vocabulary.RELATIONS[rel].determines:
                if q in owner:
                    issues.append(SchemaIssue(F, "conflicting_relations", f"{p}.topology.relation",
                                              f"{owner[q]} and {rel} both determine {q}", obj.name))
                owner[q] = rel
        if "span" in owner and ({"x", "y"} & owner.keys()):
            issues.append(SchemaIssue(F, "conflicting_relations", f"{p}.topology.relation",
                                      "a bridge span cannot be combined with planar placement", obj.name))
        if "HEIGHT" in keys:
            if c.kind != "procedural":
                issues.append(SchemaIssue(F, "height_on_asset", f"{p}.topology", "HEIGHT applies to procedural bodies only", obj.name))
            if not _positive(params.get("height")):
                issues.append(SchemaIssue(F, "bad_param", f"{p}.topology.params.height", "HEIGHT needs params.height > 0", obj.name))
        if "FREE_SURFACE_AT" in keys:
            if not _is_num(params.get("height")):
                issues.append(SchemaIssue(F, "bad_param", f"{p}.topology.params.height", "FREE_SURFACE_AT needs params.height", obj.name))
            if "HEIGHT" in keys:
                issues.append(SchemaIssue(F, "conflicting_relations", f"{p}.topology", "HEIGHT and FREE_SURFACE_AT share params.height", obj.name))
        if any(k in keys for k in ("FACING_TO", "FACING_OPPOSITE_TO", "FACING_SAME_AS")):
            if "target" not in params and not obj.topology.ref:
                issues.append(SchemaIssue(F, "missing_target", f"{p}.topology", "facing needs a ref or params.target", obj.name))
        if "ORIENT_BY_RELATIVE_SIDE" in keys and not any(k in vocabulary.SIDE_PREDICATES for k in keys):
            issues.append(SchemaIssue(F, "missing_side", f"{p}.topology",
                                      "ORIENT_BY_RELATIVE_SIDE needs a side placement predicate", obj.name))
        if "SYMMETRY_ALONG" in keys and params.get("axis") not in ("x", "y"):
            issues.append(SchemaIssue(F, "bad_param", f"{p}.topology.params.axis", "SYMMETRY_ALONG needs params.axis x or y", obj.name))
        if "GROUP" in keys and not isinstance(params.get("group"), str):
            issues.append(SchemaIssue(F, "bad_param", f"{p}.topology.params.group", "GROUP needs params.group", obj.name))
        if "COPY_GROUP" in keys:
            if params.get("group") not in groups:
                issues.append(SchemaIssue(F, "unknown_group", f"{p}.topology.params.group",
                                          f"COPY_GROUP names unknown group {params.get('group')!r}", obj.name))
            if ("offset" in params) == ("anchor" in params):
                issues.append(SchemaIssue(F, "bad_param", f"{p}.topology.params",
                                          "COPY_GROUP needs exactly one of params.offset / params.anchor", obj.name))
        for k in ("gap", "depth"):
            if k in params and not (_is_num(params[k]) and params[k] >= 0):
                issues.append(SchemaIssue(F, "bad_param", f"{p}.topology.params.{k}", f"params.{k} must be a number >= 0", obj.name))

    for i, step in enumerate(plan.implementation_steps):
        for name in step.motion_expectations:
            if by_name[name].fixed:
                issues.append(SchemaIssue(F, "fixed_motion_expectation", f"implementation_steps[{i}].motion_expectations",
                                          f"{name!r} is fixed but expected to move", name))
    for j, text in enumerate(plan.clarifications_needed):
        issues.append(SchemaIssue(C, "open_clarification", f"clarifications_needed[{j}]", text))
    return issues


def _fluid_density(name: str, by_name: dict) -> float:
    """Density of the fluid a floater refers to, directly or through its container."""
    ref = by_name.get(name)
    if ref is not None and not ref.construction.is_fluid:
        for o in by_name.values():
            if o.construction.is_fluid and o.topology.ref[:1] == (name,):
                ref = o
                break
    if ref is not None and ref.construction.is_fluid and ref.construction.density is not None:
        return ref.construction.density
    return DEFAULT_DENSITY


def _default_density(obj: ObjectSpec, by_name: dict) -> float:
    # a floater at half the fluid density rides with its center on the surface
    if "FLOATS_AT_SURFACE" in obj.topology.relation_keys and obj.topology.ref and not obj.construction.is_fluid:
        return 0.5 * _fluid_density(obj.topology.ref[0], by_name)
    return DEFAULT_DENSITY


def _is_num(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _positive(v: Any) -> bool:
    return _is_num(v) and v > 0


def has_fatal(issues: Iterable[SchemaIssue]) -> bool:
    return any(i.severity is not Severity.DEFAULTABLE for i in issues)


def apply_defaults(plan: SimulationPlan, issues: list[SchemaIssue] | None = None) -> SimulationPlan:
    """Insert the default carried by every defaultable issue."""
    if issues is None:
        issues = validate_schema(plan)
    sp = plan.simulation_parameters
    top: dict[str, Any] = {}
    objs = {o.name: o for o in plan.objects}
    for issue in issues:
        if issue.severity is not Severity.DEFAULTABLE:
            continue
        if issue.code == "missing_time_step":
            sp = dataclasses.replace(sp, time_step=issue.default)
        elif issue.code == "missing_duration":
            sp = dataclasses.replace(sp, simulation_duration=issue.default)
        elif issue.code == "missing_gravity":
            sp = dataclasses.replace(sp, gravity=issue.default)
        elif issue.code == "missing_recording_mode":
            top["recording_mode"] = RecordingMode(issue.default)
        else:
            obj = objs[issue.subject]
            if issue.code == "missing_density":
                obj = dataclasses.replace(obj, construction=dataclasses.replace(obj.construction, density=issue.default))
            elif issue.code == "missing_fixed":
                obj = dataclasses.replace(obj, fixed=issue.default)
            elif issue.code == "missing_is_dynamic":
                obj = dataclasses.replace(obj, is_dynamic=issue.default)
            elif issue.code == "missing_fsi_registration":
                obj = dataclasses.replace(obj, fsi_registration=issue.default)
            objs[issue.subject] = obj
    return dataclasses.replace(
        plan,
        simulation_parameters=sp,
        objects=tuple(objs[o.name] for o in plan.objects),
        **top,
    )


# -- serialization ----------------------------------------------------------


def _vec_map(v: Vec3) -> dict:
    return {"x": v[0], "y": v[1], "z": v[2]}


def _names_value(names: tuple[str, ...]) -> Any:
    return names[0] if len(names) == 1 else list(names)


def _camera_dict(cam: CameraSpec) -> dict:
    out: dict = {}
    if cam.template is not None:
        out["template"] = cam.template
    for k in ("position", "target", "up"):
        v = getattr(cam, k)
        if v is not None:
            out[k] = list(v)
    if cam.params:
        out["params"] = cam.params
    return out


def _object_dict(obj: ObjectSpec) -> dict:
    c = obj.construction
    cons: dict = {"kind": c.kind}
    for key in _CONSTRUCTION_KEYS[1:]:
        v = getattr(c, key)
        if v is not None:
            cons[key] = _vec_map(v) if key == "size" else v
    topo: dict = {"role": obj.topology.role}
    if obj.topology.ref:
        topo["ref"] = _names_value(obj.topology.ref)
    if obj.topology.relation:
        topo["relation"] = _names_value(obj.topology.relation)
    if obj.topology.params:
        topo["params"] = obj.topology.params
    out: dict = {"name": obj.name, "construction": cons, "topology": topo}
    pose = {}
    if obj.pose.position is not None:
        pose["position"] = _vec_map(obj.pose.position)
    if obj.pose.rotation_deg is not None:
        pose["rotation_deg"] = _vec_map(obj.pose.rotation_deg)
    if pose:
        out["pose"] = pose
    for key in ("fixed", "is_dynamic", "fsi_registration", "description"):
        v = getattr(obj, key)
        if v is not None:
            out[key] = v
    return out


def plan_to_dict(plan: SimulationPlan) -> dict:
    """Canonical structured form; field names follow the plan schema."""
    out: dict = {}
    if plan.plan_type is not None:
        out["plan_type"] = plan.plan_type.value
    sp = plan.simulation_parameters
    params = {}
    if sp.time_step is not None:
        params["time_step"] = sp.time_step
    if sp.simulation_duration is not None:
        params["simulation_duration"] = sp.simulation_duration
    if sp.gravity is not None:
        params["gravity"] = list(sp.gravity) if isinstance(sp.gravity, tuple) else sp.gravity
    if params:
        out["simulation_parameters"] = params
    out["objectives"] = list(plan.objectives)
    if plan.recording_mode is not None:
        out["recording_mode"] = plan.recording_mode.value
    out["objects"] = [_object_dict(o) for o in plan.objects]
    out["implementation_steps"] = [
        {
            "description": s.description,
            "objects": list(s.objects),
            "cameras": [_camera_dict(c) for c in s.cameras],
            "motion_expectations": list(s.motion_expectations),
        }
        for s in plan.implementation_steps
    ]
    out["clarifications_needed"] = list(plan.clarifications_needed)
    return out


_FLOW_KEYS = frozenset({"size", "position", "rotation_deg", "params", "offset", "anchor"})


def serialize_plan(plan: SimulationPlan) -> str:
    """Write a plan in the indentation text format with canonical key order."""
    data = plan_to_dict(plan)
    lines = ["Simulation Plan", ""]
    for section in _SECTIONS:
        if section not in data:
            continue
        lines.append(section)
        grammar.dump_value(data[section], grammar.INDENT, lines, _FLOW_KEYS)
        lines.append("")
    return "\n".join(lines)


def plan_to_json(plan: SimulationPlan) -> str:
    return json.dumps(plan_to_dict(plan), indent=2) + "\n"


def load_plan(path) -> SimulationPlan:
    """Read a plan from ``path``; ``.json`` files use the structured form."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PlanError(exc.msg, exc.lineno, exc.colno, kind="syntax") from None
        return plan_from_dict(data)
    return parse_plan(text)
