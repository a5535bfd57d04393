"""Closed vocabulary of placement predicates, relation templates and camera templates.

Names are matched case-insensitively with ``-`` and ``_`` interchangeable, so
``floats-at-surface``, ``FLOATS_AT_SURFACE`` and ``Floats_At_Surface`` all
denote one relation. :func:`canonical` produces the upper-snake key used
everywhere internally.

Each relation declares which pose quantities it determines (``x``, ``y``,
``z``, ``yaw``, ``span`` for the bridge axis, ``sz`` for a height override).
Two relations on one object may not determine the same quantity; the
resolver and the validator both rely on that single-owner rule.
"""

from __future__ import annotations

from dataclasses import dataclass

# Cardinal names; +X Front, -X Back, +Y Left, -Y Right, +Z Up.
CARDINAL_YAW = {"FRONT": 0.0, "LEFT": 90.0, "BACK": 180.0, "RIGHT": -90.0}

PLANAR = ("LEFT_OF", "RIGHT_OF", "FRONT_OF", "BACK_OF", "PLACE_ON_BASE")
ALIGNMENT = ("ALIGN_LEFT", "ALIGN_RIGHT", "ALIGN_FRONT", "ALIGN_BACK", "ALIGN_CENTER_LR", "ALIGN_CENTER_FB")
SUPPORT = ("PLACE_ON", "PLACE_IN", "PLACE_ANYWHERE")
HEIGHT = ("HEIGHT",)
ORIENTATION = (
    "FACING_RIGHT", "FACING_LEFT", "FACING_FRONT", "FACING_BACK",
    "FACING_TO", "FACING_OPPOSITE_TO", "FACING_SAME_AS",
    "RANDOM_ROT", "ORIENT_BY_RELATIVE_SIDE",
)
FLUID = ("FREE_SURFACE_AT", "FLOATS_AT_SURFACE", "SUBMERGED", "CONTAINS_FLUID")
GROUPING = ("SYMMETRY_ALONG", "GROUP", "COPY_GROUP")
ON_TOP = ("SPAWNED_ON_TOP", "PLACED_ON_TOP", "CENTERED_ON_REF")
ADJACENT = tuple(
    f"ADJACENT_{sign}_{axis}_{mode}"
    for mode in ("TOP_FLUSH", "BOTTOM_FLUSH", "CENTERS")
    for sign, axis in (("PLUS", "X"), ("MINUS", "X"), ("PLUS", "Y"), ("MINUS", "Y"))
)
WATER_SURFACE = ("BOTTOM_FLUSH_WATER_SURFACE", "CENTER_AT_WATER_SURFACE", "TOP_FLUSH_WATER_SURFACE")
CONTAINER_BRIDGE = (
    "FILLS_CONTAINER_TO_TOP", "FILLS_CONTAINER_LOWER_HALF",
    "BRIDGE_BETWEEN_A_AND_B", "FLUSH_WITH_PLATFORM_TOP",
)
CAMERA_TEMPLATES = (
    "SIDE_MINUS_X", "SIDE_PLUS_X", "SIDE_MINUS_Y", "SIDE_PLUS_Y", "TOP_DOWN", "PERSPECTIVE",
    "INSIDE_MINUS_X_WALL", "INSIDE_PLUS_X_WALL", "INSIDE_MINUS_Y_WALL", "INSIDE_PLUS_Y_WALL",
)

FAMILIES = {
    "planar": PLANAR,
    "alignment": ALIGNMENT,
    "support": SUPPORT,
    "height": HEIGHT,
    "orientation": ORIENTATION,
    "fluid": FLUID,
    "grouping": GROUPING,
    "on_top": ON_TOP,
    "adjacent": ADJACENT,
    "water_surface": WATER_SURFACE,
    "container_bridge": CONTAINER_BRIDGE,
}

# relations that read a fluid free surface from their reference
SURFACE_ANCHORED = ("FLOATS_AT_SURFACE", "SUBMERGED") + WATER_SURFACE
# relations that make the subject a fluid volume inside (or at) a container
FILLING = ("FILLS_CONTAINER_TO_TOP", "FILLS_CONTAINER_LOWER_HALF", "FREE_SURFACE_AT", "CONTAINS_FLUID")
SIDE_PREDICATES = PLANAR[:4] + ADJACENT


@dataclass(frozen=True)
class RelationInfo:
    name: str
    family: str
    determines: frozenset
    min_refs: int
    max_refs: int


def _info(name: str, family: str) -> RelationInfo:
    refs = (1, 1)
    if family == "planar":
        determines = {"LEFT_OF": "y", "RIGHT_OF": "y", "FRONT_OF": "x", "BACK_OF": "x", "PLACE_ON_BASE": "z"}[name]
        if name == "PLACE_ON_BASE":
            refs = (0, 1)
    elif family == "alignment":
        determines = "y" if name in ("ALIGN_LEFT", "ALIGN_RIGHT", "ALIGN_CENTER_LR") else "x"
    elif name == "PLACE_ON":
        determines = "z"
    elif name == "PLACE_IN":
        determines = "z"
    elif name == "PLACE_ANYWHERE":
        determines, refs = "xyz", (0, 1)
    elif name == "HEIGHT":
        determines, refs = ("sz",), (0, 1)
    elif family == "orientation":
        determines = ("yaw",)
        refs = (0, 1)
    elif name == "FREE_SURFACE_AT":
        determines, refs = "z", (0, 1)
    elif family in ("fluid", "water_surface"):
        determines = "z"
    elif name == "GROUP":
        determines, refs = (), (0, 1)
    elif name in ("SYMMETRY_ALONG", "COPY_GROUP"):
        determines = ("x", "y", "z", "yaw")
    elif name in ("SPAWNED_ON_TOP", "PLACED_ON_TOP"):
        determines = "z"
    elif name == "CENTERED_ON_REF":
        determines = "xyz"
    elif family == "adjacent":
        determines = (name.split("_")[2].lower(), "z")
    elif name.startswith("FILLS_"):
        determines = "z"
    elif name == "BRIDGE_BETWEEN_A_AND_B":
        determines, refs = ("span",), (2, 2)
    elif name == "FLUSH_WITH_PLATFORM_TOP":
        determines, refs = "z", (1, 2)
    else:  # pragma: no cover - table above is exhaustive
        raise AssertionError(name)
    return RelationInfo(name, family, frozenset(determines), refs[0], refs[1])


RELATIONS: dict[str, RelationInfo] = {
    name: _info(name, family) for family, names in FAMILIES.items() for name in names
}


def canonical(name: str) -> str:
    return name.strip().upper().replace("-", "_")


def lookup(name: str) -> RelationInfo | None:
    return RELATIONS.get(canonical(name))


def is_camera_template(name: str) -> bool:
    return canonical(name) in CAMERA_TEMPLATES


def side_of(relation: str) -> tuple[int, int] | None:
    """Return ``(axis, sign)`` of the reference face a side predicate places against."""
    rel = canonical(relation)
    simple = {"FRONT_OF": (0, 1), "BACK_OF": (0, -1), "LEFT_OF": (1, 1), "RIGHT_OF": (1, -1)}
    if rel in simple:
        return simple[rel]
    if rel.startswith("ADJACENT_"):
        _, sign, axis = rel.split("_")[:3]
        return ("XY".index(axis), 1 if sign == "PLUS" else -1)
    return None
