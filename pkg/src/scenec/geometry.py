"""Coordinate frame, orientation algebra and bounding-box anchors.

World frame: +X Front, -X Back, +Y Left, -Y Right, +Z Up. Yaw (``deg_z``)
is counterclockwise from +X; tilt (``deg_x``) is about X. The composed
rotation is ``R = Rz(deg_z) @ Rx(deg_x)``.

Extents are always full sizes. Two position conventions exist: ``center``
(the position is the box center) and ``boundary_floor`` for generated
containers (position is the floor center; the rim sits at ``z + sz``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .vocabulary import CARDINAL_YAW, canonical

Vec3 = tuple[float, float, float]


class Convention(str, Enum):
    CENTER = "center"
    BOUNDARY_FLOOR = "boundary_floor"


class GravityAxis(str, Enum):
    NEG_Z = "neg_z"
    NEG_Y = "neg_y"


@dataclass(frozen=True)
class Frame:
    gravity_axis: GravityAxis = GravityAxis.NEG_Z

    @property
    def camera_up(self) -> Vec3:
        # anti-parallel to gravity
        return (0.0, 0.0, 1.0) if self.gravity_axis is GravityAxis.NEG_Z else (0.0, 1.0, 0.0)

    @property
    def up_axis(self) -> int:
        return 2 if self.gravity_axis is GravityAxis.NEG_Z else 1

    @property
    def working_plane(self) -> tuple[int, int]:
        return (0, 1) if self.gravity_axis is GravityAxis.NEG_Z else (0, 2)

    @classmethod
    def from_gravity(cls, g: Vec3) -> "Frame":
        if g[0] == 0 and g[2] == 0 and g[1] < 0:
            return cls(GravityAxis.NEG_Y)
        return cls(GravityAxis.NEG_Z)


@dataclass(frozen=True)
class BoxExtent:
    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        if not (self.sx > 0 and self.sy > 0 and self.sz > 0):
            raise ValueError(f"extents must be positive full sizes, got {self.as_tuple()}")

    def as_tuple(self) -> Vec3:
        return (self.sx, self.sy, self.sz)


@dataclass(frozen=True)
class WorldAabb:
    min: Vec3
    max: Vec3

    def __post_init__(self):
        if any(lo > hi for lo, hi in zip(self.min, self.max)):
            raise ValueError(f"inverted bounds {self.min} > {self.max}")

    @property
    def min_x(self) -> float:
        return self.min[0]

    @property
    def max_x(self) -> float:
        return self.max[0]

    @property
    def center_x(self) -> float:
        return (self.min[0] + self.max[0]) / 2

    @property
    def min_y(self) -> float:
        return self.min[1]

    @property
    def max_y(self) -> float:
        return self.max[1]

    @property
    def center_y(self) -> float:
        return (self.min[1] + self.max[1]) / 2

    @property
    def bottom_z(self) -> float:
        return self.min[2]

    @property
    def top_z(self) -> float:
        return self.max[2]

    @property
    def center_z(self) -> float:
        return (self.min[2] + self.max[2]) / 2

    def center(self, axis: int) -> float:
        return (self.min[axis] + self.max[axis]) / 2

    @property
    def centroid(self) -> Vec3:
        return (self.center(0), self.center(1), self.center(2))

    def size(self, axis: int) -> float:
        return self.max[axis] - self.min[axis]

    @property
    def sizes(self) -> Vec3:
        return (self.size(0), self.size(1), self.size(2))

    def face(self, axis: int, sign: int) -> float:
        return self.max[axis] if sign > 0 else self.min[axis]

    def union(self, other: "WorldAabb") -> "WorldAabb":
        return WorldAabb(
            tuple(min(a, b) for a, b in zip(self.min, other.min)),
            tuple(max(a, b) for a, b in zip(self.max, other.max)),
        )

    def translated(self, d: Vec3) -> "WorldAabb":
        return WorldAabb(
            tuple(a + b for a, b in zip(self.min, d)),
            tuple(a + b for a, b in zip(self.max, d)),
        )

    def overlap_depth(self, other: "WorldAabb") -> Vec3:
        """Per-axis interval overlap; negative values are separations."""
        return tuple(min(self.max[i], other.max[i]) - max(self.min[i], other.min[i]) for i in range(3))

    def contains(self, other: "WorldAabb", tol: float = 0.0, axes=(0, 1, 2)) -> bool:
        return all(other.min[i] >= self.min[i] - tol and other.max[i] <= self.max[i] + tol for i in axes)

    def to_dict(self) -> dict:
        return {"min": list(self.min), "max": list(self.max)}


def union_all(boxes) -> WorldAabb | None:
    out = None
    for b in boxes:
        out = b if out is None else out.union(b)
    return out


# -- orientation --------------------------------------------------------------


def normalize_deg(deg: float) -> float:
    """Map an angle to (-180, 180]."""
    d = math.fmod(deg, 360.0)
    if d <= -180.0:
        d += 360.0
    elif d > 180.0:
        d -= 360.0
    return d + 0.0  # drop negative zero


def cos_sin_deg(deg: float) -> tuple[float, float]:
    """cos/sin with exact values at multiples of 90 degrees."""
    d = math.fmod(deg, 360.0)
    if d < 0:
        d += 360.0
    exact = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0), 360.0: (1.0, 0.0)}
    if d in exact:
        return exact[d]
    r = math.radians(d)
    return math.cos(r), math.sin(r)


def rot_z(deg: float) -> np.ndarray:
    c, s = cos_sin_deg(deg)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_x(deg: float) -> np.ndarray:
    c, s = cos_sin_deg(deg)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


@dataclass(frozen=True)
class Orientation:
    deg_z: float = 0.0
    deg_x: float = 0.0

    @property
    def matrix(self) -> np.ndarray:
        return rot_z(self.deg_z) @ rot_x(self.deg_x)

    @property
    def heading(self) -> tuple[float, float]:
        c, s = cos_sin_deg(self.deg_z)
        return (c, s)

    def quaternion(self) -> tuple[float, float, float, float]:
        """(w, x, y, z) unit quaternion of ``Rz * Rx``."""
        hz, hx = math.radians(self.deg_z) / 2, math.radians(self.deg_x) / 2
        cz, sz, cx, sx = math.cos(hz), math.sin(hz), math.cos(hx), math.sin(hx)
        # qz * qx with qz = (cz, 0, 0, sz), qx = (cx, sx, 0, 0)
        return (cz * cx, cz * sx, sz * sx, sz * cx)


def compose_rotation(deg_z: float, deg_x: float = 0.0) -> Orientation:
    return Orientation(deg_z=float(deg_z), deg_x=float(deg_x))


def yaw_for_facing(
    facing: str,
    subject_center: tuple[float, float] | None = None,
    target_center: tuple[float, float] | None = None,
    reference_yaw: float | None = None,
) -> float:
    """Yaw in degrees for a FACING-* predicate.

    ``facing`` is a cardinal (``FRONT``/``LEFT``/``BACK``/``RIGHT`` or
    ``FACING_LEFT`` ...), ``TO``, ``OPPOSITE_TO`` or ``SAME_AS``.
    """
    key = canonical(facing)
    if key.startswith("FACING_"):
        key = key[len("FACING_"):]
    if key in CARDINAL_YAW:
        return CARDINAL_YAW[key]
    if key == "SAME_AS":
        if reference_yaw is None:
            raise ValueError("FACING-SAME-AS needs the reference yaw")
        return normalize_deg(reference_yaw)
    if key in ("TO", "OPPOSITE_TO"):
        if subject_center is None or target_center is None:
            raise ValueError(f"FACING-{key} needs subject and target centers")
        dx = target_center[0] - subject_center[0]
        dy = target_center[1] - subject_center[1]
        if dx == 0 and dy == 0:
            raise ValueError("FACING-TO target coincides with the subject in the working plane")
        yaw = _atan2_deg(dy, dx)
        return normalize_deg(yaw + 180.0) if key == "OPPOSITE_TO" else yaw
    raise ValueError(f"unknown facing {facing!r}")


def _atan2_deg(dy: float, dx: float) -> float:
    if dy == 0:
        return 0.0 if dx > 0 else 180.0
    if dx == 0:
        return 90.0 if dy > 0 else -90.0
    return math.degrees(math.atan2(dy, dx))


def reflect_yaw(deg_z: float, mirror_axis: int) -> float:
    """Yaw after reflecting the heading vector across the plane normal to ``mirror_axis``."""
    c, s = cos_sin_deg(deg_z)
    if mirror_axis == 1:
        s = -s
    else:
        c = -c
    return normalize_deg(_atan2_deg(s, c))


# -- bounds -----------------------------------------------------------------


def half_extents(extent: BoxExtent, orientation: Orientation, shape: str | None = None) -> np.ndarray:
    """Half sizes of the tight world AABB of a rotated body."""
    size = np.array(extent.as_tuple(), dtype=float)
    if shape == "sphere" and extent.sx == extent.sy == extent.sz:
        return size / 2
    if shape == "cylinder" and extent.sx == extent.sy and orientation.deg_x % 360.0 == 0:
        return size / 2
    # |R| @ half gives the tight bound of the 8 rotated corners
    return np.abs(orientation.matrix) @ (size / 2)


def world_aabb(
    extent: BoxExtent,
    position: Vec3,
    orientation: Orientation = Orientation(),
    convention: Convention | str = Convention.CENTER,
    shape: str | None = None,
) -> WorldAabb:
    h = half_extents(extent, orientation, shape)
    c = np.array(position, dtype=float)
    lo, hi = c - h, c + h
    if Convention(convention) is Convention.BOUNDARY_FLOOR:
        lo[2], hi[2] = c[2], c[2] + 2 * h[2]
    return WorldAabb(tuple(float(v) for v in lo), tuple(float(v) for v in hi))


def position_from_center(center: Vec3, half_z: float, convention: Convention | str) -> Vec3:
    """Serialized position for a body whose AABB center is ``center``."""
    if Convention(convention) is Convention.BOUNDARY_FLOOR:
        return (center[0], center[1], center[2] - half_z)
    return tuple(center)
