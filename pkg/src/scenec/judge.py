"""Deterministic run judge: logs and trajectories in, a categorized verdict out.

Trajectory files are CSV with header ``t,name,px,py,pz[,vx,vy,vz]`` and one
row per object per sample; ``p`` is the body position as written in the
scene document. Logs are ``LEVEL | message`` lines; a run is complete when
its last non-blank line is ``SIM_DONE``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import JudgeInputError, TrajectoryFormatError
from .plan import SimulationPlan
from .report import Category, ErrorReport, Failure, violation_failures
from .resolver import ResolvedScene, moved
from .validator import check_scene

DELTA_MOVE = 0.05
DELTA_STILL = 0.005
SETTLE_TOL = 0.01
DIVERGENCE_BOUND = 1e3
REPLAY_TOL = 0.01
SENTINEL = "SIM_DONE"

ERROR_LEVELS = ("ERROR", "FATAL", "CRITICAL")
WARNING_LEVELS = ("WARNING", "WARN")
KNOWN_LEVELS = ERROR_LEVELS + WARNING_LEVELS + ("INFO", "DEBUG")


@dataclass(frozen=True)
class Sample:
    t: float
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class Trajectory:
    series: dict[str, tuple[Sample, ...]]

    @property
    def names(self) -> frozenset:
        return frozenset(self.series)

    def final(self, name: str) -> Sample:
        return self.series[name][-1]

    def max_displacement(self, name: str) -> float:
        """Largest distance from the first sample over the whole series."""
        pts = np.array([s.position for s in self.series[name]], dtype=float)
        return float(np.max(np.linalg.norm(pts - pts[0], axis=1)))


def parse_trajectory(text: str) -> Trajectory:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TrajectoryFormatError("empty trajectory", 1) from None
    header = [h.strip() for h in header]
    base = ["t", "name", "px", "py", "pz"]
    with_vel = base + ["vx", "vy", "vz"]
    if header not in (base, with_vel):
        raise TrajectoryFormatError(f"header must be {','.join(base)}[,vx,vy,vz], got {','.join(header)}", 1)
    width = len(header)
    series: dict[str, list[Sample]] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise TrajectoryFormatError(f"expected {width} fields, got {len(row)}", line)
        try:
            nums = [float(row[0])] + [float(c) for c in row[2:]]
        except ValueError as exc:
            raise TrajectoryFormatError(f"bad number: {exc}", line) from None
        if not all(math.isfinite(v) for v in nums):
            raise TrajectoryFormatError("non-finite value", line)
        name = row[1].strip()
        if not name:
            raise TrajectoryFormatError("empty object name", line)
        prev = series.get(name)
        if prev and nums[0] <= prev[-1].t:
            raise TrajectoryFormatError(f"time for {name!r} not strictly increasing ({nums[0]!r} after {prev[-1].t!r})", line)
        vel = tuple(nums[4:7]) if width == 8 else None
        series.setdefault(name, []).append(Sample(nums[0], tuple(nums[1:4]), vel))
    if not series:
        raise TrajectoryFormatError("trajectory has no samples", reader.line_num)
    return Trajectory({k: tuple(v) for k, v in series.items()})


@dataclass(frozen=True)
class LogSummary:
    ran_to_completion: bool
    runtime_errors: int = 0
    solver_warnings: int = 0
    info_lines: int = 0
    unknown_lines: int = 0
    first: dict = field(default_factory=dict)  # level -> first message


def parse_log(text: str) -> LogSummary:
    counts = {"error": 0, "warning": 0, "info": 0, "unknown": 0}
    first: dict[str, str] = {}
    last = ""
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        last = line
        if line == SENTINEL:
            continue
        level, sep, msg = line.partition("|")
        level = level.strip().upper()
        if not sep or level not in KNOWN_LEVELS:
            counts["unknown"] += 1
            continue
        bucket = "error" if level in ERROR_LEVELS else "warning" if level in WARNING_LEVELS else "info"
        counts[bucket] += 1
        first.setdefault(bucket, msg.strip())
    return LogSummary(
        ran_to_completion=last == SENTINEL,
        runtime_errors=counts["error"],
        solver_warnings=counts["warning"],
        info_lines=counts["info"],
        unknown_lines=counts["unknown"],
        first=first,
    )


def _evidence(check: str, measured: float | None = None, limit: float | None = None, **extra) -> dict:
    out = {"check": check, **extra}
    if measured is not None:
        out["measured"] = {"value": measured, "units": "m"}
        out["limit"] = {"value": limit, "units": "m"}
    return out


def judge_run(plan: SimulationPlan, scene: ResolvedScene, traj: Trajectory, log: LogSummary,
              stage: int = 0) -> ErrorReport:
    """Checks run in order; the first group with failures decides the report."""
    expected = frozenset(n for n, b in scene.bodies.items() if not b.is_fluid)
    if traj.names != expected:
        missing = sorted(expected - traj.names)
        extra = sorted(traj.names - expected)
        raise JudgeInputError(f"trajectory objects do not match the scene (missing {missing}, unexpected {extra})")

    # runtime
    failures = []
    if log.runtime_errors:
        failures.append(Failure(Category.RUNTIME_ERROR, "log",
                                {"check": "runtime_errors", "count": log.runtime_errors, "first": log.first.get("error")}))
    if not log.ran_to_completion:
        failures.append(Failure(Category.RUNTIME_ERROR, "log", {"check": "completion", "sentinel": SENTINEL}))
    if failures:
        return ErrorReport.from_failures(failures, stage)

    # settlement: divergence, then tunneling of dynamic bodies
    base = scene.base_plane
    for name in sorted(expected):
        peak = max(max(abs(c) for c in s.position) for s in traj.series[name])
        if peak > DIVERGENCE_BOUND:
            failures.append(Failure(Category.OBJECT_SETTLEMENT, name, _evidence("divergence", peak, DIVERGENCE_BOUND)))
    for name in sorted(expected):
        body = scene.bodies[name]
        if not body.is_dynamic:
            continue
        lift = body.aabb.center_z - body.position[2]
        low = min(s.position[2] + lift for s in traj.series[name])
        if low < base - SETTLE_TOL:
            failures.append(Failure(Category.OBJECT_SETTLEMENT, name,
                                    _evidence("tunneling", low, base - SETTLE_TOL, base_plane=base)))
    if failures:
        return ErrorReport.from_failures(failures, stage)

    # motion expectations and fixed bodies
    movers = []
    for step in plan.implementation_steps:
        for name in step.motion_expectations:
            if name not in movers:
                movers.append(name)
    for name in movers:
        if name not in traj.series:
            continue  # fluids are not tracked
        d = traj.max_displacement(name)
        if d < DELTA_MOVE:
            failures.append(Failure(Category.OBJECT_SETTLEMENT, name, _evidence("motion_expectation", d, DELTA_MOVE)))
    for name in sorted(expected):
        if scene.bodies[name].fixed:
            d = traj.max_displacement(name)
            if d > DELTA_STILL:
                failures.append(Failure(Category.OBJECT_SETTLEMENT, name, _evidence("fixed_body_moved", d, DELTA_STILL)))
    if failures:
        return ErrorReport.from_failures(failures, stage)

    # geometric replay on the final frame
    final = scene
    for name in sorted(expected):
        final = final.with_body(moved(scene.bodies[name], position=traj.final(name).position))
    violations = check_scene(final, plan, checks=("interpenetration", "containment"),
                             interpenetration_tol=REPLAY_TOL, containment_tol=REPLAY_TOL)
    return ErrorReport.from_failures(violation_failures(violations), stage)
