"""Command-line front end.

Exit codes: 0 success, 1 validation or judge failure, 2 usage or
configuration error (unreadable files, malformed catalog/index/trajectory).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .apicheck import bundled_index_path, check_source, load_api_index
from .catalog import EMPTY_CATALOG, load_catalog
from .emit import emit_scene, emit_skeleton, load_scene
from .errors import (
    ApiIndexError,
    CatalogError,
    JudgeInputError,
    PlanError,
    ResolveError,
    SourceParseError,
    TrajectoryFormatError,
)
from .judge import judge_run, parse_log, parse_trajectory
from .plan import Severity, apply_defaults, load_plan, validate_schema
from .report import Category, ErrorReport, Failure, violation_failures
from .resolver import resolve_scene
from .validator import blocking, check_scene

log = logging.getLogger("scenec")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CATALOG_ENV = "SCENEC_CATALOG"
SCENE_FILE = "scene.json"
REPORT_FILE = "scene_report.json"
SKELETON_FILE = "skeleton.py"


class ConfigError(Exception):
    pass


def write_atomic(path: Path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path!r}: {exc.strerror or exc}") from None


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- compile -------------------------------------------------------------------


def cmd_compile(args) -> int:
    catalog_path = args.catalog or os.environ.get(CATALOG_ENV)
    try:
        catalog = load_catalog(_read(catalog_path, "catalog")) if catalog_path else EMPTY_CATALOG
    except CatalogError as exc:
        raise ConfigError(f"catalog: {exc}") from None
    _read(args.plan, "plan")
    out = Path(args.out)
    report: dict = {"plan": str(args.plan), "issues": [], "violations": [], "warnings": []}
    try:
        plan = load_plan(args.plan)
    except PlanError as exc:
        print(f"{args.plan}: {exc}", file=sys.stderr)
        report["error"] = {"kind": exc.kind, "line": exc.line, "column": exc.column, "message": exc.message}
        write_atomic(out / REPORT_FILE, _dump(report))
        return EXIT_FAIL
    report["warnings"] = list(plan.warnings)
    for w in plan.warnings:
        log.warning("%s: %s", args.plan, w)

    issues = validate_schema(plan, catalog)
    report["issues"] = [i.to_dict() for i in issues]
    stopping = [i for i in issues if i.severity is not Severity.DEFAULTABLE]
    if stopping:
        for i in stopping:
            print(f"{args.plan}: {i.severity.value}: {i.path}: {i.message}", file=sys.stderr)
        write_atomic(out / REPORT_FILE, _dump(report))
        return EXIT_FAIL
    plan = apply_defaults(plan, issues)

    try:
        scene = resolve_scene(plan, catalog, seed=args.seed)
    except ResolveError as exc:
        print(f"{args.plan}: cannot resolve {exc}", file=sys.stderr)
        report["error"] = {"kind": exc.kind, "subject": exc.subject, "message": exc.message,
                           "needs_clarification": exc.clarify}
        write_atomic(out / REPORT_FILE, _dump(report))
        return EXIT_FAIL

    violations = check_scene(scene, plan)
    report["violations"] = [v.to_dict() for v in violations]
    errors = blocking(violations)
    report["report"] = ErrorReport.from_failures(violation_failures(errors)).to_dict()
    write_atomic(out / SCENE_FILE, emit_scene(scene, plan))
    if args.emit_skeleton:
        write_atomic(out / SKELETON_FILE, emit_skeleton(scene, plan))
    write_atomic(out / REPORT_FILE, _dump(report))
    for v in violations:
        print(f"{v.severity}: {v.check_id}: {', '.join(v.subjects)}: {v.message}", file=sys.stderr)
    print(f"resolved {len(scene.bodies)} bodies, {len(errors)} violation(s) -> {out / SCENE_FILE}")
    return EXIT_FAIL if errors else EXIT_OK


# -- check-api -------------------------------------------------------------------


def cmd_check_api(args) -> int:
    index_path = args.index or str(bundled_index_path())
    try:
        index = load_api_index(_read(index_path, "index"))
    except ApiIndexError as exc:
        raise ConfigError(f"index: {exc}") from None
    source = _read(args.source, "source")
    try:
        report = check_source(source, index)
    except SourceParseError as exc:
        print(f"{args.source}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.json:
        print(_dump(report.to_error_report().to_dict() | {"api": report.to_dict()}), end="")
    else:
        print(report.format())
    return EXIT_OK if report.ok else EXIT_FAIL


# -- judge -----------------------------------------------------------------------


def cmd_judge(args) -> int:
    try:
        plan = apply_defaults(load_plan(args.plan))
    except OSError as exc:
        raise ConfigError(f"cannot read plan {args.plan!r}: {exc}") from None
    except PlanError as exc:
        raise ConfigError(f"plan {args.plan}: {exc}") from None
    try:
        scene = load_scene(_read(args.scene, "scene"))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"scene {args.scene}: {exc}") from None
    try:
        traj = parse_trajectory(_read(args.traj, "trajectory"))
    except TrajectoryFormatError as exc:
        raise ConfigError(f"trajectory {args.traj}: {exc}") from None
    summary = parse_log(_read(args.log, "log"))
    try:
        report = judge_run(plan, scene, traj, summary, stage=args.stage)
    except JudgeInputError as exc:
        raise ConfigError(str(exc)) from None
    text = report.to_json()
    if args.out:
        write_atomic(Path(args.out), text)
    print(text, end="")
    return EXIT_OK if report.accepted else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scenec", description="Compile, check and judge simulation scene plans.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="resolve a plan into a scene document")
    c.add_argument("--plan", required=True, help="plan file (indentation format, or .json)")
    c.add_argument("--catalog", help=f"asset catalog JSON (default: ${CATALOG_ENV})")
    c.add_argument("--out", required=True, help="output directory")
    c.add_argument("--emit-skeleton", action="store_true", help=f"also write {SKELETON_FILE}")
    c.add_argument("--seed", type=int, help="global seed for RANDOM-ROT without params.seed")
    c.set_defaults(func=cmd_compile)

    a = sub.add_parser("check-api", help="validate a script's call sites against an API index")
    a.add_argument("--source", required=True)
    a.add_argument("--index", help="API index JSON (default: bundled index)")
    a.add_argument("--json", action="store_true", help="print the report as JSON")
    a.set_defaults(func=cmd_check_api)

    j = sub.add_parser("judge", help="judge a run from its trajectory and log")
    j.add_argument("--plan", required=True)
    j.add_argument("--scene", required=True)
    j.add_argument("--traj", required=True)
    j.add_argument("--log", required=True)
    j.add_argument("--stage", type=int, default=0, help="implementation-step index for the report")
    j.add_argument("--out", help="also write the report to this file")
    j.set_defaults(func=cmd_judge)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"scenec: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
