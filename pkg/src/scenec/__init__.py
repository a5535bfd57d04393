"""Deterministic scene-plan compiler.

Parse simulation plans, ground their spatial relations into metric poses,
self-check the result, validate generated scripts against an API index and
judge simulation runs.
"""

from .catalog import AssetCatalog, CatalogEntry, load_catalog
from .plan import SimulationPlan, apply_defaults, load_plan, parse_plan, serialize_plan, validate_schema
from .resolver import ResolvedScene, resolve_scene
from .validator import Violation, check_scene

__version__ = "0.1.0"

__all__ = [
    "AssetCatalog",
    "CatalogEntry",
    "ResolvedScene",
    "SimulationPlan",
    "Violation",
    "apply_defaults",
    "check_scene",
    "load_catalog",
    "load_plan",
    "parse_plan",
    "resolve_scene",
    "serialize_plan",
    "validate_schema",
]
