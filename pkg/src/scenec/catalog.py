"""Asset catalog: extents, native frame, collision proxies and attribution.

Catalog files are JSON::

    {"entries": [
        {"catalog": "sketchfab", "filename": "computer_table.obj",
         "label": "Computer Table", "asset_type": "mesh",
         "extents": {"x": 1.2, "y": 0.6, "z": 0.75},
         "native_frame": "z_up_native", "density": 600.0,
         "collision_proxy": "hulls/computer_table.coacd.obj",
         "license": "CC BY 4.0", "author": "example-modeler-1"}
    ]}

Extents are full sizes in meters. ``collision_proxy`` points at a
precomputed convex decomposition; it is copied into emitted scenes, never
computed here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping

from .errors import CatalogError, MissingAssetError
from .geometry import BoxExtent

DEFAULT_NATIVE_FRAME = "z_up_native"
_FIELDS = ("catalog", "filename", "label", "asset_type", "extents", "native_frame", "density",
           "collision_proxy", "license", "author", "factory")


@dataclass(frozen=True)
class CatalogEntry:
    catalog: str
    filename: str
    extents: BoxExtent
    label: str | None = None
    asset_type: str | None = None
    native_frame: str = DEFAULT_NATIVE_FRAME
    density: float | None = None
    collision_proxy: str | None = None
    license: str | None = None
    author: str | None = None
    factory: str | None = None

    @property
    def key(self) -> str:
        return f"{self.catalog}/{self.filename}"


class AssetCatalog(Mapping[str, CatalogEntry]):
    """Read-only map from ``catalog/filename`` to :class:`CatalogEntry`."""

    def __init__(self, entries=()):
        table: dict[str, CatalogEntry] = {}
        for e in entries:
            if e.key in table:
                raise CatalogError(f"duplicate catalog key {e.key!r}")
            table[e.key] = e
        self._entries = MappingProxyType(table)

    def __getitem__(self, key: str) -> CatalogEntry:
        return self._entries[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, construction) -> CatalogEntry:
        """Exact-key lookup for an asset construction; raises :class:`MissingAssetError`."""
        if construction.kind != "asset":
            raise CatalogError("lookup applies to asset constructions only")
        key = construction.asset_key
        if key is None or key not in self._entries:
            raise MissingAssetError(key or f"{construction.catalog}/{construction.filename}")
        return self._entries[key]


def _entry_from_record(rec: dict, index: int) -> CatalogEntry:
    where = f"entry {index}"
    if not isinstance(rec, dict):
        raise CatalogError(f"{where}: expected an object")
    for key in ("catalog", "filename"):
        if not isinstance(rec.get(key), str) or not rec[key]:
            raise CatalogError(f"{where}: missing {key}")
    where = f"entry {rec['catalog']}/{rec['filename']}"
    unknown = set(rec) - set(_FIELDS)
    if unknown:
        raise CatalogError(f"{where}: unknown fields {sorted(unknown)}")
    ext = rec.get("extents")
    if ext is None:
        raise CatalogError(f"{where}: missing extents")
    if isinstance(ext, dict):
        if set(ext) != {"x", "y", "z"}:
            raise CatalogError(f"{where}: extents need x, y, z")
        ext = [ext["x"], ext["y"], ext["z"]]
    if not isinstance(ext, list) or len(ext) != 3 or not all(_is_num(v) for v in ext):
        raise CatalogError(f"{where}: extents must be three numbers")
    if not all(v > 0 for v in ext):
        raise CatalogError(f"{where}: extents must be positive, got {ext}")
    density = rec.get("density")
    if density is not None and not (_is_num(density) and density > 0):
        raise CatalogError(f"{where}: density must be a positive number")
    return CatalogEntry(
        catalog=rec["catalog"],
        filename=rec["filename"],
        extents=BoxExtent(*(float(v) for v in ext)),
        label=rec.get("label"),
        asset_type=rec.get("asset_type"),
        native_frame=rec.get("native_frame") or DEFAULT_NATIVE_FRAME,
        density=None if density is None else float(density),
        collision_proxy=rec.get("collision_proxy"),
        license=rec.get("license"),
        author=rec.get("author"),
        factory=rec.get("factory"),
    )


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def catalog_from_dict(data) -> AssetCatalog:
    if isinstance(data, dict):
        records = data.get("entries")
    else:
        records = data
    if not isinstance(records, list):
        raise CatalogError("catalog document needs an 'entries' list")
    return AssetCatalog(_entry_from_record(r, i) for i, r in enumerate(records))


def load_catalog(document: str | Path) -> AssetCatalog:
    """Load a catalog from JSON text or a path to a JSON file."""
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith(("{", "["))):
        document = Path(document).read_text(encoding="utf-8")
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return catalog_from_dict(data)


def catalog_to_dict(catalog: AssetCatalog) -> dict:
    out = []
    for e in catalog.values():
        rec = {"catalog": e.catalog, "filename": e.filename,
               "extents": {"x": e.extents.sx, "y": e.extents.sy, "z": e.extents.sz}}
        for key in ("label", "asset_type", "native_frame", "density", "collision_proxy", "license", "author", "factory"):
            v = getattr(e, key)
            if v is not None:
                rec[key] = v
        out.append(rec)
    return {"entries": out}


EMPTY_CATALOG = AssetCatalog()
