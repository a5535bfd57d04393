"""Static call-site check of simulator scripts against a versioned API index.

Index format (JSON)::

    {"version": "chrono-9.0",
     "symbols": [
       {"path": "pychrono", "kind": "module"},
       {"path": "pychrono.ChBodyEasyBox", "kind": "class", "bases": ["pychrono.ChBody"],
        "min_args": 4, "max_args": 6, "keywords": ["visualize", "collide"]},
       {"path": "pychrono.ChBody.GetPos", "kind": "method", "min_args": 0, "max_args": 0,
        "returns": "pychrono.ChVector3d"},
       {"path": "pychrono.ChFunction", "kind": "function", "min_args": 0, "max_args": 1}
     ]}

``min_args``/``max_args`` bound the positional argument count (``self``
excluded for methods, constructor arguments for classes); ``keywords``
lists accepted keyword names. ``returns`` names the class a call yields so
method calls on its result can be checked.

The recognizer covers the statement shapes the skeleton emitter produces:
imports, assignments from constructor or method calls, method calls on
tracked variables, ``with open(...) as f`` and builtin calls. Anything it
cannot attribute to an indexed symbol, a builtin or a local function is
reported, never passed silently.
"""

from __future__ import annotations

import ast
import builtins
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import ApiIndexError, SourceParseError
from .report import Category, ErrorReport, Failure

BUILTIN_NAMES = frozenset(n for n in dir(builtins) if not n.startswith("_"))
# values whose methods are builtin (file handles, literals)
BUILTIN_TYPE = "builtins"


@dataclass(frozen=True)
class Signature:
    min_args: int = 0
    max_args: int = 0
    keywords: frozenset = frozenset()
    returns: str | None = None

    def describe(self) -> str:
        span = str(self.min_args) if self.min_args == self.max_args else f"{self.min_args}-{self.max_args}"
        return f"{span} positional"


@dataclass(frozen=True)
class ClassInfo:
    path: str
    signature: Signature
    methods: Mapping[str, Signature]
    bases: tuple[str, ...] = ()


@dataclass(frozen=True)
class ApiIndex:
    version: str
    modules: frozenset
    classes: Mapping[str, ClassInfo]
    functions: Mapping[str, Signature]

    def symbols(self) -> dict[str, tuple[str, Signature | None]]:
        out: dict[str, tuple[str, Signature | None]] = {m: ("module", None) for m in self.modules}
        for path, cls in self.classes.items():
            out[path] = ("class", cls.signature)
            for name, sig in cls.methods.items():
                out[f"{path}.{name}"] = ("method", sig)
        for path, sig in self.functions.items():
            out[path] = ("function", sig)
        return out

    def find_method(self, class_path: str, name: str) -> Signature | None:
        seen: set[str] = set()
        stack = [class_path]
        while stack:
            cur = stack.pop(0)
            if cur in seen or cur not in self.classes:
                continue
            seen.add(cur)
            info = self.classes[cur]
            if name in info.methods:
                return info.methods[name]
            stack.extend(info.bases)
        return None

    def kind_of(self, path: str) -> str | None:
        if path in self.classes:
            return "class"
        if path in self.functions:
            return "function"
        if path in self.modules:
            return "module"
        return None


def _signature(rec: dict, where: str) -> Signature:
    lo = rec.get("min_args", 0)
    hi = rec.get("max_args", lo)
    if not (isinstance(lo, int) and isinstance(hi, int)) or lo < 0 or lo > hi:
        raise ApiIndexError(f"{where}: need 0 <= min_args <= max_args, got {lo}, {hi}")
    kws = rec.get("keywords", [])
    if not isinstance(kws, list) or not all(isinstance(k, str) for k in kws):
        raise ApiIndexError(f"{where}: keywords must be a list of names")
    return Signature(lo, hi, frozenset(kws), rec.get("returns"))


def load_api_index(document: str | Path | dict) -> ApiIndex:
    """Load an index from a dict, JSON text or a JSON file path."""
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        try:
            document = Path(document).read_text(encoding="utf-8")
        except OSError as exc:
            raise ApiIndexError(f"cannot read index: {exc}") from None
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ApiIndexError(f"index parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(document, dict) or not isinstance(document.get("symbols"), list):
        raise ApiIndexError("index document needs a 'symbols' list")
    if not isinstance(document.get("version"), str) or not document["version"]:
        raise ApiIndexError("index document needs a non-empty 'version' string")
    modules: set[str] = set()
    classes: dict[str, dict] = {}
    functions: dict[str, Signature] = {}
    methods: list[tuple[str, str, Signature]] = []
    seen: set[str] = set()
    for i, rec in enumerate(document["symbols"]):
        if not isinstance(rec, dict) or not isinstance(rec.get("path"), str) or not rec["path"]:
            raise ApiIndexError(f"symbol {i}: missing path")
        path, kind = rec["path"], rec.get("kind")
        where = f"symbol {path!r}"
        if path in seen:
            raise ApiIndexError(f"duplicate symbol {path!r}")
        seen.add(path)
        if kind == "module":
            modules.add(path)
        elif kind == "class":
            classes[path] = {"sig": _signature(rec, where), "bases": tuple(rec.get("bases", ())), "methods": {}}
        elif kind == "function":
            functions[path] = _signature(rec, where)
        elif kind == "method":
            owner, _, name = path.rpartition(".")
            methods.append((owner, name, _signature(rec, where)))
        else:
            raise ApiIndexError(f"{where}: unknown kind {kind!r}")
    for owner, name, sig in methods:
        if owner not in classes:
            raise ApiIndexError(f"method {owner}.{name} has no class record")
        classes[owner]["methods"][name] = sig
    return ApiIndex(
        version=document["version"],
        modules=frozenset(modules),
        classes=MappingProxyType({
            p: ClassInfo(p, c["sig"], MappingProxyType(dict(c["methods"])), c["bases"]) for p, c in classes.items()
        }),
        functions=MappingProxyType(functions),
    )


def diff_indices(old: ApiIndex, new: ApiIndex) -> dict[str, list[str]]:
    """Symbols added, removed or with a changed signature between two index versions."""
    a, b = old.symbols(), new.symbols()
    return {
        "added": sorted(set(b) - set(a)),
        "removed": sorted(set(a) - set(b)),
        "changed": sorted(k for k in set(a) & set(b) if a[k] != b[k]),
    }


def bundled_index_path() -> Path:
    return Path(__file__).parent / "data" / "api_index.json"


def bundled_index() -> ApiIndex:
    return load_api_index(bundled_index_path())


# -- call-site extraction -------------------------------------------------------


class SiteKind(str, Enum):
    IMPORT = "import"
    CONSTRUCT = "construct"
    CALL = "call"
    METHOD_CALL = "method_call"


@dataclass(frozen=True)
class CallSite:
    line: int
    col: int
    kind: SiteKind
    name: str  # qualified where resolvable, else the source text of the callee
    arg_count: int = 0
    keywords: tuple[str, ...] = ()
    origin: str = "index"  # index | builtin | local | unresolved
    note: str | None = None

    def to_dict(self) -> dict:
        out = {"line": self.line, "col": self.col, "kind": self.kind.value, "name": self.name,
               "arg_count": self.arg_count, "keywords": list(self.keywords), "origin": self.origin}
        if self.note:
            out["note"] = self.note
        return out


class _Extractor(ast.NodeVisitor):
    def __init__(self, index: ApiIndex | None):
        self.index = index
        self.aliases: dict[str, str] = {}
        self.types: dict[str, str] = {}
        self.local_funcs: set[str] = set()
        self.sites: list[CallSite] = []

    # imports
    def visit_Import(self, node: ast.Import) -> None:
        for a in node.names:
            self.sites.append(CallSite(node.lineno, node.col_offset, SiteKind.IMPORT, a.name))
            if a.asname:
                self.aliases[a.asname] = a.name
            else:
                self.aliases[a.name.split(".")[0]] = a.name.split(".")[0]

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        mod = "." * node.level + (node.module or "")
        for a in node.names:
            path = f"{mod}.{a.name}"
            self.sites.append(CallSite(node.lineno, node.col_offset, SiteKind.IMPORT, path))
            self.aliases[a.asname or a.name] = path

    def visit_FunctionDef(self, node: ast.FunctionDef) -> None:
        self.local_funcs.add(node.name)
        saved = dict(self.types)
        for arg in node.args.args + node.args.kwonlyargs:
            self.types.pop(arg.arg, None)
        self.generic_visit(node)
        self.types = saved

    visit_AsyncFunctionDef = visit_FunctionDef

    def visit_Assign(self, node: ast.Assign) -> None:
        self.visit(node.value)
        t = self.value_type(node.value)
        for target in node.targets:
            self.visit(target)
            if isinstance(target, ast.Name):
                if t is None:
                    self.types.pop(target.id, None)
                else:
                    self.types[target.id] = t

    def visit_With(self, node: ast.With) -> None:
        for item in node.items:
            self.visit(item.context_expr)
            if isinstance(item.optional_vars, ast.Name):
                t = self.value_type(item.context_expr)
                if t is None:
                    self.types.pop(item.optional_vars.id, None)
                else:
                    self.types[item.optional_vars.id] = t
        for stmt in node.body:
            self.visit(stmt)

    def visit_For(self, node: ast.For) -> None:
        self.visit(node.iter)
        if isinstance(node.target, ast.Name):
            self.types.pop(node.target.id, None)
        for stmt in node.body + node.orelse:
            self.visit(stmt)

    # values
    def qualify(self, expr: ast.AST) -> str | None:
        """Dotted path of a module/class reference, if rooted at an import alias."""
        if isinstance(expr, ast.Name):
            return self.aliases.get(expr.id)
        if isinstance(expr, ast.Attribute):
            base = self.qualify(expr.value)
            return None if base is None else f"{base}.{expr.attr}"
        return None

    def value_type(self, expr: ast.AST) -> str | None:
        if isinstance(expr, (ast.Constant, ast.JoinedStr, ast.List, ast.Tuple, ast.Dict, ast.Set,
                             ast.ListComp, ast.BinOp, ast.Compare, ast.BoolOp, ast.UnaryOp)):
            return BUILTIN_TYPE
        if isinstance(expr, ast.Name):
            return self.types.get(expr.id)
        if not isinstance(expr, ast.Call):
            return None
        func = expr.func
        if isinstance(func, ast.Name) and func.id in BUILTIN_NAMES and func.id not in self.aliases:
            return BUILTIN_TYPE
        path = self.qualify(func)
        if path is not None and self.index is not None:
            if path in self.index.classes:
                return path
            if path in self.index.functions:
                return self.index.functions[path].returns
        if path is not None and self.index is None and path.rsplit(".", 1)[-1][:1].isupper():
            return path
        if isinstance(func, ast.Attribute):
            recv = self.value_type(func.value)
            if recv == BUILTIN_TYPE:
                return BUILTIN_TYPE
            if recv is not None and self.index is not None:
                sig = self.index.find_method(recv, func.attr)
                return None if sig is None else sig.returns
        return None

    def visit_Call(self, node: ast.Call) -> None:
        n_pos = len(node.args)
        kws = tuple(k.arg for k in node.keywords if k.arg is not None)
        dynamic = any(isinstance(a, ast.Starred) for a in node.args) or any(k.arg is None for k in node.keywords)
        note = "unanalyzable *args/**kwargs" if dynamic else None
        func = node.func
        site: CallSite
        path = self.qualify(func)
        if path is not None:
            is_class = (self.index is not None and path in self.index.classes) or (
                self.index is None and path.rsplit(".", 1)[-1][:1].isupper())
            kind = SiteKind.CONSTRUCT if is_class else SiteKind.CALL
            site = CallSite(node.lineno, node.col_offset, kind, path, n_pos, kws, "index", note)
        elif isinstance(func, ast.Name):
            if func.id in self.local_funcs:
                origin = "local"
            elif func.id in BUILTIN_NAMES:
                origin = "builtin"
            else:
                origin = "unresolved"
            site = CallSite(node.lineno, node.col_offset, SiteKind.CALL, func.id, n_pos, kws, origin,
                            note or ("name is neither imported, builtin nor defined here" if origin == "unresolved" else None))
        elif isinstance(func, ast.Attribute):
            recv = self.value_type(func.value)
            if recv == BUILTIN_TYPE:
                site = CallSite(node.lineno, node.col_offset, SiteKind.METHOD_CALL, f"<builtin>.{func.attr}",
                                n_pos, kws, "builtin", note)
            elif recv is not None:
                site = CallSite(node.lineno, node.col_offset, SiteKind.METHOD_CALL, f"{recv}.{func.attr}",
                                n_pos, kws, "index", note)
            else:
                site = CallSite(node.lineno, node.col_offset, SiteKind.METHOD_CALL, _source_name(func),
                                n_pos, kws, "unresolved", note or "receiver type unknown")
        else:
            site = CallSite(node.lineno, node.col_offset, SiteKind.CALL, type(func).__name__, n_pos, kws,
                            "unresolved", "computed callee")
        self.sites.append(site)
        self.generic_visit(node)


def _source_name(expr: ast.AST) -> str:
    try:
        return ast.unparse(expr)
    except Exception:  # pragma: no cover - unparse handles every expression node
        return type(expr).__name__


def extract_call_sites(source: str, index: ApiIndex | None = None) -> list[CallSite]:
    """One site per import and per syntactic call (nested calls included), in source order.

    ``index`` lets the recognizer type the results of indexed calls so that
    chained method calls can be attributed to a class.
    """
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        raise SourceParseError(exc.msg or "syntax error", exc.lineno, exc.offset) from None
    ex = _Extractor(index)
    # local function names are visible before their definition
    ex.local_funcs = {n.name for n in ast.walk(tree) if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef))}
    ex.visit(tree)
    return sorted(ex.sites, key=lambda s: (s.line, s.col))


# -- validation -------------------------------------------------------------------


class Status(str, Enum):
    OK = "ok"
    UNKNOWN_SYMBOL = "unknown_symbol"
    BAD_ARITY = "bad_arity"
    UNKNOWN_KEYWORD = "unknown_keyword"


@dataclass(frozen=True)
class Finding:
    site: CallSite
    status: Status
    message: str
    expected: str | None = None

    def to_dict(self) -> dict:
        out = {"status": self.status.value, "message": self.message, **self.site.to_dict()}
        if self.expected is not None:
            out["expected"] = self.expected
        return out


@dataclass(frozen=True)
class ApiReport:
    version: str
    site_count: int
    findings: tuple[Finding, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.findings

    def to_error_report(self, stage: int = 0) -> ErrorReport:
        return ErrorReport.from_failures(
            (Failure(Category.API_ERROR, f.site.name, f.to_dict()) for f in self.findings), stage)

    def to_dict(self) -> dict:
        return {"index_version": self.version, "sites": self.site_count,
                "findings": [f.to_dict() for f in self.findings]}

    def format(self) -> str:
        lines = [f"{len(self.findings)} finding(s) in {self.site_count} site(s) against index {self.version!r}"]
        for f in self.findings:
            exp = f" (expected {f.expected})" if f.expected else ""
            lines.append(f"  line {f.site.line}, col {f.site.col}: {f.status.value}: {f.message}{exp}")
        return "\n".join(lines)


def classify(site: CallSite, index: ApiIndex) -> Finding:
    def finding(status: Status, message: str, expected: str | None = None) -> Finding:
        return Finding(site, status, message, expected)

    if site.note and site.origin != "unresolved" and "unanalyzable" in site.note:
        return finding(Status.UNKNOWN_SYMBOL, f"{site.name}: {site.note}")
    if site.kind is SiteKind.IMPORT:
        if site.name in index.modules:
            return finding(Status.OK, "")
        mod, _, name = site.name.rpartition(".")
        if mod in index.modules and index.kind_of(site.name) is not None:
            return finding(Status.OK, "")
        return finding(Status.UNKNOWN_SYMBOL, f"import of unindexed symbol {site.name!r}")
    if site.origin in ("builtin", "local"):
        return finding(Status.OK, "")
    if site.origin == "unresolved":
        return finding(Status.UNKNOWN_SYMBOL, f"cannot resolve {site.name!r}: {site.note}")

    if site.kind is SiteKind.METHOD_CALL:
        owner, _, name = site.name.rpartition(".")
        sig = index.find_method(owner, name)
    elif site.name in index.classes:
        sig = index.classes[site.name].signature
    else:
        sig = index.functions.get(site.name)
    if sig is None:
        return finding(Status.UNKNOWN_SYMBOL, f"{site.name!r} is not in the index")
    if not sig.min_args <= site.arg_count <= sig.max_args:
        return finding(Status.BAD_ARITY, f"{site.name} called with {site.arg_count} positional argument(s)",
                       sig.describe())
    bad = [k for k in site.keywords if k not in sig.keywords]
    if bad:
        return finding(Status.UNKNOWN_KEYWORD, f"{site.name} has no keyword {bad[0]!r}",
                       ", ".join(sorted(sig.keywords)) or "no keywords")
    return finding(Status.OK, "")


def validate_calls(sites: Iterable[CallSite], index: ApiIndex) -> ApiReport:
    sites = list(sites)
    findings = tuple(f for f in (classify(s, index) for s in sites) if f.status is not Status.OK)
    return ApiReport(index.version, len(sites), findings)


def check_source(source: str, index: ApiIndex) -> ApiReport:
    return validate_calls(extract_call_sites(source, index), index)
