import ast
import json

import pytest

from scenec.apicheck import (
    SiteKind,
    Status,
    bundled_index,
    bundled_index_path,
    check_source,
    diff_indices,
    extract_call_sites,
    load_api_index,
)
from scenec.emit import emit_skeleton
from scenec.errors import ApiIndexError, SourceParseError

INDEX = {
    "version": "t-1",
    "symbols": [
        {"path": "lib", "kind": "module"},
        {"path": "lib.Make", "kind": "class", "min_args": 1, "max_args": 1, "keywords": ["k"]},
        {"path": "lib.Make.Run", "kind": "method", "min_args": 0, "max_args": 1},
        {"path": "lib.Base", "kind": "class"},
        {"path": "lib.Base.Hello", "kind": "method"},
        {"path": "lib.Child", "kind": "class", "bases": ["lib.Base"]},
        {"path": "lib.f", "kind": "function", "min_args": 1, "max_args": 1},
        {"path": "lib.g", "kind": "function", "min_args": 1, "max_args": 1, "returns": "lib.Make"},
    ],
}


@pytest.fixture
def index():
    return load_api_index(INDEX)


def statuses(src, index):
    return [f.status for f in check_source(src, index).findings]


def test_import_is_one_site(index):
    (site,) = extract_call_sites("import lib\n", index)
    assert (site.kind, site.name) == (SiteKind.IMPORT, "lib")


def test_constructor_assignment_site(index):
    sites = extract_call_sites("import lib\nx = 1\na = lib.Make(x, k=1)\n", index)
    s = sites[-1]
    assert (s.kind, s.name, s.arg_count, s.keywords, s.line) == (SiteKind.CONSTRUCT, "lib.Make", 1, ("k",), 3)


def test_nested_call_is_two_sites(index):
    sites = extract_call_sites("from lib import f, g\nx = 1\nf(g(x))\n", index)
    assert sorted(s.name for s in sites if s.kind is not SiteKind.IMPORT) == ["lib.f", "lib.g"]


def test_clean_source_has_no_findings(index):
    src = "import lib\nm = lib.Make(2, k=3)\nm.Run()\nlib.g(1).Run(4)\nc = lib.Child()\nc.Hello()\nprint(len([1]))\n"
    report = check_source(src, index)
    assert report.ok and report.site_count == 9


@pytest.mark.parametrize("src, status", [
    ("import lib\nlib.Maek(1)\n", Status.UNKNOWN_SYMBOL),
    ("import lib\nlib.Make(1, 2)\n", Status.BAD_ARITY),
    ("import lib\nlib.Make(1, kk=2)\n", Status.UNKNOWN_KEYWORD),
    ("import lib\nm = lib.Make(1)\nm.Jump()\n", Status.UNKNOWN_SYMBOL),
    ("import lib\nm = lib.Make(1)\nm.Run(1, 2)\n", Status.BAD_ARITY),
    ("import numpy\n", Status.UNKNOWN_SYMBOL),
    ("mystery(1)\n", Status.UNKNOWN_SYMBOL),
])
def test_bad_calls_are_flagged(src, status, index):
    assert status in statuses(src, index)


def test_finding_carries_location_and_expectation(index):
    (f,) = check_source("import lib\n\nlib.f(1, 2)\n", index).findings
    assert (f.site.line, f.site.col, f.expected) == (3, 0, "1 positional")
    assert f.to_dict()["status"] == "bad_arity"


def test_local_functions_are_not_flagged(index):
    src = "import lib\ndef helper(a):\n    return lib.f(a)\nhelper(2)\n"
    assert check_source(src, index).ok


def test_empty_index_flags_every_site():
    empty = load_api_index({"version": "empty", "symbols": []})
    report = check_source("import lib\nm = lib.Make(1)\nm.Run()\n", empty)
    assert len(report.findings) == report.site_count == 3


def test_syntax_error_is_reported():
    with pytest.raises(SourceParseError):
        extract_call_sites("def (:\n")


@pytest.mark.parametrize("doc", [
    "{not json",
    {"symbols": []},
    {"version": "v", "symbols": [{"path": "a.b", "kind": "gadget"}]},
    {"version": "v", "symbols": [{"path": "a.F", "kind": "function", "min_args": 2, "max_args": 1}]},
    {"version": "v", "symbols": [{"path": "a", "kind": "module"}, {"path": "a", "kind": "module"}]},
])
def test_bad_index_documents_rejected(doc):
    with pytest.raises(ApiIndexError):
        load_api_index(doc if isinstance(doc, dict) else doc)


def test_index_from_text_and_path(tmp_path):
    p = tmp_path / "idx.json"
    p.write_text(json.dumps(INDEX))
    assert load_api_index(p) == load_api_index(json.dumps(INDEX)) == load_api_index(INDEX)


def test_index_diff_names_changes(index):
    changed = json.loads(json.dumps(INDEX))
    changed["symbols"] = [s for s in changed["symbols"] if s["path"] != "lib.f"]
    changed["symbols"].append({"path": "lib.h", "kind": "function"})
    changed["symbols"][1]["max_args"] = 2
    d = diff_indices(index, load_api_index(changed))
    assert d["removed"] == ["lib.f"] and d["added"] == ["lib.h"] and d["changed"] == ["lib.Make"]


def test_removed_method_breaks_a_skeleton(golden):
    plan, scene = golden["robot_office"]
    src = emit_skeleton(scene, plan)
    full = bundled_index()
    assert check_source(src, full).ok
    raw = json.loads(bundled_index_path().read_text())
    raw["symbols"] = [s for s in raw["symbols"] if not s["path"].endswith(".SetPos")]
    report = check_source(src, load_api_index(raw))
    assert report.findings and all(f.site.name.endswith("SetPos") for f in report.findings)


class _Rename(ast.NodeTransformer):
    def visit_Attribute(self, node):
        self.generic_visit(node)
        if node.attr == "SetFixed":
            node.attr = "SetFixd"
        return node


def test_renamed_method_detected(golden):
    plan, scene = golden["fsi_tank"]
    tree = _Rename().visit(ast.parse(emit_skeleton(scene, plan)))
    report = check_source(ast.unparse(tree), bundled_index())
    assert {f.status for f in report.findings} == {Status.UNKNOWN_SYMBOL}
