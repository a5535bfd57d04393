import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scenec.errors import PlanSyntaxError
from scenec.grammar import dump_entry, format_scalar, parse_document, parse_scalar


def sections(text):
    return parse_document(text).sections


def test_bare_section_with_scalar_body():
    assert sections("plan_type\n  scene\n") == {"plan_type": "scene"}


def test_inline_section_value():
    assert sections("plan_type: scene\n") == {"plan_type": "scene"}


def test_titles_before_first_section():
    doc = parse_document("Proposed Simulation Plan\n\nSimulation Plan\n\nplan_type\n  scene\n")
    assert doc.titles == ["Proposed Simulation Plan", "Simulation Plan"]


def test_nested_mapping_and_flow_map():
    text = "objects\n  - name: a\n    construction:\n      kind: procedural\n      size: {x: 1.0, y: 2, z: 3e-1}\n"
    obj = sections(text)["objects"][0]
    assert obj["construction"]["size"] == {"x": 1.0, "y": 2, "z": 0.3}


def test_flow_list_and_empty_list():
    s = sections("objectives\n  - a\n  - b\n\nclarifications_needed\n  []\n")
    assert s["objectives"] == ["a", "b"]
    assert s["clarifications_needed"] == []


def test_text_block_keeps_lines():
    text = "implementation_steps\n  - description: |\n      line one\n      line two\n    objects: []\n"
    step = sections(text)["implementation_steps"][0]
    assert step["description"] == "line one\nline two"


def test_comments_and_blank_lines_skipped():
    assert sections("# header\nplan_type\n\n  # note\n  scene\n") == {"plan_type": "scene"}


@pytest.mark.parametrize("token, value", [
    ("true", True), ("false", False), ("null", None), ("12", 12), ("-0.5", -0.5),
    ("1e3", 1000.0), ('"quoted: text"', "quoted: text"), ("yes", "yes"), ("inf", math.inf),
])
def test_scalars_are_not_coerced(token, value):
    assert parse_scalar(token, 1, 1) == value


def test_locations_recorded():
    doc = parse_document("plan_type\n  scene\n\nobjects\n  - name: a\n")
    assert doc.locs[("objects", 0, "name")] == (5, 11)


@pytest.mark.parametrize("text, line", [
    ("plan_type\n  scene\nplan_type\n  mbs\n", 3),          # duplicate section
    ("objects\n  - name: a\n     extra: 1\n", 3),           # odd indentation
    ("objects\n  - name: {x: 1\n", 2),                      # unterminated flow map
    ("objects\n  - name: a\n    name: b\n", 3),             # duplicate key
    ("plan_type\n\tscene\n", 2),                             # tab indent
])
def test_syntax_errors_carry_location(text, line):
    with pytest.raises(PlanSyntaxError) as err:
        parse_document(text)
    assert err.value.line == line
    assert err.value.column is not None


scalars = st.one_of(
    st.booleans(),
    st.none(),
    st.integers(-10**6, 10**6),
    st.floats(allow_nan=False, allow_infinity=False, width=64),
    st.text(st.characters(codec="utf-8", exclude_categories=("Cs", "Cc")), max_size=20),
)


@given(scalars)
def test_scalar_format_round_trip(value):
    assert parse_scalar(format_scalar(value), 1, 1) == value


keys = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True)
leaf = st.one_of(st.integers(-1000, 1000), st.floats(-1e6, 1e6, allow_nan=False),
                 st.from_regex(r"[A-Za-z][A-Za-z0-9_ ]{0,10}[A-Za-z0-9]", fullmatch=True), st.booleans())
values = st.recursive(leaf, lambda inner: st.one_of(st.lists(inner, max_size=3),
                                                    st.dictionaries(keys, inner, min_size=1, max_size=3)),
                      max_leaves=12)


@given(st.dictionaries(keys, values, min_size=1, max_size=4))
def test_block_dump_round_trip(data):
    out = []
    for k, v in data.items():
        out.append(k)
        if isinstance(v, dict):
            dump_entry_lines = []
            for kk, vv in v.items():
                dump_entry(kk, vv, 2, dump_entry_lines)
            out.extend(dump_entry_lines)
        else:
            dump_entry("v", v, 2, out)
        out.append("")
    parsed = sections("\n".join(out) + "\n")
    for k, v in data.items():
        assert parsed[k] == (v if isinstance(v, dict) else {"v": v})
