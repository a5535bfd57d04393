"""Reader and writer for the indentation-structured plan text format.

The format is a small, strict subset of the familiar block style::

    plan_type
      scene

    objects
      - name: table
        construction:
          kind: procedural
          size: {x: 2.0, y: 1.0, z: 0.75}

Top-level section names stand alone on a line with their body indented
below (``name: value`` is accepted too). Values are numbers, ``true``/
``false``, ``null``, bare or double-quoted strings, ``[a, b]`` lists,
``{k: v}`` maps and ``|`` text blocks. Nothing is coerced: a bare ``yes``
stays the string ``"yes"``.

The reader returns plain Python values plus a map from value path to the
``(line, column)`` where the value starts, so schema errors can point back
into the source.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any

from .errors import PlanSyntaxError

Path = tuple  # tuple of str | int

_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*):(?:\s+|$)")
_SECTION_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_INT_RE = re.compile(r"[-+]?\d+$")
_FLOAT_RE = re.compile(r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?$")
_SPECIAL_FLOATS = {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf, "nan": math.nan}

INDENT = 2


@dataclass
class _Line:
    number: int  # 1-based
    indent: int
    text: str  # content after indentation, right-stripped
    raw: str


@dataclass
class Document:
    """Parsed top-level sections, in source order."""

    sections: dict[str, Any] = field(default_factory=dict)
    locs: dict[Path, tuple[int, int]] = field(default_factory=dict)
    titles: list[str] = field(default_factory=list)


def _split_lines(text: str) -> list[_Line]:
    lines = []
    for i, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.rstrip()
        body = stripped.lstrip(" ")
        indent = len(stripped) - len(body)
        lead = raw[: len(raw) - len(raw.lstrip(" \t"))]
        if "\t" in lead:
            raise PlanSyntaxError("tab characters are not allowed in indentation", i, indent + 1)
        lines.append(_Line(i, indent, body, raw))
    return lines


def _is_skippable(line: _Line) -> bool:
    return line.text == "" or line.text.startswith("#")


def parse_scalar(token: str, line: int, col: int) -> Any:
    """Interpret one bare scalar token."""
    if token == "true":
        return True
    if token == "false":
        return False
    if token in ("null", "~"):
        return None
    if _INT_RE.match(token):
        return int(token)
    if _FLOAT_RE.match(token):
        return float(token)
    if token.lower() in _SPECIAL_FLOATS:
        return _SPECIAL_FLOATS[token.lower()]
    if token.startswith('"'):
        try:
            value = json.loads(token)
        except json.JSONDecodeError as exc:
            raise PlanSyntaxError(f"malformed quoted string: {exc.msg}", line, col + exc.pos) from None
        if not isinstance(value, str):
            raise PlanSyntaxError("malformed quoted string", line, col)
        return value
    return token


class _FlowParser:
    """Parses one inline value: ``[..]``, ``{..}``, quoted or bare scalar."""

    def __init__(self, text: str, line: int, col0: int, path: Path, locs: dict):
        self.text = text
        self.pos = 0
        self.line = line
        self.col0 = col0  # 1-based column of text[0]
        self.path = path
        self.locs = locs

    def error(self, msg: str) -> PlanSyntaxError:
        return PlanSyntaxError(msg, self.line, self.col0 + self.pos)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] == " ":
            self.pos += 1

    def parse_top(self) -> Any:
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] in "[{\"":
            value = self.parse_value(self.path, nested=False)
            self.skip_ws()
            if self.pos != len(self.text):
                raise self.error(f"unexpected trailing text {self.text[self.pos:]!r}")
            return value
        # bare top-level scalars run to end of line
        self.locs[self.path] = (self.line, self.col0 + self.pos)
        return parse_scalar(self.text[self.pos:].strip(), self.line, self.col0 + self.pos)

    def parse_value(self, path: Path, nested: bool = True) -> Any:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise self.error("expected a value")
        self.locs[path] = (self.line, self.col0 + self.pos)
        ch = self.text[self.pos]
        if ch == "[":
            return self.parse_list(path)
        if ch == "{":
            return self.parse_map(path)
        if ch == '"':
            return self.parse_quoted()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ",]}":
            self.pos += 1
        token = self.text[start:self.pos].strip()
        if not token:
            raise PlanSyntaxError("expected a value", self.line, self.col0 + start)
        return parse_scalar(token, self.line, self.col0 + start)

    def parse_quoted(self) -> str:
        start = self.pos
        self.pos += 1
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "\\":
                self.pos += 2
                continue
            if ch == '"':
                self.pos += 1
                return parse_scalar(self.text[start:self.pos], self.line, self.col0 + start)
            self.pos += 1
        raise PlanSyntaxError("unterminated quoted string", self.line, self.col0 + start)

    def parse_list(self, path: Path) -> list:
        self.pos += 1
        items: list = []
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "]":
            self.pos += 1
            return items
        while True:
            items.append(self.parse_value(path + (len(items),)))
            self.skip_ws()
            if self.pos >= len(self.text):
                raise self.error("unterminated list, expected ']'")
            ch = self.text[self.pos]
            self.pos += 1
            if ch == "]":
                return items
            if ch != ",":
                raise PlanSyntaxError(f"expected ',' or ']' but found {ch!r}", self.line, self.col0 + self.pos - 1)

    def parse_map(self, path: Path) -> dict:
        self.pos += 1
        out: dict = {}
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "}":
            self.pos += 1
            return out
        while True:
            self.skip_ws()
            m = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*:").match(self.text, self.pos)
            if not m:
                raise self.error("expected 'key:' inside map")
            key = m.group(1)
            if key in out:
                raise self.error(f"duplicate key {key!r}")
            self.pos = m.end()
            out[key] = self.parse_value(path + (key,))
            self.skip_ws()
            if self.pos >= len(self.text):
                raise self.error("unterminated map, expected '}'")
            ch = self.text[self.pos]
            self.pos += 1
            if ch == "}":
                return out
            if ch != ",":
                raise PlanSyntaxError(f"expected ',' or '}}' but found {ch!r}", self.line, self.col0 + self.pos - 1)


class _BlockParser:
    def __init__(self, lines: list[_Line], locs: dict):
        self.lines = lines
        self.locs = locs
        self.i = 0

    def peek(self) -> _Line | None:
        while self.i < len(self.lines) and _is_skippable(self.lines[self.i]):
            self.i += 1
        return self.lines[self.i] if self.i < len(self.lines) else None

    def inline(self, text: str, line: _Line, col: int, path: Path) -> Any:
        return _FlowParser(text, line.number, col, path, self.locs).parse_top()

    def block(self, indent: int, path: Path) -> Any:
        """Parse the block whose lines sit at exactly ``indent``."""
        line = self.peek()
        if line is None or line.indent < indent:
            return None
        if line.indent > indent:
            raise PlanSyntaxError("unexpected indentation", line.number, line.indent + 1)
        if line.text == "-" or line.text.startswith("- "):
            return self.sequence(indent, path)
        if _KEY_RE.match(line.text):
            return self.mapping(indent, path, first=None)
        self.i += 1
        value = self.inline(line.text, line, indent + 1, path)
        nxt = self.peek()
        if nxt is not None and nxt.indent >= indent:
            if nxt.indent == indent:
                raise PlanSyntaxError("a scalar block holds a single value", nxt.number, nxt.indent + 1)
            raise PlanSyntaxError("unexpected indentation", nxt.number, nxt.indent + 1)
        return value

    def sequence(self, indent: int, path: Path) -> list:
        items: list = []
        while True:
            line = self.peek()
            if line is None or line.indent < indent:
                return items
            if line.indent > indent:
                raise PlanSyntaxError("unexpected indentation", line.number, line.indent + 1)
            if not (line.text == "-" or line.text.startswith("- ")):
                raise PlanSyntaxError("expected '- ' list item", line.number, line.indent + 1)
            item_path = path + (len(items),)
            self.locs[item_path] = (line.number, line.indent + 1)
            rest = line.text[2:] if line.text != "-" else ""
            col = indent + 3
            if rest.strip() == "":
                self.i += 1
                nxt = self.peek()
                if nxt is None or nxt.indent <= indent:
                    raise PlanSyntaxError("empty list item", line.number, line.indent + 1)
                items.append(self.block(nxt.indent, item_path))
            elif _KEY_RE.match(rest):
                # mapping whose first entry shares the dash line
                items.append(self.mapping(indent + 2, item_path, first=(line, rest, col)))
            else:
                self.i += 1
                items.append(self.inline(rest, line, col, item_path))

    def mapping(self, indent: int, path: Path, first) -> dict:
        out: dict = {}
        if path not in self.locs:
            line = self.peek()
            self.locs[path] = (line.number, line.indent + 1)
        while True:
            if first is not None:
                line, text, col = first
                first = None
            else:
                line = self.peek()
                if line is None or line.indent < indent:
                    return out
                if line.indent > indent:
                    raise PlanSyntaxError("unexpected indentation", line.number, line.indent + 1)
                text, col = line.text, indent + 1
            m = _KEY_RE.match(text)
            if not m:
                raise PlanSyntaxError("expected 'key: value'", line.number, col)
            key = m.group(1)
            if key in out:
                raise PlanSyntaxError(f"duplicate key {key!r}", line.number, col)
            rest = text[m.end():]
            vcol = col + m.end()
            self.i += 1
            out[key] = self.entry_value(rest, line, vcol, indent, path + (key,), col)

    def entry_value(self, rest: str, line: _Line, vcol: int, indent: int, path: Path, kcol: int) -> Any:
        rest = rest.strip()
        if rest == "|":
            self.locs[path] = (line.number, vcol)
            return self.text_block(indent)
        if rest:
            return self.inline(rest, line, vcol, path)
        nxt = self.peek()
        if nxt is None or nxt.indent <= indent:
            # a list may sit at the same indent as its key
            if nxt is not None and nxt.indent == indent and (nxt.text == "-" or nxt.text.startswith("- ")):
                self.locs[path] = (nxt.number, nxt.indent + 1)
                return self.sequence(indent, path)
            self.locs[path] = (line.number, kcol)
            return None
        self.locs[path] = (nxt.number, nxt.indent + 1)
        return self.block(nxt.indent, path)

    def text_block(self, indent: int) -> str:
        body: list[_Line] = []
        while self.i < len(self.lines):
            line = self.lines[self.i]
            if line.text and line.indent <= indent:
                break
            body.append(line)
            self.i += 1
        while body and not body[-1].text:
            body.pop()
        if not body:
            return ""
        base = min(l.indent for l in body if l.text)
        return "\n".join(l.raw.rstrip()[base:] if l.text else "" for l in body)


def parse_document(text: str) -> Document:
    """Split a plan text into its top-level sections."""
    lines = _split_lines(text)
    doc = Document()
    parser = _BlockParser(lines, doc.locs)
    seen_section = False
    while True:
        line = parser.peek()
        if line is None:
            return doc
        if line.indent != 0:
            raise PlanSyntaxError("unexpected indentation at top level", line.number, line.indent + 1)
        m = _KEY_RE.match(line.text)
        if m:
            name = m.group(1)
            if name in doc.sections:
                raise PlanSyntaxError(f"duplicate section {name!r}", line.number, 1)
            parser.i += 1
            doc.sections[name] = parser.entry_value(line.text[m.end():], line, m.end() + 1, 0, (name,), 1)
            seen_section = True
            continue
        if not _SECTION_RE.match(line.text):
            if seen_section:
                raise PlanSyntaxError(f"expected a section name, found {line.text!r}", line.number, 1)
            doc.titles.append(line.text)
            parser.i += 1
            continue
        name = line.text
        if name in doc.sections:
            raise PlanSyntaxError(f"duplicate section {name!r}", line.number, 1)
        parser.i += 1
        nxt = parser.peek()
        doc.locs[(name,)] = (line.number, 1)
        if nxt is None or nxt.indent == 0:
            doc.sections[name] = None
        else:
            doc.sections[name] = parser.block(nxt.indent, (name,))
        seen_section = True


# -- writer ---------------------------------------------------------------

_BARE_OK = re.compile(r"[A-Za-z_./][A-Za-z0-9_./+\-() ]*$")


def format_scalar(value: Any) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        if (
            _BARE_OK.match(value)
            and value == value.strip()
            and parse_scalar(value, 0, 0) == value
            and not _KEY_RE.match(value)
            and value not in ("null", "~")
        ):
            return value
        return json.dumps(value, ensure_ascii=False)
    raise TypeError(f"cannot format {type(value).__name__} as a scalar")


def format_flow(value: Any) -> str:
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {format_flow(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_flow(v) for v in value) + "]"
    return format_scalar(value)


def _is_simple(value: Any) -> bool:
    if isinstance(value, dict):
        return all(not isinstance(v, (dict, list, tuple)) for v in value.values())
    if isinstance(value, (list, tuple)):
        return all(not isinstance(v, (dict, list, tuple)) for v in value)
    return True


def _text_block_ok(value: str) -> bool:
    return "\n" in value and value == value.strip() and "\r" not in value and "\t" not in value


def dump_value(value: Any, indent: int, out: list[str], flow_keys: frozenset = frozenset()) -> None:
    """Write ``value`` as a block at ``indent`` spaces."""
    pad = " " * indent
    if isinstance(value, dict):
        for key, v in value.items():
            dump_entry(key, v, indent, out, flow_keys)
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append(pad + "[]")
            return
        for item in value:
            if isinstance(item, dict) and item:
                sub: list[str] = []
                dump_value(item, indent + INDENT, sub, flow_keys)
                sub[0] = pad + "- " + sub[0][indent + INDENT:]
                out.extend(sub)
            elif isinstance(item, str) and _text_block_ok(item):
                out.append(pad + "- " + json.dumps(item, ensure_ascii=False))
            else:
                out.append(pad + "- " + format_flow(item))
    else:
        out.append(pad + format_scalar(value))


def dump_entry(key: str, value: Any, indent: int, out: list[str], flow_keys: frozenset = frozenset()) -> None:
    pad = " " * indent
    if isinstance(value, str) and _text_block_ok(value):
        out.append(f"{pad}{key}: |")
        for ln in value.split("\n"):
            out.append((pad + " " * INDENT + ln) if ln else "")
    elif isinstance(value, dict):
        if not value or (key in flow_keys and _is_simple(value)):
            out.append(f"{pad}{key}: {format_flow(value)}")
        else:
            out.append(f"{pad}{key}:")
            dump_value(value, indent + INDENT, out, flow_keys)
    elif isinstance(value, (list, tuple)):
        if not value or _is_simple(value):
            out.append(f"{pad}{key}: {format_flow(value)}")
        else:
            out.append(f"{pad}{key}:")
            dump_value(value, indent + INDENT, out, flow_keys)
    else:
        out.append(f"{pad}{key}: {format_scalar(value)}")
