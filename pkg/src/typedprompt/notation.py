"""Object-notation values: grammar, lexer, recursive-descent parser, renderer.

The notation is the constructor-call value syntax used in model replies, e.g.
``Person(first_name="Marie", likes=["Research"])``. It is parsed purely:
nothing is ever evaluated, so ``1+2`` is a syntax error, not 3.

Also hosts fenced-markdown block extraction for pulling candidates out of raw
replies.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

MAX_DEPTH = 100  # nesting cap so hostile inputs cannot blow the stack

# same identifier grammar as the lexer, so every constructed value re-parses
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _require_ident(name: str, what: str) -> None:
    if not isinstance(name, str) or not _IDENT.match(name):
        raise ValueError(f"{what} must be an identifier, got {name!r}")


# ---------------------------------------------------------------------------
# Value tree


class Value:
    """Base class for parsed value nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Null(Value):
    pass


@dataclass(frozen=True)
class Bool(Value):
    b: bool


@dataclass(frozen=True)
class Int(Value):
    i: int


@dataclass(frozen=True)
class Float(Value):
    f: float

    def __post_init__(self):
        if not math.isfinite(self.f):
            raise ValueError("Float values must be finite")


@dataclass(frozen=True)
class Str(Value):
    s: str


@dataclass(frozen=True)
class ListV(Value):
    items: tuple[Value, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class TupleV(Value):
    items: tuple[Value, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class MapV(Value):
    """Ordered key->value pairs; keys are Str or Int values, unique."""

    pairs: tuple[tuple[Value, Value], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((k, v) for k, v in self.pairs))
        seen = set()
        for k, _ in self.pairs:
            if not isinstance(k, (Str, Int)):
                raise ValueError("map keys must be Str or Int values")
            if k in seen:
                raise ValueError(f"duplicate map key {render_value(k)}")
            seen.add(k)


@dataclass(frozen=True)
class EnumRef(Value):
    enum_name: str
    member: str

    def __post_init__(self):
        _require_ident(self.enum_name, "enum name")
        _require_ident(self.member, "enum member")


@dataclass(frozen=True)
class Object(Value):
    """Constructor call: positional prefix then named args, no duplicate names."""

    type_name: str
    args: tuple[tuple[str | None, Value], ...]

    def __post_init__(self):
        _require_ident(self.type_name, "object type name")
        object.__setattr__(self, "args", tuple((n, v) for n, v in self.args))
        named_seen = False
        names = set()
        for name, _ in self.args:
            if name is None:
                if named_seen:
                    raise ValueError("positional arg after named arg")
            else:
                _require_ident(name, "argument name")
                named_seen = True
                if name in names:
                    raise ValueError(f"duplicate arg name {name!r}")
                names.add(name)


NULL = Null()


# ---------------------------------------------------------------------------
# Errors


class SourceError(Exception):
    """Parse failure with a 1-based position and a short input excerpt."""

    def __init__(self, message: str, line: int, column: int, excerpt: str):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column
        self.excerpt = excerpt


class BlockNotFound(Exception):
    pass


# ---------------------------------------------------------------------------
# Lexer

_PUNCT = "()[]{},:=."
_KEYWORDS = {"None", "True", "False"}
_IDENT_START = re.compile(r"[A-Za-z_]")
_IDENT_CHAR = re.compile(r"[A-Za-z0-9_]")
_ESCAPES = {"\\": "\\", '"': '"', "'": "'", "n": "\n", "t": "\t", "r": "\r"}


@dataclass(frozen=True)
class _Token:
    kind: str  # punct | ident | int | float | str | eof
    text: str
    value: object
    line: int
    column: int


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _err(self, message: str, line: int | None = None, col: int | None = None):
        line = self.line if line is None else line
        col = self.col if col is None else col
        return SourceError(message, line, col, _excerpt(self.text, line))

    def _peek_char(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _take_char(self) -> str:
        c = self.text[self.pos]
        self.pos += 1
        if c == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return c

    def tokens(self) -> list[_Token]:
        out = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _next(self) -> _Token:
        while self._peek_char() and self._peek_char() in " \t\r\n":
            self._take_char()
        line, col = self.line, self.col
        c = self._peek_char()
        if not c:
            return _Token("eof", "", None, line, col)
        if c == "." and self.pos + 1 < len(self.text) and self.text[self.pos + 1].isdigit():
            return self._number(line, col)
        if c in _PUNCT:
            self._take_char()
            return _Token("punct", c, None, line, col)
        if c in "\"'":
            return self._string(line, col)
        if c.isdigit() or c in "+-":
            return self._number(line, col)
        if _IDENT_START.match(c):
            chars = []
            while self._peek_char() and _IDENT_CHAR.match(self._peek_char()):
                chars.append(self._take_char())
            return _Token("ident", "".join(chars), None, line, col)
        raise self._err(f"unexpected character {c!r}")

    def _string(self, line: int, col: int) -> _Token:
        quote = self._take_char()
        chars = []
        while True:
            c = self._peek_char()
            if not c or c == "\n":
                raise self._err("unterminated string", line, col)
            self._take_char()
            if c == quote:
                return _Token("str", "".join(chars), "".join(chars), line, col)
            if c == "\\":
                eline, ecol = self.line, self.col
                esc = self._peek_char()
                if not esc:
                    raise self._err("unterminated string", line, col)
                self._take_char()
                if esc in _ESCAPES:
                    chars.append(_ESCAPES[esc])
                elif esc == "u":
                    hexits = []
                    for _ in range(4):
                        h = self._peek_char()
                        if not h or h not in "0123456789abcdefABCDEF":
                            raise self._err("invalid \\u escape", eline, ecol)
                        hexits.append(self._take_char())
                    chars.append(chr(int("".join(hexits), 16)))
                else:
                    raise self._err(f"bad escape \\{esc}", eline, ecol)
            else:
                chars.append(c)

    def _number(self, line: int, col: int) -> _Token:
        chars = []
        # note: "" in "+-" is True, so every sign check must exclude EOF first
        if self._peek_char() and self._peek_char() in "+-":
            chars.append(self._take_char())
            if not self._peek_char().isdigit() and self._peek_char() != ".":
                raise self._err("expected digits after sign", line, col)
        is_float = False
        # digits and underscores, at most one dot, optional exponent
        while self._peek_char() and (self._peek_char().isdigit() or self._peek_char() == "_"):
            chars.append(self._take_char())
        if self._peek_char() == ".":
            is_float = True
            chars.append(self._take_char())
            while self._peek_char() and (self._peek_char().isdigit() or self._peek_char() == "_"):
                chars.append(self._take_char())
        if self._peek_char() in ("e", "E"):
            is_float = True
            chars.append(self._take_char())
            if self._peek_char() and self._peek_char() in "+-":
                chars.append(self._take_char())
            if not self._peek_char().isdigit():
                raise self._err("invalid number literal", line, col)
            while self._peek_char() and (self._peek_char().isdigit() or self._peek_char() == "_"):
                chars.append(self._take_char())
        text = "".join(chars)
        try:
            if is_float:
                value = float(text)
                if not math.isfinite(value):
                    raise self._err("number out of range", line, col)
            else:
                value = int(text)
        except ValueError:
            raise self._err("invalid number literal", line, col) from None
        return _Token("float" if is_float else "int", text, value, line, col)


def _excerpt(text: str, line: int, width: int = 60) -> str:
    lines = text.splitlines() or [""]
    raw = lines[min(line, len(lines)) - 1]
    return raw[:width]


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _Lexer(text).tokens()
        self.pos = 0

    def _peek(self) -> _Token:
        return self.toks[self.pos]

    def _advance(self) -> _Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def _check(self, kind: str, text: str | None = None) -> bool:
        tok = self._peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def _match(self, kind: str, text: str | None = None) -> _Token | None:
        if self._check(kind, text):
            return self._advance()
        return None

    def _expect(self, kind: str, text: str, what: str) -> _Token:
        tok = self._match(kind, text)
        if tok is None:
            raise self._err(f"expected {what}")
        return tok

    def _err(self, message: str, tok: _Token | None = None) -> SourceError:
        tok = tok or self._peek()
        return SourceError(message, tok.line, tok.column, _excerpt(self.text, tok.line))

    def parse(self) -> Value:
        value = self._value(0)
        if not self._check("eof"):
            raise self._err("trailing input after value")
        return value

    def _value(self, depth: int) -> Value:
        if depth > MAX_DEPTH:
            raise self._err("nesting too deep")
        tok = self._peek()
        if tok.kind == "int":
            self._advance()
            return Int(tok.value)
        if tok.kind == "float":
            self._advance()
            return Float(tok.value)
        if tok.kind == "str":
            self._advance()
            return Str(tok.value)
        if tok.kind == "punct":
            if tok.text == "[":
                return self._list(depth)
            if tok.text == "(":
                return self._tuple(depth)
            if tok.text == "{":
                return self._map(depth)
            raise self._err(f"unexpected {tok.text!r}")
        if tok.kind == "ident":
            if tok.text == "None":
                self._advance()
                return NULL
            if tok.text == "True":
                self._advance()
                return Bool(True)
            if tok.text == "False":
                self._advance()
                return Bool(False)
            return self._ident_value(depth)
        raise self._err("expected a value")

    def _ident_value(self, depth: int) -> Value:
        name_tok = self._advance()
        if self._match("punct", "."):
            member = self._peek()
            if member.kind != "ident" or member.text in _KEYWORDS:
                raise self._err("expected enum member name")
            self._advance()
            return EnumRef(name_tok.text, member.text)
        if self._check("punct", "("):
            return self._object(name_tok, depth)
        raise self._err(f"bare identifier {name_tok.text!r} is not a value", name_tok)

    def _list(self, depth: int) -> Value:
        self._expect("punct", "[", "'['")
        items = self._items(depth, "]")
        self._expect("punct", "]", "',' or ']'")
        return ListV(tuple(items))

    def _tuple(self, depth: int) -> Value:
        open_tok = self._expect("punct", "(", "'('")
        if self._match("punct", ")"):
            return TupleV(())
        items = [self._value(depth + 1)]
        saw_comma = False
        while self._match("punct", ","):
            saw_comma = True
            if self._check("punct", ")"):
                break
            items.append(self._value(depth + 1))
        self._expect("punct", ")", "',' or ')'")
        if len(items) == 1 and not saw_comma:
            raise self._err(
                "single-element tuple requires a trailing comma", open_tok
            )
        return TupleV(tuple(items))

    def _map(self, depth: int) -> Value:
        self._expect("punct", "{", "'{'")
        pairs: list[tuple[Value, Value]] = []
        seen: set[Value] = set()
        while not self._check("punct", "}"):
            key_tok = self._peek()
            key = self._value(depth + 1)
            if not isinstance(key, (Str, Int)):
                raise self._err("map keys must be strings or integers", key_tok)
            if key in seen:
                raise self._err(f"duplicate map key {render_value(key)}", key_tok)
            seen.add(key)
            self._expect("punct", ":", "':'")
            pairs.append((key, self._value(depth + 1)))
            if not self._match("punct", ","):
                break
        self._expect("punct", "}", "',' or '}'")
        return MapV(tuple(pairs))

    def _items(self, depth: int, closer: str) -> list[Value]:
        items: list[Value] = []
        while not self._check("punct", closer):
            items.append(self._value(depth + 1))
            if not self._match("punct", ","):
                break
        return items

    def _object(self, name_tok: _Token, depth: int) -> Value:
        self._expect("punct", "(", "'('")
        args: list[tuple[str | None, Value]] = []
        names: set[str] = set()
        named_seen = False
        while not self._check("punct", ")"):
            tok = self._peek()
            if (
                tok.kind == "ident"
                and tok.text not in _KEYWORDS
                and self.toks[self.pos + 1].kind == "punct"
                and self.toks[self.pos + 1].text == "="
            ):
                self._advance()
                self._advance()
                if tok.text in names:
                    raise self._err(f"duplicate keyword argument {tok.text!r}", tok)
                names.add(tok.text)
                named_seen = True
                args.append((tok.text, self._value(depth + 1)))
            else:
                if named_seen:
                    raise self._err("positional argument after keyword argument", tok)
                args.append((None, self._value(depth + 1)))
            if not self._match("punct", ","):
                break
        self._expect("punct", ")", "',' or ')'")
        return Object(name_tok.text, tuple(args))


def parse_value(text: str) -> Value:
    """Parse exactly one value from text. Raises SourceError on any malformed
    input; never evaluates anything."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Rendering


def _render_str(s: str) -> str:
    out = ['"']
    for c in s:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif c == "\r":
            out.append("\\r")
        elif ord(c) < 0x20:
            out.append(f"\\u{ord(c):04x}")
        else:
            out.append(c)
    out.append('"')
    return "".join(out)


def render_value(value: Value) -> str:
    """Deterministic single-line canonical text; parse_value inverts it."""
    if isinstance(value, Null):
        return "None"
    if isinstance(value, Bool):
        return "True" if value.b else "False"
    if isinstance(value, Int):
        return str(value.i)
    if isinstance(value, Float):
        return repr(value.f)
    if isinstance(value, Str):
        return _render_str(value.s)
    if isinstance(value, ListV):
        return "[" + ", ".join(render_value(v) for v in value.items) + "]"
    if isinstance(value, TupleV):
        if len(value.items) == 1:
            return "(" + render_value(value.items[0]) + ",)"
        return "(" + ", ".join(render_value(v) for v in value.items) + ")"
    if isinstance(value, MapV):
        body = ", ".join(
            f"{render_value(k)}: {render_value(v)}" for k, v in value.pairs
        )
        return "{" + body + "}"
    if isinstance(value, EnumRef):
        return f"{value.enum_name}.{value.member}"
    if isinstance(value, Object):
        parts = [
            render_value(v) if name is None else f"{name}={render_value(v)}"
            for name, v in value.args
        ]
        return f"{value.type_name}(" + ", ".join(parts) + ")"
    raise TypeError(f"not a Value: {value!r}")


# ---------------------------------------------------------------------------
# Fenced-block extraction

_FENCE = re.compile(r"^(`{3,})\s*(.*)$")


def _scan_blocks(reply_text: str) -> list[tuple[str, str]]:
    """All fenced blocks in order as (info string, interior text)."""
    blocks = []
    open_len = 0
    info = ""
    interior: list[str] = []
    inside = False
    for line in reply_text.splitlines():
        m = _FENCE.match(line)
        if not inside:
            if m:
                inside = True
                open_len = len(m.group(1))
                info = m.group(2).strip()
                interior = []
        else:
            # a closing fence has at least as many backticks and no info text
            if m and len(m.group(1)) >= open_len and not m.group(2).strip():
                blocks.append((info, "\n".join(interior)))
                inside = False
            else:
                interior.append(line)
    if inside:  # unclosed block runs to end of input
        blocks.append((info, "\n".join(interior)))
    return blocks


def extract_block(reply_text: str, label: str) -> str:
    """Interior of the first fenced block whose info string equals label
    (case-insensitive). Raises BlockNotFound when absent."""
    if not label:
        raise ValueError("label must be non-empty")
    want = label.lower()
    for info, interior in _scan_blocks(reply_text):
        if info.lower() == want:
            return interior
    raise BlockNotFound(f"no fenced block labeled {label!r}")


class Provenance(Enum):
    LABELED = "labeled"
    ANY_FENCE = "any-fence"
    WHOLE_TEXT = "whole-text"


@dataclass(frozen=True)
class CandidateOutput:
    text: str
    provenance: Provenance
    ambiguous: bool = False  # more than one block carried the output label


OUTPUT_LABEL = "output"


def extract_candidate_output(reply_text: str) -> CandidateOutput:
    """Best candidate for the answer value: the first block labeled ``output``,
    else the last fenced block of any label, else the whole reply trimmed."""
    blocks = _scan_blocks(reply_text)
    labeled = [b for b in blocks if b[0].lower() == OUTPUT_LABEL]
    if labeled:
        return CandidateOutput(
            labeled[0][1], Provenance.LABELED, ambiguous=len(labeled) > 1
        )
    if blocks:
        return CandidateOutput(blocks[-1][1], Provenance.ANY_FENCE)
    return CandidateOutput(reply_text.strip(), Provenance.WHOLE_TEXT)
