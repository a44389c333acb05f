"""Declarative type system: type expressions, record/enum definitions, and a registry.

Type expressions drive both prompt rendering and output validation. They are
plain immutable trees; definitions live in a TypeRegistry that is built once
and then shared read-only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

PRIMITIVE_KINDS = ("int", "float", "str", "bool")


class SchemaError(Exception):
    """Base class for schema construction and resolution errors."""


class DuplicateName(SchemaError):
    pass


class InvalidDefinition(SchemaError, ValueError):
    pass


class CyclicDependency(SchemaError):
    pass


class UnknownName(SchemaError):
    pass


def _require_ident(name: str, what: str) -> None:
    if not isinstance(name, str) or not _IDENT.match(name):
        raise InvalidDefinition(f"{what} must be an identifier, got {name!r}")


class TypeExpr:
    """Base class for type expression nodes. All nodes are frozen dataclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class Primitive(TypeExpr):
    kind: str  # one of int, float, str, bool

    def __post_init__(self):
        if self.kind not in PRIMITIVE_KINDS:
            raise InvalidDefinition(f"unknown primitive kind {self.kind!r}")


@dataclass(frozen=True)
class List(TypeExpr):
    elem: TypeExpr


@dataclass(frozen=True)
class Tuple(TypeExpr):
    elems: tuple[TypeExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "elems", tuple(self.elems))


@dataclass(frozen=True)
class Mapping(TypeExpr):
    key: TypeExpr
    value: TypeExpr

    def __post_init__(self):
        # identifier-keyed JSON-like maps only: str or int keys
        if not (isinstance(self.key, Primitive) and self.key.kind in ("str", "int")):
            raise InvalidDefinition("mapping keys must be str or int")


@dataclass(frozen=True)
class Optional(TypeExpr):
    inner: TypeExpr

    def __post_init__(self):
        if isinstance(self.inner, Optional):
            raise InvalidDefinition("Optional must not wrap Optional")


@dataclass(frozen=True)
class Named(TypeExpr):
    name: str

    def __post_init__(self):
        _require_ident(self.name, "type name")


@dataclass(frozen=True)
class Semantic(TypeExpr):
    """A type expression annotated with a natural-language meaning."""

    inner: TypeExpr
    meaning: str

    def __post_init__(self):
        if isinstance(self.inner, Semantic):
            raise InvalidDefinition("Semantic must not wrap Semantic")
        if not isinstance(self.meaning, str) or not self.meaning.strip():
            raise InvalidDefinition("Semantic meaning must be non-empty text")


# Convenience instances for the common primitives.
INT = Primitive("int")
FLOAT = Primitive("float")
STR = Primitive("str")
BOOL = Primitive("bool")


@dataclass(frozen=True)
class RecordDef:
    name: str
    fields: tuple[tuple[str, TypeExpr], ...]
    meaning: str | None = None

    def __post_init__(self):
        _require_ident(self.name, "record name")
        object.__setattr__(self, "fields", tuple((n, t) for n, t in self.fields))
        if not self.fields:
            raise InvalidDefinition(f"record {self.name} must have at least one field")
        seen = set()
        for fname, ftype in self.fields:
            _require_ident(fname, f"field name in {self.name}")
            if fname in seen:
                raise InvalidDefinition(f"duplicate field {fname!r} in record {self.name}")
            seen.add(fname)
            if not isinstance(ftype, TypeExpr):
                raise InvalidDefinition(f"field {fname!r} of {self.name} has no type")

    def field_type(self, name: str) -> TypeExpr | None:
        for fname, ftype in self.fields:
            if fname == name:
                return ftype
        return None


@dataclass(frozen=True)
class EnumDef:
    name: str
    members: tuple[str, ...]
    meaning: str | None = None

    def __post_init__(self):
        _require_ident(self.name, "enum name")
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise InvalidDefinition(f"enum {self.name} must have at least one member")
        seen = set()
        for m in self.members:
            _require_ident(m, f"member of enum {self.name}")
            if m in seen:
                raise InvalidDefinition(f"duplicate member {m!r} in enum {self.name}")
            seen.add(m)


@dataclass
class TypeRegistry:
    """Name -> definition store. Built single-threaded, then treated as read-only."""

    records: dict[str, RecordDef] = field(default_factory=dict)
    enums: dict[str, EnumDef] = field(default_factory=dict)

    def lookup(self, name: str) -> RecordDef | EnumDef | None:
        return self.records.get(name) or self.enums.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.records or name in self.enums


def register(registry: TypeRegistry, definition: RecordDef | EnumDef) -> TypeRegistry:
    """Add a definition to the registry; returns the registry for chaining."""
    if not isinstance(definition, (RecordDef, EnumDef)):
        raise InvalidDefinition(f"cannot register {type(definition).__name__}")
    if definition.name in registry:
        raise DuplicateName(f"{definition.name!r} is already registered")
    if isinstance(definition, RecordDef):
        registry.records[definition.name] = definition
    else:
        registry.enums[definition.name] = definition
    return registry


def _child_exprs(expr: TypeExpr):
    if isinstance(expr, List):
        yield expr.elem
    elif isinstance(expr, Tuple):
        yield from expr.elems
    elif isinstance(expr, Mapping):
        yield expr.key
        yield expr.value
    elif isinstance(expr, (Optional, Semantic)):
        yield expr.inner


def resolve(registry: TypeRegistry, expr: TypeExpr) -> list[str]:
    """Return every Named reference (recursively, through registered definitions)
    that the registry cannot resolve. Empty list means fully resolvable.
    Total: never raises, cycles are simply not revisited."""
    missing: list[str] = []
    visited: set[str] = set()

    def walk(e: TypeExpr) -> None:
        if isinstance(e, Named):
            if e.name in visited:
                return
            visited.add(e.name)
            d = registry.lookup(e.name)
            if d is None:
                if e.name not in missing:
                    missing.append(e.name)
            elif isinstance(d, RecordDef):
                for _, ftype in d.fields:
                    walk(ftype)
            return
        for child in _child_exprs(e):
            walk(child)

    walk(expr)
    return missing


def collect_dependencies(
    registry: TypeRegistry, expr: TypeExpr
) -> list[RecordDef | EnumDef]:
    """Every definition transitively reachable from expr, dependencies before
    dependents, each exactly once, in deterministic depth-first order."""
    out: list[RecordDef | EnumDef] = []
    emitted: set[str] = set()
    in_progress: list[str] = []

    def visit(name: str) -> None:
        if name in emitted:
            return
        if name in in_progress:
            cycle = " -> ".join(in_progress + [name])
            raise CyclicDependency(f"cyclic type reference: {cycle}")
        d = registry.lookup(name)
        if d is None:
            raise UnknownName(f"unresolved type name {name!r}")
        in_progress.append(name)
        if isinstance(d, RecordDef):
            for _, ftype in d.fields:
                walk(ftype)
        in_progress.pop()
        if name not in emitted:
            emitted.add(name)
            out.append(d)

    def walk(e: TypeExpr) -> None:
        if isinstance(e, Named):
            visit(e.name)
            return
        for child in _child_exprs(e):
            walk(child)

    walk(expr)
    return out
