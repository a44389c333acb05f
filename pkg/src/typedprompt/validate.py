"""Conform parsed values to type expressions, with the small set of coercions
models actually need, and produce the error lists that drive the repair loop.

conform never raises: it returns either a TypedValue or a list of
ValidationError, collected in traversal order (not first-failure).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import schema
from .notation import (
    Bool,
    EnumRef,
    Float,
    Int,
    ListV,
    MapV,
    Null,
    NULL,
    Object,
    Str,
    TupleV,
    Value,
    render_value,
)
from .render import render_type_expr

ENUM_HINT_LIMIT = 10


@dataclass(frozen=True)
class TypedValue:
    value: Value  # post-coercion canonical form
    type: schema.TypeExpr


@dataclass(frozen=True)
class ValidationError:
    path: tuple[str | int, ...]  # str = field/key segment, int = index
    expected: str  # rendered type text
    found: str  # short description of the offending value
    hint: str | None = None

    @property
    def path_text(self) -> str:
        if not self.path:
            return "value"
        out = []
        for seg in self.path:
            if isinstance(seg, int):
                out.append(f"[{seg}]")
            elif seg.startswith("["):
                out.append(seg)  # map-key segment, already bracketed
            else:
                out.append(f".{seg}" if out else seg)
        return "".join(out)


def describe_value(v: Value, limit: int = 48) -> str:
    kind = {
        Null: "None",
        Bool: "bool",
        Int: "int",
        Float: "float",
        Str: "string",
        ListV: "list",
        TupleV: "tuple",
        MapV: "map",
        EnumRef: "enum reference",
        Object: "object",
    }[type(v)]
    text = render_value(v)
    if len(text) > limit:
        text = text[: limit - 3] + "..."
    if isinstance(v, Null):
        return "None"
    return f"{kind} {text}"


class _Checker:
    def __init__(self, registry: schema.TypeRegistry):
        self.registry = registry
        self.errors: list[ValidationError] = []

    def fail(
        self,
        path: tuple[str | int, ...],
        expected: schema.TypeExpr,
        found: str,
        hint: str | None = None,
    ) -> Value:
        self.errors.append(
            ValidationError(path, render_type_expr(expected), found, hint)
        )
        return NULL  # placeholder; discarded because errors are present

    def check(self, value: Value, expr: schema.TypeExpr, path: tuple) -> Value:
        if isinstance(expr, schema.Semantic):
            return self.check(value, expr.inner, path)
        if isinstance(expr, schema.Optional):
            if isinstance(value, Null):
                return NULL
            return self.check(value, expr.inner, path)
        if isinstance(value, Null):
            return self.fail(path, expr, "None")
        if isinstance(expr, schema.Primitive):
            return self.check_primitive(value, expr, path)
        if isinstance(expr, schema.List):
            if not isinstance(value, ListV):
                return self.fail(path, expr, describe_value(value))
            return ListV(
                tuple(
                    self.check(item, expr.elem, path + (i,))
                    for i, item in enumerate(value.items)
                )
            )
        if isinstance(expr, schema.Tuple):
            if not isinstance(value, TupleV):
                return self.fail(path, expr, describe_value(value))
            if len(value.items) != len(expr.elems):
                return self.fail(
                    path,
                    expr,
                    f"tuple of {len(value.items)} elements",
                    hint=f"expected exactly {len(expr.elems)} elements",
                )
            return TupleV(
                tuple(
                    self.check(item, etype, path + (i,))
                    for i, (item, etype) in enumerate(zip(value.items, expr.elems))
                )
            )
        if isinstance(expr, schema.Mapping):
            if not isinstance(value, MapV):
                return self.fail(path, expr, describe_value(value))
            pairs = []
            for key, val in value.pairs:
                key_segment = f"[{render_value(key)}]"
                want_kind = expr.key.kind  # str or int by construction
                if (want_kind == "str" and not isinstance(key, Str)) or (
                    want_kind == "int" and not isinstance(key, Int)
                ):
                    self.fail(path + (key_segment,), expr.key, describe_value(key))
                pairs.append((key, self.check(val, expr.value, path + (key_segment,))))
            return MapV(tuple(pairs))
        if isinstance(expr, schema.Named):
            definition = self.registry.lookup(expr.name)
            if isinstance(definition, schema.EnumDef):
                return self.check_enum(value, expr, definition, path)
            if isinstance(definition, schema.RecordDef):
                return self.check_record(value, expr, definition, path)
            return self.fail(path, expr, describe_value(value), hint="unknown type name")
        raise TypeError(f"not a TypeExpr: {expr!r}")

    def check_primitive(self, value: Value, expr: schema.Primitive, path: tuple) -> Value:
        kind = expr.kind
        if kind == "int":
            if isinstance(value, Int):
                return value
            if isinstance(value, Float) and value.f == int(value.f):
                return Int(int(value.f))  # integral floats narrow quietly
            return self.fail(path, expr, describe_value(value))
        if kind == "float":
            if isinstance(value, Float):
                return value
            if isinstance(value, Int):
                return Float(float(value.i))
            return self.fail(path, expr, describe_value(value))
        if kind == "str":
            if isinstance(value, Str):
                return value
            return self.fail(path, expr, describe_value(value))
        if isinstance(value, Bool):
            return value
        return self.fail(path, expr, describe_value(value))

    def check_enum(
        self,
        value: Value,
        expr: schema.Named,
        definition: schema.EnumDef,
        path: tuple,
    ) -> Value:
        members = definition.members
        hint = "valid members: " + ", ".join(members[:ENUM_HINT_LIMIT])
        if len(members) > ENUM_HINT_LIMIT:
            hint += ", ..."
        if isinstance(value, EnumRef):
            if value.enum_name != definition.name:
                return self.fail(path, expr, describe_value(value))
            if value.member not in members:
                return self.fail(path, expr, describe_value(value), hint)
            return value
        if isinstance(value, Str):
            if value.s in members:
                return EnumRef(definition.name, value.s)
            return self.fail(path, expr, describe_value(value), hint)
        return self.fail(path, expr, describe_value(value), hint)

    def check_record(
        self,
        value: Value,
        expr: schema.Named,
        definition: schema.RecordDef,
        path: tuple,
    ) -> Value:
        if not isinstance(value, Object):
            return self.fail(path, expr, describe_value(value))
        if value.type_name != definition.name:
            return self.fail(
                path,
                expr,
                describe_value(value),
                hint=f"object type name must be {definition.name}",
            )
        field_names = [name for name, _ in definition.fields]
        provided: dict[str, Value] = {}
        positional = [v for name, v in value.args if name is None]
        if len(positional) > len(field_names):
            self.fail(
                path,
                expr,
                f"{len(positional)} positional args",
                hint=f"{definition.name} has {len(field_names)} fields",
            )
            positional = positional[: len(field_names)]
        for fname, v in zip(field_names, positional):
            provided[fname] = v
        for name, v in value.args:
            if name is None:
                continue
            if name not in field_names:
                self.fail(path + (name,), expr, describe_value(v), hint="unexpected field")
                continue
            if name in provided:
                self.fail(
                    path + (name,),
                    expr,
                    describe_value(v),
                    hint="field given both positionally and by name",
                )
                continue
            provided[name] = v
        out_args: list[tuple[str | None, Value]] = []
        for fname, ftype in definition.fields:
            if fname in provided:
                out_args.append((fname, self.check(provided[fname], ftype, path + (fname,))))
            elif _is_optional(ftype):
                out_args.append((fname, NULL))
            else:
                self.fail(
                    path + (fname,),
                    ftype,
                    "missing field",
                    hint=f"{definition.name} requires {fname}",
                )
        if self.errors:
            return NULL
        return Object(definition.name, tuple(out_args))


def _is_optional(expr: schema.TypeExpr) -> bool:
    if isinstance(expr, schema.Semantic):
        return _is_optional(expr.inner)
    return isinstance(expr, schema.Optional)


def conform(
    value: Value, expr: schema.TypeExpr, registry: schema.TypeRegistry
) -> TypedValue | list[ValidationError]:
    """Check value against expr, applying coercions (int->float, integral
    float->int, member string->enum reference, positional->named object args,
    missing optional fields filled with None). Returns the coerced TypedValue,
    or every error found."""
    checker = _Checker(registry)
    coerced = checker.check(value, expr, ())
    if checker.errors:
        return checker.errors
    return TypedValue(coerced, expr)


def is_valid(result: TypedValue | list[ValidationError]) -> bool:
    return isinstance(result, TypedValue)


def describe_errors(errors: list[ValidationError]) -> str:
    """Deterministic bullet list used verbatim in repair messages."""
    if not errors:
        raise ValueError("no errors to describe")
    lines = []
    for e in errors:
        line = f"- {e.path_text}: expected {e.expected}, found {e.found}"
        if e.hint:
            line += f" ({e.hint})"
        lines.append(line)
    return "\n".join(lines)
