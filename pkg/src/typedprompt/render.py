"""Prompt assembly: turn a typed call description into chat messages.

The system message carries the fixed markdown sections (Goal, Type
Definitions, Information, Context, Output Type, Instructions); the user
message carries the Inputs section. Rendering is pure and byte-deterministic.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources

from . import schema
from .notation import Value, render_value


class Method(Enum):
    STANDARD = "standard"
    CHAIN_OF_THOUGHT = "cot"
    REASON = "reason"
    NL_TO_FORMAT = "nl"


_TEMPLATE_FILES = {
    Method.STANDARD: "standard.txt",
    Method.CHAIN_OF_THOUGHT: "chain_of_thought.txt",
    Method.REASON: "reason.txt",
    Method.NL_TO_FORMAT: "nl_to_format.txt",
}

REASONING_LABELS = {
    Method.CHAIN_OF_THOUGHT: "chain-of-thoughts",
    Method.REASON: "reasoning",
}


def load_template(name: str) -> str:
    """Read a named instruction template shipped with the package."""
    return (
        resources.files(__package__)
        .joinpath("templates", name)
        .read_text(encoding="utf-8")
        .rstrip("\n")
    )


class Role(Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    media_type: str
    payload_b64: str
    detail: str = "auto"  # low | high | auto

    def __post_init__(self):
        if self.detail not in ("low", "high", "auto"):
            raise ValueError(f"bad detail {self.detail!r}")
        try:
            base64.b64decode(self.payload_b64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise ValueError("image payload is not valid base64") from exc

    @property
    def data_url(self) -> str:
        return f"data:{self.media_type};base64,{self.payload_b64}"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    parts: tuple[TextPart | ImagePart, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("message must have at least one part")

    @property
    def text(self) -> str:
        return "\n".join(p.text for p in self.parts if isinstance(p, TextPart))


def text_message(role: Role, text: str) -> ChatMessage:
    return ChatMessage(role, (TextPart(text),))


@dataclass(frozen=True)
class Binding:
    """One named datum shown to the model: display meaning, identifier, optional
    declared type, and a value (or an image)."""

    meaning: str
    name: str
    type: schema.TypeExpr | None
    value: Value | ImagePart


@dataclass(frozen=True)
class PromptSpec:
    goal: str
    output_type: schema.TypeExpr
    type_registry_slice: tuple[schema.RecordDef | schema.EnumDef, ...] = ()
    info: tuple[Binding, ...] = ()
    context: str | None = None
    inputs: tuple[Binding, ...] = ()
    method: Method = Method.STANDARD

    def __post_init__(self):
        object.__setattr__(self, "type_registry_slice", tuple(self.type_registry_slice))
        object.__setattr__(self, "info", tuple(self.info))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.goal.strip():
            raise ValueError("goal must be non-empty")
        names = [b.name for b in self.inputs]
        if len(names) != len(set(names)):
            raise ValueError("input names must be unique")


class UnresolvedType(Exception):
    pass


def make_prompt_spec(
    registry: schema.TypeRegistry,
    goal: str,
    output_type: schema.TypeExpr,
    info: list[Binding] | tuple[Binding, ...] = (),
    context: str | None = None,
    inputs: list[Binding] | tuple[Binding, ...] = (),
    method: Method = Method.STANDARD,
) -> PromptSpec:
    """Build a PromptSpec, collecting the type-definition slice from the output
    type and every binding type (output first, then info, then inputs)."""
    roots: list[schema.TypeExpr] = [output_type]
    roots += [b.type for b in info if b.type is not None]
    roots += [b.type for b in inputs if b.type is not None]
    missing: list[str] = []
    for root in roots:
        for name in schema.resolve(registry, root):
            if name not in missing:
                missing.append(name)
    if missing:
        raise UnresolvedType(f"unresolved type names: {', '.join(missing)}")
    slice_: list[schema.RecordDef | schema.EnumDef] = []
    emitted: set[str] = set()
    for root in roots:
        for d in schema.collect_dependencies(registry, root):
            if d.name not in emitted:
                emitted.add(d.name)
                slice_.append(d)
    return PromptSpec(
        goal=goal,
        output_type=output_type,
        type_registry_slice=tuple(slice_),
        info=tuple(info),
        context=context,
        inputs=tuple(inputs),
        method=method,
    )


def with_method(spec: PromptSpec, method: Method) -> PromptSpec:
    return replace(spec, method=method)


# ---------------------------------------------------------------------------
# Rendering


def render_type_expr(expr: schema.TypeExpr) -> str:
    if isinstance(expr, schema.Primitive):
        return expr.kind
    if isinstance(expr, schema.List):
        return f"list[{render_type_expr(expr.elem)}]"
    if isinstance(expr, schema.Tuple):
        return "tuple[" + ", ".join(render_type_expr(e) for e in expr.elems) + "]"
    if isinstance(expr, schema.Mapping):
        return f"dict[{render_type_expr(expr.key)}, {render_type_expr(expr.value)}]"
    if isinstance(expr, schema.Optional):
        return f"{render_type_expr(expr.inner)} | None"
    if isinstance(expr, schema.Named):
        return expr.name
    if isinstance(expr, schema.Semantic):
        return f"{render_type_expr(expr.inner)} - {expr.meaning}"
    raise TypeError(f"not a TypeExpr: {expr!r}")


def render_type_definition(definition: schema.RecordDef | schema.EnumDef) -> str:
    """One prompt line describing a record or enum definition."""
    if isinstance(definition, schema.RecordDef):
        fields = ", ".join(
            f"{name}: {render_type_expr(ftype)}" for name, ftype in definition.fields
        )
        line = f"{definition.name} (Class) -> {definition.name}({fields})"
    elif isinstance(definition, schema.EnumDef):
        members = " | ".join(f"{definition.name}.{m}" for m in definition.members)
        line = f"{definition.name} (Enum) -> {members}"
    else:
        raise TypeError(f"not a definition: {definition!r}")
    if definition.meaning:
        line += f" - {definition.meaning}"
    return line


def render_binding(b: Binding) -> str:
    if isinstance(b.value, ImagePart):
        return f"{b.meaning} ({b.name}) (Image) = <attached>"
    type_part = f" ({render_type_expr(b.type)})" if b.type is not None else ""
    return f"{b.meaning} ({b.name}){type_part} = {render_value(b.value)}"


NO_INPUTS_LINE = "No inputs are provided. Achieve the goal: {goal}"


def render_prompt(
    spec: PromptSpec, instructions_override: str | None = None
) -> list[ChatMessage]:
    """Render the final prompt as [system, user] messages.

    instructions_override replaces the method template body; used for the
    free-form first stage of the NL-to-Format strategy.
    """
    reachable_registry = schema.TypeRegistry(
        records={d.name: d for d in spec.type_registry_slice if isinstance(d, schema.RecordDef)},
        enums={d.name: d for d in spec.type_registry_slice if isinstance(d, schema.EnumDef)},
    )
    roots = [spec.output_type]
    roots += [b.type for b in spec.info if b.type is not None]
    roots += [b.type for b in spec.inputs if b.type is not None]
    for root in roots:
        missing = schema.resolve(reachable_registry, root)
        if missing:
            raise UnresolvedType(f"unresolved type names: {', '.join(missing)}")

    output_type_text = render_type_expr(spec.output_type)
    sections: list[tuple[str, str]] = [("Goal", spec.goal)]
    if spec.type_registry_slice:
        sections.append(
            (
                "Type Definitions",
                "\n".join(render_type_definition(d) for d in spec.type_registry_slice),
            )
        )
    if spec.info:
        sections.append(
            ("Information", "\n".join(render_binding(b) for b in spec.info))
        )
    if spec.context is not None:
        sections.append(("Context", spec.context))
    sections.append(("Output Type", output_type_text))
    if instructions_override is not None:
        instructions = instructions_override
    else:
        template = load_template(_TEMPLATE_FILES[spec.method])
        instructions = template.format(output_type=output_type_text)
    sections.append(("Instructions", instructions))

    system_text = "\n\n".join(f"## {title}\n{body}" for title, body in sections)

    if spec.inputs:
        input_lines = "\n".join(render_binding(b) for b in spec.inputs)
    else:
        input_lines = NO_INPUTS_LINE.format(goal=spec.goal)
    user_parts: list[TextPart | ImagePart] = [TextPart(f"## Inputs\n{input_lines}")]
    for b in spec.inputs:
        if isinstance(b.value, ImagePart):
            user_parts.append(b.value)

    return [
        text_message(Role.SYSTEM, system_text),
        ChatMessage(Role.USER, tuple(user_parts)),
    ]


def default_goal(function_name: str) -> str:
    """Derive a goal from a function-style name: underscores to spaces, first
    letter capitalized."""
    if not function_name:
        raise ValueError("function name must be non-empty")
    text = function_name.replace("_", " ")
    return text[:1].upper() + text[1:]
