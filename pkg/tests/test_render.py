import base64

import pytest

from typedprompt import (
    Binding,
    BOOL,
    EnumDef,
    FLOAT,
    ImagePart,
    INT,
    Int,
    List,
    ListV,
    Mapping,
    Method,
    Named,
    Object,
    Optional,
    RecordDef,
    Role,
    STR,
    Semantic,
    Str,
    TextPart,
    Tuple,
    TypeRegistry,
    UnresolvedType,
    default_goal,
    make_prompt_spec,
    register,
    render_prompt,
    render_type_definition,
    render_type_expr,
)


@pytest.fixture
def person_registry():
    reg = TypeRegistry()
    register(
        reg,
        RecordDef(
            "Person",
            (
                ("first_name", STR),
                ("last_name", STR),
                ("yob", Semantic(INT, "Year of Birth")),
                ("likes", List(STR)),
            ),
        ),
    )
    return reg


def person_spec(reg, **overrides):
    kwargs = dict(
        goal="Get the Famous Person for the Given Name",
        output_type=Named("Person"),
        info=(),
        context=None,
        inputs=(Binding("Name of the Person", "name", STR, Str("Albert Einstein")),),
        method=Method.STANDARD,
    )
    kwargs.update(overrides)
    return make_prompt_spec(reg, **kwargs)


# ---------------------------------------------------------------------------
# Type-expression text


@pytest.mark.parametrize(
    "expr,text",
    [
        (INT, "int"),
        (FLOAT, "float"),
        (STR, "str"),
        (BOOL, "bool"),
        (List(STR), "list[str]"),
        (Tuple((INT, STR)), "tuple[int, str]"),
        (Mapping(STR, List(INT)), "dict[str, list[int]]"),
        (Optional(INT), "int | None"),
        (Named("Person"), "Person"),
        (Semantic(INT, "Year of Birth"), "int - Year of Birth"),
        (Semantic(Optional(INT), "Year of Birth"), "int | None - Year of Birth"),
        (Optional(Semantic(INT, "Year of Birth")), "int - Year of Birth | None"),
        (List(Semantic(STR, "A Like")), "list[str - A Like]"),
    ],
)
def test_render_type_expr(expr, text):
    assert render_type_expr(expr) == text


def test_render_record_definition():
    rec = RecordDef(
        "Person",
        (
            ("first_name", STR),
            ("last_name", STR),
            ("yob", Semantic(INT, "Year of Birth")),
            ("likes", List(STR)),
        ),
    )
    assert render_type_definition(rec) == (
        "Person (Class) -> Person(first_name: str, last_name: str, "
        "yob: int - Year of Birth, likes: list[str])"
    )


def test_render_record_definition_with_meaning():
    rec = RecordDef("Point", (("x", INT), ("y", INT)), meaning="Screen Position")
    assert render_type_definition(rec) == (
        "Point (Class) -> Point(x: int, y: int) - Screen Position"
    )


def test_render_enum_definition():
    enum = EnumDef("Color", ("red", "green", "blue"))
    assert render_type_definition(enum) == (
        "Color (Enum) -> Color.red | Color.green | Color.blue"
    )
    labeled = EnumDef("Color", ("red", "green"), meaning="Pen Color")
    assert render_type_definition(labeled) == (
        "Color (Enum) -> Color.red | Color.green - Pen Color"
    )


def test_default_goal():
    assert default_goal("classify") == "Classify"
    assert default_goal("extract_entities") == "Extract entities"


# ---------------------------------------------------------------------------
# Prompt assembly


def test_full_prompt_layout(person_registry):
    spec = person_spec(
        person_registry,
        info=(
            Binding(
                "Wikipedia Information",
                "wiki_info",
                None,
                Str("Albert Einstein was a theoretical physicist."),
            ),
        ),
        context="Only consider their life outside their profession to identify likes",
    )
    system, user = render_prompt(spec)
    assert system.role is Role.SYSTEM
    assert user.role is Role.USER
    headers = [l for l in system.text.splitlines() if l.startswith("## ")]
    assert headers == [
        "## Goal",
        "## Type Definitions",
        "## Information",
        "## Context",
        "## Output Type",
        "## Instructions",
    ]
    assert (
        "Person (Class) -> Person(first_name: str, last_name: str, "
        "yob: int - Year of Birth, likes: list[str])" in system.text
    )
    assert (
        'Wikipedia Information (wiki_info) = "Albert Einstein was a theoretical physicist."'
        in system.text
    )
    assert user.text == '## Inputs\nName of the Person (name) (str) = "Albert Einstein"'


def test_sections_without_info_or_context(person_registry):
    spec = person_spec(person_registry)
    system, _ = render_prompt(spec)
    headers = [l for l in system.text.splitlines() if l.startswith("## ")]
    assert headers == ["## Goal", "## Type Definitions", "## Output Type", "## Instructions"]


def test_type_definitions_section_omitted_when_empty():
    reg = TypeRegistry()
    spec = make_prompt_spec(
        reg,
        goal="Add the Numbers",
        output_type=INT,
        inputs=(
            Binding("First Number", "a", INT, Int(2)),
            Binding("Second Number", "b", INT, Int(3)),
        ),
    )
    system, user = render_prompt(spec)
    assert "## Type Definitions" not in system.text
    assert "## Output Type\nint" in system.text
    assert "First Number (a) (int) = 2" in user.text
    assert "Second Number (b) (int) = 3" in user.text


def test_no_inputs_line():
    reg = TypeRegistry()
    spec = make_prompt_spec(reg, goal="Roll a Dice", output_type=INT)
    _, user = render_prompt(spec)
    assert user.text == "## Inputs\nNo inputs are provided. Achieve the goal: Roll a Dice"


def test_dependent_types_render_in_dependency_order():
    reg = TypeRegistry()
    register(reg, RecordDef("User", (("home", Named("Address")),)))
    register(reg, RecordDef("Address", (("city", STR),)))
    spec = make_prompt_spec(reg, goal="Make a User", output_type=Named("User"))
    system, _ = render_prompt(spec)
    lines = system.text.splitlines()
    addr = next(i for i, l in enumerate(lines) if l.startswith("Address (Class)"))
    user = next(i for i, l in enumerate(lines) if l.startswith("User (Class)"))
    assert addr < user


def test_only_reachable_types_are_included(person_registry):
    register(person_registry, RecordDef("Unrelated", (("x", INT),)))
    spec = person_spec(person_registry)
    system, _ = render_prompt(spec)
    assert "Unrelated" not in system.text


def test_unresolved_output_type_raises():
    reg = TypeRegistry()
    with pytest.raises(UnresolvedType) as exc:
        make_prompt_spec(reg, goal="G", output_type=Named("Ghost"))
    assert "Ghost" in str(exc.value)


def test_instruction_templates_differ_by_method(person_registry):
    texts = {}
    for method in (Method.STANDARD, Method.CHAIN_OF_THOUGHT, Method.REASON):
        spec = person_spec(person_registry, method=method)
        system, _ = render_prompt(spec)
        texts[method] = system.text
    assert "chain-of-thoughts" in texts[Method.CHAIN_OF_THOUGHT]
    assert "reasoning" in texts[Method.REASON]
    assert "chain-of-thoughts" not in texts[Method.STANDARD]
    for text in texts.values():
        assert "single value of type Person" in text


def test_enum_value_binding_renders_in_notation():
    reg = TypeRegistry()
    register(reg, EnumDef("Mood", ("happy", "sad")))
    from typedprompt import EnumRef

    spec = make_prompt_spec(
        reg,
        goal="Echo the Mood",
        output_type=Named("Mood"),
        inputs=(Binding("Current Mood", "mood", Named("Mood"), EnumRef("Mood", "happy")),),
    )
    _, user = render_prompt(spec)
    assert "Current Mood (mood) (Mood) = Mood.happy" in user.text


def test_object_value_binding_renders_in_notation(person_registry):
    value = Object(
        "Person",
        (
            ("first_name", Str("Marie")),
            ("last_name", Str("Curie")),
            ("yob", Int(1867)),
            ("likes", ListV((Str("Cycling"),))),
        ),
    )
    spec = person_spec(
        person_registry,
        info=(Binding("Example Famous People", "examples", List(Named("Person")), ListV((value,))),),
    )
    system, _ = render_prompt(spec)
    assert (
        "Example Famous People (examples) (list[Person]) = "
        '[Person(first_name="Marie", last_name="Curie", yob=1867, likes=["Cycling"])]'
        in system.text
    )


# ---------------------------------------------------------------------------
# Messages and images


def test_image_binding_renders_placeholder_and_appends_part(person_registry):
    payload = base64.b64encode(b"fake jpeg bytes").decode("ascii")
    image = ImagePart("image/jpeg", payload, detail="high")
    spec = person_spec(
        person_registry,
        inputs=(Binding("Photo of the Person", "photo", None, image),),
    )
    _, user = render_prompt(spec)
    assert user.text == "## Inputs\nPhoto of the Person (photo) (Image) = <attached>"
    assert user.parts[-1] is image
    assert image.data_url == f"data:image/jpeg;base64,{payload}"


def test_image_part_validation():
    payload = base64.b64encode(b"x").decode("ascii")
    with pytest.raises(ValueError):
        ImagePart("image/jpeg", payload, detail="ultra")
    with pytest.raises(ValueError):
        ImagePart("image/jpeg", "not base64!!", detail="low")


def test_text_part_and_message_shape():
    msg = render_prompt(
        make_prompt_spec(TypeRegistry(), goal="G", output_type=INT)
    )[0]
    assert isinstance(msg.parts[0], TextPart)
    assert msg.text == msg.parts[0].text


def test_prompt_spec_rejects_duplicate_input_names(person_registry):
    with pytest.raises(ValueError):
        person_spec(
            person_registry,
            inputs=(
                Binding("A", "x", INT, Int(1)),
                Binding("B", "x", INT, Int(2)),
            ),
        )


def test_prompt_spec_requires_goal(person_registry):
    with pytest.raises(ValueError):
        person_spec(person_registry, goal="  ")
