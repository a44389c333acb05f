import pytest

from typedprompt import (
    BOOL,
    CyclicDependency,
    DuplicateName,
    EnumDef,
    INT,
    InvalidDefinition,
    List,
    Mapping,
    Named,
    Optional,
    Primitive,
    RecordDef,
    STR,
    Semantic,
    Tuple,
    TypeRegistry,
    UnknownName,
    collect_dependencies,
    register,
    resolve,
)


def test_primitive_kinds():
    assert Primitive("int") == INT
    with pytest.raises(ValueError):
        Primitive("integer")


def test_type_exprs_are_frozen_and_comparable():
    a = List(Optional(STR))
    b = List(Optional(STR))
    assert a == b
    assert hash(a) == hash(b)
    with pytest.raises(AttributeError):
        a.elem = INT


def test_mapping_key_must_be_str_or_int_primitive():
    Mapping(STR, INT)
    Mapping(INT, List(STR))
    with pytest.raises(ValueError):
        Mapping(BOOL, INT)
    with pytest.raises(ValueError):
        Mapping(List(STR), INT)


def test_no_double_optional_or_double_semantic():
    with pytest.raises(ValueError):
        Optional(Optional(INT))
    with pytest.raises(ValueError):
        Semantic(Semantic(INT, "a"), "b")
    # but they can interleave
    Optional(Semantic(INT, "Year of Birth"))
    Semantic(Optional(INT), "Year of Birth")


def test_semantic_meaning_must_be_nonempty():
    with pytest.raises(ValueError):
        Semantic(INT, "")
    with pytest.raises(ValueError):
        Semantic(INT, "   ")


def test_named_identifier_rules():
    Named("Person")
    Named("_x9")
    for bad in ("9lives", "has space", "", "a-b"):
        with pytest.raises(ValueError):
            Named(bad)


def test_record_def_invariants():
    RecordDef("Person", (("name", STR),))
    with pytest.raises(ValueError):
        RecordDef("Person", ())  # needs at least one field
    with pytest.raises(ValueError):
        RecordDef("Person", (("name", STR), ("name", INT)))
    with pytest.raises(ValueError):
        RecordDef("bad name", (("x", INT),))


def test_record_field_type_lookup():
    rec = RecordDef("P", (("a", INT), ("b", STR)))
    assert rec.field_type("a") == INT
    assert rec.field_type("missing") is None


def test_enum_def_invariants():
    EnumDef("Color", ("red", "green"))
    with pytest.raises(ValueError):
        EnumDef("Color", ())
    with pytest.raises(ValueError):
        EnumDef("Color", ("red", "red"))


def test_register_rejects_duplicates_across_kinds():
    reg = TypeRegistry()
    register(reg, RecordDef("Thing", (("x", INT),)))
    with pytest.raises(DuplicateName):
        register(reg, RecordDef("Thing", (("y", INT),)))
    with pytest.raises(DuplicateName):
        register(reg, EnumDef("Thing", ("a",)))
    assert "Thing" in reg
    assert reg.lookup("Thing").name == "Thing"


def test_register_rejects_non_definitions():
    reg = TypeRegistry()
    with pytest.raises(InvalidDefinition):
        register(reg, "Person")


def test_resolve_reports_missing_names_in_order():
    reg = TypeRegistry()
    register(reg, RecordDef("A", (("b", Named("B")), ("c", Named("C")))))
    missing = resolve(reg, Tuple((Named("A"), Named("Z"))))
    assert missing == ["B", "C", "Z"]
    register(reg, RecordDef("B", (("x", INT),)))
    register(reg, RecordDef("C", (("x", INT),)))
    register(reg, RecordDef("Z", (("x", INT),)))
    assert resolve(reg, Tuple((Named("A"), Named("Z")))) == []


def test_resolve_handles_recursive_records():
    reg = TypeRegistry()
    register(reg, RecordDef("Node", (("next", Optional(Named("Node"))),)))
    assert resolve(reg, Named("Node")) == []


def test_collect_dependencies_orders_deps_first():
    reg = TypeRegistry()
    register(reg, RecordDef("Address", (("city", STR),)))
    register(reg, RecordDef("User", (("home", Named("Address")), ("kind", Named("Kind")))))
    register(reg, EnumDef("Kind", ("admin", "guest")))
    deps = collect_dependencies(reg, Named("User"))
    names = [d.name for d in deps]
    assert names.index("Address") < names.index("User")
    assert names.index("Kind") < names.index("User")
    assert set(names) == {"Address", "Kind", "User"}


def test_collect_dependencies_detects_cycles():
    reg = TypeRegistry()
    register(reg, RecordDef("A", (("b", Named("B")),)))
    register(reg, RecordDef("B", (("a", Named("A")),)))
    with pytest.raises(CyclicDependency) as exc:
        collect_dependencies(reg, Named("A"))
    assert "->" in str(exc.value)


def test_collect_dependencies_unknown_name():
    reg = TypeRegistry()
    with pytest.raises(UnknownName):
        collect_dependencies(reg, Named("Ghost"))


def test_self_recursion_resolves_but_cannot_be_ordered():
    # resolve tolerates recursive records; dependency ordering cannot
    reg = TypeRegistry()
    register(
        reg,
        RecordDef(
            "Tree",
            (
                ("value", INT),
                ("children", List(Named("Tree"))),
            ),
        ),
    )
    assert resolve(reg, Named("Tree")) == []
    with pytest.raises(CyclicDependency):
        collect_dependencies(reg, Named("Tree"))
