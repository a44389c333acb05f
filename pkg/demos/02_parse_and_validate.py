"""Pull a candidate value out of a raw model reply, parse it, and check it
against the declared type. Every failure is a diagnostic, not an exception
bubbling out of eval. Run: python3 demos/02_parse_and_validate.py
"""

from typedprompt import (
    INT,
    List,
    Named,
    RecordDef,
    STR,
    Semantic,
    SourceError,
    TypeRegistry,
    TypedValue,
    conform,
    describe_errors,
    extract_candidate_output,
    parse_value,
    register,
    render_value,
)

registry = TypeRegistry()
register(
    registry,
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

REPLIES = [
    # the happy path: one labeled block
    'Sure!\n```output\nPerson(first_name="Albert", last_name="Einstein", '
    'yob=1879, likes=["sailing", "violin"])\n```',
    # wrong field type: parses fine, fails conformance with a path
    '```output\nPerson(first_name="Albert", last_name="Einstein", '
    'yob="eighteen-seventy-nine", likes=[])\n```',
    # broken syntax: the parser points at line and column
    '```output\nPerson(first_name="Albert", last_name="Einstein", yob=1879\n```',
    # no block at all: the whole text becomes the candidate, and fails
    "Albert Einstein was born in 1879.",
]

for i, reply in enumerate(REPLIES, 1):
    print(f"=== reply {i} ===")
    candidate = extract_candidate_output(reply)
    print(f"candidate source: {candidate.provenance.value}")
    try:
        value = parse_value(candidate.text)
    except SourceError as err:
        print(f"parse error: {err.message} (line {err.line}, column {err.column})")
        print(f"  {err.excerpt}")
        print()
        continue
    result = conform(value, Named("Person"), registry)
    if isinstance(result, TypedValue):
        print("valid:", render_value(result.value))
    else:
        print("invalid:")
        print(describe_errors(result))
    print()
