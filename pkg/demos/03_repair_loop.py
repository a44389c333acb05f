"""The repair loop in action, fully offline.

A scripted client stands in for the model: its first reply has a type error,
so the runtime sends the reply back with a diagnosis and asks again. The
second reply conforms. Run: python3 demos/03_repair_loop.py
"""

from typedprompt import (
    Binding,
    CallPolicy,
    INT,
    List,
    Named,
    RecordDef,
    STR,
    ScriptedClient,
    Semantic,
    Str,
    TypeRegistry,
    invoke,
    make_prompt_spec,
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

spec = make_prompt_spec(
    registry,
    goal="Get the Famous Person for the Given Name",
    output_type=Named("Person"),
    inputs=[Binding("Name of the Person", "name", STR, Str("Albert Einstein"))],
)

client = ScriptedClient(
    [
        '```output\nPerson(first_name="Albert", last_name="Einstein", '
        'yob="1879", likes=["sailing"])\n```',
        '```output\nPerson(first_name="Albert", last_name="Einstein", '
        'yob=1879, likes=["sailing"])\n```',
    ]
)

outcome = invoke(spec, CallPolicy(max_retries=2), client)

print("result:", render_value(outcome.result.value))
print("attempts used:", outcome.attempts_used)
print()

failed = outcome.attempts[0]
print("first attempt failed with:", type(failed.failure).__name__)
print()
print("repair message the model saw on the retry:")
print("-" * 50)
print(client.requests[1].messages[-1].text)
