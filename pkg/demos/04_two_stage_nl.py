"""Two-stage flow: let the model answer in plain language first, then convert
that answer into the typed format in a second call. Useful when forcing a
format up front hurts answer quality. Run: python3 demos/04_two_stage_nl.py
"""

from typedprompt import (
    Binding,
    CallPolicy,
    INT,
    List,
    Method,
    Named,
    RecordDef,
    STR,
    ScriptedClient,
    Semantic,
    Str,
    TypeRegistry,
    invoke_nl_to_format,
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
    method=Method.NL_TO_FORMAT,
)

client = ScriptedClient(
    [
        # stage 1: free-form answer, no format constraints at all
        "That would be Albert Einstein, the physicist, born in 1879. Outside "
        "physics he was fond of sailing and playing the violin.",
        # stage 2: the converter turns the text above into the output type
        '```output\nPerson(first_name="Albert", last_name="Einstein", '
        'yob=1879, likes=["sailing", "violin"])\n```',
    ]
)

outcome = invoke_nl_to_format(spec, CallPolicy(max_retries=1), client)

print("stages:", [a.stage for a in outcome.attempts])
print("free-form answer kept as the trace:")
print(" ", outcome.reasoning_trace)
print()
print("typed result:", render_value(outcome.result.value))
print()
print("what the converter call saw in its Information section:")
system_text = client.requests[1].messages[0].text
info = system_text.split("## Information\n")[1].split("\n\n## ")[0]
print(" ", info)
