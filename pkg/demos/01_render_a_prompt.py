"""Declare a typed schema once, then watch it become a full prompt.

The system message carries the goal, the type definitions in dependency
order, and format instructions; the user message carries the inputs with
their meanings. Run: python3 demos/01_render_a_prompt.py
"""

from typedprompt import (
    Binding,
    INT,
    List,
    Method,
    Named,
    RecordDef,
    STR,
    Semantic,
    Str,
    TypeRegistry,
    make_prompt_spec,
    register,
    render_prompt,
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
    context="Only consider their life outside their profession to identify likes",
    inputs=[Binding("Name of the Person", "name", STR, Str("Albert Einstein"))],
)

system, user = render_prompt(spec)
print(system.text)
print()
print(user.text)

# switching the method only swaps the Instructions section
print("\n--- chain-of-thought instructions ---\n")
from dataclasses import replace

cot = replace(spec, method=Method.CHAIN_OF_THOUGHT)
print(render_prompt(cot)[0].text.split("## Instructions\n")[1])
