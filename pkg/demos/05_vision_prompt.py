"""Image inputs ride along as data-URL parts while the prompt text keeps a
placeholder line. This prints the exact JSON that would go over the wire,
with the base64 payload elided. Run: python3 demos/05_vision_prompt.py
"""

import json
from pathlib import Path

from typedprompt import (
    BOOL,
    Binding,
    INT,
    ModelRequest,
    Named,
    RecordDef,
    STR,
    Semantic,
    TypeRegistry,
    encode_image,
    encode_request,
    make_prompt_spec,
    register,
    render_prompt,
    request_fingerprint,
)

registry = TypeRegistry()
register(
    registry,
    RecordDef(
        "Meal",
        (
            ("dish", STR),
            ("calories", Semantic(INT, "Estimated Calories")),
            ("vegetarian", BOOL),
        ),
    ),
)

photo = encode_image(Path(__file__).parent.parent / "tests/fixtures/meal.jpg", detail="high")

spec = make_prompt_spec(
    registry,
    goal="Describe the Meal in the Photo",
    output_type=Named("Meal"),
    inputs=[Binding("Photo of the Meal", "photo", None, photo)],
)

messages = render_prompt(spec)
print("user message text:")
print(messages[1].text)
print()

request = ModelRequest("gpt-4o", tuple(messages), temperature=0.0)
body = encode_request(request)
url = body["messages"][1]["content"][1]["image_url"]["url"]
body["messages"][1]["content"][1]["image_url"]["url"] = url[:48] + f"... ({len(url)} chars)"
print("wire body:")
print(json.dumps(body, indent=2))
print()
print("request fingerprint:", request_fingerprint(request))
