"""One call end to end: render, complete, extract, parse, conform, and repair.

The repair loop keeps the whole prior conversation so the model sees its own
mistake: each retry appends the previous assistant reply plus a user message
describing exactly what was wrong and restating the required fence and type.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import schema, validate
from .client import ModelRequest
from .notation import (
    BlockNotFound,
    CandidateOutput,
    Provenance,
    SourceError,
    Str,
    extract_block,
    extract_candidate_output,
    parse_value,
)
from .render import (
    Binding,
    ChatMessage,
    Method,
    PromptSpec,
    REASONING_LABELS,
    Role,
    load_template,
    render_prompt,
    render_type_expr,
    text_message,
)
from .validate import TypedValue, conform, describe_errors

DEFAULT_RETRY_CEILING = 5

REASONED_ANSWER_MEANING = "Reasoned Answer"
REASONED_ANSWER_NAME = "reasoned_answer"


@dataclass(frozen=True)
class CallPolicy:
    max_retries: int = 0  # additional attempts after the first
    temperature: float = 0.0
    model_name: str = "gpt-4o-mini"
    allow_llm_reextraction: bool = True
    retry_ceiling: int = DEFAULT_RETRY_CEILING

    def __post_init__(self):
        if not 0 <= self.max_retries <= self.retry_ceiling:
            raise ValueError(
                f"max_retries must be between 0 and {self.retry_ceiling}"
            )
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


class Failure:
    """Base class for per-attempt failures."""

    __slots__ = ()


@dataclass(frozen=True)
class ExtractionFailed(Failure):
    detail: str


@dataclass(frozen=True)
class ParseFailed(Failure):
    error: SourceError


@dataclass(frozen=True)
class ValidationFailed(Failure):
    errors: tuple[validate.ValidationError, ...]

    def __post_init__(self):
        object.__setattr__(self, "errors", tuple(self.errors))


@dataclass(frozen=True)
class Attempt:
    request_messages: tuple[ChatMessage, ...]
    raw_reply: str
    extraction_provenance: Provenance | None
    failure: Failure | None  # absent iff this attempt produced a typed value
    prompt_tokens: int
    completion_tokens: int
    stage: str = "main"  # "reasoning" for the free-form first NL stage


@dataclass(frozen=True)
class CallOutcome:
    result: TypedValue | None
    attempts: tuple[Attempt, ...]
    reasoning_trace: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "attempts", tuple(self.attempts))

    @property
    def total_prompt_tokens(self) -> int:
        return sum(a.prompt_tokens for a in self.attempts)

    @property
    def total_completion_tokens(self) -> int:
        return sum(a.completion_tokens for a in self.attempts)

    @property
    def attempts_used(self) -> int:
        return sum(1 for a in self.attempts if a.stage == "main")


class ExhaustedError(Exception):
    """Raised when every attempt failed; carries the full outcome."""

    def __init__(self, outcome: CallOutcome):
        failures = [type(a.failure).__name__ for a in outcome.attempts if a.failure]
        super().__init__(
            f"no valid output after {len(outcome.attempts)} attempt(s): "
            + ", ".join(failures)
        )
        self.outcome = outcome


REPAIR_OPENING = "The previous output was invalid."
REPAIR_CLOSING = (
    "Reply again, placing the answer inside a fenced block labeled output. "
    "The block must contain a single value of type {output_type} in the object "
    "notation defined earlier, with no text outside the block."
)
REPAIR_NO_BLOCK = "No fenced code block labeled `output` was found in the reply."


def repair_messages(
    spec: PromptSpec, previous_raw: str, failure: Failure
) -> list[ChatMessage]:
    """The two messages appended before a retry: the model's own reply and a
    user message diagnosing the failure."""
    if isinstance(failure, ParseFailed):
        e = failure.error
        diagnosis = (
            f"The output could not be parsed: {e.message} "
            f"(line {e.line}, column {e.column})."
        )
    elif isinstance(failure, ValidationFailed):
        diagnosis = (
            "The output did not match the required type:\n"
            + describe_errors(list(failure.errors))
        )
    elif isinstance(failure, ExtractionFailed):
        diagnosis = REPAIR_NO_BLOCK + " " + failure.detail
    else:
        raise TypeError(f"not a Failure: {failure!r}")
    closing = REPAIR_CLOSING.format(output_type=render_type_expr(spec.output_type))
    return [
        text_message(Role.ASSISTANT, previous_raw),
        text_message(Role.USER, f"{REPAIR_OPENING}\n{diagnosis}\n{closing}"),
    ]


def _classify_and_conform(
    spec: PromptSpec, candidate: CandidateOutput, registry_slice_registry
) -> tuple[TypedValue | None, Failure | None]:
    try:
        parsed = parse_value(candidate.text)
    except SourceError as err:
        if candidate.provenance is Provenance.LABELED:
            return None, ParseFailed(err)
        return None, ExtractionFailed(
            f"The fallback candidate ({candidate.provenance.value}) "
            f"was not a value either: {err.message} (line {err.line}, column {err.column})."
        )
    result = conform(parsed, spec.output_type, registry_slice_registry)
    if isinstance(result, TypedValue):
        return result, None
    return None, ValidationFailed(tuple(result))


def _slice_registry(spec: PromptSpec) -> schema.TypeRegistry:
    registry = schema.TypeRegistry()
    for d in spec.type_registry_slice:
        schema.register(registry, d)
    return registry


def _reasoning_from(spec: PromptSpec, raw_reply: str) -> str | None:
    label = REASONING_LABELS.get(spec.method)
    if label is None:
        return None
    try:
        return extract_block(raw_reply, label)
    except BlockNotFound:
        return None


def invoke(spec: PromptSpec, policy: CallPolicy, client) -> CallOutcome:
    """Run the full pipeline with up to policy.max_retries repair rounds.
    Raises ExhaustedError when no attempt conforms; transport errors pass
    through."""
    if spec.method is Method.NL_TO_FORMAT:
        raise ValueError("nl specs run through invoke_nl_to_format")
    return _invoke_loop(spec, policy, client, prior_attempts=(), reasoning_trace=None)


def _invoke_loop(
    spec: PromptSpec,
    policy: CallPolicy,
    client,
    prior_attempts: tuple[Attempt, ...],
    reasoning_trace: str | None,
) -> CallOutcome:
    registry = _slice_registry(spec)
    messages = render_prompt(spec)
    attempts = list(prior_attempts)
    for round_no in range(policy.max_retries + 1):
        request = ModelRequest(
            model_name=policy.model_name,
            messages=tuple(messages),
            temperature=policy.temperature,
        )
        response = client.complete(request)
        candidate = extract_candidate_output(response.text)
        typed, failure = _classify_and_conform(spec, candidate, registry)
        attempts.append(
            Attempt(
                request_messages=tuple(messages),
                raw_reply=response.text,
                extraction_provenance=candidate.provenance,
                failure=failure,
                prompt_tokens=response.prompt_tokens,
                completion_tokens=response.completion_tokens,
            )
        )
        if typed is not None:
            trace = reasoning_trace or _reasoning_from(spec, response.text)
            return CallOutcome(
                result=typed, attempts=tuple(attempts), reasoning_trace=trace
            )
        if isinstance(failure, ExtractionFailed) and not policy.allow_llm_reextraction:
            break  # extraction repair disabled: do not spend retries on it
        if round_no < policy.max_retries:
            messages = messages + repair_messages(spec, response.text, failure)
    raise ExhaustedError(
        CallOutcome(result=None, attempts=tuple(attempts), reasoning_trace=reasoning_trace)
    )


def invoke_nl_to_format(spec: PromptSpec, policy: CallPolicy, client) -> CallOutcome:
    """Two-stage strategy: answer free-form first, then convert that answer to
    the typed format. Conformance and retries apply to the second stage only."""
    if spec.method is not Method.NL_TO_FORMAT:
        raise ValueError("spec method must be nl for the two-stage flow")
    stage1_messages = render_prompt(
        spec, instructions_override=load_template("nl_freeform.txt")
    )
    request = ModelRequest(
        model_name=policy.model_name,
        messages=tuple(stage1_messages),
        temperature=policy.temperature,
    )
    response = client.complete(request)  # transport failures end the call here
    stage1 = Attempt(
        request_messages=tuple(stage1_messages),
        raw_reply=response.text,
        extraction_provenance=None,
        failure=None,
        prompt_tokens=response.prompt_tokens,
        completion_tokens=response.completion_tokens,
        stage="reasoning",
    )
    answer = Binding(
        meaning=REASONED_ANSWER_MEANING,
        name=REASONED_ANSWER_NAME,
        type=None,
        value=Str(response.text),
    )
    stage2_spec = replace(
        spec, info=(answer,), inputs=(), context=None, method=Method.NL_TO_FORMAT
    )
    return _invoke_loop(
        stage2_spec,
        policy,
        client,
        prior_attempts=(stage1,),
        reasoning_trace=response.text,
    )
