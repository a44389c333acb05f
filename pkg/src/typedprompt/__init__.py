"""typedprompt: typed-schema prompt synthesis and structured output for LLMs.

Declare output types once, render them into a semantically annotated prompt,
and get validated typed values back through an error-driven repair loop. The
bench module reproduces the published evaluation pipeline offline.
"""

from .schema import (
    BOOL,
    FLOAT,
    INT,
    STR,
    CyclicDependency,
    DuplicateName,
    EnumDef,
    InvalidDefinition,
    List,
    Mapping,
    Named,
    Optional,
    Primitive,
    RecordDef,
    SchemaError,
    Semantic,
    Tuple,
    TypeExpr,
    TypeRegistry,
    UnknownName,
    collect_dependencies,
    register,
    resolve,
)
from .notation import (
    NULL,
    BlockNotFound,
    Bool,
    CandidateOutput,
    EnumRef,
    Float,
    Int,
    ListV,
    MapV,
    Null,
    Object,
    Provenance,
    SourceError,
    Str,
    TupleV,
    Value,
    extract_block,
    extract_candidate_output,
    parse_value,
    render_value,
)
from .render import (
    Binding,
    ChatMessage,
    ImagePart,
    Method,
    PromptSpec,
    Role,
    TextPart,
    UnresolvedType,
    default_goal,
    make_prompt_spec,
    render_prompt,
    render_type_definition,
    render_type_expr,
)
from .validate import (
    TypedValue,
    ValidationError,
    conform,
    describe_errors,
    is_valid,
)
from .client import (
    AuthMissing,
    HttpClient,
    ModelRequest,
    ModelResponse,
    RecordingClient,
    ReplayClient,
    ReplayMismatch,
    ScriptedClient,
    TranscriptEntry,
    TransportError,
    UnreadableImage,
    canonical_request_bytes,
    encode_image,
    encode_request,
    request_fingerprint,
)
from .runtime import (
    Attempt,
    CallOutcome,
    CallPolicy,
    ExhaustedError,
    ExtractionFailed,
    Failure,
    ParseFailed,
    ValidationFailed,
    invoke,
    invoke_nl_to_format,
    repair_messages,
)
from .bench import (
    BenchRecord,
    DatasetFormatError,
    DegenerateRange,
    EmptyRun,
    FixtureMissing,
    MetricsReport,
    ReproducedRow,
    TaskKind,
    TaskSpec,
    build_report,
    consistency,
    exact_accuracy,
    gms,
    load_published_fixture,
    micro_prf,
    multilabel_task,
    ner_task,
    ntu,
    reproduce_table2,
    run_task,
    synthetic_task,
    variety,
)

__version__ = "0.1.0"

__all__ = [
    # schema
    "TypeExpr", "Primitive", "List", "Tuple", "Mapping", "Optional", "Named",
    "Semantic", "INT", "FLOAT", "STR", "BOOL", "RecordDef", "EnumDef",
    "TypeRegistry", "register", "resolve", "collect_dependencies",
    "SchemaError", "DuplicateName", "InvalidDefinition", "CyclicDependency",
    "UnknownName",
    # notation
    "Value", "Null", "NULL", "Bool", "Int", "Float", "Str", "ListV", "TupleV",
    "MapV", "EnumRef", "Object", "parse_value", "render_value", "SourceError",
    "extract_block", "extract_candidate_output", "BlockNotFound",
    "CandidateOutput", "Provenance",
    # render
    "Method", "Role", "TextPart", "ImagePart", "ChatMessage", "Binding",
    "PromptSpec", "make_prompt_spec", "render_prompt", "render_type_expr",
    "render_type_definition", "default_goal", "UnresolvedType",
    # validate
    "TypedValue", "ValidationError", "conform", "is_valid", "describe_errors",
    # client
    "ModelRequest", "ModelResponse", "HttpClient", "ScriptedClient",
    "RecordingClient", "ReplayClient", "TranscriptEntry", "TransportError",
    "AuthMissing", "ReplayMismatch", "UnreadableImage", "encode_request",
    "canonical_request_bytes", "request_fingerprint", "encode_image",
    # runtime
    "CallPolicy", "CallOutcome", "Attempt", "Failure", "ExtractionFailed",
    "ParseFailed", "ValidationFailed", "ExhaustedError", "invoke",
    "invoke_nl_to_format", "repair_messages",
    # bench
    "TaskKind", "TaskSpec", "multilabel_task", "ner_task", "synthetic_task",
    "BenchRecord", "run_task", "MetricsReport", "build_report", "micro_prf",
    "exact_accuracy", "variety", "ntu", "gms", "consistency",
    "reproduce_table2", "ReproducedRow", "load_published_fixture",
    "DatasetFormatError", "EmptyRun", "FixtureMissing", "DegenerateRange",
]
