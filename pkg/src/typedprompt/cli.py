"""Command-line surface: render prompts, parse and validate replies offline,
make single calls, run benchmarks, and reproduce the published score table.

Exit codes: 0 success, 1 method-level failure (invalid output, exhausted
retries, tolerance breach), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

from . import bench, schema
from .client import (
    AuthMissing,
    HttpClient,
    RecordingClient,
    ReplayClient,
    ReplayMismatch,
    TransportError,
    encode_image,
)
from .notation import SourceError, parse_value, render_value, Provenance, extract_candidate_output
from .render import (
    Binding,
    ImagePart,
    Method,
    PromptSpec,
    TextPart,
    UnresolvedType,
    make_prompt_spec,
    render_prompt,
)
from .runtime import CallPolicy, ExhaustedError, invoke, invoke_nl_to_format
from .validate import TypedValue, conform, describe_errors

CONFIG_KEYS = ("api_key", "base_url", "model")

EXIT_OK = 0
EXIT_METHOD_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Type-text surface syntax (the rendered form, parsed back)


def _top_level_find(text: str, needle: str, start: int = 0) -> int:
    depth = 0
    i = start
    while i < len(text):
        c = text[i]
        if c == "[":
            depth += 1
        elif c == "]":
            depth -= 1
        elif depth == 0 and text.startswith(needle, i):
            return i
        i += 1
    return -1


def _split_top_level(text: str, sep: str) -> list[str]:
    parts = []
    pos = 0
    while True:
        hit = _top_level_find(text, sep, pos)
        if hit < 0:
            parts.append(text[pos:])
            return parts
        parts.append(text[pos:hit])
        pos = hit + len(sep)


def parse_type_text(text: str) -> schema.TypeExpr:
    """Parse the rendered type syntax: primitives, list[T], tuple[A, B],
    dict[K, V], Name, 'T | None', and 'T - meaning'. When text could read as
    either an optional or a meaning ending in '| None', the optional wins."""
    s = text.strip()
    if not s:
        raise UsageError("empty type text")
    if s.endswith(" | None"):
        head = s[: -len(" | None")]
        if _top_level_find(s, " | None") == len(head):
            return schema.Optional(parse_type_text(head))
    dash = _top_level_find(s, " - ")
    if dash >= 0:
        meaning = s[dash + 3 :].strip()
        if not meaning:
            raise UsageError(f"empty meaning in type text {text!r}")
        return schema.Semantic(parse_type_text(s[:dash]), meaning)
    if _top_level_find(s, "|") >= 0:
        raise UsageError(f"only '| None' unions are supported, got {text!r}")
    if s.startswith("list[") and s.endswith("]"):
        return schema.List(parse_type_text(s[5:-1]))
    if s.startswith("tuple[") and s.endswith("]"):
        elems = [parse_type_text(p) for p in _split_top_level(s[6:-1], ",")]
        return schema.Tuple(tuple(elems))
    if s.startswith("dict[") and s.endswith("]"):
        parts = _split_top_level(s[5:-1], ",")
        if len(parts) != 2:
            raise UsageError(f"dict type needs exactly two parameters: {text!r}")
        return schema.Mapping(parse_type_text(parts[0]), parse_type_text(parts[1]))
    if s in schema.PRIMITIVE_KINDS:
        return schema.Primitive(s)
    if s == "None":
        raise UsageError("'None' alone is not a type; write 'T | None'")
    if s.isidentifier():
        return schema.Named(s)
    raise UsageError(f"cannot parse type text {text!r}")


# ---------------------------------------------------------------------------
# Schema and call files


def _load_json(path: str | Path, what: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} is not valid JSON: {exc}") from exc


def load_schema_file(path: str | Path) -> schema.TypeRegistry:
    data = _load_json(path, "schema file")
    registry = schema.TypeRegistry()
    try:
        for e in data.get("enums", []):
            schema.register(
                registry,
                schema.EnumDef(e["name"], tuple(e["members"]), meaning=e.get("meaning")),
            )
        for r in data.get("records", []):
            fields = tuple((f["name"], parse_type_text(f["type"])) for f in r["fields"])
            schema.register(
                registry, schema.RecordDef(r["name"], fields, meaning=r.get("meaning"))
            )
    except (schema.SchemaError, KeyError, TypeError) as exc:
        raise UsageError(f"bad schema file {path}: {exc}") from exc
    return registry


_METHOD_NAMES = {m.value: m for m in Method}


def _load_binding(entry: dict, registry: schema.TypeRegistry, what: str) -> Binding:
    meaning = entry.get("meaning")
    name = entry.get("name")
    if not meaning or not name:
        raise UsageError(f"{what} needs 'meaning' and 'name': {entry!r}")
    if "image" in entry:
        part = encode_image(
            entry["image"],
            media_type=entry.get("media_type"),
            detail=entry.get("detail", "auto"),
        )
        return Binding(meaning, name, None, part)
    type_text = entry.get("type")
    declared = parse_type_text(type_text) if type_text else None
    try:
        value = parse_value(entry["value"])
    except KeyError:
        raise UsageError(f"{what} {name!r} has no 'value'") from None
    except SourceError as exc:
        raise UsageError(f"{what} {name!r}: {exc}") from exc
    if declared is not None:
        result = conform(value, declared, registry)
        if not isinstance(result, TypedValue):
            raise UsageError(
                f"{what} {name!r} does not conform to {type_text}:\n"
                + describe_errors(result)
            )
        value = result.value
    return Binding(meaning, name, declared, value)


def load_call_file(
    path: str | Path,
    registry: schema.TypeRegistry,
    method_override: str | None = None,
) -> PromptSpec:
    data = _load_json(path, "call file")
    if "goal" not in data or "output_type" not in data:
        raise UsageError("call file needs 'goal' and 'output_type'")
    method_name = method_override or data.get("method", "standard")
    if method_name not in _METHOD_NAMES:
        raise UsageError(
            f"unknown method {method_name!r}; choose from {sorted(_METHOD_NAMES)}"
        )
    try:
        output_type = parse_type_text(data["output_type"])
        info = [_load_binding(e, registry, "info binding") for e in data.get("info", [])]
        inputs = [
            _load_binding(e, registry, "input binding") for e in data.get("inputs", [])
        ]
        return make_prompt_spec(
            registry,
            goal=data["goal"],
            output_type=output_type,
            info=info,
            context=data.get("context"),
            inputs=inputs,
            method=_METHOD_NAMES[method_name],
        )
    except UnresolvedType as exc:
        raise UsageError(str(exc)) from exc
    except (ValueError, schema.SchemaError) as exc:
        raise UsageError(f"bad call file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Configuration


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    config = _load_json(path, "config file")
    unknown = set(config) - set(CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return config


def _resolved(flag_value, env_name: str, config: dict, key: str, default=None):
    # precedence: flags > environment > config file > default
    if flag_value is not None:
        return flag_value
    env_value = os.environ.get(env_name)
    if env_value:
        return env_value
    return config.get(key, default)


def _make_client(args, config: dict):
    if getattr(args, "replay", None):
        try:
            client = ReplayClient(args.replay)
        except FileNotFoundError as exc:
            raise UsageError(str(exc)) from exc
    else:
        client = HttpClient(
            base_url=_resolved(args.base_url, "TYPEDPROMPT_BASE_URL", config, "base_url"),
            api_key=_resolved(args.api_key, "TYPEDPROMPT_API_KEY", config, "api_key"),
        )
    if getattr(args, "record", None):
        client = RecordingClient(client, args.record)
    return client


def _policy(args, config: dict) -> CallPolicy:
    model = _resolved(args.model, "TYPEDPROMPT_MODEL", config, "model", "gpt-4o-mini")
    return CallPolicy(
        max_retries=args.retries,
        temperature=getattr(args, "temperature", 0.0) or 0.0,
        model_name=model,
    )


# ---------------------------------------------------------------------------
# Commands


def cmd_render(args) -> int:
    registry = load_schema_file(args.schema)
    spec = load_call_file(args.call, registry, method_override=args.method)
    try:
        messages = render_prompt(spec)
    except UnresolvedType as exc:
        raise UsageError(str(exc)) from exc
    chunks = []
    for message in messages:
        lines = [f"=== {message.role.value} ==="]
        for part in message.parts:
            if isinstance(part, TextPart):
                lines.append(part.text)
            else:
                lines.append(f"[image {part.media_type} detail={part.detail}]")
        chunks.append("\n".join(lines))
    print("\n\n".join(chunks))
    return EXIT_OK


def cmd_parse(args) -> int:
    registry = load_schema_file(args.schema)
    expr = parse_type_text(args.type)
    missing = schema.resolve(registry, expr)
    if missing:
        raise UsageError(f"unresolved type names: {', '.join(missing)}")
    if args.input:
        path = Path(args.input)
        if not path.exists():
            raise UsageError(f"input file not found: {path}")
        reply = path.read_text(encoding="utf-8")
    else:
        reply = sys.stdin.read()
    candidate = extract_candidate_output(reply)
    if candidate.provenance is not Provenance.LABELED:
        print(
            f"note: no block labeled 'output'; using {candidate.provenance.value} candidate",
            file=sys.stderr,
        )
    try:
        value = parse_value(candidate.text)
    except SourceError as exc:
        print(f"parse error: {exc.message} (line {exc.line}, column {exc.column})", file=sys.stderr)
        print(f"  {exc.excerpt}", file=sys.stderr)
        return EXIT_METHOD_FAILURE
    result = conform(value, expr, registry)
    if not isinstance(result, TypedValue):
        print(describe_errors(result), file=sys.stderr)
        return EXIT_METHOD_FAILURE
    print(render_value(result.value))
    return EXIT_OK


def _outcome_json(outcome) -> dict:
    failure_names = {
        "ExtractionFailed": "extraction",
        "ParseFailed": "parse",
        "ValidationFailed": "validation",
    }
    return {
        "result": render_value(outcome.result.value) if outcome.result else None,
        "reasoning_trace": outcome.reasoning_trace,
        "attempts": [
            {
                "stage": a.stage,
                "provenance": a.extraction_provenance.value if a.extraction_provenance else None,
                "failure": failure_names.get(type(a.failure).__name__) if a.failure else None,
                "prompt_tokens": a.prompt_tokens,
                "completion_tokens": a.completion_tokens,
            }
            for a in outcome.attempts
        ],
        "total_prompt_tokens": outcome.total_prompt_tokens,
        "total_completion_tokens": outcome.total_completion_tokens,
    }


def cmd_call(args) -> int:
    config = _load_config(args.config)
    registry = load_schema_file(args.schema)
    spec = load_call_file(args.call, registry, method_override=args.method)
    policy = _policy(args, config)
    client = _make_client(args, config)
    runner = invoke_nl_to_format if spec.method is Method.NL_TO_FORMAT else invoke
    try:
        outcome = runner(spec, policy, client)
    except ExhaustedError as exc:
        print(json.dumps(_outcome_json(exc.outcome), indent=2, ensure_ascii=False))
        return EXIT_METHOD_FAILURE
    print(json.dumps(_outcome_json(outcome), indent=2, ensure_ascii=False))
    return EXIT_OK


def _template_hashes() -> dict:
    hashes = {}
    templates = resources.files("typedprompt").joinpath("templates")
    for entry in sorted(templates.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".txt"):
            digest = hashlib.sha256(entry.read_bytes()).hexdigest()
            hashes[entry.name] = digest
    return hashes


def _load_jsonl(path: str | Path) -> list[dict]:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"dataset not found: {p}")
    rows = []
    for line in p.read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def cmd_bench(args) -> int:
    config = _load_config(args.config)
    task = bench.TASK_BUILDERS[bench.TaskKind(args.task)]()
    if task.kind is bench.TaskKind.SYNTHETIC:
        if args.dataset:
            rows = _load_jsonl(args.dataset)
        else:
            rows = [{"id": i + 1} for i in range(args.count)]
    else:
        if not args.dataset:
            raise UsageError(f"task {args.task!r} requires a dataset path")
        rows = _load_jsonl(args.dataset)
    policy = _policy(args, config)
    client = _make_client(args, config)
    method = {
        "standard": Method.STANDARD,
        "cot": Method.CHAIN_OF_THOUGHT,
        "reason": Method.REASON,
    }[args.bench_method]
    out_dir = Path(args.out) if args.out else None
    records_path = None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        records_path = out_dir / "records.jsonl"
    try:
        records = bench.run_task(
            task, rows, policy, client, method=method, out_path=records_path
        )
    except bench.DatasetFormatError as exc:
        raise UsageError(str(exc)) from exc
    report = bench.build_report(task, records, retries=args.retries)
    report_json = report.to_json()
    if out_dir:
        (out_dir / "metrics.json").write_text(
            json.dumps(report_json, indent=2) + "\n", encoding="utf-8"
        )
        meta = {
            "model": policy.model_name,
            "retries": policy.max_retries,
            "temperature": policy.temperature,
            "method": args.bench_method,
            "repair_retries": True,  # retries re-prompt with a repair message, not a resend
            "token_accounting": "endpoint-reported usage only",
            "template_hashes": _template_hashes(),
            "task": args.task,
        }
        (out_dir / "run_meta.json").write_text(
            json.dumps(meta, indent=2) + "\n", encoding="utf-8"
        )
    print(json.dumps(report_json, indent=2))
    return EXIT_OK


TOLERANCE = 0.002


def cmd_report(args) -> int:
    try:
        rows = bench.reproduce_table2(args.fixture)
    except bench.FixtureMissing as exc:
        raise UsageError(str(exc)) from exc
    header = (
        f"{'framework':<12} {'task':<11} {'gms0':>7} {'pub':>7} {'gms2':>7} "
        f"{'pub':>7} {'cons':>7} {'pub':>7} {'dev':>7}"
    )
    print(header)
    print("-" * len(header))
    all_ok = True
    worst = 0.0
    for row in rows:
        ok = row.within(TOLERANCE)
        all_ok = all_ok and ok
        worst = max(worst, row.gms_deviation)
        cons = "NaN" if math.isnan(row.consistency_computed) else f"{row.consistency_computed:.3f}"
        pub_cons = (
            "NaN" if math.isnan(row.consistency_published) else f"{row.consistency_published:.3f}"
        )
        print(
            f"{row.framework:<12} {row.task:<11} "
            f"{row.gms_computed[0]:>7.3f} {row.gms_published[0]:>7.3f} "
            f"{row.gms_computed[1]:>7.3f} {row.gms_published[1]:>7.3f} "
            f"{cons:>7} {pub_cons:>7} {row.gms_deviation:>7.4f}"
            + ("" if ok else "  <-- out of tolerance")
        )
    print(
        f"max GMS deviation {worst:.4f}; tolerance {TOLERANCE}: "
        + ("OK" if all_ok else "FAIL")
    )
    return EXIT_OK if all_ok else EXIT_METHOD_FAILURE


# ---------------------------------------------------------------------------
# Argument parsing


def _add_client_flags(sub):
    sub.add_argument("--model", default=None, help="model name")
    sub.add_argument("--base-url", default=None, help="chat-completions base URL")
    sub.add_argument("--api-key", default=None, help="API key (prefer the environment)")
    sub.add_argument("--config", default=None, help="JSON config file")
    sub.add_argument("--record", default=None, metavar="PATH", help="record a transcript")
    sub.add_argument("--replay", default=None, metavar="PATH", help="replay a transcript")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="typedprompt",
        description="Typed-schema prompt synthesis and structured-output parsing",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("render", help="render the final prompt for a call file")
    p.add_argument("schema", help="schema JSON file")
    p.add_argument("call", help="call JSON file")
    p.add_argument("--method", choices=sorted(_METHOD_NAMES), default=None)
    p.set_defaults(fn=cmd_render)

    p = subs.add_parser("parse", help="extract, parse, and validate a reply offline")
    p.add_argument("schema", help="schema JSON file")
    p.add_argument("--type", required=True, help="expected output type text")
    p.add_argument("--input", default=None, help="reply file (default: stdin)")
    p.set_defaults(fn=cmd_parse)

    p = subs.add_parser("call", help="run one call through the repair loop")
    p.add_argument("schema", help="schema JSON file")
    p.add_argument("call", help="call JSON file")
    p.add_argument("--method", choices=sorted(_METHOD_NAMES), default=None)
    p.add_argument("--retries", type=int, default=0)
    p.add_argument("--temperature", type=float, default=0.0)
    _add_client_flags(p)
    p.set_defaults(fn=cmd_call)

    p = subs.add_parser("bench", help="run a benchmark task over a JSONL dataset")
    p.add_argument("task", choices=[k.value for k in bench.TaskKind])
    p.add_argument("dataset", nargs="?", default=None, help="JSONL dataset path")
    p.add_argument("--retries", type=int, choices=[0, 2], default=0)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--count", type=int, default=10, help="sample count for synthetic runs")
    p.add_argument(
        "--bench-method",
        choices=["standard", "cot", "reason"],
        default="standard",
        dest="bench_method",
    )
    p.add_argument("--out", default=None, help="output directory for records and reports")
    _add_client_flags(p)
    p.set_defaults(fn=cmd_bench)

    p = subs.add_parser("report", help="reproduce the published score table offline")
    p.add_argument("--fixture", default=None, help="fixture JSON (default: shipped)")
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AuthMissing,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReplayMismatch as exc:
        print(f"error: replay mismatch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
