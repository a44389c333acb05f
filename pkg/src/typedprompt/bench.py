"""Benchmark harness and metrics engine.

Three structured-output tasks (multilabel classification, named entity
recognition, synthetic person generation) run over JSONL datasets through the
runtime, and the metric pipeline (reliability, micro-P/R/F1, exact accuracy,
variety, NTU, GMS, consistency) is reproduced offline from a shipped fixture
of published cross-framework results.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from . import schema
from .notation import EnumRef, ListV, Object, Str
from .render import Binding, Method, PromptSpec, default_goal, make_prompt_spec
from .runtime import CallPolicy, ExhaustedError, invoke
from .validate import TypedValue

# ---------------------------------------------------------------------------
# Task fixtures

MULTILABEL_CLASSES = (
    "lists_createoradd", "calendar_query", "email_sendemail", "news_query",
    "play_music", "play_radio", "qa_maths", "email_query", "weather_query",
    "calendar_set", "iot_hue_lightdim", "takeaway_query", "social_post",
    "email_querycontact", "qa_factoid", "calendar_remove", "cooking_recipe",
    "lists_query", "general_quirky", "alarm_query", "takeaway_order",
    "iot_hue_lightup", "lists_remove", "qa_currency", "play_game",
    "play_audiobook", "qa_definition", "music_query", "datetime_query",
    "transport_query", "iot_hue_lightoff", "iot_hue_lightchange",
    "iot_hue_lighton", "alarm_set", "music_likeness", "recommendation_movies",
    "transport_ticket", "recommendation_locations", "audio_volume_mute",
    "iot_wemo_on", "play_podcasts", "datetime_convert", "audio_volume_other",
    "recommendation_events", "alarm_remove", "iot_coffee", "music_dislikeness",
    "general_joke", "social_query",
)

NER_ENTITY_FIELDS = (
    "passport_number", "bank_routing_number", "account_pin", "swift_bic_code",
    "password", "credit_card_number", "email", "phone_number", "person_name",
    "iban", "ipv6", "api_key", "street_address", "company", "local_latlng",
    "time", "employee_id", "customer_id", "date_of_birth", "ipv4", "bban",
)

SYNTHETIC_GOAL = (
    "Generate a random person's information. The name must be chosen at "
    "random. Make it something you wouldn't normally choose."
)


class TaskKind(Enum):
    MULTILABEL = "multilabel"
    NER = "ner"
    SYNTHETIC = "synthetic"


class DatasetFormatError(Exception):
    def __init__(self, row_index: int, detail: str):
        super().__init__(f"dataset row {row_index}: {detail}")
        self.row_index = row_index


class EmptyRun(Exception):
    pass


class FixtureMissing(Exception):
    pass


class DegenerateRange(UserWarning):
    pass


def label_enum() -> schema.EnumDef:
    return schema.EnumDef("Label", MULTILABEL_CLASSES, meaning="Multilabel Classes")


def ner_record() -> schema.RecordDef:
    fields = tuple(
        (name, schema.Optional(schema.List(schema.STR))) for name in NER_ENTITY_FIELDS
    )
    return schema.RecordDef("NER", fields)


def user_records() -> tuple[schema.RecordDef, schema.RecordDef]:
    address = schema.RecordDef(
        "UserAddress",
        (
            ("street", schema.STR),
            ("city", schema.STR),
            ("six_digit_postal_code", schema.INT),
            ("country", schema.STR),
        ),
    )
    user = schema.RecordDef(
        "User",
        (
            ("name", schema.STR),
            ("age", schema.INT),
            ("address", schema.Named("UserAddress")),
        ),
    )
    return address, user


@dataclass(frozen=True)
class TaskSpec:
    kind: TaskKind
    registry: schema.TypeRegistry
    output_type: schema.TypeExpr
    goal: str
    context: str | None = None
    input_meaning: str = "Text"
    input_name: str = "text"

    def prompt_spec(self, row: dict, method: Method = Method.STANDARD) -> PromptSpec:
        inputs = []
        if self.kind is not TaskKind.SYNTHETIC:
            inputs = [
                Binding(self.input_meaning, self.input_name, schema.STR, Str(row["text"]))
            ]
        return make_prompt_spec(
            self.registry,
            goal=self.goal,
            output_type=self.output_type,
            context=self.context,
            inputs=inputs,
            method=method,
        )

    def validate_row(self, row: dict, index: int) -> None:
        if not isinstance(row, dict) or "id" not in row:
            raise DatasetFormatError(index, "row must be an object with an 'id'")
        if self.kind is TaskKind.MULTILABEL:
            if not isinstance(row.get("text"), str):
                raise DatasetFormatError(index, "'text' must be a string")
            labels = row.get("labels")
            if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
                raise DatasetFormatError(index, "'labels' must be a list of strings")
            unknown = sorted(set(labels) - set(MULTILABEL_CLASSES))
            if unknown:
                raise DatasetFormatError(index, f"unknown labels: {', '.join(unknown)}")
        elif self.kind is TaskKind.NER:
            if not isinstance(row.get("text"), str):
                raise DatasetFormatError(index, "'text' must be a string")
            entities = row.get("entities")
            if not isinstance(entities, dict):
                raise DatasetFormatError(index, "'entities' must be an object")
            for key, phrases in entities.items():
                if key not in NER_ENTITY_FIELDS:
                    raise DatasetFormatError(index, f"unknown entity field {key!r}")
                if not isinstance(phrases, list) or not all(
                    isinstance(p, str) for p in phrases
                ):
                    raise DatasetFormatError(index, f"entity field {key!r} must list strings")

    def gold_set(self, row: dict) -> frozenset | None:
        if self.kind is TaskKind.MULTILABEL:
            return frozenset(row["labels"])
        if self.kind is TaskKind.NER:
            return frozenset(
                (field, phrase)
                for field, phrases in row["entities"].items()
                for phrase in phrases
            )
        return None

    def predicted_set(self, typed: TypedValue) -> frozenset | None:
        value = typed.value
        if self.kind is TaskKind.MULTILABEL:
            assert isinstance(value, ListV)
            return frozenset(item.member for item in value.items if isinstance(item, EnumRef))
        if self.kind is TaskKind.NER:
            assert isinstance(value, Object)
            pairs = []
            for name, field_value in value.args:
                if isinstance(field_value, ListV):
                    pairs += [
                        (name, item.s) for item in field_value.items if isinstance(item, Str)
                    ]
            return frozenset(pairs)
        return None

    def generated_name(self, typed: TypedValue) -> str | None:
        if self.kind is not TaskKind.SYNTHETIC:
            return None
        assert isinstance(typed.value, Object)
        for name, field_value in typed.value.args:
            if name == "name" and isinstance(field_value, Str):
                return field_value.s
        return None


def multilabel_task() -> TaskSpec:
    registry = schema.TypeRegistry()
    schema.register(registry, label_enum())
    return TaskSpec(
        kind=TaskKind.MULTILABEL,
        registry=registry,
        output_type=schema.List(schema.Named("Label")),
        goal=default_goal("classify"),
        context="A query can belong to several labels at once; return every applicable one.",
    )


def ner_task() -> TaskSpec:
    registry = schema.TypeRegistry()
    schema.register(registry, ner_record())
    return TaskSpec(
        kind=TaskKind.NER,
        registry=registry,
        output_type=schema.Named("NER"),
        goal=default_goal("extract_entities"),
        context="Fill only the entity fields that actually occur in the text; leave the rest unset.",
    )


def synthetic_task() -> TaskSpec:
    registry = schema.TypeRegistry()
    address, user = user_records()
    schema.register(registry, address)
    schema.register(registry, user)
    return TaskSpec(
        kind=TaskKind.SYNTHETIC,
        registry=registry,
        output_type=schema.Named("User"),
        goal=SYNTHETIC_GOAL,
    )


TASK_BUILDERS = {
    TaskKind.MULTILABEL: multilabel_task,
    TaskKind.NER: ner_task,
    TaskKind.SYNTHETIC: synthetic_task,
}


# ---------------------------------------------------------------------------
# Benchmark records


@dataclass(frozen=True)
class BenchRecord:
    sample_id: object
    success: bool
    predicted: TypedValue | None
    gold: frozenset | None
    attempts_used: int
    prompt_tokens: int
    completion_tokens: int

    def __post_init__(self):
        if self.success and self.predicted is None:
            raise ValueError("successful record must carry a predicted value")

    def to_json(self) -> dict:
        from .notation import render_value

        gold = None
        if self.gold is not None:
            gold = sorted(list(g) if isinstance(g, tuple) else g for g in self.gold)
        return {
            "sample_id": self.sample_id,
            "success": self.success,
            "predicted": render_value(self.predicted.value) if self.predicted else None,
            "gold": gold,
            "attempts_used": self.attempts_used,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }


def run_task(
    task: TaskSpec,
    dataset: list[dict],
    policy: CallPolicy,
    client,
    method: Method = Method.STANDARD,
    out_path: str | Path | None = None,
) -> list[BenchRecord]:
    """One BenchRecord per dataset row, persisted incrementally when out_path
    is given, then sorted by sample_id so aggregation is order-independent."""
    for i, row in enumerate(dataset):
        task.validate_row(row, i)
    records: list[BenchRecord] = []
    sink = open(out_path, "w", encoding="utf-8") if out_path else None
    try:
        for row in dataset:
            spec = task.prompt_spec(row, method=method)
            try:
                outcome = invoke(spec, policy, client)
                predicted: TypedValue | None = outcome.result
            except ExhaustedError as exc:
                outcome = exc.outcome
                predicted = None
            record = BenchRecord(
                sample_id=row["id"],
                success=predicted is not None,
                predicted=predicted,
                gold=task.gold_set(row),
                attempts_used=outcome.attempts_used,
                prompt_tokens=outcome.total_prompt_tokens,
                completion_tokens=outcome.total_completion_tokens,
            )
            records.append(record)
            if sink:
                sink.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
                sink.flush()
    finally:
        if sink:
            sink.close()
    records.sort(key=lambda r: str(r.sample_id))
    return records


# ---------------------------------------------------------------------------
# Metrics


def micro_prf(
    predicted_sets: list, gold_sets: list
) -> tuple[float, float, float]:
    """Micro-averaged precision/recall/F1 with TP/FP/FN pooled across samples.
    Failed samples must be passed as empty prediction sets."""
    if len(predicted_sets) != len(gold_sets):
        raise ValueError("prediction and gold lists must align")
    tp = fp = fn = 0
    for pred, gold in zip(predicted_sets, gold_sets):
        pred = frozenset(pred)
        gold = frozenset(gold)
        tp += len(pred & gold)
        fp += len(pred - gold)
        fn += len(gold - pred)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall) if precision + recall else 0.0
    )
    return precision, recall, f1


def exact_accuracy(predicted_sets: list, gold_sets: list) -> float:
    """Fraction of samples whose prediction equals gold exactly; None counts
    as a mismatch (failed sample)."""
    if len(predicted_sets) != len(gold_sets):
        raise ValueError("prediction and gold lists must align")
    if not gold_sets:
        return 0.0
    hits = sum(
        1
        for pred, gold in zip(predicted_sets, gold_sets)
        if pred is not None and frozenset(pred) == frozenset(gold)
    )
    return hits / len(gold_sets)


def variety(names: list[str]) -> float:
    """Distinct names over total generated names, case-sensitive."""
    if not names:
        raise EmptyRun("no generated names")
    return len(set(names)) / len(names)


def ntu(token_usage: float, min_usage: float, max_usage: float) -> float:
    """Normalized token usage: 1 at the per-task minimum, 0 at the maximum."""
    if max_usage == min_usage:
        warnings.warn("degenerate token-usage range; NTU fixed at 1", DegenerateRange)
        return 1.0
    if not min_usage <= token_usage <= max_usage:
        raise ValueError("token usage outside [min, max]")
    return 1.0 - (token_usage - min_usage) / (max_usage - min_usage)


def gms(reliability: float, performance_factors: list[float], ntu_value: float) -> float:
    """Cube root of reliability x product(performance factors) x NTU."""
    for x in [reliability, *performance_factors, ntu_value]:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"GMS inputs must be fractions in [0, 1], got {x}")
    product = reliability * ntu_value
    for factor in performance_factors:
        product *= factor
    return product ** (1.0 / 3.0)


def consistency(gms0: float, gms2: float) -> float:
    """1 minus the relative GMS change between retry settings; NaN when the
    0-retry GMS is zero."""
    if gms0 < 0 or gms2 < 0:
        raise ValueError("GMS values must be non-negative")
    if gms0 == 0:
        return float("nan")
    return 1.0 - abs(gms2 - gms0) / gms0


# Per-task performance factors entering the GMS product. The NER factor is the
# micro-F1 squared, not precision x recall: only the squared form reproduces
# every published score cell (see reproduce_table2 and its fixture).
PERFORMANCE_FACTOR_KEYS: dict[str, tuple[str, ...]] = {
    "multilabel": ("exact_accuracy", "f1"),
    "ner": ("f1", "f1"),
    "synthetic": ("variety",),
}


@dataclass(frozen=True)
class MetricsReport:
    task: str
    retries: int
    n_samples: int
    reliability: float
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    exact_accuracy: float | None = None
    variety: float | None = None
    mean_token_usage: float = 0.0
    ntu: float | None = None
    gms: float | None = None

    def __post_init__(self):
        for name in ("reliability", "precision", "recall", "f1", "exact_accuracy", "variety", "ntu"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a fraction in [0, 1]")

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "retries": self.retries,
            "n_samples": self.n_samples,
            "reliability": self.reliability,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "exact_accuracy": self.exact_accuracy,
            "variety": self.variety,
            "mean_token_usage": self.mean_token_usage,
            "ntu": self.ntu,
            "gms": self.gms,
        }


def build_report(
    task: TaskSpec,
    records: list[BenchRecord],
    retries: int,
    token_range: tuple[float, float] | None = None,
) -> MetricsReport:
    """Aggregate records into a MetricsReport. NTU and GMS need a cross-system
    token range for the same task, so they are filled only when one is given."""
    if not records:
        raise EmptyRun("no benchmark records")
    n = len(records)
    reliability = sum(1 for r in records if r.success) / n
    mean_tokens = sum(r.prompt_tokens + r.completion_tokens for r in records) / n
    precision = recall = f1 = acc = var = None
    if task.kind in (TaskKind.MULTILABEL, TaskKind.NER):
        preds = [
            task.predicted_set(r.predicted) if r.predicted else frozenset()
            for r in records
        ]
        golds = [r.gold for r in records]
        precision, recall, f1 = micro_prf(preds, golds)
        acc = exact_accuracy(
            [task.predicted_set(r.predicted) if r.predicted else None for r in records],
            golds,
        )
    else:
        names = [
            task.generated_name(r.predicted)
            for r in records
            if r.predicted is not None and task.generated_name(r.predicted) is not None
        ]
        var = variety(names) if names else 0.0
    ntu_value = gms_value = None
    if token_range is not None:
        ntu_value = ntu(mean_tokens, token_range[0], token_range[1])
        by_name = {"exact_accuracy": acc, "f1": f1, "variety": var}
        factors = [by_name[k] for k in PERFORMANCE_FACTOR_KEYS[task.kind.value]]
        gms_value = gms(reliability, factors, ntu_value)
    return MetricsReport(
        task=task.kind.value,
        retries=retries,
        n_samples=n,
        reliability=reliability,
        precision=precision,
        recall=recall,
        f1=f1,
        exact_accuracy=acc,
        variety=var,
        mean_token_usage=mean_tokens,
        ntu=ntu_value,
        gms=gms_value,
    )


# ---------------------------------------------------------------------------
# Published-table reproduction


def load_published_fixture(path: str | Path | None = None) -> dict:
    """The shipped fixture of published per-framework metric inputs."""
    if path is None:
        text = (
            resources.files(__package__)
            .joinpath("data", "published_eval.json")
            .read_text(encoding="utf-8")
        )
        return json.loads(text)
    p = Path(path)
    if not p.exists():
        raise FixtureMissing(f"fixture not found: {p}")
    return json.loads(p.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ReproducedRow:
    framework: str
    task: str
    gms_computed: tuple[float, float]  # 0 and 2 retries
    gms_published: tuple[float, float]
    consistency_computed: float  # NaN when undefined
    consistency_published: float

    @property
    def gms_deviation(self) -> float:
        return max(
            abs(self.gms_computed[0] - self.gms_published[0]),
            abs(self.gms_computed[1] - self.gms_published[1]),
        )

    @property
    def consistency_matches(self) -> bool:
        a, b = self.consistency_computed, self.consistency_published
        if math.isnan(a) or math.isnan(b):
            return math.isnan(a) and math.isnan(b)
        return abs(a - b) <= 0.002

    def within(self, tolerance: float) -> bool:
        return self.gms_deviation <= tolerance and self.consistency_matches


def reproduce_table2(fixture: dict | str | Path | None = None) -> list[ReproducedRow]:
    """Recompute every published GMS/consistency cell from the fixture's raw
    metric inputs; the published values ride along for deviation checks."""
    if fixture is None or isinstance(fixture, (str, Path)):
        fixture = load_published_fixture(fixture)
    rows: list[ReproducedRow] = []
    for task_name, task_data in fixture["tasks"].items():
        frameworks = task_data["frameworks"]
        usages = [row["token_usage"] for row in frameworks.values()]
        lo, hi = min(usages), max(usages)
        factor_keys = PERFORMANCE_FACTOR_KEYS[task_name]
        for name, row in frameworks.items():
            n = ntu(row["token_usage"], lo, hi)
            computed = []
            for setting in (0, 1):
                factors = [row[k][setting] for k in factor_keys]
                computed.append(gms(row["reliability"][setting], factors, n))
            published_consistency = row["published_consistency"]
            rows.append(
                ReproducedRow(
                    framework=name,
                    task=task_name,
                    gms_computed=(computed[0], computed[1]),
                    gms_published=tuple(row["published_gms"]),
                    consistency_computed=consistency(computed[0], computed[1]),
                    consistency_published=(
                        float("nan") if published_consistency is None else published_consistency
                    ),
                )
            )
    return rows
