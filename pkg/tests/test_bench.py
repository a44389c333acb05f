import json
import math
import random
from pathlib import Path

import pytest

from typedprompt import (
    CallPolicy,
    DatasetFormatError,
    DegenerateRange,
    EmptyRun,
    FixtureMissing,
    ScriptedClient,
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
from typedprompt.bench import MULTILABEL_CLASSES, NER_ENTITY_FIELDS, TaskKind

FIXTURES = Path(__file__).parent / "fixtures"


# ---------------------------------------------------------------------------
# Task definitions


def test_multilabel_task_shape():
    task = multilabel_task()
    assert task.kind is TaskKind.MULTILABEL
    assert len(MULTILABEL_CLASSES) == 49
    spec = task.prompt_spec({"id": 1, "text": "wake me at 7", "labels": ["alarm_set"]})
    from typedprompt import render_prompt

    system, user = render_prompt(spec)
    assert "Label (Enum) -> Label.lists_createoradd |" in system.text
    assert "## Output Type\nlist[Label]" in system.text
    assert 'Text (text) (str) = "wake me at 7"' in user.text


def test_ner_task_shape():
    task = ner_task()
    assert len(NER_ENTITY_FIELDS) == 21
    spec = task.prompt_spec({"id": 1, "text": "call 555", "entities": {}})
    from typedprompt import render_prompt

    system, _ = render_prompt(spec)
    assert "NER (Class) -> NER(passport_number: list[str] | None," in system.text


def test_synthetic_task_has_no_inputs():
    task = synthetic_task()
    spec = task.prompt_spec({"id": 7})
    from typedprompt import render_prompt

    system, user = render_prompt(spec)
    assert "User (Class) ->" in system.text
    assert "UserAddress (Class) ->" in system.text
    assert "No inputs are provided." in user.text


def test_row_validation():
    task = multilabel_task()
    with pytest.raises(DatasetFormatError):
        task.validate_row({"text": "x", "labels": []}, 0)  # no id
    with pytest.raises(DatasetFormatError) as exc:
        task.validate_row({"id": 1, "text": "x", "labels": ["not_a_label"]}, 3)
    assert exc.value.row_index == 3
    task.validate_row({"id": 1, "text": "x", "labels": ["alarm_set"]}, 0)

    ner = ner_task()
    with pytest.raises(DatasetFormatError):
        ner.validate_row({"id": 1, "text": "x", "entities": {"bogus_field": []}}, 0)
    ner.validate_row({"id": 1, "text": "x", "entities": {"email": ["a@b.c"]}}, 0)


# ---------------------------------------------------------------------------
# Metric primitives against brute force


def brute_prf(pred_sets, gold_sets):
    universe = set()
    for s in list(pred_sets) + list(gold_sets):
        universe |= set(s)
    tp = fp = fn = 0
    for pred, gold in zip(pred_sets, gold_sets):
        for item in universe:
            if item in pred and item in gold:
                tp += 1
            elif item in pred:
                fp += 1
            elif item in gold:
                fn += 1
    p = tp / (tp + fp) if (tp + fp) else 0.0
    r = tp / (tp + fn) if (tp + fn) else 0.0
    f = 2 * p * r / (p + r) if (p + r) else 0.0
    return p, r, f


def test_micro_prf_matches_brute_force_on_500_cases():
    rng = random.Random(99)
    universe = [f"item{i}" for i in range(12)]
    for _ in range(500):
        n = rng.randrange(1, 8)
        preds = [frozenset(rng.sample(universe, rng.randrange(0, 6))) for _ in range(n)]
        golds = [frozenset(rng.sample(universe, rng.randrange(0, 6))) for _ in range(n)]
        assert micro_prf(preds, golds) == pytest.approx(brute_prf(preds, golds), abs=1e-12)


def test_micro_prf_zero_denominators():
    assert micro_prf([frozenset()], [frozenset()]) == (0.0, 0.0, 0.0)
    assert micro_prf([frozenset({"a"})], [frozenset()]) == (0.0, 0.0, 0.0)


def test_micro_prf_requires_alignment():
    with pytest.raises(ValueError):
        micro_prf([frozenset()], [])


def test_exact_accuracy():
    golds = [frozenset({"a"}), frozenset({"b"}), frozenset({"c"})]
    preds = [frozenset({"a"}), frozenset({"x"}), None]
    assert exact_accuracy(preds, golds) == pytest.approx(1 / 3)
    assert exact_accuracy([], []) == 0.0


def test_variety():
    assert variety(["Ziggy", "Plume", "Ziggy"]) == pytest.approx(2 / 3)
    assert variety(["A"]) == 1.0
    with pytest.raises(EmptyRun):
        variety([])


def test_ntu_endpoints_and_range():
    assert ntu(100, 100, 500) == 1.0
    assert ntu(500, 100, 500) == 0.0
    assert ntu(300, 100, 500) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        ntu(99, 100, 500)
    with pytest.warns(DegenerateRange):
        assert ntu(5, 5, 5) == 1.0


def test_gms_is_cube_root_of_product():
    assert gms(1.0, [1.0, 1.0], 1.0) == 1.0
    assert gms(0.5, [0.5], 0.5) == pytest.approx(0.125 ** (1 / 3))
    assert gms(0.0, [1.0], 1.0) == 0.0
    with pytest.raises(ValueError):
        gms(1.5, [1.0], 1.0)


def test_consistency():
    assert consistency(0.8, 0.8) == 1.0
    assert consistency(0.8, 0.4) == pytest.approx(0.5)
    assert consistency(0.5, 0.75) == pytest.approx(0.5)
    assert math.isnan(consistency(0.0, 0.4))


# ---------------------------------------------------------------------------
# run_task and build_report


def replies_for(labels_per_sample):
    out = []
    for labels in labels_per_sample:
        if labels is None:
            out.append("no block here")
        else:
            body = ", ".join(f"Label.{x}" for x in labels)
            out.append(f"```output\n[{body}]\n```")
    return out


def small_dataset():
    return [
        {"id": "a", "text": "t1", "labels": ["alarm_set", "calendar_set"]},
        {"id": "b", "text": "t2", "labels": ["play_music"]},
        {"id": "c", "text": "t3", "labels": ["news_query"]},
    ]


def test_run_task_records_and_metrics(tmp_path):
    task = multilabel_task()
    client = ScriptedClient(
        replies_for([["alarm_set", "calendar_set"], ["play_music", "news_query"], None])
    )
    out = tmp_path / "records.jsonl"
    records = run_task(task, small_dataset(), CallPolicy(max_retries=0), client, out_path=out)
    assert [r.sample_id for r in records] == ["a", "b", "c"]
    assert [r.success for r in records] == [True, True, False]

    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(lines) == 3
    assert lines[0]["predicted"].startswith("[Label.")

    report = build_report(task, records, retries=0)
    assert report.reliability == pytest.approx(2 / 3)
    assert report.exact_accuracy == pytest.approx(1 / 3)
    # pooled: tp=3 (a both, b play_music), fp=1 (b news_query), fn=1 (c news_query)
    assert report.precision == pytest.approx(3 / 4)
    assert report.recall == pytest.approx(3 / 4)
    assert report.f1 == pytest.approx(3 / 4)
    assert report.n_samples == 3
    assert report.ntu is None and report.gms is None


def test_run_task_rejects_bad_rows():
    task = multilabel_task()
    with pytest.raises(DatasetFormatError):
        run_task(task, [{"id": 1}], CallPolicy(max_retries=0), ScriptedClient([]))


def test_build_report_token_range_fills_gms():
    task = multilabel_task()
    client = ScriptedClient(replies_for([["alarm_set", "calendar_set"]]))
    records = run_task(
        task,
        [small_dataset()[0]],
        CallPolicy(max_retries=0),
        client,
    )
    mean_tokens = records[0].prompt_tokens + records[0].completion_tokens
    report = build_report(task, records, retries=0, token_range=(10, mean_tokens + 10))
    assert report.mean_token_usage == mean_tokens
    assert report.ntu is not None
    assert report.gms == pytest.approx(
        (report.reliability * report.exact_accuracy * report.f1 * report.ntu) ** (1 / 3)
    )


def test_build_report_empty_run():
    with pytest.raises(EmptyRun):
        build_report(multilabel_task(), [], retries=0)


def test_synthetic_report_uses_variety(tmp_path):
    task = synthetic_task()
    reply = (
        '```output\nUser(name="{}", age=30, address=UserAddress(street="1 Way", '
        'city="Ome", six_digit_postal_code=123456, country="Wo"))\n```'
    )
    client = ScriptedClient([reply.format("Zef"), reply.format("Zef"), reply.format("Oba")])
    rows = [{"id": i} for i in range(3)]
    records = run_task(task, rows, CallPolicy(max_retries=0), client)
    report = build_report(task, records, retries=0)
    assert report.variety == pytest.approx(2 / 3)
    assert report.precision is None


# ---------------------------------------------------------------------------
# Published-table reproduction


def test_fixture_loads_and_has_all_cells():
    fixture = load_published_fixture()
    assert set(fixture["tasks"]) == {"multilabel", "ner", "synthetic"}
    for task_block in fixture["tasks"].values():
        assert len(task_block["frameworks"]) == 7


def test_fixture_missing_path():
    with pytest.raises(FixtureMissing):
        load_published_fixture("/nonexistent/fixture.json")


def test_reproduce_table_within_tolerance():
    rows = reproduce_table2()
    assert len(rows) == 21
    for row in rows:
        assert row.within(0.002), (row.framework, row.task, row.gms_deviation)


def test_reproduce_table_consistency_cells():
    rows = {(r.framework, r.task): r for r in reproduce_table2()}
    # a zero-retry GMS of zero leaves consistency undefined
    for key in (("Marvin", "multilabel"), ("ModelSmith", "ner"), ("ModelSmith", "synthetic")):
        row = rows[key]
        assert math.isnan(row.consistency_computed)
        assert math.isnan(row.consistency_published)
        assert row.consistency_matches
    fructose = rows[("Fructose", "multilabel")]
    assert round(fructose.consistency_computed, 3) == 1.000
    assert fructose.consistency_published == 1.000


def test_reproduce_table_rejects_tampered_fixture():
    fixture = load_published_fixture()
    tampered = json.loads(json.dumps(fixture))
    tampered["tasks"]["ner"]["frameworks"]["LlamaIndex"]["published_gms"][0] += 0.05
    rows = reproduce_table2(tampered)
    bad = [r for r in rows if not r.within(0.002)]
    assert len(bad) == 1
    assert (bad[0].framework, bad[0].task) == ("LlamaIndex", "ner")
