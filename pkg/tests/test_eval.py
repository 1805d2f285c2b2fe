"""Metric arithmetic, judge parsing, dataset taxonomy, aggregation, suite runs."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DOC_GRANT, DOC_LINCOLN, scripted_responder
from sagekb.errors import (
    DatasetError,
    EvalSuiteError,
    InvalidRequestError,
    JudgeParseError,
    ScoreOutOfRangeError,
    ZeroConceptsError,
    ZeroStatementsError,
)
from sagekb.evaluation import (
    AggregateCell,
    EvalQuery,
    EvalRecord,
    Statement,
    aggregate,
    build_taxonomy_dataset,
    cell_counts,
    concept_ratio,
    decompose_statements,
    extract_concepts,
    load_dataset,
    parse_judge_score,
    parse_yes_no,
    run_suite,
    save_dataset,
    score_correctness,
    score_faithfulness,
    score_relevance,
    validate_counts,
    verify_statement,
    write_aggregates_csv,
    write_bundle_json,
    write_records_csv,
)
from sagekb.evaluation.export import plot_metric_bars
from sagekb.ingest import ingest_text
from sagekb.providers import MockChat, MockEmbedder, ProviderSet


def judge_with(script: str) -> ProviderSet:
    return ProviderSet(chat=MockChat(default=script))


def standard_judge(correctness: str = "4") -> ProviderSet:
    def responder(prompt: str) -> str | None:
        if "grading a generated answer" in prompt:
            return correctness
        if "Split the answer below" in prompt:
            return "Claim one.\nClaim two.\nClaim three.\nClaim four."
        if "Can the statement be inferred" in prompt:
            return "NO" if "Claim four" in prompt else "YES"
        if "List the distinct concepts" in prompt:
            return "c1\nc2\nc3\nc4\nc5"
        if "Is the concept relevant" in prompt:
            return "NO" if "c5" in prompt else "YES"
        return None

    return ProviderSet(chat=MockChat(responder=responder))


# -- parsing -----------------------------------------------------------------


def test_parse_judge_score_values():
    assert parse_judge_score("5") == 5.0
    assert parse_judge_score("4.5 because it is mostly right") == 4.5
    assert parse_judge_score("3.") == 3.0


@pytest.mark.parametrize("bad", ["", "Score: 4", "good", "N/A"])
def test_parse_judge_score_rejects_non_numeric(bad):
    with pytest.raises(JudgeParseError):
        parse_judge_score(bad)


def test_parse_yes_no():
    assert parse_yes_no("YES") is True
    assert parse_yes_no("no, it cannot") is False
    with pytest.raises(JudgeParseError):
        parse_yes_no("maybe")


# -- correctness ----------------------------------------------------------------


def test_correctness_parses_scripted_five():
    assert score_correctness(judge_with("5"), "q", "gen", "ref") == 5.0


def test_correctness_zero_is_out_of_range():
    with pytest.raises(ScoreOutOfRangeError):
        score_correctness(judge_with("0"), "q", "gen", "ref")


def test_correctness_over_five_is_out_of_range():
    with pytest.raises(ScoreOutOfRangeError):
        score_correctness(judge_with("5.1"), "q", "gen", "ref")


def test_correctness_fractional_allowed():
    assert score_correctness(judge_with("4.5"), "q", "gen", "ref") == 4.5


def test_correctness_requires_reference():
    with pytest.raises(InvalidRequestError):
        score_correctness(judge_with("4"), "q", "gen", "")


# -- statements and faithfulness -----------------------------------------------------


def test_decompose_statements_four_lines():
    statements = decompose_statements(judge_with("s1\ns2\ns3\ns4"), "an answer")
    assert [s.text for s in statements] == ["s1", "s2", "s3", "s4"]


def test_decompose_empty_answer_rejected():
    with pytest.raises(InvalidRequestError):
        decompose_statements(judge_with("s1"), "  ")


def test_decompose_blank_output_is_zero_statements():
    with pytest.raises(ZeroStatementsError):
        decompose_statements(judge_with("\n\n  \n"), "answer")


def test_verify_statement_verdicts():
    statement = Statement("the sky is blue")
    assert verify_statement(judge_with("YES"), statement, "context text") is True
    assert statement.verified is True
    assert verify_statement(judge_with("NO"), Statement("x"), "context") is False
    with pytest.raises(JudgeParseError):
        verify_statement(judge_with("maybe"), Statement("x"), "context")


def test_faithfulness_three_of_four():
    statements = [Statement(f"s{i}", verified=i < 3) for i in range(4)]
    assert score_faithfulness(statements) == 0.75


def test_faithfulness_extremes():
    assert score_faithfulness([Statement("s", verified=True)] * 3) == 1.0
    assert score_faithfulness([Statement("s", verified=False)] * 5) == 0.0


def test_faithfulness_unset_verdict_rejected():
    with pytest.raises(InvalidRequestError):
        score_faithfulness([Statement("s", verified=True), Statement("t")])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=50))
def test_faithfulness_ratio_identity(verdicts):
    statements = [Statement(f"s{i}", verified=v) for i, v in enumerate(verdicts)]
    expected = sum(verdicts) / len(verdicts)
    assert abs(score_faithfulness(statements) - expected) <= 1e-15


# -- relevance ------------------------------------------------------------------------


def test_relevance_four_of_five():
    assert score_relevance(standard_judge(), "the answer", "the query") == 0.8


def test_relevance_all_relevant():
    judge = ProviderSet(
        chat=MockChat(
            responder=lambda p: "c1\nc2" if "List the distinct concepts" in p else ("YES" if "Is the concept relevant" in p else None)
        )
    )
    assert score_relevance(judge, "answer", "query") == 1.0


def test_relevance_zero_concepts_rejected():
    judge = ProviderSet(chat=MockChat(default="\n"))
    with pytest.raises(ZeroConceptsError):
        extract_concepts(judge, "answer")
    with pytest.raises(ZeroConceptsError):
        score_relevance(judge, "answer", "query")


def test_concept_ratio_identity():
    assert concept_ratio([True, True, False, True]) == 0.75


def test_relevance_binary_mode():
    assert score_relevance(judge_with("1"), "answer", "query", binary=True) == 1.0
    assert score_relevance(judge_with("0"), "answer", "query", binary=True) == 0.0
    with pytest.raises(ScoreOutOfRangeError):
        score_relevance(judge_with("0.5"), "answer", "query", binary=True)


# -- dataset ---------------------------------------------------------------------------


def test_taxonomy_dataset_shape():
    queries, manifest = build_taxonomy_dataset()
    assert len(queries) == 2295
    counts = cell_counts(queries)
    assert all(counts[o][d] == 255 for o in counts for d in counts[o])
    validate_counts(queries, manifest)


def test_taxonomy_off_by_one_rejected():
    queries, manifest = build_taxonomy_dataset()
    del queries[0]
    with pytest.raises(DatasetError):
        validate_counts(queries, manifest)


def test_dataset_round_trip(tmp_path):
    queries, manifest = build_taxonomy_dataset(per_cell=2)
    path = tmp_path / "ds.jsonl"
    save_dataset(queries, path, manifest)
    loaded = load_dataset(path, path.with_suffix(".manifest.json"))
    assert [q.to_dict() for q in loaded] == [q.to_dict() for q in queries]


def test_dataset_missing_difficulty_rejected(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"text": "q", "occurrence": "low"}\n')
    with pytest.raises(DatasetError):
        load_dataset(path)


def test_dataset_bad_enum_rejected(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"text": "q", "occurrence": "low", "difficulty": "extreme"}\n')
    with pytest.raises(DatasetError):
        load_dataset(path)


def test_dataset_declared_count_mismatch(tmp_path):
    queries, manifest = build_taxonomy_dataset(per_cell=255)
    queries = [q for q in queries if not (q.occurrence == "low" and q.difficulty == "easy")] + [
        q for q in queries if q.occurrence == "low" and q.difficulty == "easy"
    ][:254]
    path = tmp_path / "short.jsonl"
    save_dataset(queries, path)
    with pytest.raises(DatasetError) as err:
        load_dataset(path, manifest)
    assert "254" in str(err.value)


# -- aggregation -----------------------------------------------------------------------


def _record(difficulty="easy", occurrence="low", mode="vector", **metrics) -> EvalRecord:
    return EvalRecord(
        query_text="q",
        difficulty=difficulty,
        occurrence=occurrence,
        index_mode=mode,
        answer="a",
        **metrics,
    )


def test_aggregate_hand_computed_mean_and_stddev():
    records = [_record(correctness=c, relevance=0.5, faithfulness=0.5) for c in (4.0, 4.0, 5.0)]
    cells = aggregate(records, group_by="all")
    cell = next(c for c in cells if c.metric == "correctness")
    assert abs(cell.mean - 13.0 / 3.0) <= 1e-12
    assert abs(cell.stddev - math.sqrt(2.0 / 9.0)) <= 1e-12
    assert cell.n == 3


def test_aggregate_single_record_stddev_zero():
    cells = aggregate([_record(correctness=4.0)], group_by="all")
    cell = next(c for c in cells if c.metric == "correctness")
    assert cell.stddev == 0.0
    assert cell.n == 1


def test_aggregate_permutation_invariant():
    import random

    records = [
        _record(
            difficulty=d,
            mode=m,
            correctness=1.0 + ((i * 7) % 40) / 10.0,
            relevance=((i * 3) % 10) / 10.0,
            faithfulness=((i * 5) % 10) / 10.0,
        )
        for i, (d, m) in enumerate(
            [(d, m) for d in ("easy", "medium", "hard") for m in ("vector", "graph", "custom")] * 9
        )
    ]
    baseline = aggregate(records, group_by="difficulty")
    rng = random.Random(7)
    for _ in range(20):
        shuffled = list(records)
        rng.shuffle(shuffled)
        assert aggregate(shuffled, group_by="difficulty") == baseline


def test_aggregate_excludes_error_records():
    records = [_record(correctness=4.0), _record(correctness=2.0)]
    records[1].error = "judge_parse: boom"
    cells = aggregate(records, group_by="all")
    cell = next(c for c in cells if c.metric == "correctness")
    assert cell.n == 1
    assert cell.mean == 4.0


def test_aggregate_group_by_difficulty_occurrence():
    records = [
        _record(difficulty=d, occurrence=o, correctness=3.0)
        for d in ("easy", "hard")
        for o in ("low", "high")
    ]
    cells = aggregate(records, group_by="difficulty_occurrence")
    keys = {(c.difficulty, c.occurrence) for c in cells}
    assert keys == {("easy", "low"), ("easy", "high"), ("hard", "low"), ("hard", "high")}


# -- suite -------------------------------------------------------------------------------


def _nine_query_dataset() -> list[EvalQuery]:
    queries = []
    for difficulty in ("easy", "medium", "hard"):
        for occurrence in ("low", "medium", "high"):
            queries.append(
                EvalQuery(
                    text=f"({difficulty}/{occurrence}) What year was Abraham Lincoln born?",
                    difficulty=difficulty,
                    occurrence=occurrence,
                    reference_answer="1809",
                )
            )
    return queries


@pytest.fixture
def populated_kb(registry, providers):
    store = registry.create_kb("eval-kb")
    ingest_text(store, providers, DOC_LINCOLN, "lincoln.txt")
    ingest_text(store, providers, DOC_GRANT, "grant.txt")
    return store


def test_run_suite_cardinality(populated_kb, providers):
    records = run_suite(populated_kb, providers, _nine_query_dataset(), ["vector", "graph", "custom"], judge=standard_judge())
    assert len(records) == 27
    assert all(not r.failed for r in records)
    assert all(r.correctness == 4.0 and r.relevance == 0.8 and r.faithfulness == 0.75 for r in records)
    assert all(r.statement_total == 4 and r.statement_verified == 3 for r in records)


def test_run_suite_single_mode(populated_kb, providers):
    records = run_suite(populated_kb, providers, _nine_query_dataset(), ["vector"], judge=standard_judge())
    assert len(records) == 9


def test_run_suite_marks_judge_failures(populated_kb, providers):
    base = standard_judge()

    def flaky(prompt: str) -> str | None:
        if "grading a generated answer" in prompt and "(hard/high)" in prompt:
            return "not-a-number"
        return base.chat.responder(prompt)

    judge = ProviderSet(chat=MockChat(responder=flaky))
    records = run_suite(populated_kb, providers, _nine_query_dataset(), ["vector"], judge=judge)
    failed = [r for r in records if r.failed]
    assert len(failed) == 1
    assert "judge_parse" in failed[0].error
    assert sum(1 for r in records if not r.failed) == 8


def test_run_suite_failure_threshold(populated_kb, providers):
    broken_judge = ProviderSet(chat=MockChat(default="not numeric"))
    with pytest.raises(EvalSuiteError):
        run_suite(populated_kb, providers, _nine_query_dataset(), ["vector"], judge=broken_judge, max_failure_rate=0.2)


def test_suite_outputs_bit_reproducible(populated_kb, providers, tmp_path):
    outputs = []
    for run in range(2):
        records = run_suite(populated_kb, providers, _nine_query_dataset(), ["vector", "graph", "custom"], judge=standard_judge())
        cells = aggregate(records, group_by="difficulty")
        rec_csv = write_records_csv(records, tmp_path / f"records{run}.csv")
        agg_csv = write_aggregates_csv(cells, tmp_path / f"aggregates{run}.csv")
        outputs.append((rec_csv.read_bytes(), agg_csv.read_bytes()))
    assert outputs[0] == outputs[1]


def test_export_bundle_and_plots(populated_kb, providers, tmp_path):
    records = run_suite(populated_kb, providers, _nine_query_dataset(), ["vector", "graph"], judge=standard_judge())
    cells = aggregate(records, group_by="difficulty")
    bundle = write_bundle_json(records, cells, tmp_path / "bundle.json")
    assert bundle.exists()
    images = plot_metric_bars(cells, tmp_path / "plots")
    assert len(images) == 3
    assert all(p.exists() and p.stat().st_size > 0 for p in images)
