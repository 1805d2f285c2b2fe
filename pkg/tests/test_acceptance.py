"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with: pytest tests/test_acceptance.py -v -s
"""

from __future__ import annotations

import random
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import DOC_GRANT, DOC_LINCOLN, make_chunk
from sagekb import rag
from sagekb.errors import DatasetError, JudgeParseError, ScoreOutOfRangeError
from sagekb.evaluation import (
    EvalQuery,
    EvalRecord,
    Statement,
    aggregate,
    build_taxonomy_dataset,
    concept_ratio,
    load_dataset,
    run_suite,
    save_dataset,
    score_correctness,
    score_faithfulness,
    validate_counts,
    write_aggregates_csv,
    write_records_csv,
)
from sagekb.graph_index import EntityMention, GraphIndex
from sagekb.ingest import ingest_text
from sagekb.models import Document, MediaKind, Triple, normalize_entity, utc_now_iso
from sagekb.providers import MockChat, MockEmbedder, ProviderSet, hash_embedding
from sagekb.report import ReportJob, run_report_job
from sagekb.store import Registry
from sagekb.vector_index import VectorIndex
from test_eval import standard_judge
from test_report import QUESTION, URLS, report_providers


def _ok(name: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS")


def test_faithfulness_ratio_exactness():
    rng = random.Random(20240809)
    start = time.perf_counter()
    for _ in range(1000):
        n = rng.randint(1, 50)
        verdicts = [rng.random() < 0.5 for _ in range(n)]
        statements = [Statement(f"s{i}", verified=v) for i, v in enumerate(verdicts)]
        expected = float(Fraction(sum(verdicts), n))
        assert abs(score_faithfulness(statements) - expected) <= 1e-15
    elapsed = time.perf_counter() - start
    assert score_faithfulness([Statement("s", verified=v) for v in (True, True, True, False)]) == 0.75
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    _ok("faithfulness-ratio-exactness")


def test_relevance_ratio_exactness():
    rng = random.Random(1138)
    start = time.perf_counter()
    for _ in range(1000):
        n = rng.randint(1, 50)
        verdicts = [rng.random() < 0.5 for _ in range(n)]
        expected = float(Fraction(sum(verdicts), n))
        assert abs(concept_ratio(verdicts) - expected) <= 1e-15
    elapsed = time.perf_counter() - start
    assert concept_ratio([True, True, True, True, False]) == 0.8
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    _ok("relevance-ratio-exactness")


def test_correctness_rubric_bounds_fuzzed():
    rng = random.Random(5150)
    cases: list[tuple[str, str]] = []  # (judge output, expected classification)
    for _ in range(60):
        cases.append((str(rng.randint(1, 5)), "valid"))
    for _ in range(50):
        cases.append((f"{rng.randint(10, 50) / 10.0:.1f}", "valid"))
    for _ in range(51):
        low = rng.random() < 0.5
        value = rng.uniform(-10.0, 0.99) if low else rng.uniform(5.01, 50.0)
        cases.append((f"{value:.2f}", "out_of_range"))
    for word in ("good", "", "N/A", "score four", "excellent!", "?", "nope", "five", "4x", "one"):
        cases.append((word, "non_numeric"))
    cases.extend([("0", "out_of_range"), ("5.1", "out_of_range"), ("0.0", "out_of_range")] * 9)
    cases.extend([("abc", "non_numeric"), ("-", "non_numeric")])
    assert len(cases) == 200

    correct = 0
    for output, expected in cases:
        judge = ProviderSet(chat=MockChat(default=output if output else " "))
        try:
            score = score_correctness(judge, "q", "generated", "reference")
            got = "valid"
            assert 1.0 <= score <= 5.0  # no silent clamping can occur
            assert score == float(output)
        except ScoreOutOfRangeError:
            got = "out_of_range"
        except JudgeParseError:
            got = "non_numeric"
        if got == expected:
            correct += 1
    assert correct == 200, f"only {correct}/200 fuzzed judge outputs classified correctly"
    _ok("correctness-rubric-bounds")


def test_vector_search_oracle_thousand_chunks():
    index = VectorIndex()
    chunks = []
    for i in range(1000):
        chunk = make_chunk(f"acceptance corpus passage number {i}", doc_id=f"doc-{i // 100}", ordinal=i % 100)
        chunk.chunk_id = f"chunk-{i:04d}"
        chunks.append(chunk)
    index.add_chunks(chunks)
    vectors = {c.chunk_id: np.asarray(c.embedding, dtype=np.float64) for c in chunks}

    queries = []
    for qi in range(100):
        q = hash_embedding(f"acceptance query {qi}", 64).astype(np.float64)
        q /= np.linalg.norm(q)
        queries.append(q)

    index.search(queries[0], 10)  # warm the jitted kernel
    results = []
    start = time.perf_counter()
    for q in queries:
        results.append(index.search(q, 10))
    elapsed = time.perf_counter() - start

    for q, hits in zip(queries, results):
        scored = sorted(((float(vec @ q), cid) for cid, vec in vectors.items()), key=lambda p: (-p[0], p[1]))[:10]
        assert [h.chunk_id for h in hits] == [cid for _, cid in scored]
        for hit, (score, _) in zip(hits, scored):
            assert abs(hit.score - score) <= 1e-6
    assert elapsed < 2.0, f"100 searches took {elapsed:.3f}s"
    _ok("vector-search-oracle")


def _bfs_oracle(triples: list[Triple], entities: set[str], depth: int) -> set[Triple]:
    frontier = {normalize_entity(e) for e in entities}
    seen = set(frontier)
    found: set[Triple] = set()
    for _ in range(depth):
        new = [
            t
            for t in triples
            if t not in found
            and (normalize_entity(t.subject) in frontier or normalize_entity(t.object) in frontier)
        ]
        if not new:
            break
        found.update(new)
        frontier = set()
        for t in new:
            for endpoint in (normalize_entity(t.subject), normalize_entity(t.object)):
                if endpoint not in seen:
                    seen.add(endpoint)
                    frontier.add(endpoint)
    return found


def test_graph_retrieval_oracle_random_graphs():
    rng = random.Random(31415)
    for case in range(100):
        n_triples = rng.randint(1, 200)
        entities = [f"e{i}" for i in range(max(3, n_triples // 3))]
        index = GraphIndex()
        index.add_triples(
            [
                Triple(rng.choice(entities), f"r{rng.randrange(4)}", rng.choice(entities), f"c{i}")
                for i in range(n_triples)
            ]
        )
        start_entities = {rng.choice(entities)}
        mentions = [EntityMention.of(e) for e in start_entities]
        previous: set[Triple] = set()
        for depth in (1, 2, 3):
            got = set(index.retrieve(mentions, depth=depth, max_triples=10_000).triples)
            assert got == _bfs_oracle(index.triples, start_entities, depth), f"case {case} depth {depth}"
            assert previous <= got, f"monotonicity violated at case {case} depth {depth}"
            previous = got
    _ok("graph-retrieval-oracle")


def test_custom_mode_union_property(tmp_path):
    import re

    def responder(prompt: str) -> str | None:
        if "List the named entities" in prompt:
            question = re.search(r"Question: (.*)", prompt).group(1)
            return "\n".join(w.strip("?.,!") for w in question.split() if w.startswith("Topic"))
        if "numbered context passages" in prompt:
            return "ANSWER"
        return None

    providers = ProviderSet(chat=MockChat(responder=responder), embedder=MockEmbedder(dim=64))
    registry = Registry(tmp_path / "kbs")
    store = registry.create_kb("union-acceptance")
    chunks, triples = [], []
    for i in range(50):
        chunk = make_chunk(f"Topic{i} relates to material m{i % 7} in study s{i % 5}.", doc_id=f"doc-{i:02d}")
        chunk.chunk_id = f"c{i:02d}"
        chunks.append(chunk)
        triples.append(Triple(f"Topic{i}", "relates to", f"m{i % 7}", chunk.chunk_id))
        triples.append(Triple(f"Topic{i}", "cites", f"Topic{(i * 3) % 50}", chunk.chunk_id))
    with store.transaction() as tx:
        for i, chunk in enumerate(chunks):
            tx.add_document(
                Document(
                    doc_id=chunk.doc_id,
                    kb_id=store.meta.kb_id,
                    source_name=f"t{i}.txt",
                    media_kind=MediaKind.TEXT,
                    content_hash=f"h{i}",
                    ingested_at=utc_now_iso(),
                )
            )
        tx.add_chunks(chunks)
        tx.add_triples(triples)

    for i in range(50):
        query = f"What does Topic{i} relate to?"
        vector_ids = {e.chunk_id for e in rag.retrieve(store, providers, query, mode=rag.RetrievalMode.VECTOR, k=5).entries}
        graph_ids = {e.chunk_id for e in rag.retrieve(store, providers, query, mode=rag.RetrievalMode.GRAPH).entries}
        custom_ids = {e.chunk_id for e in rag.retrieve(store, providers, query, mode=rag.RetrievalMode.CUSTOM, k=5).entries}
        assert custom_ids == vector_ids | graph_ids, f"union mismatch for query {i}"
    _ok("custom-mode-union")


def test_taxonomy_cardinalities(tmp_path):
    queries, manifest = build_taxonomy_dataset()
    assert len(queries) == 2295
    path = tmp_path / "taxonomy.jsonl"
    save_dataset(queries, path, manifest)
    loaded = load_dataset(path, path.with_suffix(".manifest.json"))
    assert len(loaded) == 2295

    for victim_cell in (("low", "easy"), ("high", "hard")):
        mutated = [q for q in queries]
        victim = next(q for q in mutated if (q.occurrence, q.difficulty) == victim_cell)
        mutated.remove(victim)
        with pytest.raises(DatasetError):
            validate_counts(mutated, manifest)
    _ok("taxonomy-cardinalities")


def test_aggregation_correctness_and_permutation_invariance():
    import math

    records = []
    for mode in ("vector", "graph"):
        for c in (4.0, 4.0, 5.0):
            records.append(
                EvalRecord(
                    query_text="q", difficulty="easy", occurrence="low", index_mode=mode,
                    correctness=c, relevance=0.5, faithfulness=1.0,
                )
            )
        for c in (1.5, 3.25, 4.75, 2.5):
            records.append(
                EvalRecord(
                    query_text="q", difficulty="hard", occurrence="low", index_mode=mode,
                    correctness=c, relevance=0.25, faithfulness=0.5,
                )
            )
    cells = aggregate(records, group_by="difficulty")
    easy = next(c for c in cells if c.difficulty == "easy" and c.index_mode == "vector" and c.metric == "correctness")
    # hand computation: mean 13/3; population variance 2/9
    assert abs(easy.mean - 13.0 / 3.0) <= 1e-12
    assert abs(easy.stddev - math.sqrt(2.0 / 9.0)) <= 1e-12
    hard = next(c for c in cells if c.difficulty == "hard" and c.index_mode == "vector" and c.metric == "correctness")
    # hand computation: mean 12/4 = 3.0; squared deviations 2.25+0.0625+3.0625+0.25 = 5.625; variance 1.40625
    assert abs(hard.mean - 3.0) <= 1e-12
    assert abs(hard.stddev - math.sqrt(1.40625)) <= 1e-12

    rng = random.Random(8080)
    for _ in range(20):
        shuffled = list(records)
        rng.shuffle(shuffled)
        assert aggregate(shuffled, group_by="difficulty") == cells
    _ok("aggregation-correctness")


def test_end_to_end_report_job(tmp_path):
    providers = report_providers()
    registry = Registry(tmp_path / "kbs")
    store = registry.create_kb("acceptance-report")
    ingest_text(store, providers, "Seed document about solar energy.", "seed.txt")
    docs_before = len(store.meta.document_ids)
    chunks_before = store.meta.vector_manifest.count
    triples_before = store.meta.graph_manifest.count

    job = ReportJob(question=QUESTION, n_queries=3, top_m=5)
    start = time.perf_counter()
    result = run_report_job(store, providers, job)
    elapsed = time.perf_counter() - start
    markdown = result["markdown"]

    assert markdown.splitlines()[0].startswith("# ") and len(markdown.splitlines()[0]) > 2
    section_headings = [l for l in markdown.splitlines() if l.startswith("## ")]
    assert len([h for h in section_headings if h not in ("## Conclusion", "## References")]) >= 3
    assert "## Conclusion" in markdown
    assert [u for u in URLS if u in markdown] == URLS, "references must be exactly the 5 fixture URLs"
    assert len(store.meta.document_ids) == docs_before + 1
    assert store.meta.vector_manifest.count > chunks_before
    assert store.meta.graph_manifest.count > triples_before

    rerun = run_report_job(store, providers, ReportJob(question=QUESTION, n_queries=3, top_m=5))
    assert rerun["markdown"] == markdown, "identical job must be bit-reproducible"
    assert elapsed < 5.0, f"report job took {elapsed:.3f}s"
    _ok("end-to-end-report-job")


def test_persistence_round_trip_retrieval_identity(tmp_path):
    providers = report_providers()
    registry = Registry(tmp_path / "kbs")
    store = registry.create_kb("acceptance-roundtrip")
    ingest_text(store, providers, DOC_LINCOLN, "lincoln.txt")
    ingest_text(store, providers, DOC_GRANT, "grant.txt")
    run_report_job(store, providers, ReportJob(question=QUESTION))

    queries = [f"fixed probe query {i} about perovskite efficiency and Lincoln" for i in range(20)]

    def snapshot(kb) -> list:
        out = []
        for q in queries:
            bundle = rag.retrieve(kb, providers, q, mode=rag.RetrievalMode.CUSTOM, k=5)
            out.append([(e.chunk_id, e.origin, e.score) for e in bundle.entries])
        return out

    before = snapshot(store)
    reopened = Registry(tmp_path / "kbs").open_kb(store.meta.kb_id)
    after = snapshot(reopened)
    assert before == after
    _ok("persistence-round-trip")


def test_full_eval_suite_determinism(tmp_path):
    providers = report_providers()
    registry = Registry(tmp_path / "kbs")
    store = registry.create_kb("acceptance-eval")
    ingest_text(store, providers, DOC_LINCOLN, "lincoln.txt")
    ingest_text(store, providers, "Perovskite cells are thin films with marker-1 content.", "solar.txt")

    dataset = []
    for difficulty in ("easy", "medium", "hard"):
        for occurrence in ("low", "medium", "high"):
            dataset.append(
                EvalQuery(
                    text=f"({difficulty}/{occurrence}) how efficient are perovskite cells?",
                    difficulty=difficulty,
                    occurrence=occurrence,
                    reference_answer="About 26 percent in the lab.",
                )
            )

    outputs = []
    for run in range(2):
        records = run_suite(store, providers, dataset, ["vector", "graph", "custom"], judge=standard_judge())
        assert len(records) == 27
        cells = aggregate(records, group_by="difficulty")
        rec = write_records_csv(records, tmp_path / f"acc-records-{run}.csv")
        agg = write_aggregates_csv(cells, tmp_path / f"acc-aggregates-{run}.csv")
        outputs.append((rec.read_bytes(), agg.read_bytes()))
    assert outputs[0][0] == outputs[1][0], "record CSVs differ between runs"
    assert outputs[0][1] == outputs[1][1], "aggregate CSVs differ between runs"
    _ok("eval-suite-determinism")
