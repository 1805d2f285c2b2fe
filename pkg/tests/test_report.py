"""Report pipeline: decompose/gather/summarize/compose units plus the full
job under scripted providers."""

from __future__ import annotations

import pytest

from sagekb import rag
from sagekb.errors import AllSearchesFailedError, InvalidRequestError, ReportJobError
from sagekb.ingest import ingest_text
from sagekb.providers import (
    MockArxivSearch,
    MockChat,
    MockEmbedder,
    MockFetcher,
    MockWebSearch,
    ProviderSet,
)
from sagekb.report import (
    ReportJob,
    SourceSummary,
    compose_report,
    decompose_question,
    gather_sources,
    run_report_job,
    summarize_source,
)

QUESTION = "How efficient are perovskite solar cells?"

SUB_QUERIES = [
    "perovskite efficiency records",
    "perovskite stability",
    "perovskite manufacturing cost",
]

URLS = [f"https://energy.test/src{i}" for i in range(1, 6)]

REPORT_BODY = """# Perovskite Solar Cell Efficiency
## Background
Perovskite cells are thin-film photovoltaics [1].
## Efficiency records
Lab cells reached 26 percent efficiency [2].
## Stability outlook
Encapsulation extends device lifetime [3].
## Conclusion
Perovskite cells are efficient but long-term stability remains the hurdle."""


def report_responder(prompt: str) -> str | None:
    if "Decompose the research question" in prompt:
        return "\n".join(SUB_QUERIES)
    if "Summarize the source text" in prompt:
        for i in range(1, 6):
            if f"marker-{i}" in prompt:
                return f"Summary of source {i} about perovskite cells."
        return "Generic summary."
    if "Draft a section outline" in prompt:
        return "Background\nEfficiency records\nStability outlook"
    if "Write a structured research report" in prompt:
        return REPORT_BODY
    if "Extract factual knowledge triples" in prompt:
        if "Perovskite" in prompt:
            return "(Perovskite cells | reached | 26 percent efficiency)"
        return "nothing extractable"
    if "List the named entities" in prompt:
        return "Perovskite" if "perovskite" in prompt.lower() else ""
    if "numbered context passages" in prompt:
        return "Perovskite cells reached 26 percent efficiency [1]."
    return None


def report_providers(pages: dict | None = None) -> ProviderSet:
    if pages is None:
        pages = {
            url: f"<html><body><p>Perovskite source {i} content: marker-{i}</p></body></html>"
            for i, url in enumerate(URLS, start=1)
        }
    per_query = {
        SUB_QUERIES[0]: [{"url": URLS[0], "title": "s1"}, {"url": URLS[1], "title": "s2"}, {"url": URLS[2], "title": "s3"}],
        SUB_QUERIES[1]: [{"url": URLS[1], "title": "s2"}, {"url": URLS[3], "title": "s4"}],
        SUB_QUERIES[2]: [{"url": URLS[4], "title": "s5"}],
    }
    return ProviderSet(
        chat=MockChat(responder=report_responder),
        embedder=MockEmbedder(dim=64),
        search=MockWebSearch(per_query=per_query),
        arxiv=MockArxivSearch(
            entries=[
                {"id": "2401.11111", "title": "Perovskite paper A", "abstract": "Efficiency study marker-1.", "url": "https://arxiv.org/abs/2401.11111"},
                {"id": "2402.22222", "title": "Perovskite paper B", "abstract": "Stability study marker-2.", "url": "https://arxiv.org/abs/2402.22222"},
            ]
        ),
        fetcher=MockFetcher(pages=pages),
    )


# -- decompose ---------------------------------------------------------------


def test_decompose_three_lines(providers):
    chat = MockChat(rules=[("Decompose the research question", "a\nb\nc")])
    providers.chat = chat
    assert decompose_question(providers, QUESTION, 3) == ["a", "b", "c"]


def test_decompose_backfills_duplicates(providers):
    providers.chat = MockChat(rules=[("Decompose the research question", "a\nb\na")])
    result = decompose_question(providers, QUESTION, 3)
    assert result == ["a", "b", QUESTION]


def test_decompose_single_query(providers):
    providers.chat = MockChat(rules=[("Decompose the research question", "only query")])
    assert decompose_question(providers, QUESTION, 1) == ["only query"]


# -- gather -------------------------------------------------------------------


def test_gather_dedups_shared_urls():
    providers = report_providers()
    sources = gather_sources(providers, SUB_QUERIES[:2], top_m=3)
    urls = [s.url_or_id for s in sources]
    assert len(urls) == len(set(urls)) == 3
    assert URLS[1] in urls  # shared URL appears once


def test_gather_all_searches_failed():
    providers = report_providers()
    providers.search = MockWebSearch(fail_first=100)
    with pytest.raises(AllSearchesFailedError):
        gather_sources(providers, SUB_QUERIES, top_m=3)


def test_gather_top_one_is_best_ranked():
    providers = report_providers()
    sources = gather_sources(providers, SUB_QUERIES, top_m=1)
    assert len(sources) == 1
    assert sources[0].best_rank == 1


def test_gather_partial_failure_logged():
    providers = report_providers()
    providers.search = MockWebSearch(
        per_query={SUB_QUERIES[0]: [{"url": URLS[0], "title": "s1"}]},
        fail_first=0,
    )
    job = ReportJob(question=QUESTION)
    sources = gather_sources(providers, [SUB_QUERIES[0]], top_m=3, job=job)
    assert sources


# -- summarize / compose ----------------------------------------------------------


def test_summarize_scripted():
    providers = report_providers()
    summary = summarize_source(providers, "text with marker-2 inside", QUESTION)
    assert summary == "Summary of source 2 about perovskite cells."


def test_summarize_empty_text_rejected():
    with pytest.raises(InvalidRequestError):
        summarize_source(report_providers(), "   ", QUESTION)


def test_compose_references_in_contribution_order():
    providers = report_providers()
    summaries = [SourceSummary(url_or_id=u, title=f"t{i}", summary=f"sum {i}", fetched_chars=100) for i, u in enumerate(URLS)]
    report = compose_report(providers, QUESTION, summaries)
    assert report.references == URLS
    assert report.title == "Perovskite Solar Cell Efficiency"
    assert [s.heading for s in report.sections] == ["Background", "Efficiency records", "Stability outlook"]
    assert "stability remains the hurdle" in report.conclusion


def test_compose_single_summary():
    providers = report_providers()
    report = compose_report(providers, QUESTION, [SourceSummary(URLS[0], "t", "only summary", 50)])
    assert report.references == [URLS[0]]


def test_compose_zero_summaries_rejected():
    with pytest.raises(InvalidRequestError):
        compose_report(report_providers(), QUESTION, [])


# -- full job ------------------------------------------------------------------------


def test_run_report_job_end_to_end(registry):
    providers = report_providers()
    store = registry.create_kb("research")
    ingest_text(store, providers, "Seed document mentioning solar panels broadly.", "seed.txt")
    docs_before = len(store.meta.document_ids)
    chunks_before = store.meta.vector_manifest.count
    triples_before = store.meta.graph_manifest.count

    job = ReportJob(question=QUESTION, n_queries=3, top_m=5)
    result = run_report_job(store, providers, job)

    assert job.status == "done"
    assert job.report_id == result["report_id"]
    report_md = store.read_report(result["report_id"])
    assert report_md == result["markdown"]
    assert report_md.startswith("# Perovskite Solar Cell Efficiency")
    assert "## Conclusion" in report_md
    assert "## References" in report_md
    for url in URLS:
        assert url in report_md

    assert len(store.meta.document_ids) == docs_before + 1
    assert store.meta.vector_manifest.count > chunks_before
    assert store.meta.graph_manifest.count > triples_before
    new_doc = store.documents[store.meta.document_ids[-1]]
    assert new_doc.metadata["origin"] == "report-generator"
    assert new_doc.media_kind.value == "report"

    stage_sequence = [e.stage for e in job.events]
    order = ["searching", "scraping", "summarizing", "composing", "done"]
    positions = [stage_sequence.index(s) for s in order]
    assert positions == sorted(positions)
    timestamps = [e.timestamp for e in job.events]
    assert timestamps == sorted(timestamps)


def test_report_job_reruns_are_bit_reproducible(registry):
    providers = report_providers()
    store = registry.create_kb("repro")
    first = run_report_job(store, providers, ReportJob(question=QUESTION))
    second = run_report_job(store, providers, ReportJob(question=QUESTION))
    assert first["markdown"] == second["markdown"]
    assert first["report_id"] == second["report_id"]


def test_report_failure_at_scraping_leaves_kb_unchanged(registry):
    providers = report_providers(pages={})  # every fetch 404s
    store = registry.create_kb("failing")
    ingest_text(store, providers, "Seed content for the failing case.", "seed.txt")
    before = store.enumerate_state()
    job = ReportJob(question=QUESTION)
    with pytest.raises(ReportJobError):
        run_report_job(store, providers, job)
    assert job.status == "failed"
    assert job.failed_stage == "scraping"
    assert store.enumerate_state() == before
    assert store.list_reports() == []


def test_report_arxiv_mode_references_papers(registry):
    providers = report_providers()
    store = registry.create_kb("arxiv-mode")
    job = ReportJob(question=QUESTION, n_queries=3, top_m=2, source_mode="arxiv")
    result = run_report_job(store, providers, job)
    markdown = result["markdown"]
    assert "https://arxiv.org/abs/2401.11111" in markdown
    assert "https://arxiv.org/abs/2402.22222" in markdown


def test_report_feedback_loop_chat_retrieves_report(registry):
    providers = report_providers()
    store = registry.create_kb("loop")
    run_report_job(store, providers, ReportJob(question=QUESTION))
    answer = rag.chat(store, providers, "perovskite efficiency records", mode=rag.RetrievalMode.CUSTOM)
    referenced_docs = {r.doc_id for r in answer.references}
    assert any(
        store.documents[d].metadata.get("origin") == "report-generator" for d in referenced_docs
    )


def test_job_validation():
    with pytest.raises(InvalidRequestError):
        ReportJob(question=" ").validate()
    with pytest.raises(InvalidRequestError):
        ReportJob(question="q", n_queries=0).validate()
    with pytest.raises(InvalidRequestError):
        ReportJob(question="q", source_mode="gopher").validate()
