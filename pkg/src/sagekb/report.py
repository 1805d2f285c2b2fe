"""Research-report pipeline: decompose, search, scrape, summarize, compose,
then persist and re-index the report into its knowledge base."""

from __future__ import annotations

import hashlib
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .config import load_prompt, render_prompt
from .errors import (
    AllSearchesFailedError,
    InvalidRequestError,
    ProviderError,
    ReportJobError,
    SageKBError,
)
from .ingest import ingest_text
from .models import MediaKind, ReportSection, ResearchReport, utc_now_iso
from .providers import ChatRequest, ProviderSet
from .store import KBStore

DEFAULT_N_QUERIES = 3
DEFAULT_TOP_M = 5

STAGES = ("pending", "searching", "scraping", "summarizing", "composing", "done", "failed")


@dataclass
class JobEvent:
    stage: str
    detail: str
    timestamp: str


@dataclass
class SourceSummary:
    url_or_id: str
    title: str
    summary: str
    fetched_chars: int


@dataclass
class ReportJob:
    question: str
    n_queries: int = DEFAULT_N_QUERIES
    top_m: int = DEFAULT_TOP_M
    source_mode: str = "web"  # web | arxiv
    job_id: str = field(default_factory=lambda: "job-" + uuid.uuid4().hex[:12])
    status: str = "pending"
    events: list[JobEvent] = field(default_factory=list)
    report_id: str | None = None
    failed_stage: str | None = None
    error: str | None = None

    def validate(self) -> None:
        if not self.question.strip():
            raise InvalidRequestError("report question is empty")
        if self.n_queries < 1:
            raise InvalidRequestError("n_queries must be >= 1")
        if self.top_m < 1:
            raise InvalidRequestError("top_m must be >= 1")
        if self.source_mode not in ("web", "arxiv"):
            raise InvalidRequestError(f"unknown source_mode {self.source_mode!r}")

    def log(self, stage: str, detail: str) -> None:
        self.events.append(JobEvent(stage=stage, detail=detail, timestamp=utc_now_iso()))

    def enter(self, stage: str, detail: str = "") -> None:
        self.status = stage
        self.log(stage, detail or f"stage {stage} started")


@dataclass
class SourceCandidate:
    url_or_id: str
    title: str
    fetch_url: str | None  # None when the text is already in hand (arXiv abstracts)
    text: str | None
    best_rank: int


def decompose_question(
    providers: ProviderSet,
    question: str,
    n_queries: int = DEFAULT_N_QUERIES,
    prompts_dir: Path | None = None,
) -> list[str]:
    """Exactly n_queries distinct sub-queries; provider duplicates are dropped
    and the original question backfills the gap."""
    if not question.strip():
        raise InvalidRequestError("question is empty")
    template = load_prompt("decompose", prompts_dir)
    prompt = render_prompt(template, question=question, n=str(n_queries))
    result = providers.chat_complete(ChatRequest.single_turn(prompt))
    queries: list[str] = []
    for line in result.text.splitlines():
        line = line.strip().strip("-*").strip()
        if line and line not in queries:
            queries.append(line)
    queries = queries[:n_queries]
    suffix = 2
    while len(queries) < n_queries:
        candidate = question if question not in queries else f"{question} ({suffix})"
        suffix += 1
        if candidate not in queries:
            queries.append(candidate)
    return queries


def gather_sources(
    providers: ProviderSet,
    sub_queries: list[str],
    top_m: int = DEFAULT_TOP_M,
    source_mode: str = "web",
    job: ReportJob | None = None,
) -> list[SourceCandidate]:
    """Search per sub-query, merge by URL keeping the best rank, truncate to
    top_m by (best rank, first seen). Partial search failures are logged."""
    candidates: dict[str, SourceCandidate] = {}
    order: list[str] = []
    failures = 0
    for query in sub_queries:
        try:
            if source_mode == "arxiv":
                found = [
                    SourceCandidate(
                        url_or_id=e.url, title=e.title, fetch_url=None, text=e.abstract, best_rank=i
                    )
                    for i, e in enumerate(providers.arxiv_search(query, top_m), start=1)
                ]
            else:
                found = [
                    SourceCandidate(
                        url_or_id=h.url, title=h.title, fetch_url=h.url, text=None, best_rank=h.rank
                    )
                    for h in providers.web_search(query, top_m)
                ]
        except ProviderError as exc:
            failures += 1
            if job is not None:
                job.log("searching", f"search failed for {query!r}: {exc}")
            continue
        for cand in found:
            if cand.url_or_id in candidates:
                existing = candidates[cand.url_or_id]
                existing.best_rank = min(existing.best_rank, cand.best_rank)
            else:
                candidates[cand.url_or_id] = cand
                order.append(cand.url_or_id)
    if failures == len(sub_queries):
        raise AllSearchesFailedError(f"all {failures} searches failed", stage="searching")
    ranked = sorted(order, key=lambda url: (candidates[url].best_rank, order.index(url)))
    return [candidates[url] for url in ranked[:top_m]]


def summarize_source(
    providers: ProviderSet,
    fetched_text: str,
    question: str,
    cap_chars: int = 2_000,
    prompts_dir: Path | None = None,
) -> str:
    if not fetched_text.strip():
        raise InvalidRequestError("fetched text is empty")
    template = load_prompt("summarize", prompts_dir)
    prompt = render_prompt(template, question=question, text=fetched_text, cap=str(cap_chars))
    summary = providers.chat_complete(ChatRequest.single_turn(prompt)).text.strip()
    return summary[:cap_chars]


def _parse_report_markdown(question: str, text: str) -> tuple[str, list[ReportSection], str]:
    title = ""
    sections: list[ReportSection] = []
    conclusion = ""
    heading: str | None = None
    body: list[str] = []

    def flush() -> None:
        nonlocal conclusion
        if heading is None:
            return
        content = "\n".join(body).strip()
        if heading.strip().lower() == "conclusion":
            conclusion = content
        else:
            sections.append(ReportSection(heading=heading.strip(), body=content))

    for line in text.splitlines():
        if line.startswith("## "):
            flush()
            heading = line[3:]
            body = []
        elif line.startswith("# ") and not title:
            title = line[2:].strip()
        elif heading is not None:
            body.append(line)
    flush()
    if not title:
        title = question.strip()
    if not sections:
        sections = [ReportSection(heading="Findings", body=text.strip())]
    return title, sections, conclusion


def compose_report(
    providers: ProviderSet,
    question: str,
    summaries: list[SourceSummary],
    prompts_dir: Path | None = None,
) -> ResearchReport:
    """Outline call, then final composition; references are exactly the
    contributing sources in first-contribution order."""
    if not summaries:
        raise InvalidRequestError("cannot compose a report from zero summaries")
    numbered = "\n".join(
        f"[{i}] ({s.url_or_id}) {s.summary}" for i, s in enumerate(summaries, start=1)
    )
    outline_prompt = render_prompt(
        load_prompt("compose_outline", prompts_dir), question=question, summaries=numbered
    )
    outline = providers.chat_complete(ChatRequest.single_turn(outline_prompt)).text
    final_prompt = render_prompt(
        load_prompt("compose_final", prompts_dir),
        question=question,
        outline=outline,
        summaries=numbered,
    )
    body = providers.chat_complete(ChatRequest.single_turn(final_prompt)).text
    title, sections, conclusion = _parse_report_markdown(question, body)
    report = ResearchReport(
        report_id="",  # content-addressed below
        question=question,
        title=title,
        sections=sections,
        conclusion=conclusion,
        references=[s.url_or_id for s in summaries],
        created_at=utc_now_iso(),
    )
    digest = hashlib.sha256(report.to_markdown().encode("utf-8")).hexdigest()
    report.report_id = "rep-" + digest[:12]
    report.validate()
    return report


def run_report_job(
    store: KBStore,
    providers: ProviderSet,
    job: ReportJob,
    summary_cap_chars: int = 2_000,
    prompts_dir: Path | None = None,
) -> dict:
    """Drive the pipeline to completion; the KB is only touched on success.

    Returns {"report_id", "markdown"}. On failure the job records the failing
    stage and the KB state is byte-identical to before the call.
    """
    job.validate()
    try:
        job.enter("searching", f"decomposing question into {job.n_queries} sub-queries")
        sub_queries = decompose_question(providers, job.question, job.n_queries, prompts_dir)
        job.log("searching", f"sub-queries: {sub_queries}")
        sources = gather_sources(providers, sub_queries, job.top_m, job.source_mode, job)
        job.log("searching", f"{len(sources)} unique sources gathered")

        job.enter("scraping")
        fetched: list[SourceCandidate] = []
        for source in sources:
            if source.text is not None:
                if source.text.strip():
                    fetched.append(source)
                else:
                    job.log("scraping", f"empty abstract for {source.url_or_id}, dropped")
                continue
            try:
                source.text = providers.fetch_url(source.fetch_url)
                fetched.append(source)
            except ProviderError as exc:
                job.log("scraping", f"fetch failed for {source.url_or_id}: {exc}")
        if not fetched:
            raise ReportJobError("no sources could be fetched", stage="scraping")

        job.enter("summarizing")
        summaries: list[SourceSummary] = []
        for source in fetched:
            try:
                summary = summarize_source(
                    providers, source.text, job.question, summary_cap_chars, prompts_dir
                )
                summaries.append(
                    SourceSummary(
                        url_or_id=source.url_or_id,
                        title=source.title,
                        summary=summary,
                        fetched_chars=len(source.text),
                    )
                )
            except (ProviderError, InvalidRequestError) as exc:
                job.log("summarizing", f"summary failed for {source.url_or_id}: {exc}")
        if not summaries:
            raise ReportJobError("no sources survived summarization", stage="summarizing")

        job.enter("composing")
        report = compose_report(providers, job.question, summaries, prompts_dir)
        markdown = report.to_markdown()
        store.save_report(report.report_id, markdown)
        ingest_text(
            store,
            providers,
            markdown,
            source_name=f"report:{report.title}",
            media_kind=MediaKind.REPORT,
            metadata={"origin": "report-generator", "report_id": report.report_id},
        )
        job.report_id = report.report_id
        job.enter("done", f"report {report.report_id} saved and indexed")
        return {"report_id": report.report_id, "markdown": markdown}
    except SageKBError as exc:
        failing_stage = exc.stage or job.status
        job.failed_stage = failing_stage
        job.error = f"{exc.code}: {exc.message}"
        job.status = "failed"
        job.log("failed", f"stage {failing_stage}: {exc.message}")
        raise ReportJobError(exc.message, stage=failing_stage) from exc
