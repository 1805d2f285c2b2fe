"""HTTP service exposing KB management, ingestion, chat, report jobs, and
evaluation runs. Single process; report/eval jobs run on a bounded worker
pool and are polled via 202 + GET."""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse, Response, StreamingResponse
from pydantic import BaseModel, Field

from . import rag
from .config import EngineConfig, load_config
from .errors import (
    EmptyExtractionError,
    InvalidRequestError,
    JobNotFoundError,
    ParseError,
    SageKBError,
    UnsupportedFormatError,
)
from .evaluation import aggregate, load_dataset, run_suite
from .ingest import SUPPORTED_FORMATS, ChunkingPolicy, ingest_document
from .providers import ProviderSet
from .report import ReportJob, run_report_job
from .store import KBStore, Registry

STATUS_BY_CODE = {
    "invalid_request": 422,
    "dataset_invalid": 422,
    "unsupported_format": 422,
    "parse_failure": 422,
    "empty_extraction": 422,
    "duplicate_name": 409,
    "kb_not_found": 404,
    "job_not_found": 404,
    "report_not_found": 404,
    "provider_unavailable": 502,
    "provider_transport": 502,
    "provider_timeout": 502,
    "provider_refusal": 502,
    "provider_unsupported": 502,
    "fetch_failure": 502,
    "non_text_content": 502,
    "all_searches_failed": 502,
    "report_job_failed": 502,
}

STREAM_PIECE_CHARS = 48


class CreateKBBody(BaseModel):
    name: str


class ChatBody(BaseModel):
    query: str
    mode: str = "custom"
    k: int | None = None
    depth: int | None = None
    history: list[dict] = Field(default_factory=list)
    stream: bool = False


class ReportBody(BaseModel):
    question: str
    n_queries: int | None = None
    top_m: int | None = None
    source_mode: str = "web"


class EvalBody(BaseModel):
    kb_id: str
    dataset: str
    manifest: str | None = None
    modes: list[str] = Field(default_factory=lambda: ["vector", "graph", "custom"])
    relevance_binary: bool = False


def _error_response(exc: SageKBError) -> JSONResponse:
    code = exc.code
    stage = exc.stage
    # Upload/parse problems surface as invalid_request with stage=parse.
    if isinstance(exc, (UnsupportedFormatError, ParseError, EmptyExtractionError)):
        code, stage = "invalid_request", "parse"
    status = STATUS_BY_CODE.get(code, STATUS_BY_CODE.get(exc.code, 500))
    body = {"code": code, "message": exc.message}
    if stage:
        body["stage"] = stage
    return JSONResponse(status_code=status, content=body)


def _kb_summary(store: KBStore) -> dict:
    meta = store.meta
    return {
        "kb_id": meta.kb_id,
        "name": meta.name,
        "created_at": meta.created_at,
        "document_count": len(meta.document_ids),
        "chunk_count": meta.vector_manifest.count,
        "triple_count": meta.graph_manifest.count,
    }


def _answer_payload(result: rag.AnswerWithReferences) -> dict:
    return {
        "answer": result.answer,
        "mode": result.mode.value,
        "no_context": result.no_context,
        "references": [
            {"doc_id": r.doc_id, "source_name": r.source_name, "chunk_id": r.chunk_id}
            for r in result.references
        ],
        "context": {
            "entries": [
                {
                    "chunk_id": e.chunk_id,
                    "doc_id": e.doc_id,
                    "source_name": e.source_name,
                    "text": e.text,
                    "origin": e.origin,
                    "score": e.score,
                }
                for e in result.context.entries
            ],
            "triples": [
                {
                    "subject": t.subject,
                    "predicate": t.predicate,
                    "object": t.object,
                    "source_chunk_id": t.source_chunk_id,
                }
                for t in result.context.triples
            ],
        },
    }


def _job_payload(job: ReportJob) -> dict:
    return {
        "job_id": job.job_id,
        "question": job.question,
        "status": job.status,
        "source_mode": job.source_mode,
        "report_id": job.report_id,
        "failed_stage": job.failed_stage,
        "error": job.error,
        "events": [
            {"stage": e.stage, "detail": e.detail, "timestamp": e.timestamp} for e in job.events
        ],
    }


def create_app(
    registry: Registry | None = None,
    providers: ProviderSet | None = None,
    config: EngineConfig | None = None,
    max_workers: int = 2,
) -> FastAPI:
    config = config or load_config()
    registry = registry or Registry(config.root)
    providers = providers or config.build_providers()

    app = FastAPI(title="sagekb", version="0.1.0")
    app.state.registry = registry
    app.state.providers = providers
    app.state.config = config

    kb_cache: dict[str, KBStore] = {}
    report_jobs: dict[str, ReportJob] = {}
    eval_runs: dict[str, dict] = {}
    jobs_lock = threading.Lock()
    pool = ThreadPoolExecutor(max_workers=max_workers)

    def kb(kb_id: str) -> KBStore:
        if kb_id not in kb_cache:
            kb_cache[kb_id] = registry.open_kb(kb_id)
        return kb_cache[kb_id]

    @app.exception_handler(SageKBError)
    async def handle_engine_error(request: Request, exc: SageKBError):
        return _error_response(exc)

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "mock": config.mock,
            "transcription": providers.transcriber is not None,
        }

    # -- knowledge bases -----------------------------------------------------

    @app.post("/kb", status_code=201)
    def create_kb(body: CreateKBBody):
        store = registry.create_kb(body.name)
        kb_cache[store.meta.kb_id] = store
        return _kb_summary(store)

    @app.get("/kb")
    def list_kbs():
        return registry.list_kbs()

    @app.delete("/kb/{kb_id}", status_code=204)
    def delete_kb(kb_id: str):
        registry.delete_kb(kb_id)
        kb_cache.pop(kb_id, None)
        return Response(status_code=204)

    # -- documents -------------------------------------------------------------

    @app.post("/kb/{kb_id}/documents", status_code=201)
    def upload_document(kb_id: str, file: UploadFile):
        store = kb(kb_id)
        filename = file.filename or "upload.txt"
        ext = filename.rsplit(".", 1)[-1].lower() if "." in filename else ""
        if ext not in SUPPORTED_FORMATS:
            raise UnsupportedFormatError(
                f"unsupported format {ext!r}; supported: {SUPPORTED_FORMATS}", stage="parse"
            )
        data = file.file.read()
        result = ingest_document(
            store,
            providers,
            data,
            ext,
            filename,
            policy=ChunkingPolicy(config.chunk_target_tokens, config.chunk_overlap_tokens),
            max_triples_per_chunk=config.max_triples_per_chunk,
        )
        return {
            "doc_id": result.doc_id,
            "chunk_count": result.chunk_count,
            "triple_count": result.triple_count,
            "deduplicated": result.deduplicated,
        }

    # -- chat ---------------------------------------------------------------------

    @app.post("/kb/{kb_id}/chat")
    def chat_endpoint(kb_id: str, body: ChatBody):
        store = kb(kb_id)
        try:
            mode = rag.RetrievalMode(body.mode)
        except ValueError:
            raise InvalidRequestError(f"unknown mode {body.mode!r}")
        result = rag.chat(
            store,
            providers,
            body.query,
            mode=mode,
            history=body.history,
            k=body.k or config.retrieval_k,
            depth=body.depth or config.graph_depth,
            max_triples=config.max_triples_per_query,
            context_char_budget=config.context_char_budget,
            prompts_dir=config.prompts_dir,
        )
        payload = _answer_payload(result)
        if not body.stream:
            return payload

        def ndjson():
            text = payload.pop("answer")
            for start in range(0, len(text), STREAM_PIECE_CHARS):
                piece = text[start : start + STREAM_PIECE_CHARS]
                yield json.dumps({"delta": piece}, ensure_ascii=False) + "\n"
            yield json.dumps(payload, ensure_ascii=False) + "\n"

        return StreamingResponse(ndjson(), media_type="application/x-ndjson")

    # -- report jobs -------------------------------------------------------------

    @app.post("/kb/{kb_id}/reports", status_code=202)
    def submit_report(kb_id: str, body: ReportBody):
        store = kb(kb_id)
        job = ReportJob(
            question=body.question,
            n_queries=body.n_queries or config.report_n_queries,
            top_m=body.top_m or config.report_top_m,
            source_mode=body.source_mode,
        )
        job.validate()
        with jobs_lock:
            report_jobs[job.job_id] = job

        def run():
            try:
                run_report_job(
                    store,
                    providers,
                    job,
                    summary_cap_chars=config.summary_cap_chars,
                    prompts_dir=config.prompts_dir,
                )
            except SageKBError:
                pass  # job carries failed_stage and error

        pool.submit(run)
        return {"job_id": job.job_id}

    @app.get("/kb/{kb_id}/reports/jobs/{job_id}")
    def report_job_status(kb_id: str, job_id: str):
        kb(kb_id)
        with jobs_lock:
            job = report_jobs.get(job_id)
        if job is None:
            raise JobNotFoundError(f"no report job {job_id!r}")
        return _job_payload(job)

    @app.get("/kb/{kb_id}/reports")
    def list_reports(kb_id: str):
        return {"report_ids": kb(kb_id).list_reports()}

    @app.get("/kb/{kb_id}/reports/{report_id}")
    def download_report(kb_id: str, report_id: str):
        markdown = kb(kb_id).read_report(report_id)
        return PlainTextResponse(markdown, media_type="text/markdown")

    # -- evaluation runs -----------------------------------------------------------

    @app.post("/eval/runs", status_code=202)
    def submit_eval(body: EvalBody):
        store = kb(body.kb_id)
        dataset_path = Path(body.dataset)
        if not dataset_path.exists():
            raise InvalidRequestError(f"dataset file {dataset_path} does not exist")
        run_id = "run-" + uuid.uuid4().hex[:12]
        state = {"run_id": run_id, "status": "running", "records": None, "aggregates": None, "error": None}
        with jobs_lock:
            eval_runs[run_id] = state

        def run():
            try:
                dataset = load_dataset(dataset_path, body.manifest)
                records = run_suite(
                    store,
                    providers,
                    dataset,
                    body.modes,
                    relevance_binary=body.relevance_binary,
                    prompts_dir=config.prompts_dir,
                )
                cells = aggregate(records, group_by="difficulty")
                with jobs_lock:
                    state["records"] = [r.__dict__ for r in records]
                    state["aggregates"] = [c.__dict__ for c in cells]
                    state["status"] = "done"
            except (SageKBError, OSError) as exc:
                with jobs_lock:
                    state["status"] = "failed"
                    state["error"] = str(exc)

        pool.submit(run)
        return {"run_id": run_id}

    @app.get("/eval/runs/{run_id}")
    def eval_run_status(run_id: str):
        with jobs_lock:
            state = eval_runs.get(run_id)
            if state is None:
                raise JobNotFoundError(f"no eval run {run_id!r}")
            return dict(state)

    return app


def main() -> None:  # pragma: no cover - exercised via CLI
    import os

    import uvicorn

    addr = os.environ.get("SAGEKB_ADDR", "127.0.0.1:8765")
    host, _, port = addr.rpartition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port or 8765))


if __name__ == "__main__":  # pragma: no cover
    main()
