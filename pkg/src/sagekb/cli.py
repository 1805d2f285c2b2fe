"""Command-line interface: kb management, ingest, chat (one-shot/REPL),
report generation, evaluation runs, triple export, the HTTP server, and the
vector-scan benchmark."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import rag
from .config import load_config
from .errors import SageKBError
from .evaluation import (
    aggregate,
    build_taxonomy_dataset,
    load_dataset,
    plot_metric_bars,
    run_suite,
    save_dataset,
    write_aggregates_csv,
    write_bundle_json,
    write_records_csv,
)
from .ingest import SUPPORTED_FORMATS, ChunkingPolicy, ingest_document
from .report import ReportJob, run_report_job
from .store import Registry


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sagekb", description=__doc__)
    parser.add_argument("--root", help="KB root directory (default: $SAGEKB_ROOT)")
    parser.add_argument("--config", help="TOML config path (default: $SAGEKB_CONFIG)")
    parser.add_argument("--mock", action="store_true", help="use deterministic fixture providers")
    parser.add_argument("--fixtures", help="fixtures directory for --mock")
    sub = parser.add_subparsers(dest="command", required=True)

    kb = sub.add_parser("kb", help="manage knowledge bases")
    kb_sub = kb.add_subparsers(dest="kb_command", required=True)
    kb_create = kb_sub.add_parser("create")
    kb_create.add_argument("name")
    kb_sub.add_parser("list")
    kb_delete = kb_sub.add_parser("delete")
    kb_delete.add_argument("kb_id")

    ingest = sub.add_parser("ingest", help="ingest documents into a KB")
    ingest.add_argument("--kb", required=True, dest="kb_id")
    ingest.add_argument("paths", nargs="+")
    ingest.add_argument("--format", choices=SUPPORTED_FORMATS, help="override format inference")

    chat = sub.add_parser("chat", help="one-shot answer or interactive REPL")
    chat.add_argument("--kb", required=True, dest="kb_id")
    chat.add_argument("--mode", default="custom", choices=[m.value for m in rag.RetrievalMode])
    chat.add_argument("--k", type=int)
    chat.add_argument("--depth", type=int)
    chat.add_argument("query", nargs="?", help="omit for an interactive REPL")

    report = sub.add_parser("report", help="generate a research report into a KB")
    report.add_argument("--kb", required=True, dest="kb_id")
    report.add_argument("--question", required=True)
    report.add_argument("--arxiv", action="store_true", help="search arXiv instead of the web")
    report.add_argument("--queries", type=int, help="number of sub-queries")
    report.add_argument("--sources", type=int, help="top sources to keep")
    report.add_argument("--out", help="also write the markdown here")

    evalp = sub.add_parser("eval", help="evaluation harness")
    eval_sub = evalp.add_subparsers(dest="eval_command", required=True)
    eval_run = eval_sub.add_parser("run")
    eval_run.add_argument("--kb", required=True, dest="kb_id")
    eval_run.add_argument("--dataset", required=True)
    eval_run.add_argument("--manifest")
    eval_run.add_argument("--modes", default="vector,graph,custom")
    eval_run.add_argument("--out", required=True, help="output directory")
    eval_run.add_argument("--group-by", default="difficulty", choices=["all", "difficulty", "difficulty_occurrence"])
    eval_run.add_argument("--binary-relevance", action="store_true")
    eval_run.add_argument("--plots", action="store_true", help="render metric bar charts")
    eval_dataset = eval_sub.add_parser("dataset", help="write the bundled synthetic dataset")
    eval_dataset.add_argument("--out", required=True)
    eval_dataset.add_argument("--per-cell", type=int, default=255)

    export = sub.add_parser("export-triples", help="dump a KB graph as S\\tP\\tO\\tsource lines")
    export.add_argument("--kb", required=True, dest="kb_id")
    export.add_argument("--out", help="output path (default stdout)")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--addr", help="host:port (default $SAGEKB_ADDR or 127.0.0.1:8765)")

    bench = sub.add_parser("bench", help="compare numba and numpy vector-scan kernels")
    bench.add_argument("--n", type=int, default=100_000)
    bench.add_argument("--dim", type=int, default=64)
    bench.add_argument("--k", type=int, default=10)
    bench.add_argument("--queries", type=int, default=100)

    return parser


def _providers_and_registry(args):
    config = load_config(args.config, mock=True if args.mock else None)
    if args.fixtures:
        config.fixtures_dir = Path(args.fixtures)
    registry = Registry(args.root or config.root)
    return config, registry, config.build_providers()


def _print_answer(result: rag.AnswerWithReferences) -> None:
    print(result.answer)
    if result.references:
        print()
        print("References:")
        for i, ref in enumerate(result.references, start=1):
            print(f"  [{i}] {ref.source_name} ({ref.doc_id}, {ref.chunk_id})")


def _cmd_kb(args, config, registry, providers) -> int:
    if args.kb_command == "create":
        store = registry.create_kb(args.name)
        print(f"created {store.meta.kb_id} ({store.meta.name})")
    elif args.kb_command == "list":
        for entry in registry.list_kbs():
            print(
                f"{entry['kb_id']}  {entry['name']}  docs={entry['document_count']} "
                f"chunks={entry['chunk_count']} triples={entry['triple_count']}"
            )
    else:
        registry.delete_kb(args.kb_id)
        print(f"deleted {args.kb_id}")
    return 0


def _cmd_ingest(args, config, registry, providers) -> int:
    store = registry.open_kb(args.kb_id)
    policy = ChunkingPolicy(config.chunk_target_tokens, config.chunk_overlap_tokens)
    for path in args.paths:
        p = Path(path)
        fmt = args.format or (p.suffix.lstrip(".").lower() or "txt")
        result = ingest_document(
            store,
            providers,
            p.read_bytes(),
            fmt,
            p.name,
            policy=policy,
            max_triples_per_chunk=config.max_triples_per_chunk,
        )
        note = " (already ingested)" if result.deduplicated else ""
        print(f"{p.name}: doc={result.doc_id} chunks={result.chunk_count} triples={result.triple_count}{note}")
    return 0


def _cmd_chat(args, config, registry, providers) -> int:
    store = registry.open_kb(args.kb_id)
    kwargs = dict(
        mode=rag.RetrievalMode(args.mode),
        k=args.k or config.retrieval_k,
        depth=args.depth or config.graph_depth,
        max_triples=config.max_triples_per_query,
        context_char_budget=config.context_char_budget,
        prompts_dir=config.prompts_dir,
    )
    if args.query:
        _print_answer(rag.chat(store, providers, args.query, **kwargs))
        return 0
    history: list[dict] = []
    print(f"chatting with {store.meta.name} in {args.mode} mode; empty line to exit")
    while True:
        try:
            query = input("> ").strip()
        except EOFError:
            break
        if not query:
            break
        result = rag.chat(store, providers, query, history=history, **kwargs)
        _print_answer(result)
        history.append({"role": "user", "content": query})
        history.append({"role": "assistant", "content": result.answer})
    return 0


def _cmd_report(args, config, registry, providers) -> int:
    store = registry.open_kb(args.kb_id)
    job = ReportJob(
        question=args.question,
        n_queries=args.queries or config.report_n_queries,
        top_m=args.sources or config.report_top_m,
        source_mode="arxiv" if args.arxiv else "web",
    )
    result = run_report_job(
        store, providers, job, summary_cap_chars=config.summary_cap_chars, prompts_dir=config.prompts_dir
    )
    if args.out:
        Path(args.out).write_text(result["markdown"], encoding="utf-8")
    print(f"report {result['report_id']} saved in KB {store.meta.kb_id}")
    for event in job.events:
        print(f"  [{event.stage}] {event.detail}")
    return 0


def _cmd_eval(args, config, registry, providers) -> int:
    if args.eval_command == "dataset":
        queries, manifest = build_taxonomy_dataset(args.per_cell)
        save_dataset(queries, args.out, manifest)
        print(f"wrote {len(queries)} queries to {args.out}")
        return 0
    store = registry.open_kb(args.kb_id)
    dataset = load_dataset(args.dataset, args.manifest)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    records = run_suite(
        store,
        providers,
        dataset,
        modes,
        relevance_binary=args.binary_relevance,
        prompts_dir=config.prompts_dir,
    )
    cells = aggregate(records, group_by=args.group_by)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records_csv(records, out_dir / "records.csv")
    write_aggregates_csv(cells, out_dir / "aggregates.csv")
    write_bundle_json(records, cells, out_dir / "results.json")
    if args.plots:
        plot_metric_bars(cells, out_dir / "plots")
    failures = sum(1 for r in records if r.failed)
    print(f"{len(records)} records ({failures} failed), {len(cells)} aggregate cells -> {out_dir}")
    return 0


def _cmd_export_triples(args, config, registry, providers) -> int:
    store = registry.open_kb(args.kb_id)
    tsv = store.graph_index().export_tsv()
    if args.out:
        Path(args.out).write_text(tsv + ("\n" if tsv else ""), encoding="utf-8")
        print(f"wrote {len(store.triples)} triples to {args.out}")
    else:
        print(tsv)
    return 0


def _cmd_serve(args, config, registry, providers) -> int:
    import os

    import uvicorn

    from .service import create_app

    addr = args.addr or os.environ.get("SAGEKB_ADDR", "127.0.0.1:8765")
    host, _, port = addr.rpartition(":")
    app = create_app(registry=registry, providers=providers, config=config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "bench":
            from ._bench import run_benchmark

            run_benchmark(args.n, args.dim, args.k, args.queries)
            return 0
        config, registry, providers = _providers_and_registry(args)
        handlers = {
            "kb": _cmd_kb,
            "ingest": _cmd_ingest,
            "chat": _cmd_chat,
            "report": _cmd_report,
            "eval": _cmd_eval,
            "export-triples": _cmd_export_triples,
            "serve": _cmd_serve,
        }
        return handlers[args.command](args, config, registry, providers)
    except SageKBError as exc:
        stage = f" (stage={exc.stage})" if exc.stage else ""
        print(f"{exc.code}: {exc.message}{stage}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io_error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
