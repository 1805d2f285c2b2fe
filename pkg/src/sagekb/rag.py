"""Retrieval modes (vector / graph / custom) and reference-grounded synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .config import load_prompt, render_prompt
from .errors import InvalidRequestError, ProviderError
from .graph_index import (
    DEFAULT_MAX_TRIPLES_PER_QUERY,
    DEFAULT_TRAVERSAL_DEPTH,
    extract_query_entities,
)
from .models import Triple
from .providers import ChatRequest, ProviderSet
from .store import KBStore

DEFAULT_K = 5
DEFAULT_CONTEXT_CHAR_BUDGET = 12_000

NO_CONTEXT_ANSWER = "No relevant information was found in the knowledge base for this query."


class RetrievalMode(str, Enum):
    VECTOR = "vector"
    GRAPH = "graph"
    CUSTOM = "custom"


@dataclass
class ContextEntry:
    chunk_id: str
    doc_id: str
    source_name: str
    text: str
    origin: str  # vector | graph
    score: float | None = None


@dataclass
class ContextBundle:
    entries: list[ContextEntry] = field(default_factory=list)
    triples: list[Triple] = field(default_factory=list)


@dataclass
class Reference:
    doc_id: str
    source_name: str
    chunk_id: str


@dataclass
class AnswerWithReferences:
    answer: str
    references: list[Reference]
    mode: RetrievalMode
    context: ContextBundle
    no_context: bool = False


def _entry_for(store: KBStore, chunk_id: str, origin: str, score: float | None) -> ContextEntry:
    chunk = store.chunk_by_id(chunk_id)
    doc = store.documents[chunk.doc_id]
    return ContextEntry(
        chunk_id=chunk_id,
        doc_id=chunk.doc_id,
        source_name=doc.source_name,
        text=chunk.text,
        origin=origin,
        score=score,
    )


def _vector_entries(store: KBStore, providers: ProviderSet, query: str, k: int) -> list[ContextEntry]:
    if len(store.vector_index()) == 0:
        return []
    query_vec = providers.embed_texts([query])[0]
    hits = store.vector_index().search(query_vec, k)
    return [_entry_for(store, h.chunk_id, "vector", h.score) for h in hits]


def _graph_entries(
    store: KBStore,
    providers: ProviderSet,
    query: str,
    depth: int,
    max_triples: int,
) -> tuple[list[ContextEntry], list[Triple]]:
    entities = extract_query_entities(query, providers)
    retrieval = store.graph_index().retrieve(entities, depth=depth, max_triples=max_triples)
    entries = [_entry_for(store, cid, "graph", None) for cid in retrieval.source_chunks]
    return entries, retrieval.triples


def _apply_char_budget(entries: list[ContextEntry], budget: int) -> list[ContextEntry]:
    # Graph entries go first, last-added first; vector hits are kept.
    total = sum(len(e.text) for e in entries)
    if total <= budget:
        return entries
    kept = list(entries)
    for i in range(len(kept) - 1, -1, -1):
        if total <= budget:
            break
        if kept[i].origin == "graph":
            total -= len(kept[i].text)
            kept.pop(i)
    return kept


def retrieve(
    store: KBStore,
    providers: ProviderSet,
    query: str,
    mode: RetrievalMode = RetrievalMode.CUSTOM,
    k: int = DEFAULT_K,
    depth: int = DEFAULT_TRAVERSAL_DEPTH,
    max_triples: int = DEFAULT_MAX_TRIPLES_PER_QUERY,
    context_char_budget: int = DEFAULT_CONTEXT_CHAR_BUDGET,
) -> ContextBundle:
    """Collect grounding context for one query under the selected mode.

    Custom mode unions both retrievals: vector entries (score-ordered) first,
    then graph entries, deduplicated by chunk_id keeping the vector copy.
    """
    if not query.strip():
        raise InvalidRequestError("query is empty")
    mode = RetrievalMode(mode)
    if mode is RetrievalMode.VECTOR:
        entries, triples = _vector_entries(store, providers, query, k), []
    elif mode is RetrievalMode.GRAPH:
        entries, triples = _graph_entries(store, providers, query, depth, max_triples)
    else:
        vector_entries = _vector_entries(store, providers, query, k)
        graph_entries, triples = _graph_entries(store, providers, query, depth, max_triples)
        seen = {e.chunk_id for e in vector_entries}
        entries = vector_entries + [e for e in graph_entries if e.chunk_id not in seen]
    entries = _apply_char_budget(entries, context_char_budget)
    return ContextBundle(entries=entries, triples=triples)


def _render_contexts(bundle: ContextBundle) -> str:
    lines = [f"[{i}] {entry.text}" for i, entry in enumerate(bundle.entries, start=1)]
    index_of = {entry.chunk_id: i for i, entry in enumerate(bundle.entries, start=1)}
    triple_lines = [
        f"{t.subject} — {t.predicate} — {t.object} (from [{index_of[t.source_chunk_id]}])"
        for t in bundle.triples
        if t.source_chunk_id in index_of
    ]
    if triple_lines:
        lines.append("")
        lines.append("Knowledge-graph facts:")
        lines.extend(triple_lines)
    return "\n".join(lines)


def synthesize_answer(
    providers: ProviderSet,
    query: str,
    bundle: ContextBundle,
    mode: RetrievalMode = RetrievalMode.CUSTOM,
    prompts_dir: Path | None = None,
) -> AnswerWithReferences:
    """One provider call over the numbered contexts; references cover every
    entry the prompt enumerated."""
    if not bundle.entries:
        return AnswerWithReferences(
            answer=NO_CONTEXT_ANSWER,
            references=[],
            mode=RetrievalMode(mode),
            context=bundle,
            no_context=True,
        )
    template = load_prompt("synthesis", prompts_dir)
    prompt = render_prompt(template, question=query, contexts=_render_contexts(bundle))
    result = providers.chat_complete(ChatRequest.single_turn(prompt))
    seen: set[tuple[str, str]] = set()
    references = []
    for entry in bundle.entries:
        key = (entry.doc_id, entry.chunk_id)
        if key in seen:
            continue
        seen.add(key)
        references.append(Reference(doc_id=entry.doc_id, source_name=entry.source_name, chunk_id=entry.chunk_id))
    return AnswerWithReferences(
        answer=result.text,
        references=references,
        mode=RetrievalMode(mode),
        context=bundle,
    )


def condense_query(
    providers: ProviderSet,
    query: str,
    history: list[dict],
    prompts_dir: Path | None = None,
) -> str:
    """Rewrite a follow-up into a standalone query; degrades to concatenating
    the last user turn when the provider cannot help."""
    if not history:
        return query
    rendered = "\n".join(f"{turn.get('role', 'user')}: {turn.get('content', '')}" for turn in history)
    template = load_prompt("condense", prompts_dir)
    prompt = render_prompt(template, history=rendered, question=query)
    try:
        result = providers.chat_complete(ChatRequest.single_turn(prompt))
        condensed = result.text.strip()
        return condensed if condensed else query
    except ProviderError:
        last_user = next(
            (turn.get("content", "") for turn in reversed(history) if turn.get("role") == "user"),
            "",
        )
        return f"{last_user} {query}".strip()


def chat(
    store: KBStore,
    providers: ProviderSet,
    query: str,
    mode: RetrievalMode = RetrievalMode.CUSTOM,
    history: list[dict] | None = None,
    k: int = DEFAULT_K,
    depth: int = DEFAULT_TRAVERSAL_DEPTH,
    max_triples: int = DEFAULT_MAX_TRIPLES_PER_QUERY,
    context_char_budget: int = DEFAULT_CONTEXT_CHAR_BUDGET,
    prompts_dir: Path | None = None,
) -> AnswerWithReferences:
    """Single-turn RAG chat: condense with history, retrieve, synthesize."""
    if not query.strip():
        raise InvalidRequestError("query is empty")
    standalone = condense_query(providers, query, history or [], prompts_dir)
    bundle = retrieve(
        store,
        providers,
        standalone,
        mode=mode,
        k=k,
        depth=depth,
        max_triples=max_triples,
        context_char_budget=context_char_budget,
    )
    return synthesize_answer(providers, standalone, bundle, mode=mode, prompts_dir=prompts_dir)
