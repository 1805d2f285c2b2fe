"""Knowledge-graph index: LLM triple extraction, entity matching, and
breadth-first retrieval over (Subject, Predicate, Object) triples."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .config import load_prompt, render_prompt
from .errors import DanglingProvenanceError, InvalidRequestError, ProviderError
from .models import Chunk, Triple, normalize_entity
from .providers import ChatRequest, ProviderSet

DEFAULT_MAX_TRIPLES_PER_CHUNK = 10
DEFAULT_TRAVERSAL_DEPTH = 2
DEFAULT_MAX_TRIPLES_PER_QUERY = 30
MAX_TRAVERSAL_DEPTH = 5


@dataclass(frozen=True)
class EntityMention:
    surface: str
    normalized: str

    @classmethod
    def of(cls, surface: str) -> "EntityMention":
        return cls(surface=surface, normalized=normalize_entity(surface))


@dataclass
class ExtractionResult:
    triples: list[Triple]
    skipped: int


@dataclass
class GraphRetrieval:
    triples: list[Triple]
    source_chunks: list[str]
    matched_entities: list[EntityMention]


def parse_triple_lines(text: str, source_chunk_id: str, max_triples: int) -> ExtractionResult:
    """Parse "(S | P | O)" lines; malformed non-blank lines are counted, not fatal."""
    triples: list[Triple] = []
    skipped = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if len(triples) >= max_triples:
            break
        body = line.strip("()").strip() if line.startswith("(") and line.endswith(")") else line
        parts = [p.strip() for p in body.split("|")]
        if len(parts) != 3 or not all(parts):
            skipped += 1
            continue
        triples.append(
            Triple(subject=parts[0], predicate=parts[1], object=parts[2], source_chunk_id=source_chunk_id)
        )
    return ExtractionResult(triples=triples, skipped=skipped)


def extract_triples(
    providers: ProviderSet,
    chunk: Chunk,
    max_triples: int = DEFAULT_MAX_TRIPLES_PER_CHUNK,
    prompts_dir: Path | None = None,
) -> ExtractionResult:
    template = load_prompt("triple_extraction", prompts_dir)
    prompt = render_prompt(template, max_triples=str(max_triples), text=chunk.text)
    result = providers.chat_complete(ChatRequest.single_turn(prompt))
    return parse_triple_lines(result.text, chunk.chunk_id, max_triples)


_QUOTED = re.compile(r"\"([^\"]+)\"|'([^']+)'")
_CONNECTORS = {"of", "the", "and", "for"}
_DROP_SINGLE = {
    "what", "who", "whom", "whose", "when", "where", "why", "how", "which",
    "is", "are", "was", "were", "do", "does", "did", "can", "could",
    "the", "a", "an", "in", "on", "at", "to", "and", "or", "but", "if",
    "analyze", "evaluate", "describe", "explain", "compare", "list", "discuss",
}


def rule_based_entities(query: str) -> list[EntityMention]:
    """Capitalized spans plus quoted spans; the offline fallback extractor."""
    mentions: list[EntityMention] = []
    seen: set[str] = set()

    def push(surface: str) -> None:
        mention = EntityMention.of(surface)
        if mention.normalized and mention.normalized not in seen:
            seen.add(mention.normalized)
            mentions.append(mention)

    for match in _QUOTED.finditer(query):
        push(match.group(1) or match.group(2))

    words = [w.strip(".,;:!?()[]\"'") for w in query.split()]
    words = [w for w in words if w]
    i = 0
    while i < len(words):
        if words[i][:1].isupper():
            span = [words[i]]
            j = i + 1
            while j < len(words):
                if words[j][:1].isupper():
                    span.append(words[j])
                    j += 1
                elif words[j].lower() in _CONNECTORS and j + 1 < len(words) and words[j + 1][:1].isupper():
                    span.append(words[j])
                    span.append(words[j + 1])
                    j += 2
                else:
                    break
            if not (len(span) == 1 and span[0].lower() in _DROP_SINGLE):
                push(" ".join(span))
            i = j
        else:
            i += 1
    return mentions


def extract_query_entities(
    query: str,
    providers: ProviderSet | None = None,
    prompts_dir: Path | None = None,
) -> list[EntityMention]:
    """Entities to anchor graph retrieval; provider-driven with a rule-based
    fallback when no chat provider is usable."""
    if not query.strip():
        return []
    if providers is not None and providers.chat is not None:
        template = load_prompt("entity_extraction", prompts_dir)
        prompt = render_prompt(template, question=query)
        try:
            result = providers.chat_complete(ChatRequest.single_turn(prompt))
        except ProviderError:
            return rule_based_entities(query)
        mentions = []
        seen: set[str] = set()
        for line in result.text.splitlines():
            line = line.strip().strip("-*").strip()
            if not line:
                continue
            mention = EntityMention.of(line)
            if mention.normalized not in seen:
                seen.add(mention.normalized)
                mentions.append(mention)
        return mentions
    return rule_based_entities(query)


class GraphIndex:
    """Triple store with entity-anchored breadth-first retrieval."""

    def __init__(self, known_chunk_ids: set[str] | None = None):
        self._triples: list[Triple] = []
        self._seen: set[Triple] = set()
        self.known_chunk_ids = known_chunk_ids

    def __len__(self) -> int:
        return len(self._triples)

    @property
    def triples(self) -> list[Triple]:
        return list(self._triples)

    def add_triples(self, triples: list[Triple]) -> int:
        added = 0
        for triple in triples:
            triple.validate()
            if self.known_chunk_ids is not None and triple.source_chunk_id not in self.known_chunk_ids:
                raise DanglingProvenanceError(
                    f"triple references unknown chunk {triple.source_chunk_id!r}"
                )
            if triple in self._seen:
                continue
            self._seen.add(triple)
            self._triples.append(triple)
            added += 1
        return added

    def retrieve(
        self,
        entities: list[EntityMention],
        depth: int = DEFAULT_TRAVERSAL_DEPTH,
        max_triples: int = DEFAULT_MAX_TRIPLES_PER_QUERY,
        max_depth: int = MAX_TRAVERSAL_DEPTH,
    ) -> GraphRetrieval:
        """Hop 1 matches triples whose normalized subject or object equals a
        query entity; each further hop follows shared entities, breadth-first,
        capped at max_triples."""
        if depth < 1:
            raise InvalidRequestError("depth must be >= 1")
        if depth > max_depth:
            raise InvalidRequestError(f"depth {depth} exceeds max depth {max_depth}")

        frontier = {e.normalized for e in entities if e.normalized}
        seen_entities = set(frontier)
        picked: list[int] = []
        picked_set: set[int] = set()
        hop1_entities: set[str] = set()

        for hop in range(depth):
            if not frontier:
                break
            new_indices = []
            for idx, triple in enumerate(self._triples):
                if idx in picked_set:
                    continue
                subj = normalize_entity(triple.subject)
                obj = normalize_entity(triple.object)
                if subj in frontier or obj in frontier:
                    new_indices.append(idx)
                    if hop == 0:
                        hop1_entities.update({subj, obj} & frontier)
            next_frontier: set[str] = set()
            for idx in new_indices:
                picked.append(idx)
                picked_set.add(idx)
                for endpoint in (
                    normalize_entity(self._triples[idx].subject),
                    normalize_entity(self._triples[idx].object),
                ):
                    if endpoint not in seen_entities:
                        seen_entities.add(endpoint)
                        next_frontier.add(endpoint)
            frontier = next_frontier

        picked = picked[:max_triples]
        triples = [self._triples[i] for i in picked]
        source_chunks: list[str] = []
        for triple in triples:
            if triple.source_chunk_id not in source_chunks:
                source_chunks.append(triple.source_chunk_id)
        matched = [e for e in entities if e.normalized in hop1_entities]
        return GraphRetrieval(triples=triples, source_chunks=source_chunks, matched_entities=matched)

    def export_tsv(self) -> str:
        """One "S\\tP\\tO\\tsource" line per triple, for external graph tooling."""
        return "\n".join(
            f"{t.subject}\t{t.predicate}\t{t.object}\t{t.source_chunk_id}" for t in self._triples
        )
