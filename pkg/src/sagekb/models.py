"""Core persistent data model: knowledge bases, documents, chunks, triples, reports."""

from __future__ import annotations

import hashlib
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

import numpy as np

from .errors import InvalidRequestError

EMBEDDING_NORM_TOL = 1e-6


def utc_now_iso() -> str:
    """Current UTC time as an RFC 3339 string."""
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def content_digest(text: str) -> str:
    """Deterministic digest of ingested text (sha256 hex)."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def new_kb_id() -> str:
    return "kb-" + uuid.uuid4().hex[:12]


def doc_id_for(content_hash: str) -> str:
    # Content-addressed so re-ingests of identical text resolve to one id.
    return "doc-" + content_hash[:16]


def chunk_id_for(doc_id: str, ordinal: int) -> str:
    # Lexicographically sortable within a document.
    return f"{doc_id}:{ordinal:05d}"


class MediaKind(str, Enum):
    TEXT = "text"
    REPORT = "report"
    TRANSCRIPT = "transcript"


@dataclass
class IndexManifest:
    """Version + record count for one index of a KB."""

    version: int = 0
    count: int = 0

    def to_dict(self) -> dict:
        return {"version": self.version, "count": self.count}

    @classmethod
    def from_dict(cls, d: dict) -> "IndexManifest":
        return cls(version=int(d["version"]), count=int(d["count"]))


@dataclass
class KnowledgeBase:
    kb_id: str
    name: str
    created_at: str
    document_ids: list[str] = field(default_factory=list)
    vector_manifest: IndexManifest = field(default_factory=IndexManifest)
    graph_manifest: IndexManifest = field(default_factory=IndexManifest)


@dataclass
class Document:
    doc_id: str
    kb_id: str
    source_name: str
    media_kind: MediaKind
    content_hash: str
    ingested_at: str
    metadata: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "kb_id": self.kb_id,
            "source_name": self.source_name,
            "media_kind": self.media_kind.value,
            "content_hash": self.content_hash,
            "ingested_at": self.ingested_at,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        return cls(
            doc_id=d["doc_id"],
            kb_id=d["kb_id"],
            source_name=d["source_name"],
            media_kind=MediaKind(d["media_kind"]),
            content_hash=d["content_hash"],
            ingested_at=d["ingested_at"],
            metadata=dict(d.get("metadata", {})),
        )


@dataclass
class Chunk:
    chunk_id: str
    doc_id: str
    ordinal: int
    text: str
    token_count: int
    embedding: np.ndarray

    def validate(self) -> None:
        if self.token_count <= 0:
            raise InvalidRequestError(f"chunk {self.chunk_id}: token_count must be > 0")
        norm = float(np.linalg.norm(self.embedding))
        if abs(norm - 1.0) > EMBEDDING_NORM_TOL:
            raise InvalidRequestError(
                f"chunk {self.chunk_id}: embedding norm {norm!r} not within "
                f"{EMBEDDING_NORM_TOL} of 1"
            )

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
            "text": self.text,
            "token_count": self.token_count,
            "embedding": [float(x) for x in np.asarray(self.embedding, dtype=np.float32)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Chunk":
        return cls(
            chunk_id=d["chunk_id"],
            doc_id=d["doc_id"],
            ordinal=int(d["ordinal"]),
            text=d["text"],
            token_count=int(d["token_count"]),
            embedding=np.asarray(d["embedding"], dtype=np.float32),
        )


_WS = re.compile(r"\s+")


def normalize_entity(surface: str) -> str:
    """Lowercase, whitespace-collapsed form used for entity matching.

    Idempotent: normalize(normalize(s)) == normalize(s).
    """
    return _WS.sub(" ", surface.strip()).lower()


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str
    source_chunk_id: str

    def validate(self) -> None:
        for part, label in ((self.subject, "subject"), (self.predicate, "predicate"), (self.object, "object")):
            if not part.strip():
                raise InvalidRequestError(f"triple {label} empty after trimming")

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "predicate": self.predicate,
            "object": self.object,
            "source_chunk_id": self.source_chunk_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Triple":
        return cls(
            subject=d["subject"],
            predicate=d["predicate"],
            object=d["object"],
            source_chunk_id=d["source_chunk_id"],
        )


@dataclass
class ReportSection:
    heading: str
    body: str


@dataclass
class ResearchReport:
    report_id: str
    question: str
    title: str
    sections: list[ReportSection]
    conclusion: str
    references: list[str]
    created_at: str

    def validate(self) -> None:
        if not self.title.strip():
            raise InvalidRequestError("report title is empty")
        if not self.sections:
            raise InvalidRequestError("report has no sections")
        if not self.references:
            raise InvalidRequestError("report has no references")

    def to_markdown(self) -> str:
        """Render with H1 title, H2 sections, H2 Conclusion, H2 References.

        Deliberately timestamp-free so identical pipeline runs render
        byte-identical markdown.
        """
        lines = [f"# {self.title}", ""]
        for sec in self.sections:
            lines.append(f"## {sec.heading}")
            lines.append("")
            lines.append(sec.body.strip())
            lines.append("")
        lines.append("## Conclusion")
        lines.append("")
        lines.append(self.conclusion.strip())
        lines.append("")
        lines.append("## References")
        lines.append("")
        for i, ref in enumerate(self.references, start=1):
            lines.append(f"{i}. {ref}")
        lines.append("")
        return "\n".join(lines)
