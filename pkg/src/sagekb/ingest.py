"""Document parsing, chunking, and the ingest pipeline.

Ingest does all provider work (embedding, triple extraction) up front and
only then opens a single KB transaction, so a provider outage never leaves
partially indexed documents behind.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import EmptyExtractionError, InvalidRequestError, ParseError, UnsupportedFormatError
from .graph_index import extract_triples
from .models import Chunk, Document, MediaKind, chunk_id_for, content_digest, doc_id_for, utc_now_iso
from .providers import ProviderSet
from .store import KBStore

SUPPORTED_FORMATS = ("pdf", "docx", "txt", "csv", "xlsx", "md")

DEFAULT_TARGET_TOKENS = 512
DEFAULT_OVERLAP_TOKENS = 64


@dataclass
class ChunkingPolicy:
    target_tokens: int = DEFAULT_TARGET_TOKENS
    overlap_tokens: int = DEFAULT_OVERLAP_TOKENS

    def validate(self) -> None:
        if self.target_tokens <= 0:
            raise InvalidRequestError("target_tokens must be > 0")
        if self.overlap_tokens < 0:
            raise InvalidRequestError("overlap_tokens must be >= 0")
        if self.overlap_tokens >= self.target_tokens:
            raise InvalidRequestError("overlap_tokens must be smaller than target_tokens")


@dataclass
class IngestResult:
    doc_id: str
    chunk_count: int
    triple_count: int
    deduplicated: bool = False
    skipped_triple_lines: int = 0


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not valid UTF-8: {exc}") from exc


def _parse_csv(data: bytes) -> str:
    reader = csv.reader(io.StringIO(_decode(data)))
    rows = [row for row in reader if any(cell.strip() for cell in row)]
    if len(rows) < 2:
        raise EmptyExtractionError("csv has no data rows")
    header = [h.strip() for h in rows[0]]
    lines = []
    for row in rows[1:]:
        pairs = [f"{col}={val.strip()}" for col, val in zip(header, row)]
        lines.append(" ".join(pairs))
    return "\n".join(lines)


def _parse_pdf(data: bytes) -> str:
    try:
        from pypdf import PdfReader
    except ImportError as exc:
        raise UnsupportedFormatError(
            "pdf support requires the optional 'pypdf' backend (pip install sagekb[formats])"
        ) from exc
    reader = PdfReader(io.BytesIO(data))
    return "\n".join((page.extract_text() or "") for page in reader.pages)


def _parse_docx(data: bytes) -> str:
    try:
        import docx
    except ImportError as exc:
        raise UnsupportedFormatError(
            "docx support requires the optional 'python-docx' backend (pip install sagekb[formats])"
        ) from exc
    document = docx.Document(io.BytesIO(data))
    return "\n".join(p.text for p in document.paragraphs)


def _parse_xlsx(data: bytes) -> str:
    try:
        import openpyxl
    except ImportError as exc:
        raise UnsupportedFormatError(
            "xlsx support requires the optional 'openpyxl' backend (pip install sagekb[formats])"
        ) from exc
    workbook = openpyxl.load_workbook(io.BytesIO(data), read_only=True, data_only=True)
    lines = []
    for sheet in workbook.worksheets:
        rows = sheet.iter_rows(values_only=True)
        try:
            header = [str(h) if h is not None else f"col{i}" for i, h in enumerate(next(rows))]
        except StopIteration:
            continue
        for row in rows:
            pairs = [f"{col}={'' if val is None else val}" for col, val in zip(header, row)]
            lines.append(" ".join(pairs))
    return "\n".join(lines)


def parse_document(data: bytes, format: str) -> str:
    """Extract plain text; tabular formats are flattened to "col=value" lines."""
    if format not in SUPPORTED_FORMATS:
        raise UnsupportedFormatError(f"unsupported format {format!r}; supported: {SUPPORTED_FORMATS}")
    if format in ("txt", "md"):
        text = _decode(data)
    elif format == "csv":
        text = _parse_csv(data)
    elif format == "pdf":
        text = _parse_pdf(data)
    elif format == "docx":
        text = _parse_docx(data)
    else:
        text = _parse_xlsx(data)
    if not text.strip():
        raise EmptyExtractionError(f"no text extracted from {format} input")
    return text


def tokenize(text: str) -> list[str]:
    """Whitespace word tokens; deterministic and provider-independent."""
    return text.split()


def chunk_text(text: str, policy: ChunkingPolicy | None = None) -> list[str]:
    """Split into overlapping windows of at most target_tokens tokens.

    Consecutive chunks share exactly overlap_tokens tokens; stripping the
    overlaps and concatenating reproduces the document token stream.
    """
    policy = policy or ChunkingPolicy()
    policy.validate()
    if not text.strip():
        raise InvalidRequestError("cannot chunk empty text")
    tokens = tokenize(text)
    target, overlap = policy.target_tokens, policy.overlap_tokens
    stride = target - overlap
    chunks = [" ".join(tokens[:target])]
    start = 0
    while start + target < len(tokens):
        start += stride
        chunks.append(" ".join(tokens[start : start + target]))
    return chunks


def ingest_text(
    store: KBStore,
    providers: ProviderSet,
    text: str,
    source_name: str,
    *,
    media_kind: MediaKind = MediaKind.TEXT,
    metadata: dict[str, str] | None = None,
    policy: ChunkingPolicy | None = None,
    max_triples_per_chunk: int = 10,
    extraction_parallelism: int = 4,
) -> IngestResult:
    """Chunk, embed, extract triples, and commit atomically."""
    if not text.strip():
        raise EmptyExtractionError("document text is empty")
    digest = content_digest(text)
    existing = store.find_doc_by_hash(digest)
    if existing is not None:
        return IngestResult(
            doc_id=existing.doc_id,
            chunk_count=len(store.chunks_for_doc(existing.doc_id)),
            triple_count=len(store.triples_for_doc(existing.doc_id)),
            deduplicated=True,
        )

    doc_id = doc_id_for(digest)
    chunk_texts = chunk_text(text, policy)
    embeddings = providers.embed_texts(chunk_texts)
    chunks = [
        Chunk(
            chunk_id=chunk_id_for(doc_id, i),
            doc_id=doc_id,
            ordinal=i,
            text=chunk_texts[i],
            token_count=len(tokenize(chunk_texts[i])),
            embedding=embeddings[i],
        )
        for i in range(len(chunk_texts))
    ]

    skipped = 0
    triples = []
    with ThreadPoolExecutor(max_workers=max(1, extraction_parallelism)) as pool:
        extractions = list(
            pool.map(lambda c: extract_triples(providers, c, max_triples=max_triples_per_chunk), chunks)
        )
    for extraction in extractions:
        triples.extend(extraction.triples)
        skipped += extraction.skipped

    doc = Document(
        doc_id=doc_id,
        kb_id=store.meta.kb_id,
        source_name=source_name,
        media_kind=media_kind,
        content_hash=digest,
        ingested_at=utc_now_iso(),
        metadata=dict(metadata or {}),
    )
    with store.transaction() as tx:
        tx.add_document(doc)
        chunk_count = tx.add_chunks(chunks)
        triple_count = tx.add_triples(triples)
    return IngestResult(
        doc_id=doc_id,
        chunk_count=chunk_count,
        triple_count=triple_count,
        skipped_triple_lines=skipped,
    )


def ingest_document(
    store: KBStore,
    providers: ProviderSet,
    data: bytes,
    format: str,
    source_name: str,
    **kwargs,
) -> IngestResult:
    text = parse_document(data, format)
    return ingest_text(store, providers, text, source_name, **kwargs)


def ingest_media(
    store: KBStore,
    providers: ProviderSet,
    media: bytes,
    kind: str,
    source_name: str,
    **kwargs,
) -> IngestResult:
    """Transcribe audio/video and index the transcript text; the media bytes
    themselves are never stored."""
    transcript = providers.transcribe(media, kind)
    return ingest_text(
        store,
        providers,
        transcript,
        source_name,
        media_kind=MediaKind.TRANSCRIPT,
        **kwargs,
    )
