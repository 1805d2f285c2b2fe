"""On-disk knowledge-base registry and per-KB persistence.

Layout (root configurable via ``SAGEKB_ROOT``)::

    <root>/<kb_id>/manifest.json     # KB metadata, documents, counts, file digests
    <root>/<kb_id>/chunks.jsonl      # append-only chunk records (embeddings inline)
    <root>/<kb_id>/triples.jsonl     # append-only triple records
    <root>/<kb_id>/reports/<id>.md   # generated research reports

All records are line-delimited JSON. The manifest stores a sha256 digest of
each record file; ``open_kb`` re-hashes the files so any tampering or torn
write surfaces as a corrupted-store error instead of silently wrong results.

Concurrency: one exclusive file lock per KB serializes writers (and snapshot
loads); readers work on the immutable in-memory snapshot taken at open time.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from pathlib import Path

from filelock import FileLock

from .errors import (
    CorruptedStoreError,
    DanglingProvenanceError,
    DuplicateNameError,
    InvalidRequestError,
    KBNotFoundError,
    ReportNotFoundError,
    StorageError,
)
from .models import (
    Chunk,
    Document,
    IndexManifest,
    KnowledgeBase,
    Triple,
    new_kb_id,
    utc_now_iso,
)

MANIFEST = "manifest.json"
CHUNKS_FILE = "chunks.jsonl"
TRIPLES_FILE = "triples.jsonl"
REPORTS_DIR = "reports"
LOCK_FILE = ".lock"

DEFAULT_ROOT = "sagekb_data"
LOCK_TIMEOUT_S = 30.0


def _file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def resolve_root(root: str | os.PathLike | None = None) -> Path:
    if root is not None:
        return Path(root)
    return Path(os.environ.get("SAGEKB_ROOT", DEFAULT_ROOT))


class KBStore:
    """Handle on one knowledge base: immutable snapshot + serialized writes."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = FileLock(str(self.path / LOCK_FILE), timeout=LOCK_TIMEOUT_S)
        self.meta: KnowledgeBase = None  # type: ignore[assignment]
        self.documents: dict[str, Document] = {}
        self.chunks: list[Chunk] = []
        self.triples: list[Triple] = []
        self._chunk_ids: set[str] = set()
        self._chunks_by_id: dict[str, Chunk] = {}
        self._vector_index = None
        self._graph_index = None
        self.reload()

    # -- snapshot loading ---------------------------------------------------

    def reload(self) -> None:
        """Re-read the KB from disk, verifying digests and counts."""
        with self._lock:
            manifest = self._read_manifest()
            chunks_path = self.path / CHUNKS_FILE
            triples_path = self.path / TRIPLES_FILE
            for fname, path, key in (
                (CHUNKS_FILE, chunks_path, "chunks_digest"),
                (TRIPLES_FILE, triples_path, "triples_digest"),
            ):
                if not path.exists():
                    raise CorruptedStoreError(f"{fname} missing for KB at {self.path}")
                actual = _file_digest(path)
                if actual != manifest[key]:
                    raise CorruptedStoreError(
                        f"{fname} digest mismatch for KB {manifest['kb_id']}: "
                        f"expected {manifest[key][:12]}..., got {actual[:12]}..."
                    )
            chunks = [Chunk.from_dict(json.loads(line)) for line in _iter_lines(chunks_path)]
            triples = [Triple.from_dict(json.loads(line)) for line in _iter_lines(triples_path)]
            if len(chunks) != manifest["vector_manifest"]["count"]:
                raise CorruptedStoreError(
                    f"chunk count {len(chunks)} != manifest count "
                    f"{manifest['vector_manifest']['count']}"
                )
            if len(triples) != manifest["graph_manifest"]["count"]:
                raise CorruptedStoreError(
                    f"triple count {len(triples)} != manifest count "
                    f"{manifest['graph_manifest']['count']}"
                )
            docs = [Document.from_dict(d) for d in manifest["documents"]]
            self.meta = KnowledgeBase(
                kb_id=manifest["kb_id"],
                name=manifest["name"],
                created_at=manifest["created_at"],
                document_ids=[d.doc_id for d in docs],
                vector_manifest=IndexManifest.from_dict(manifest["vector_manifest"]),
                graph_manifest=IndexManifest.from_dict(manifest["graph_manifest"]),
            )
            self.documents = {d.doc_id: d for d in docs}
            self.chunks = chunks
            self.triples = triples
            self._chunk_ids = {c.chunk_id for c in chunks}
            self._chunks_by_id = {c.chunk_id: c for c in chunks}
            self._vector_index = None
            self._graph_index = None

    def _read_manifest(self) -> dict:
        manifest_path = self.path / MANIFEST
        if not manifest_path.exists():
            raise KBNotFoundError(f"no manifest at {manifest_path}")
        try:
            return json.loads(manifest_path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptedStoreError(f"unreadable manifest at {manifest_path}: {exc}") from exc

    # -- cached index views ---------------------------------------------------

    def vector_index(self):
        if self._vector_index is None:
            from .vector_index import VectorIndex

            idx = VectorIndex()
            idx.add_chunks(self.chunks)
            self._vector_index = idx
        return self._vector_index

    def graph_index(self):
        if self._graph_index is None:
            from .graph_index import GraphIndex

            idx = GraphIndex(known_chunk_ids=self._chunk_ids)
            idx.add_triples(self.triples)
            self._graph_index = idx
        return self._graph_index

    def chunk_by_id(self, chunk_id: str) -> Chunk:
        return self._chunks_by_id[chunk_id]

    def find_doc_by_hash(self, content_hash: str) -> Document | None:
        for doc in self.documents.values():
            if doc.content_hash == content_hash:
                return doc
        return None

    def chunks_for_doc(self, doc_id: str) -> list[Chunk]:
        return [c for c in self.chunks if c.doc_id == doc_id]

    def triples_for_doc(self, doc_id: str) -> list[Triple]:
        doc_chunk_ids = {c.chunk_id for c in self.chunks if c.doc_id == doc_id}
        return [t for t in self.triples if t.source_chunk_id in doc_chunk_ids]

    # -- mutation -------------------------------------------------------------

    def transaction(self) -> "KBTransaction":
        return KBTransaction(self)

    # -- reports ----------------------------------------------------------------

    def save_report(self, report_id: str, markdown: str) -> Path:
        reports = self.path / REPORTS_DIR
        reports.mkdir(exist_ok=True)
        out = reports / f"{report_id}.md"
        out.write_text(markdown, encoding="utf-8")
        return out

    def read_report(self, report_id: str) -> str:
        out = self.path / REPORTS_DIR / f"{report_id}.md"
        if not out.exists():
            raise ReportNotFoundError(f"report {report_id} not found in KB {self.meta.kb_id}")
        return out.read_text("utf-8")

    def list_reports(self) -> list[str]:
        reports = self.path / REPORTS_DIR
        if not reports.exists():
            return []
        return sorted(p.stem for p in reports.glob("*.md"))

    # -- test/diagnostic helper --------------------------------------------------

    def enumerate_state(self) -> dict:
        """Canonical full-state view used to assert atomicity and round-trips."""
        return {
            "documents": sorted(
                (d.to_dict() for d in self.documents.values()), key=lambda d: d["doc_id"]
            ),
            "chunks": sorted((c.to_dict() for c in self.chunks), key=lambda d: d["chunk_id"]),
            "triples": sorted(
                (t.to_dict() for t in self.triples),
                key=lambda d: (d["subject"], d["predicate"], d["object"], d["source_chunk_id"]),
            ),
            "vector_manifest": self.meta.vector_manifest.to_dict(),
            "graph_manifest": self.meta.graph_manifest.to_dict(),
        }


class KBTransaction:
    """Single-writer mutation scope; appends roll back on failure."""

    def __init__(self, store: KBStore):
        self.store = store
        self._new_docs: list[Document] = []
        self._new_chunks: list[Chunk] = []
        self._new_triples: list[Triple] = []
        self._active = False

    def __enter__(self) -> "KBTransaction":
        self.store._lock.acquire()
        self._active = True
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        try:
            if exc_type is None:
                self._commit()
        finally:
            self._active = False
            self.store._lock.release()
        return False

    def add_document(self, doc: Document) -> None:
        if doc.doc_id in self.store.documents or any(d.doc_id == doc.doc_id for d in self._new_docs):
            raise InvalidRequestError(f"document {doc.doc_id} already present")
        self._new_docs.append(doc)

    def add_chunks(self, chunks: list[Chunk]) -> int:
        """Stage chunks; re-adding an existing chunk_id is a no-op. Returns count staged."""
        added = 0
        staged = {c.chunk_id for c in self._new_chunks}
        for chunk in chunks:
            if chunk.chunk_id in self.store._chunk_ids or chunk.chunk_id in staged:
                continue
            chunk.validate()
            self._new_chunks.append(chunk)
            staged.add(chunk.chunk_id)
            added += 1
        return added

    def add_triples(self, triples: list[Triple]) -> int:
        """Stage triples; exact duplicates are no-ops; provenance must resolve."""
        known_chunks = self.store._chunk_ids | {c.chunk_id for c in self._new_chunks}
        existing = set(self.store.triples)
        staged = set(self._new_triples)
        added = 0
        for triple in triples:
            triple.validate()
            if triple.source_chunk_id not in known_chunks:
                raise DanglingProvenanceError(
                    f"triple references unknown chunk {triple.source_chunk_id!r}"
                )
            if triple in existing or triple in staged:
                continue
            self._new_triples.append(triple)
            staged.add(triple)
            added += 1
        return added

    def _commit(self) -> None:
        if not (self._new_docs or self._new_chunks or self._new_triples):
            return
        store = self.store
        chunks_path = store.path / CHUNKS_FILE
        triples_path = store.path / TRIPLES_FILE
        chunks_size = chunks_path.stat().st_size
        triples_size = triples_path.stat().st_size
        try:
            _append_jsonl(chunks_path, (c.to_dict() for c in self._new_chunks))
            _append_jsonl(triples_path, (t.to_dict() for t in self._new_triples))
            meta = store.meta
            documents = list(store.documents.values()) + self._new_docs
            manifest = {
                "kb_id": meta.kb_id,
                "name": meta.name,
                "created_at": meta.created_at,
                "documents": [d.to_dict() for d in documents],
                "vector_manifest": {
                    "version": meta.vector_manifest.version + (1 if self._new_chunks else 0),
                    "count": meta.vector_manifest.count + len(self._new_chunks),
                },
                "graph_manifest": {
                    "version": meta.graph_manifest.version + (1 if self._new_triples else 0),
                    "count": meta.graph_manifest.count + len(self._new_triples),
                },
                "chunks_digest": _file_digest(chunks_path),
                "triples_digest": _file_digest(triples_path),
            }
            _write_manifest(store.path, manifest)
        except BaseException:
            # Undo partial appends so the on-disk state matches the old manifest.
            with open(chunks_path, "rb+") as f:
                f.truncate(chunks_size)
            with open(triples_path, "rb+") as f:
                f.truncate(triples_size)
            raise
        # Publish the new snapshot.
        for doc in self._new_docs:
            store.documents[doc.doc_id] = doc
            store.meta.document_ids.append(doc.doc_id)
        store.chunks.extend(self._new_chunks)
        store.triples.extend(self._new_triples)
        store._chunk_ids.update(c.chunk_id for c in self._new_chunks)
        store._chunks_by_id.update({c.chunk_id: c for c in self._new_chunks})
        store.meta.vector_manifest = IndexManifest.from_dict(manifest["vector_manifest"])
        store.meta.graph_manifest = IndexManifest.from_dict(manifest["graph_manifest"])
        store._vector_index = None
        store._graph_index = None


class Registry:
    """Collection of knowledge bases under one root directory."""

    def __init__(self, root: str | os.PathLike | None = None):
        self.root = resolve_root(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._registry_lock = FileLock(str(self.root / ".registry.lock"), timeout=LOCK_TIMEOUT_S)

    def create_kb(self, name: str) -> KBStore:
        if not name or not name.strip():
            raise InvalidRequestError("KB name must be non-empty")
        name = name.strip()
        with self._registry_lock:
            for entry in self.list_kbs():
                if entry["name"] == name:
                    raise DuplicateNameError(f"a KB named {name!r} already exists")
            kb_id = new_kb_id()
            path = self.root / kb_id
            try:
                path.mkdir()
                (path / CHUNKS_FILE).touch()
                (path / TRIPLES_FILE).touch()
                (path / REPORTS_DIR).mkdir()
                manifest = {
                    "kb_id": kb_id,
                    "name": name,
                    "created_at": utc_now_iso(),
                    "documents": [],
                    "vector_manifest": {"version": 0, "count": 0},
                    "graph_manifest": {"version": 0, "count": 0},
                    "chunks_digest": _file_digest(path / CHUNKS_FILE),
                    "triples_digest": _file_digest(path / TRIPLES_FILE),
                }
                _write_manifest(path, manifest)
            except OSError as exc:
                raise StorageError(f"could not initialize KB directory {path}: {exc}") from exc
        return KBStore(path)

    def open_kb(self, kb_id: str) -> KBStore:
        path = self.root / kb_id
        if not path.is_dir() or not (path / MANIFEST).exists():
            raise KBNotFoundError(f"no KB {kb_id!r} under {self.root}")
        return KBStore(path)

    def list_kbs(self) -> list[dict]:
        entries = []
        for path in sorted(self.root.iterdir()):
            manifest_path = path / MANIFEST
            if not path.is_dir() or not manifest_path.exists():
                continue
            try:
                manifest = json.loads(manifest_path.read_text("utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise StorageError(f"unreadable manifest {manifest_path}: {exc}") from exc
            entries.append(
                {
                    "kb_id": manifest["kb_id"],
                    "name": manifest["name"],
                    "created_at": manifest["created_at"],
                    "document_count": len(manifest["documents"]),
                    "chunk_count": manifest["vector_manifest"]["count"],
                    "triple_count": manifest["graph_manifest"]["count"],
                }
            )
        return entries

    def delete_kb(self, kb_id: str) -> None:
        path = self.root / kb_id
        if not path.is_dir() or not (path / MANIFEST).exists():
            raise KBNotFoundError(f"no KB {kb_id!r} under {self.root}")
        with self._registry_lock:
            shutil.rmtree(path)


def _iter_lines(path: Path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield line


def _append_jsonl(path: Path, records) -> None:
    with open(path, "a", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _write_manifest(path: Path, manifest: dict) -> None:
    tmp = path / (MANIFEST + ".tmp")
    tmp.write_text(json.dumps(manifest, ensure_ascii=False, indent=2), encoding="utf-8")
    os.replace(tmp, path / MANIFEST)
