"""sagekb: persistent knowledge bases with hybrid vector + knowledge-graph
retrieval, web/arXiv research-report generation, and an LLM-judge evaluation
harness."""

__version__ = "0.1.0"

from .errors import SageKBError
from .ingest import ChunkingPolicy, IngestResult, chunk_text, ingest_document, parse_document
from .models import Chunk, Document, KnowledgeBase, ResearchReport, Triple
from .rag import AnswerWithReferences, ContextBundle, RetrievalMode, chat, retrieve, synthesize_answer
from .report import ReportJob, run_report_job
from .store import KBStore, Registry

__all__ = [
    "AnswerWithReferences",
    "Chunk",
    "ChunkingPolicy",
    "ContextBundle",
    "Document",
    "IngestResult",
    "KBStore",
    "KnowledgeBase",
    "Registry",
    "ReportJob",
    "ResearchReport",
    "RetrievalMode",
    "SageKBError",
    "Triple",
    "__version__",
    "chat",
    "chunk_text",
    "ingest_document",
    "parse_document",
    "retrieve",
    "run_report_job",
    "synthesize_answer",
]
