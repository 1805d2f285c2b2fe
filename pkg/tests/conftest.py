"""Shared fixtures: deterministic providers scripted for a small Lincoln-era
corpus that exercises ingestion, both indices, chat, reports, and evaluation."""

from __future__ import annotations

import numpy as np
import pytest

from sagekb.models import Chunk, chunk_id_for
from sagekb.providers import (
    MockArxivSearch,
    MockChat,
    MockEmbedder,
    MockFetcher,
    MockTranscriber,
    MockWebSearch,
    ProviderSet,
    hash_embedding,
)
from sagekb.store import Registry

DIM = 64

DOC_LINCOLN = (
    "Abraham Lincoln was born in 1809 in Kentucky. "
    "Lincoln led the Union through the Civil War. "
    "The Gettysburg Address was delivered in 1863."
)
DOC_GRANT = (
    "Ulysses Grant commanded the Union army. "
    "Grant accepted the surrender at Appomattox in 1865."
)
DOC_PLAIN = "Shampoo formulations often include surfactants and conditioning polymers."


def scripted_responder(prompt: str) -> str | None:
    """Stage-aware scripted chat: discriminates pipeline stages by template
    markers and picks content by substrings of the embedded text."""
    if "Extract factual knowledge triples" in prompt:
        if "Abraham Lincoln was born" in prompt:
            return (
                "(Abraham Lincoln | born in | 1809)\n"
                "(Abraham Lincoln | led | Union)\n"
                "(Gettysburg Address | delivered in | 1863)"
            )
        if "Ulysses Grant commanded" in prompt:
            return "(Ulysses Grant | commanded | Union army)\n(Ulysses Grant | accepted surrender at | Appomattox)"
        return "no structured facts found"
    if "List the named entities" in prompt:
        if "Abraham Lincoln" in prompt:
            return "Abraham Lincoln"
        if "Grant" in prompt:
            return "Ulysses Grant"
        if "Union" in prompt:
            return "Union"
        return ""
    if "Rewrite the follow-up" in prompt:
        if "when was he born" in prompt:
            return "when was Abraham Lincoln born?"
        return None
    if "numbered context passages" in prompt:
        return "ANSWER"
    return None


@pytest.fixture
def registry(tmp_path):
    return Registry(tmp_path / "kbs")


@pytest.fixture
def providers():
    return ProviderSet(
        chat=MockChat(responder=scripted_responder, default="OK"),
        embedder=MockEmbedder(dim=DIM),
        search=MockWebSearch(),
        arxiv=MockArxivSearch(),
        fetcher=MockFetcher(),
        transcriber=MockTranscriber("transcript of the recording"),
    )


def make_chunk(text: str, doc_id: str = "doc-x", ordinal: int = 0, dim: int = DIM) -> Chunk:
    return Chunk(
        chunk_id=chunk_id_for(doc_id, ordinal),
        doc_id=doc_id,
        ordinal=ordinal,
        text=text,
        token_count=max(1, len(text.split())),
        embedding=hash_embedding(text, dim),
    )


def unit_vector(seed_text: str, dim: int = DIM) -> np.ndarray:
    return hash_embedding(seed_text, dim)
