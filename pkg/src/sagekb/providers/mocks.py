"""Deterministic offline providers.

Every mock is a pure function of its inputs and fixture data, so the whole
test suite runs offline and is bit-reproducible across runs and processes.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import (
    FetchFailureError,
    InvalidRequestError,
    ProviderRefusalError,
)
from .base import (
    ArxivEntry,
    ChatRequest,
    ChatResult,
    ProviderConfig,
    RetryPolicy,
    SearchHit,
    TransientFailure,
    retry_call,
)
from .fetch import clean_page_text, require_absolute_url

_NO_SLEEP = RetryPolicy(retries=2, backoff_base=0.0)


def stable_text_seed(text: str) -> int:
    """Stable 64-bit hash of the text; identical across processes and runs."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def hash_embedding(text: str, dim: int) -> np.ndarray:
    """Pseudo-random unit vector seeded by a stable hash of the text.

    Equal text always maps to the same vector, which every retrieval test
    relies on.
    """
    rng = np.random.default_rng(stable_text_seed(text))
    vec = rng.standard_normal(dim)
    vec /= np.linalg.norm(vec)
    return vec.astype(np.float32)


class MockChat:
    """Scripted chat provider.

    ``rules`` is an ordered list of (substring, response) pairs matched
    against the concatenated message contents; first match wins, falling back
    to ``default``. An optional ``responder`` callable gets first refusal and
    may return None to fall through to the rules.
    """

    def __init__(
        self,
        rules: list[tuple[str, str]] | None = None,
        default: str = "OK",
        responder=None,
        refuse_on: str | None = None,
        fail_first: int = 0,
        retry: RetryPolicy | None = None,
    ):
        self.rules = list(rules or [])
        self.default = default
        self.responder = responder
        self.refuse_on = refuse_on
        self._failures_left = fail_first
        self.retry = retry or _NO_SLEEP
        self.calls: list[ChatRequest] = []

    def chat_complete(self, req: ChatRequest) -> ChatResult:
        req.validate()
        return retry_call(lambda: self._attempt(req), self.retry, what="mock chat")

    def _attempt(self, req: ChatRequest) -> ChatResult:
        if self._failures_left > 0:
            self._failures_left -= 1
            raise TransientFailure("scripted transport failure")
        self.calls.append(req)
        prompt = "\n".join(m.content for m in req.messages)
        if self.refuse_on and self.refuse_on in prompt:
            raise ProviderRefusalError("scripted refusal")
        text = None
        if self.responder is not None:
            text = self.responder(prompt)
        if text is None:
            for pattern, response in self.rules:
                if pattern in prompt:
                    text = response
                    break
        if text is None:
            text = self.default
        usage = {
            "prompt_tokens": sum(len(m.content.split()) for m in req.messages),
            "completion_tokens": len(text.split()),
        }
        return ChatResult(text=text, usage=usage)


class MockEmbedder:
    """Hash-seeded pseudo-random unit embeddings (dimension 64 in tests)."""

    def __init__(self, dim: int = 64, fail_first: int = 0, retry: RetryPolicy | None = None):
        self.dim = dim
        self._failures_left = fail_first
        self.retry = retry or _NO_SLEEP
        self.calls = 0

    @property
    def embedding_dim(self) -> int:
        return self.dim

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        for t in texts:
            if not t or not t.strip():
                raise InvalidRequestError("cannot embed empty text")
        return retry_call(lambda: self._attempt(texts), self.retry, what="mock embed")

    def _attempt(self, texts: list[str]) -> list[np.ndarray]:
        if self._failures_left > 0:
            self._failures_left -= 1
            raise TransientFailure("scripted transport failure")
        self.calls += 1
        return [hash_embedding(t, self.dim) for t in texts]


def _validate_search_args(query: str, top_n: int) -> None:
    if not query or not query.strip():
        raise InvalidRequestError("search query is empty")
    if top_n < 1:
        raise InvalidRequestError("top_n must be >= 1")


class MockWebSearch:
    """Fixture-backed search; fixture order is rank order."""

    def __init__(
        self,
        hits: list[dict] | None = None,
        per_query: dict[str, list[dict]] | None = None,
        fail_first: int = 0,
        retry: RetryPolicy | None = None,
    ):
        self.hits = list(hits or [])
        self.per_query = dict(per_query or {})
        self._failures_left = fail_first
        self.retry = retry or _NO_SLEEP

    def web_search(self, query: str, top_n: int) -> list[SearchHit]:
        _validate_search_args(query, top_n)
        return retry_call(lambda: self._attempt(query, top_n), self.retry, what="mock search")

    def _attempt(self, query: str, top_n: int) -> list[SearchHit]:
        if self._failures_left > 0:
            self._failures_left -= 1
            raise TransientFailure("scripted transport failure")
        fixture = self.per_query.get(query, self.hits)
        out = []
        seen: set[str] = set()
        for raw in fixture:
            if raw["url"] in seen:
                continue
            seen.add(raw["url"])
            out.append(
                SearchHit(
                    url=raw["url"],
                    title=raw.get("title", raw["url"]),
                    snippet=raw.get("snippet", ""),
                    rank=len(out) + 1,
                )
            )
            if len(out) == top_n:
                break
        return out


class MockArxivSearch:
    def __init__(self, entries: list[dict] | None = None, per_query: dict[str, list[dict]] | None = None):
        self.entries = list(entries or [])
        self.per_query = dict(per_query or {})

    def arxiv_search(self, query: str, top_n: int) -> list[ArxivEntry]:
        _validate_search_args(query, top_n)
        fixture = self.per_query.get(query, self.entries)
        out = []
        for raw in fixture[:top_n]:
            out.append(
                ArxivEntry(
                    id=raw["id"],
                    title=raw.get("title", raw["id"]),
                    abstract=raw.get("abstract", ""),
                    url=raw.get("url", f"https://arxiv.org/abs/{raw['id']}"),
                )
            )
        return out


class MockFetcher:
    """Serves scripted pages; unknown URLs behave like a 404."""

    def __init__(self, pages: dict[str, str] | None = None, page_cap: int = 20_000):
        self.pages = dict(pages or {})
        self.page_cap = page_cap

    def fetch_url(self, url: str) -> str:
        require_absolute_url(url)
        if url not in self.pages:
            raise FetchFailureError(f"GET {url} returned HTTP 404")
        return clean_page_text(self.pages[url], cap=self.page_cap)


class MockTranscriber:
    def __init__(self, transcript: str = "mock transcript"):
        self.transcript = transcript

    def transcribe(self, media: bytes, kind: str) -> str:
        if kind not in ("audio", "video"):
            raise InvalidRequestError(f"unsupported media kind {kind!r}")
        if not media:
            raise InvalidRequestError("empty media stream")
        return self.transcript


def mock_provider_config(dim: int = 64) -> ProviderConfig:
    return ProviderConfig(
        endpoint="mock://",
        model_id="mock",
        timeout_s=5.0,
        retry=RetryPolicy(retries=2, backoff_base=0.0),
        embedding_dim=dim,
    )
