"""Provider gateway: one bundle of clients for chat, embedding, search,
scraping, and transcription, constructible live (from a TOML config) or as
deterministic mocks (from a fixtures directory)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import UnsupportedProviderError
from .base import (
    ArxivEntry,
    ChatMessage,
    ChatRequest,
    ChatResult,
    ProviderConfig,
    RetryPolicy,
    SearchHit,
    TokenBucket,
    retry_call,
)
from .fetch import HttpFetcher, clean_page_text
from .mocks import (
    MockArxivSearch,
    MockChat,
    MockEmbedder,
    MockFetcher,
    MockTranscriber,
    MockWebSearch,
    hash_embedding,
    stable_text_seed,
)
from .openai_compat import OpenAICompatChat, OpenAICompatEmbedder
from .search import ArxivSearch, JsonWebSearch

__all__ = [
    "ArxivEntry",
    "ChatMessage",
    "ChatRequest",
    "ChatResult",
    "ProviderConfig",
    "ProviderSet",
    "RetryPolicy",
    "SearchHit",
    "TokenBucket",
    "retry_call",
    "clean_page_text",
    "hash_embedding",
    "stable_text_seed",
    "MockArxivSearch",
    "MockChat",
    "MockEmbedder",
    "MockFetcher",
    "MockTranscriber",
    "MockWebSearch",
    "HttpFetcher",
    "OpenAICompatChat",
    "OpenAICompatEmbedder",
    "ArxivSearch",
    "JsonWebSearch",
    "build_mock_providers",
    "build_live_providers",
]


@dataclass
class ProviderSet:
    """All external capabilities behind one object; missing ones raise typed errors."""

    chat: object = None
    embedder: object = None
    search: object = None
    arxiv: object = None
    fetcher: object = None
    transcriber: object = None

    def _require(self, provider, capability: str):
        if provider is None:
            raise UnsupportedProviderError(f"no {capability} provider configured")
        return provider

    def chat_complete(self, req: ChatRequest) -> ChatResult:
        return self._require(self.chat, "chat").chat_complete(req)

    def embed_texts(self, texts: list[str]):
        return self._require(self.embedder, "embedding").embed_texts(texts)

    @property
    def embedding_dim(self) -> int:
        return self._require(self.embedder, "embedding").embedding_dim

    def web_search(self, query: str, top_n: int) -> list[SearchHit]:
        return self._require(self.search, "web search").web_search(query, top_n)

    def arxiv_search(self, query: str, top_n: int) -> list[ArxivEntry]:
        return self._require(self.arxiv, "arXiv search").arxiv_search(query, top_n)

    def fetch_url(self, url: str) -> str:
        return self._require(self.fetcher, "URL fetch").fetch_url(url)

    def transcribe(self, media: bytes, kind: str) -> str:
        return self._require(self.transcriber, "transcription").transcribe(media, kind)


def _load_json(path: Path):
    return json.loads(path.read_text("utf-8")) if path.exists() else None


def build_mock_providers(fixtures_dir: str | Path | None = None, dim: int = 64) -> ProviderSet:
    """Fixture providers for --mock mode. All files are optional."""
    chat_fixture = search_fixture = arxiv_fixture = pages_fixture = None
    transcript = None
    if fixtures_dir is not None:
        fixtures = Path(fixtures_dir)
        chat_fixture = _load_json(fixtures / "chat.json")
        search_fixture = _load_json(fixtures / "search.json")
        arxiv_fixture = _load_json(fixtures / "arxiv.json")
        pages_fixture = _load_json(fixtures / "pages.json")
        transcript_path = fixtures / "transcript.txt"
        transcript = transcript_path.read_text("utf-8") if transcript_path.exists() else None

    chat_fixture = chat_fixture or {}
    search_fixture = search_fixture or {}
    arxiv_fixture = arxiv_fixture or {}
    return ProviderSet(
        chat=MockChat(
            rules=[tuple(r) for r in chat_fixture.get("rules", [])],
            default=chat_fixture.get("default", "OK"),
        ),
        embedder=MockEmbedder(dim=dim),
        search=MockWebSearch(
            hits=search_fixture.get("default", []),
            per_query=search_fixture.get("per_query", {}),
            fail_first=int(search_fixture.get("fail_first", 0)),
        ),
        arxiv=MockArxivSearch(
            entries=arxiv_fixture.get("default", []),
            per_query=arxiv_fixture.get("per_query", {}),
        ),
        fetcher=MockFetcher(pages=pages_fixture or {}),
        transcriber=MockTranscriber(transcript) if transcript is not None else None,
    )


def _provider_config(section: dict, defaults: dict | None = None) -> ProviderConfig:
    merged = dict(defaults or {})
    merged.update(section)
    retry = RetryPolicy(
        retries=int(merged.get("retries", 2)),
        backoff_base=float(merged.get("backoff_base", 0.5)),
    )
    config = ProviderConfig(
        endpoint=merged.get("endpoint", ""),
        api_key_env=merged.get("api_key_env", ""),
        model_id=merged.get("model", "default"),
        timeout_s=float(merged.get("timeout_s", 30.0)),
        retry=retry,
        embedding_dim=int(merged.get("dimension", 64)),
    )
    config.validate()
    return config


def build_live_providers(raw: dict) -> ProviderSet:
    """Build HTTP adapters from a parsed config mapping.

    Expected sections: [chat], [embedding], [search], [arxiv]; each provider
    is optional and simply absent from the set when unconfigured. A
    per-provider ``rate_per_s`` turns on token-bucket limiting.
    """
    providers = ProviderSet()
    if "chat" in raw:
        config = _provider_config(raw["chat"])
        bucket = TokenBucket(raw["chat"].get("rate_per_s"))
        providers.chat = OpenAICompatChat(config, bucket)
    if "embedding" in raw:
        config = _provider_config(raw["embedding"])
        bucket = TokenBucket(raw["embedding"].get("rate_per_s"))
        providers.embedder = OpenAICompatEmbedder(config, bucket)
    if "search" in raw:
        providers.search = JsonWebSearch(_provider_config(raw["search"]))
    if "arxiv" in raw:
        providers.arxiv = ArxivSearch(
            _provider_config(raw["arxiv"], {"endpoint": "https://export.arxiv.org/api/query"})
        )
    fetch_section = raw.get("fetch", {})
    providers.fetcher = HttpFetcher(
        _provider_config(fetch_section, {"timeout_s": 20.0}),
        page_cap=int(fetch_section.get("page_cap", 20_000)),
    )
    return providers
