"""Live search adapters: generic JSON web-search endpoint and the arXiv Atom API."""

from __future__ import annotations

import xml.etree.ElementTree as ET

import httpx

from ..errors import InvalidRequestError, ProviderError
from .base import (
    ArxivEntry,
    ProviderConfig,
    SearchHit,
    TimeoutFailure,
    TransientFailure,
    retry_call,
)


def _validate(query: str, top_n: int) -> None:
    if not query or not query.strip():
        raise InvalidRequestError("search query is empty")
    if top_n < 1:
        raise InvalidRequestError("top_n must be >= 1")


def _get(url: str, params: dict, config: ProviderConfig) -> httpx.Response:
    try:
        response = httpx.get(url, params=params, timeout=config.timeout_s)
    except httpx.TimeoutException as exc:
        raise TimeoutFailure(str(exc)) from exc
    except httpx.TransportError as exc:
        raise TransientFailure(str(exc)) from exc
    if response.status_code >= 500:
        raise TransientFailure(f"HTTP {response.status_code}")
    if response.status_code >= 400:
        raise ProviderError(f"search endpoint returned HTTP {response.status_code}")
    return response


class JsonWebSearch:
    """Queries a self-hosted search proxy returning
    ``[{"url": ..., "title": ..., "snippet": ...}, ...]`` ranked best-first."""

    def __init__(self, config: ProviderConfig):
        config.validate()
        self.config = config

    def web_search(self, query: str, top_n: int) -> list[SearchHit]:
        _validate(query, top_n)
        response = retry_call(
            lambda: _get(self.config.endpoint, {"q": query, "n": top_n}, self.config),
            self.config.retry,
            what="web search",
        )
        rows = response.json()
        if not isinstance(rows, list):
            raise ProviderError("search endpoint did not return a JSON list")
        hits = []
        seen: set[str] = set()
        for raw in rows:
            url = raw.get("url")
            if not url or url in seen:
                continue
            seen.add(url)
            hits.append(SearchHit(url=url, title=raw.get("title", url), snippet=raw.get("snippet", ""), rank=len(hits) + 1))
            if len(hits) == top_n:
                break
        return hits


_ATOM = "{http://www.w3.org/2005/Atom}"


class ArxivSearch:
    """Queries the arXiv Atom feed for paper metadata."""

    def __init__(self, config: ProviderConfig):
        config.validate()
        self.config = config

    def arxiv_search(self, query: str, top_n: int) -> list[ArxivEntry]:
        _validate(query, top_n)
        params = {"search_query": f"all:{query}", "start": 0, "max_results": top_n}
        response = retry_call(
            lambda: _get(self.config.endpoint, params, self.config),
            self.config.retry,
            what="arxiv search",
        )
        return parse_arxiv_feed(response.text, top_n)


def parse_arxiv_feed(feed_xml: str, top_n: int) -> list[ArxivEntry]:
    try:
        root = ET.fromstring(feed_xml)
    except ET.ParseError as exc:
        raise ProviderError(f"unparseable arXiv feed: {exc}") from exc
    entries = []
    for entry in root.findall(f"{_ATOM}entry")[:top_n]:
        raw_id = (entry.findtext(f"{_ATOM}id") or "").strip()
        short_id = raw_id.rsplit("/", 1)[-1] if raw_id else ""
        entries.append(
            ArxivEntry(
                id=short_id or raw_id,
                title=" ".join((entry.findtext(f"{_ATOM}title") or "").split()),
                abstract=" ".join((entry.findtext(f"{_ATOM}summary") or "").split()),
                url=raw_id,
            )
        )
    return entries
