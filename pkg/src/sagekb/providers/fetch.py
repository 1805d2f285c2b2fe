"""URL fetching and HTML-to-text cleaning."""

from __future__ import annotations

from html.parser import HTMLParser
from urllib.parse import urlparse

import httpx

from ..errors import FetchFailureError, InvalidRequestError, NonTextContentError
from .base import ProviderConfig, TimeoutFailure, TransientFailure, retry_call

DEFAULT_PAGE_CAP = 20_000
TRUNCATION_MARKER = " [truncated]"

_SKIPPED_TAGS = {"script", "style", "noscript", "template"}

_TEXT_CONTENT_PREFIXES = ("text/",)
_TEXT_CONTENT_TYPES = {"application/json", "application/xml", "application/xhtml+xml"}


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self._pieces: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIPPED_TAGS:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in _SKIPPED_TAGS and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data):
        if self._skip_depth == 0 and data.strip():
            self._pieces.append(data)

    def text(self) -> str:
        return " ".join(self._pieces)


def clean_page_text(markup: str, cap: int = DEFAULT_PAGE_CAP) -> str:
    """Strip markup to visible text, collapse whitespace, cap the length."""
    parser = _TextExtractor()
    parser.feed(markup)
    parser.close()
    text = " ".join(parser.text().split())
    if len(text) > cap:
        text = text[:cap] + TRUNCATION_MARKER
    return text


def require_absolute_url(url: str) -> None:
    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise InvalidRequestError(f"not an absolute http(s) URL: {url!r}")


def is_texty_content_type(content_type: str) -> bool:
    base = content_type.split(";")[0].strip().lower()
    return base.startswith(_TEXT_CONTENT_PREFIXES) or base in _TEXT_CONTENT_TYPES


class HttpFetcher:
    """Scrapes a URL to cleaned visible text."""

    def __init__(self, config: ProviderConfig | None = None, page_cap: int = DEFAULT_PAGE_CAP):
        self.config = config or ProviderConfig()
        self.page_cap = page_cap

    def fetch_url(self, url: str) -> str:
        require_absolute_url(url)

        def attempt() -> httpx.Response:
            try:
                return httpx.get(url, timeout=self.config.timeout_s, follow_redirects=True)
            except httpx.TimeoutException as exc:
                raise TimeoutFailure(str(exc)) from exc
            except httpx.TransportError as exc:
                raise TransientFailure(str(exc)) from exc

        response = retry_call(attempt, self.config.retry, what=f"fetch {url}")
        if response.status_code >= 400:
            raise FetchFailureError(f"GET {url} returned HTTP {response.status_code}")
        content_type = response.headers.get("content-type", "text/html")
        if not is_texty_content_type(content_type):
            raise NonTextContentError(f"{url} has non-text content type {content_type!r}")
        return clean_page_text(response.text, cap=self.page_cap)
