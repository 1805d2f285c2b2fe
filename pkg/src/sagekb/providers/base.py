"""Provider gateway types: requests, results, config, retries, rate limiting.

Concrete adapters (live HTTP and deterministic mocks) implement the same
duck-typed surface:

    chat_complete(req: ChatRequest) -> ChatResult
    embed_texts(texts: list[str]) -> list[np.ndarray]     # unit vectors
    web_search(query: str, top_n: int) -> list[SearchHit]
    arxiv_search(query: str, top_n: int) -> list[ArxivEntry]
    fetch_url(url: str) -> str
    transcribe(media: bytes, kind: str) -> str
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from ..errors import InvalidRequestError, ProviderTimeoutError, TransportError


@dataclass
class ChatMessage:
    role: str  # system | user | assistant
    content: str


@dataclass
class ChatRequest:
    messages: list[ChatMessage]
    temperature: float = 0.0
    max_tokens: int = 1024
    model_id: str = "default"

    def validate(self) -> None:
        if not self.messages:
            raise InvalidRequestError("chat request has no messages")
        for m in self.messages:
            if m.role not in ("system", "user", "assistant"):
                raise InvalidRequestError(f"bad message role {m.role!r}")
        if self.messages[-1].role != "user":
            raise InvalidRequestError("last chat message must have role 'user'")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidRequestError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens <= 0:
            raise InvalidRequestError("max_tokens must be > 0")

    @classmethod
    def single_turn(cls, prompt: str, system: str | None = None, **kwargs) -> "ChatRequest":
        messages = []
        if system:
            messages.append(ChatMessage("system", system))
        messages.append(ChatMessage("user", prompt))
        return cls(messages=messages, **kwargs)


@dataclass
class ChatResult:
    text: str
    usage: dict[str, int] = field(default_factory=dict)


@dataclass
class SearchHit:
    url: str
    title: str
    snippet: str
    rank: int


@dataclass
class ArxivEntry:
    id: str
    title: str
    abstract: str
    url: str


@dataclass
class RetryPolicy:
    """Retry budget: ``retries`` re-attempts after the first call, with
    exponential backoff starting at ``backoff_base`` seconds."""

    retries: int = 2
    backoff_base: float = 0.5
    sleep: object = time.sleep

    def validate(self) -> None:
        if self.retries < 0:
            raise InvalidRequestError("retry count must be >= 0")
        if self.backoff_base < 0:
            raise InvalidRequestError("backoff base must be >= 0")


@dataclass
class ProviderConfig:
    endpoint: str = ""
    api_key_env: str = ""
    model_id: str = "default"
    timeout_s: float = 30.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    embedding_dim: int = 64

    def validate(self) -> None:
        if self.timeout_s <= 0:
            raise InvalidRequestError("timeout must be > 0")
        if self.embedding_dim <= 0:
            raise InvalidRequestError("embedding dimension must be > 0")
        self.retry.validate()


class TransientFailure(Exception):
    """Raised by a single provider attempt; retryable."""


class TimeoutFailure(TransientFailure):
    """A single attempt timed out; retryable."""


def retry_call(fn, policy: RetryPolicy, *, what: str = "provider call"):
    """Run ``fn`` with up to ``policy.retries`` re-attempts on transient failures.

    A call failing k <= retries times then succeeding returns normally;
    one failing retries+1 times raises a typed transport error.
    """
    attempts = policy.retries + 1
    last: TransientFailure | None = None
    for attempt in range(attempts):
        try:
            return fn()
        except TransientFailure as exc:
            last = exc
            if attempt < attempts - 1 and policy.backoff_base > 0:
                policy.sleep(policy.backoff_base * (2**attempt))
    if isinstance(last, TimeoutFailure):
        raise ProviderTimeoutError(f"{what} timed out after {attempts} attempts: {last}")
    raise TransportError(f"{what} failed after {attempts} attempts: {last}")


class TokenBucket:
    """Thread-safe token bucket honored across concurrent callers.

    ``rate`` tokens refill per second up to ``burst``; acquire() blocks until
    a token is available. A rate of None disables limiting.
    """

    def __init__(self, rate: float | None, burst: int = 1, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate
        self.burst = max(1, burst)
        self._tokens = float(self.burst)
        self._clock = clock
        self._sleep = sleep
        self._updated = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.rate is None:
            return
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.burst, self._tokens + (now - self._updated) * self.rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)
