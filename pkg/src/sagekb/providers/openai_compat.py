"""Live chat and embedding adapters speaking the OpenAI-compatible HTTP schema.

One adapter reaches both hosted models and privately deployed open models, as
long as they expose /chat/completions and /embeddings.
"""

from __future__ import annotations

import os

import httpx
import numpy as np

from ..errors import DimensionMismatchError, InvalidRequestError, ProviderError, ProviderRefusalError
from .base import (
    ChatRequest,
    ChatResult,
    ProviderConfig,
    TimeoutFailure,
    TokenBucket,
    TransientFailure,
    retry_call,
)


def _post_json(url: str, payload: dict, config: ProviderConfig) -> dict:
    headers = {"content-type": "application/json"}
    api_key = os.environ.get(config.api_key_env, "") if config.api_key_env else ""
    if api_key:
        headers["authorization"] = f"Bearer {api_key}"
    try:
        response = httpx.post(url, json=payload, headers=headers, timeout=config.timeout_s)
    except httpx.TimeoutException as exc:
        raise TimeoutFailure(str(exc)) from exc
    except httpx.TransportError as exc:
        raise TransientFailure(str(exc)) from exc
    if response.status_code in (429,) or response.status_code >= 500:
        raise TransientFailure(f"HTTP {response.status_code}: {response.text[:200]}")
    if response.status_code >= 400:
        raise ProviderError(f"HTTP {response.status_code}: {response.text[:200]}")
    return response.json()


class OpenAICompatChat:
    def __init__(self, config: ProviderConfig, bucket: TokenBucket | None = None):
        config.validate()
        self.config = config
        self.bucket = bucket or TokenBucket(None)

    def chat_complete(self, req: ChatRequest) -> ChatResult:
        req.validate()
        self.bucket.acquire()
        payload = {
            "model": req.model_id if req.model_id != "default" else self.config.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        data = retry_call(lambda: _post_json(url, payload, self.config), self.config.retry, what="chat completion")
        choices = data.get("choices") or []
        if not choices:
            raise ProviderError("chat response has no choices")
        choice = choices[0]
        if choice.get("finish_reason") == "content_filter":
            raise ProviderRefusalError("provider refused the request (content filter)")
        text = (choice.get("message") or {}).get("content") or ""
        if not text.strip():
            raise ProviderError("chat response has empty content")
        usage = data.get("usage") or {}
        return ChatResult(text=text, usage={k: int(v) for k, v in usage.items() if isinstance(v, int)})


class OpenAICompatEmbedder:
    def __init__(self, config: ProviderConfig, bucket: TokenBucket | None = None):
        config.validate()
        self.config = config
        self.bucket = bucket or TokenBucket(None)

    @property
    def embedding_dim(self) -> int:
        return self.config.embedding_dim

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        for t in texts:
            if not t or not t.strip():
                raise InvalidRequestError("cannot embed empty text")
        self.bucket.acquire()
        url = self.config.endpoint.rstrip("/") + "/embeddings"
        payload = {"model": self.config.model_id, "input": texts}
        data = retry_call(lambda: _post_json(url, payload, self.config), self.config.retry, what="embedding")
        rows = sorted(data.get("data") or [], key=lambda r: r.get("index", 0))
        if len(rows) != len(texts):
            raise ProviderError(f"expected {len(texts)} embeddings, got {len(rows)}")
        out = []
        for row in rows:
            vec = np.asarray(row["embedding"], dtype=np.float64)
            if vec.shape != (self.config.embedding_dim,):
                raise DimensionMismatchError(
                    f"remote embedding dimension {vec.shape[0]} != configured {self.config.embedding_dim}"
                )
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise ProviderError("remote returned a zero embedding")
            out.append((vec / norm).astype(np.float32))
        return out
