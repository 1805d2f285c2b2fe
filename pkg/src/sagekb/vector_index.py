"""Embedding similarity index over chunks: exact cosine top-k via dot products
on pre-normalized vectors.

Results are fully deterministic: sorted by descending score, ties broken by
ascending chunk_id, independent of insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _scan
from .errors import DimensionMismatchError, InvalidRequestError
from .models import EMBEDDING_NORM_TOL, Chunk


@dataclass
class ScoredChunk:
    chunk_id: str
    score: float
    rank: int


class VectorIndex:
    def __init__(self):
        self._vectors: dict[str, np.ndarray] = {}
        self._dim: int | None = None
        self._ids: list[str] | None = None
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._vectors)

    @property
    def dimension(self) -> int | None:
        return self._dim

    def add_chunks(self, chunks: list[Chunk]) -> int:
        """Add embeddings; re-adding an existing chunk_id is a no-op."""
        added = 0
        for chunk in chunks:
            vec = np.asarray(chunk.embedding, dtype=np.float64)
            if vec.ndim != 1:
                raise DimensionMismatchError(f"chunk {chunk.chunk_id}: embedding must be 1-d")
            if self._dim is None:
                self._dim = int(vec.shape[0])
            elif vec.shape[0] != self._dim:
                raise DimensionMismatchError(
                    f"chunk {chunk.chunk_id}: dimension {vec.shape[0]} != index dimension {self._dim}"
                )
            if chunk.chunk_id in self._vectors:
                continue
            self._vectors[chunk.chunk_id] = vec
            added += 1
        if added:
            self._ids = None
            self._matrix = None
        return added

    def _materialize(self) -> tuple[list[str], np.ndarray]:
        # Rows sorted by chunk_id so kernel row order implements the tie rule.
        if self._ids is None or self._matrix is None:
            self._ids = sorted(self._vectors)
            self._matrix = (
                np.stack([self._vectors[i] for i in self._ids])
                if self._ids
                else np.empty((0, self._dim or 0))
            )
        return self._ids, self._matrix

    def search(self, query_vector: np.ndarray, k: int) -> list[ScoredChunk]:
        if k < 1:
            raise InvalidRequestError("k must be >= 1")
        if not self._vectors:
            return []
        query = np.asarray(query_vector, dtype=np.float64)
        if query.ndim != 1 or query.shape[0] != self._dim:
            raise DimensionMismatchError(
                f"query dimension {query.shape} != index dimension {self._dim}"
            )
        norm = float(np.linalg.norm(query))
        if abs(norm - 1.0) > EMBEDDING_NORM_TOL:
            raise InvalidRequestError(f"query vector norm {norm!r} is not 1")
        ids, matrix = self._materialize()
        order, scores = _scan.topk(matrix, query, k)
        return [
            ScoredChunk(
                chunk_id=ids[int(row)],
                score=float(min(1.0, max(-1.0, s))),
                rank=rank,
            )
            for rank, (row, s) in enumerate(zip(order, scores), start=1)
        ]
