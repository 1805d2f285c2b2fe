"""Exact top-k cosine scan kernels.

Two interchangeable backends compute the same result:

* ``numba``  - jitted fused score-and-select loop (the hot path);
* ``numpy``  - matmul plus stable argsort (pure-numpy fallback).

Backend selection: ``SAGEKB_NUMBA=0`` forces numpy, ``SAGEKB_NUMBA=1``
requires numba, unset/``auto`` uses numba when importable. Ties (equal
scores) resolve to the lower row index in both backends, which callers map
to ascending chunk_id.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    HAVE_NUMBA = False

_ENV_FLAG = os.environ.get("SAGEKB_NUMBA", "auto").strip().lower()
if _ENV_FLAG == "1" and not HAVE_NUMBA:
    raise RuntimeError("SAGEKB_NUMBA=1 but numba is not importable")

_BACKEND = "numba" if (HAVE_NUMBA and _ENV_FLAG != "0") else "numpy"


def active_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    """Switch kernels at runtime (tests and the benchmark use this)."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _BACKEND = name


def numpy_topk(matrix: np.ndarray, query: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    scores = matrix @ query
    order = np.argsort(-scores, kind="stable")[: min(k, scores.shape[0])]
    return order, scores[order]


if HAVE_NUMBA:

    @njit(cache=True)
    def _numba_topk(matrix, query, k):  # pragma: no cover - exercised via dispatch
        n, dim = matrix.shape
        kk = min(k, n)
        top_idx = np.empty(kk, dtype=np.int64)
        top_score = np.empty(kk, dtype=np.float64)
        count = 0
        for i in range(n):
            acc = 0.0
            for j in range(dim):
                acc += matrix[i, j] * query[j]
            if count < kk:
                pos = count
                while pos > 0 and acc > top_score[pos - 1]:
                    top_score[pos] = top_score[pos - 1]
                    top_idx[pos] = top_idx[pos - 1]
                    pos -= 1
                top_score[pos] = acc
                top_idx[pos] = i
                count += 1
            elif acc > top_score[kk - 1]:
                pos = kk - 1
                while pos > 0 and acc > top_score[pos - 1]:
                    top_score[pos] = top_score[pos - 1]
                    top_idx[pos] = top_idx[pos - 1]
                    pos -= 1
                top_score[pos] = acc
                top_idx[pos] = i
        return top_idx[:count], top_score[:count]

    def numba_topk(matrix: np.ndarray, query: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        return _numba_topk(np.ascontiguousarray(matrix), np.ascontiguousarray(query), k)

else:  # pragma: no cover

    def numba_topk(matrix, query, k):
        raise RuntimeError("numba is not importable")


def topk(matrix: np.ndarray, query: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and scores of the k best rows by dot product, best first.

    Equal scores order by ascending row index in both backends (the numba
    insertion uses strictly-greater comparisons; the numpy argsort is stable).
    """
    if matrix.shape[0] == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    if _BACKEND == "numba":
        return numba_topk(matrix, query, k)
    return numpy_topk(matrix, query, k)
