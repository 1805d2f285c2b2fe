"""Evaluation suite driver and mean/stddev aggregation.

Every query runs through each retrieval mode; per-record failures are marked
and excluded from aggregation rather than aborting the suite. Aggregation
uses exactly rounded sums (math.fsum) so results are invariant under record
reordering.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .. import rag
from ..errors import EvalSuiteError, SageKBError
from ..providers import ProviderSet
from ..store import KBStore
from .dataset import DIFFICULTIES, OCCURRENCES, EvalQuery
from .metrics import (
    decompose_statements,
    score_correctness,
    score_relevance,
    verify_statement,
)

METRICS = ("correctness", "relevance", "faithfulness")
MODE_ORDER = ("vector", "graph", "custom")


@dataclass
class EvalRecord:
    query_text: str
    difficulty: str
    occurrence: str
    index_mode: str
    answer: str = ""
    context_digest: str = ""
    correctness: float | None = None
    relevance: float | None = None
    faithfulness: float | None = None
    statement_total: int = 0
    statement_verified: int = 0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class AggregateCell:
    difficulty: str  # easy | medium | hard | all
    occurrence: str  # low | medium | high | all
    index_mode: str
    metric: str
    mean: float
    stddev: float
    n: int


def bundle_digest(bundle: rag.ContextBundle) -> str:
    canonical = json.dumps(
        {
            "entries": [[e.chunk_id, e.origin, e.text] for e in bundle.entries],
            "triples": [[t.subject, t.predicate, t.object, t.source_chunk_id] for t in bundle.triples],
        },
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def evaluate_one(
    store: KBStore,
    providers: ProviderSet,
    judge: ProviderSet,
    query: EvalQuery,
    mode: str,
    *,
    k: int = rag.DEFAULT_K,
    depth: int = 2,
    relevance_binary: bool = False,
    prompts_dir: Path | None = None,
) -> EvalRecord:
    record = EvalRecord(
        query_text=query.text,
        difficulty=query.difficulty,
        occurrence=query.occurrence,
        index_mode=mode,
    )
    try:
        result = rag.chat(store, providers, query.text, mode=rag.RetrievalMode(mode), k=k, depth=depth)
        record.answer = result.answer
        record.context_digest = bundle_digest(result.context)
        context_text = "\n".join(e.text for e in result.context.entries)

        if not query.reference_answer:
            raise EvalSuiteError("query has no reference answer for correctness")
        record.correctness = score_correctness(
            judge, query.text, result.answer, query.reference_answer, prompts_dir
        )
        record.relevance = score_relevance(
            judge, result.answer, query.text, binary=relevance_binary, prompts_dir=prompts_dir
        )
        statements = decompose_statements(judge, result.answer, prompts_dir)
        for statement in statements:
            verify_statement(judge, statement, context_text, prompts_dir)
        record.statement_total = len(statements)
        record.statement_verified = sum(1 for s in statements if s.verified)
        record.faithfulness = record.statement_verified / record.statement_total
    except SageKBError as exc:
        record.error = f"{exc.code}: {exc.message}"
    return record


def run_suite(
    store: KBStore,
    providers: ProviderSet,
    dataset: list[EvalQuery],
    modes: list[str],
    judge: ProviderSet | None = None,
    *,
    k: int = rag.DEFAULT_K,
    depth: int = 2,
    relevance_binary: bool = False,
    max_failure_rate: float = 0.5,
    prompts_dir: Path | None = None,
) -> list[EvalRecord]:
    """|dataset| x |modes| records, error-marked ones included."""
    if not dataset:
        raise EvalSuiteError("dataset is empty")
    judge = judge or providers
    records = []
    for query in dataset:
        for mode in modes:
            records.append(
                evaluate_one(
                    store,
                    providers,
                    judge,
                    query,
                    mode,
                    k=k,
                    depth=depth,
                    relevance_binary=relevance_binary,
                    prompts_dir=prompts_dir,
                )
            )
    failures = sum(1 for r in records if r.failed)
    if records and failures / len(records) > max_failure_rate:
        raise EvalSuiteError(
            f"{failures}/{len(records)} evaluations failed "
            f"(threshold {max_failure_rate:.0%})"
        )
    return records


def _mean_std(values: list[float]) -> tuple[float, float]:
    # fsum is exactly rounded, so the result is permutation invariant.
    n = len(values)
    mean = math.fsum(values) / n
    variance = math.fsum((v - mean) ** 2 for v in values) / n  # population
    return mean, math.sqrt(variance)


def aggregate(records: list[EvalRecord], group_by: str = "difficulty") -> list[AggregateCell]:
    """Mean and population standard deviation per cell.

    ``group_by``: "all" (one cell set), "difficulty", or
    "difficulty_occurrence". Error-marked records are excluded; empty groups
    are omitted.
    """
    if not records:
        raise EvalSuiteError("no records to aggregate")
    if group_by not in ("all", "difficulty", "difficulty_occurrence"):
        raise EvalSuiteError(f"unknown group_by {group_by!r}")

    def group_key(record: EvalRecord) -> tuple[str, str]:
        if group_by == "all":
            return ("all", "all")
        if group_by == "difficulty":
            return (record.difficulty, "all")
        return (record.difficulty, record.occurrence)

    grouped: dict[tuple[str, str, str], list[EvalRecord]] = {}
    for record in records:
        if record.failed:
            continue
        key = (*group_key(record), record.index_mode)
        grouped.setdefault(key, []).append(record)

    cells = []
    for (difficulty, occurrence, mode), members in grouped.items():
        for metric in METRICS:
            values = [getattr(r, metric) for r in members if getattr(r, metric) is not None]
            if not values:
                continue
            mean, stddev = _mean_std(values)
            cells.append(
                AggregateCell(
                    difficulty=difficulty,
                    occurrence=occurrence,
                    index_mode=mode,
                    metric=metric,
                    mean=mean,
                    stddev=stddev,
                    n=len(values),
                )
            )

    difficulty_order = {d: i for i, d in enumerate(("all",) + DIFFICULTIES)}
    occurrence_order = {o: i for i, o in enumerate(("all",) + OCCURRENCES)}
    mode_order = {m: i for i, m in enumerate(MODE_ORDER)}
    metric_order = {m: i for i, m in enumerate(METRICS)}
    cells.sort(
        key=lambda c: (
            difficulty_order.get(c.difficulty, 99),
            occurrence_order.get(c.occurrence, 99),
            mode_order.get(c.index_mode, 99),
            metric_order.get(c.metric, 99),
        )
    )
    return cells
