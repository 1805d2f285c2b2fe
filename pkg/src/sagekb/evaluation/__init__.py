"""LLM-judge evaluation harness: metrics, dataset taxonomy, suite runner,
aggregation, and exports."""

from .dataset import (
    DIFFICULTIES,
    OCCURRENCES,
    TAXONOMY_PER_CELL,
    EvalQuery,
    build_taxonomy_dataset,
    cell_counts,
    load_dataset,
    save_dataset,
    validate_counts,
)
from .export import (
    plot_metric_bars,
    write_aggregates_csv,
    write_bundle_json,
    write_records_csv,
)
from .metrics import (
    Statement,
    concept_ratio,
    decompose_statements,
    extract_concepts,
    parse_judge_score,
    parse_yes_no,
    score_correctness,
    score_faithfulness,
    score_relevance,
    verify_statement,
)
from .runner import (
    METRICS,
    AggregateCell,
    EvalRecord,
    aggregate,
    bundle_digest,
    evaluate_one,
    run_suite,
)

__all__ = [
    "DIFFICULTIES",
    "OCCURRENCES",
    "TAXONOMY_PER_CELL",
    "METRICS",
    "AggregateCell",
    "EvalQuery",
    "EvalRecord",
    "Statement",
    "aggregate",
    "build_taxonomy_dataset",
    "bundle_digest",
    "cell_counts",
    "concept_ratio",
    "decompose_statements",
    "evaluate_one",
    "extract_concepts",
    "load_dataset",
    "parse_judge_score",
    "parse_yes_no",
    "plot_metric_bars",
    "run_suite",
    "save_dataset",
    "score_correctness",
    "score_faithfulness",
    "score_relevance",
    "validate_counts",
    "verify_statement",
    "write_aggregates_csv",
    "write_bundle_json",
    "write_records_csv",
]
