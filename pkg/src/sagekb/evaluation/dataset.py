"""Evaluation query datasets: a difficulty x keyword-occurrence taxonomy with
per-cell count validation, plus a bundled synthetic dataset builder."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import DatasetError

DIFFICULTIES = ("easy", "medium", "hard")
OCCURRENCES = ("low", "medium", "high")

TAXONOMY_PER_CELL = 255  # 3 x 3 x 255 = 2295 queries


@dataclass
class EvalQuery:
    text: str
    difficulty: str
    occurrence: str
    reference_answer: str | None = None

    def to_dict(self) -> dict:
        out = {"text": self.text, "difficulty": self.difficulty, "occurrence": self.occurrence}
        if self.reference_answer is not None:
            out["reference_answer"] = self.reference_answer
        return out


def _validate_row(row: dict, lineno: int) -> EvalQuery:
    for key in ("text", "difficulty", "occurrence"):
        if key not in row:
            raise DatasetError(f"line {lineno}: missing field {key!r}")
    if not str(row["text"]).strip():
        raise DatasetError(f"line {lineno}: empty query text")
    if row["difficulty"] not in DIFFICULTIES:
        raise DatasetError(f"line {lineno}: difficulty {row['difficulty']!r} not in {DIFFICULTIES}")
    if row["occurrence"] not in OCCURRENCES:
        raise DatasetError(f"line {lineno}: occurrence {row['occurrence']!r} not in {OCCURRENCES}")
    return EvalQuery(
        text=row["text"],
        difficulty=row["difficulty"],
        occurrence=row["occurrence"],
        reference_answer=row.get("reference_answer"),
    )


def load_dataset(path: str | Path, manifest: str | Path | dict | None = None) -> list[EvalQuery]:
    """Load a line-delimited JSON dataset; when a manifest declares per-cell
    counts, any off-by-one cell is rejected."""
    path = Path(path)
    queries: list[EvalQuery] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON: {exc}") from exc
            queries.append(_validate_row(row, lineno))
    if manifest is not None:
        declared = manifest
        if not isinstance(manifest, dict):
            declared = json.loads(Path(manifest).read_text("utf-8"))
        validate_counts(queries, declared)
    return queries


def cell_counts(queries: list[EvalQuery]) -> dict[str, dict[str, int]]:
    counts: dict[str, dict[str, int]] = {o: {d: 0 for d in DIFFICULTIES} for o in OCCURRENCES}
    for q in queries:
        counts[q.occurrence][q.difficulty] += 1
    return counts


def validate_counts(queries: list[EvalQuery], manifest: dict) -> None:
    declared = manifest.get("counts", manifest)
    actual = cell_counts(queries)
    for occurrence, per_difficulty in declared.items():
        for difficulty, count in per_difficulty.items():
            found = actual.get(occurrence, {}).get(difficulty, 0)
            if found != int(count):
                raise DatasetError(
                    f"cell ({occurrence} occurrence, {difficulty}): "
                    f"declared {count} queries, found {found}"
                )


_TOPICS = (
    "surfactant chemistry",
    "scalp microbiome",
    "polymer rheology",
    "emulsion stability",
    "fragrance encapsulation",
    "keratin structure",
    "anti-frizz coatings",
    "sebum regulation",
    "UV photoprotection",
)

_STEMS = {
    "easy": "What is the key fact about {topic} in study {i}?",
    "medium": "How do the main mechanisms behind {topic} interact in study {i}?",
    "hard": "Assess the long-term implications of {topic} findings across studies related to {i}.",
}


def build_taxonomy_dataset(per_cell: int = TAXONOMY_PER_CELL) -> tuple[list[EvalQuery], dict]:
    """Deterministic synthetic dataset with exact per-cell sizes (the bundled
    default: 3 occurrences x 3 difficulties x 255 = 2,295 queries)."""
    queries: list[EvalQuery] = []
    for occurrence in OCCURRENCES:
        for difficulty in DIFFICULTIES:
            for i in range(per_cell):
                topic = _TOPICS[i % len(_TOPICS)]
                text = _STEMS[difficulty].format(topic=topic, i=i)
                if occurrence == "high":
                    text = f"{text} Consider {topic} keywords explicitly."
                elif occurrence == "low":
                    text = text.replace(topic, "this subject")
                queries.append(
                    EvalQuery(
                        text=text,
                        difficulty=difficulty,
                        occurrence=occurrence,
                        reference_answer=f"Reference finding {i} on {topic}.",
                    )
                )
    manifest = {
        "counts": {o: {d: per_cell for d in DIFFICULTIES} for o in OCCURRENCES},
        "total": per_cell * len(OCCURRENCES) * len(DIFFICULTIES),
    }
    return queries, manifest


def save_dataset(queries: list[EvalQuery], path: str | Path, manifest: dict | None = None) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for q in queries:
            f.write(json.dumps(q.to_dict(), ensure_ascii=False) + "\n")
    if manifest is not None:
        manifest_path = path.with_suffix(".manifest.json")
        manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
