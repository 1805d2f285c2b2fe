"""Judge-based quality metrics: correctness (1-5 rubric), faithfulness
(verified statements / total statements), and relevance (relevant concepts /
total concepts, with an optional binary variant)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from ..config import load_prompt, render_prompt
from ..errors import (
    InvalidRequestError,
    JudgeParseError,
    ScoreOutOfRangeError,
    ZeroConceptsError,
    ZeroStatementsError,
)
from ..providers import ChatRequest, ProviderSet

CORRECTNESS_MIN = 1.0
CORRECTNESS_MAX = 5.0


@dataclass
class Statement:
    text: str
    verified: bool | None = None


def parse_judge_score(text: str) -> float:
    """Strictly parse the leading token as a number; no silent clamping."""
    stripped = text.strip()
    if not stripped:
        raise JudgeParseError("judge returned empty output")
    token = stripped.split()[0].rstrip(".,;:")
    try:
        return float(token)
    except ValueError as exc:
        raise JudgeParseError(f"judge output not numeric: {text[:80]!r}") from exc


def parse_yes_no(text: str) -> bool:
    stripped = text.strip()
    if not stripped:
        raise JudgeParseError("judge returned empty output")
    token = stripped.split()[0].strip(".,;:!").upper()
    if token == "YES":
        return True
    if token == "NO":
        return False
    raise JudgeParseError(f"expected YES or NO, got {text[:80]!r}")


def score_correctness(
    judge: ProviderSet,
    query: str,
    generated: str,
    reference: str,
    prompts_dir: Path | None = None,
) -> float:
    """1-5 rubric against a reference answer; fractional scores allowed,
    out-of-range judge output is an error."""
    if not reference or not reference.strip():
        raise InvalidRequestError("correctness requires a reference answer")
    template = load_prompt("judge_correctness", prompts_dir)
    prompt = render_prompt(template, question=query, reference=reference, generated=generated)
    score = parse_judge_score(judge.chat_complete(ChatRequest.single_turn(prompt)).text)
    if not CORRECTNESS_MIN <= score <= CORRECTNESS_MAX:
        raise ScoreOutOfRangeError(f"correctness score {score} outside [1, 5]")
    return score


def decompose_statements(
    judge: ProviderSet,
    answer: str,
    prompts_dir: Path | None = None,
) -> list[Statement]:
    if not answer.strip():
        raise InvalidRequestError("cannot decompose an empty answer")
    template = load_prompt("statement_decompose", prompts_dir)
    prompt = render_prompt(template, answer=answer)
    lines = judge.chat_complete(ChatRequest.single_turn(prompt)).text.splitlines()
    statements = [Statement(text=line.strip()) for line in lines if line.strip()]
    if not statements:
        raise ZeroStatementsError("decomposition produced zero statements")
    return statements


def verify_statement(
    judge: ProviderSet,
    statement: Statement,
    context_text: str,
    prompts_dir: Path | None = None,
) -> bool:
    if not context_text.strip():
        raise InvalidRequestError("cannot verify against empty context")
    template = load_prompt("statement_verify", prompts_dir)
    prompt = render_prompt(template, statement=statement.text, context=context_text)
    verdict = parse_yes_no(judge.chat_complete(ChatRequest.single_turn(prompt)).text)
    statement.verified = verdict
    return verdict


def score_faithfulness(statements: list[Statement]) -> float:
    """Verified count over total count, exact in rational arithmetic."""
    if not statements:
        raise ZeroStatementsError("faithfulness undefined for zero statements")
    for s in statements:
        if s.verified is None:
            raise InvalidRequestError(f"statement has no verdict: {s.text[:60]!r}")
    ratio = Fraction(sum(1 for s in statements if s.verified), len(statements))
    return float(ratio)


def extract_concepts(
    judge: ProviderSet,
    answer: str,
    prompts_dir: Path | None = None,
) -> list[str]:
    if not answer.strip():
        raise InvalidRequestError("cannot extract concepts from an empty answer")
    template = load_prompt("concept_extract", prompts_dir)
    prompt = render_prompt(template, answer=answer)
    lines = judge.chat_complete(ChatRequest.single_turn(prompt)).text.splitlines()
    concepts = [line.strip() for line in lines if line.strip()]
    if not concepts:
        raise ZeroConceptsError("extractor returned zero concepts")
    return concepts


def concept_ratio(verdicts: list[bool]) -> float:
    if not verdicts:
        raise ZeroConceptsError("relevance undefined for zero concepts")
    return float(Fraction(sum(1 for v in verdicts if v), len(verdicts)))


def score_relevance(
    judge: ProviderSet,
    answer: str,
    query: str,
    binary: bool = False,
    prompts_dir: Path | None = None,
) -> float:
    """Relevant concepts over total concepts; ``binary`` switches to a single
    0/1 judgment of the whole response."""
    if not answer.strip():
        raise InvalidRequestError("cannot score an empty answer")
    if binary:
        template = load_prompt("relevance_binary", prompts_dir)
        prompt = render_prompt(template, question=query, answer=answer)
        score = parse_judge_score(judge.chat_complete(ChatRequest.single_turn(prompt)).text)
        if score not in (0.0, 1.0):
            raise ScoreOutOfRangeError(f"binary relevance must be 0 or 1, got {score}")
        return score
    concepts = extract_concepts(judge, answer, prompts_dir)
    template = load_prompt("concept_judge", prompts_dir)
    verdicts = []
    for concept in concepts:
        prompt = render_prompt(template, question=query, concept=concept)
        verdicts.append(parse_yes_no(judge.chat_complete(ChatRequest.single_turn(prompt)).text))
    return concept_ratio(verdicts)
