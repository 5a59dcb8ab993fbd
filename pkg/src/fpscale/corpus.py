"""Benchmark problem sets: loading, validation, and seeded subsampling.

Problem files are UTF-8 JSON lines with fields ``id``, ``problem``,
``answer`` and optional ``source``, ``level``. Gold answers are stored
verbatim; all normalization happens at grading time so corpora stay
lossless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from random import Random

from .errors import ParseError, RangeError, ValidationError


class Source(str, Enum):
    MATH = "MATH"
    AIME = "AIME"
    OMNI = "OMNI"
    OTHER = "OTHER"


@dataclass(frozen=True)
class Problem:
    """One benchmark item: statement plus its gold final answer."""

    id: str
    statement: str
    gold_answer: str
    source: Source = Source.OTHER
    difficulty: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("problem id must be non-empty")
        if not self.gold_answer:
            raise ValidationError(f"problem {self.id!r}: gold_answer must be non-empty")


@dataclass(frozen=True)
class ProblemSet:
    """An ordered, duplicate-free collection of problems."""

    dataset_id: str
    problems: tuple[Problem, ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen: set[str] = set()
        for p in self.problems:
            if p.id in seen:
                raise ValidationError(f"duplicate problem id {p.id!r} in {self.dataset_id!r}")
            seen.add(p.id)

    def __len__(self) -> int:
        return len(self.problems)

    def __iter__(self):
        return iter(self.problems)

    def by_id(self) -> dict[str, Problem]:
        return {p.id: p for p in self.problems}


def problem_from_record(record: dict, *, line: int | None = None) -> Problem:
    """Build a Problem from one parsed JSON record."""
    try:
        source = Source(record["source"]) if "source" in record and record["source"] else Source.OTHER
    except ValueError:
        raise ParseError(f"unknown source {record.get('source')!r}", line=line) from None
    missing = [k for k in ("id", "problem", "answer") if k not in record]
    if missing:
        raise ParseError(f"missing field(s) {missing}", line=line)
    return Problem(
        id=str(record["id"]),
        statement=str(record["problem"]),
        gold_answer=str(record["answer"]),
        source=source,
        difficulty=str(record["level"]) if record.get("level") is not None else None,
    )


def problem_to_record(problem: Problem) -> dict:
    record = {
        "id": problem.id,
        "problem": problem.statement,
        "answer": problem.gold_answer,
        "source": problem.source.value,
    }
    if problem.difficulty is not None:
        record["level"] = problem.difficulty
    return record


def load_problems(path: str | Path, *, dataset_id: str | None = None) -> ProblemSet:
    """Load a problem file, preserving record order.

    Raises ParseError with the line number for malformed lines and
    ValidationError for duplicate ids.
    """
    path = Path(path)
    problems: list[Problem] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
            if not isinstance(record, dict):
                raise ParseError("record must be a JSON object", line=lineno)
            problem = problem_from_record(record, line=lineno)
            if problem.id in seen:
                raise ValidationError(f"duplicate problem id {problem.id!r} at line {lineno}")
            seen.add(problem.id)
            problems.append(problem)
    return ProblemSet(dataset_id=dataset_id or path.stem, problems=tuple(problems))


def save_problems(problems: ProblemSet, path: str | Path) -> None:
    """Write a problem set in the canonical line-delimited format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for problem in problems:
            fh.write(json.dumps(problem_to_record(problem), ensure_ascii=False) + "\n")


def sample_subset(problem_set: ProblemSet, k: int, seed: int) -> ProblemSet:
    """Draw k problems uniformly without replacement, deterministically.

    Uses an explicit partial Fisher-Yates shuffle over indices so the same
    (set, k, seed) triple reproduces the same subset on any machine. Output
    preserves the original relative order.
    """
    n = len(problem_set)
    if k < 0 or k > n:
        raise RangeError(f"k={k} out of range for a {n}-problem set")
    rng = Random(seed)
    indices = list(range(n))
    for i in range(k):
        j = rng.randrange(i, n)
        indices[i], indices[j] = indices[j], indices[i]
    chosen = sorted(indices[:k])
    return ProblemSet(
        dataset_id=f"{problem_set.dataset_id}-{k}@{seed}",
        problems=tuple(problem_set.problems[i] for i in chosen),
    )
