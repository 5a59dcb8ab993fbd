"""Interfaces between search algorithms and model endpoints.

A step is one unit of reasoning text; in the wire adapters a step ends at
a double newline or end of sequence. Search algorithms only ever see the
two small protocols below, so tests drive them with deterministic toy
implementations.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Protocol, runtime_checkable

#: Step delimiter used when flattening step lists to solution text.
STEP_DELIMITER = "\n\n"


@runtime_checkable
class StepGenerator(Protocol):
    """Produces candidate next steps for a reasoning prefix."""

    def sample_steps(self, prefix: Sequence[str], k: int, *, seed: int | None = None) -> list[str]:
        """Sample exactly k candidate next steps for the prefix."""
        ...

    def greedy_continue(self, prefix: Sequence[str], limit: int) -> list[str]:
        """Continue the prefix greedily (temperature 0) by up to limit steps."""
        ...

    def is_terminal(self, prefix: Sequence[str]) -> bool:
        """Whether the prefix is a complete solution; stable per prefix."""
        ...


@runtime_checkable
class StepScorer(Protocol):
    """Scores a reasoning prefix; deterministic for fixed input."""

    def score(self, question: str, steps: Sequence[str]) -> float: ...


def join_steps(steps: Sequence[str]) -> str:
    return STEP_DELIMITER.join(steps)


def split_steps(text: str) -> list[str]:
    return text.split(STEP_DELIMITER)


class SearchTrace:
    """Collects per-iteration search records for replay and debugging."""

    def __init__(self):
        self.records: list[dict] = []

    def emit(self, record: dict) -> None:
        self.records.append(record)

    def write_jsonl(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for record in self.records:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
