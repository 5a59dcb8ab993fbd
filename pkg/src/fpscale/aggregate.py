"""Solution-level inference scaling: candidate selection and scaling curves.

All selectors use prefix semantics -- "the first n" means the n candidates
with the lowest sample_index -- so a single stored run of N_max samples
reproduces every point of a scaling curve. Every tie breaks toward the
lowest sample_index / earliest first occurrence, keeping selections
deterministic and order-stable.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

from .errors import RangeError, ValidationError
from .grading import AutoVerdict


class Method(str, Enum):
    BON = "BON"
    SC = "SC"
    WSC = "WSC"
    PASS = "PASS"
    DVTS = "DVTS"
    MCTS = "MCTS"


@dataclass(frozen=True)
class ScoredCandidate:
    """One candidate solution with its extracted answer and reward."""

    solution_id: str
    answer: str
    reward: float
    sample_index: int


@dataclass(frozen=True)
class Selection:
    chosen_solution_id: str
    chosen_answer: str
    method: Method


@dataclass(frozen=True)
class CandidatePool:
    """Per-problem candidates plus their graded correctness, aligned by index."""

    problem_id: str
    candidates: tuple[ScoredCandidate, ...]
    correct: tuple[bool, ...]
    false_positive: tuple[bool, ...] | None = None

    def __post_init__(self):
        if len(self.candidates) != len(self.correct):
            raise ValidationError(f"{self.problem_id}: candidates and correctness differ in length")
        if self.false_positive is not None and len(self.false_positive) != len(self.candidates):
            raise ValidationError(f"{self.problem_id}: false_positive flags differ in length")


@dataclass(frozen=True)
class CurvePoint:
    method: Method
    n: int
    automatic_accuracy: float
    manual_accuracy: float | None = None


def normalize_rewards(rewards: Sequence[float]) -> list[float]:
    """Min-max normalize rewards to [0, 1] as (r - min) / (max - min).

    Reward endpoints can be negative, which would break weighted voting;
    after normalization the minimum maps to 0 and the maximum to 1. The
    degenerate max == min case maps to all ones so every vote still
    carries equal, nonzero weight.
    """
    if not rewards:
        raise RangeError("cannot normalize an empty reward list")
    lo, hi = min(rewards), max(rewards)
    if hi == lo:
        return [1.0 for _ in rewards]
    span = hi - lo
    return [(r - lo) / span for r in rewards]


def _prefix(candidates: Sequence[ScoredCandidate], n: int) -> list[ScoredCandidate]:
    if n < 1 or n > len(candidates):
        raise RangeError(f"n={n} out of range for {len(candidates)} candidates")
    ordered = sorted(candidates, key=lambda c: c.sample_index)
    indexes = [c.sample_index for c in ordered]
    if len(set(indexes)) != len(indexes):
        raise ValidationError("sample_index values must be unique within a candidate list")
    return ordered[:n]


def best_of_n(candidates: Sequence[ScoredCandidate], n: int) -> Selection:
    """Pick the highest-reward candidate among the first n."""
    pool = _prefix(candidates, n)
    best = max(pool, key=lambda c: (c.reward, -c.sample_index))
    return Selection(best.solution_id, best.answer, Method.BON)


def _answer_classes(pool: Sequence[ScoredCandidate]) -> dict[str, list[ScoredCandidate]]:
    classes: dict[str, list[ScoredCandidate]] = {}
    for cand in pool:
        classes.setdefault(cand.answer, []).append(cand)
    return classes


def _representative(members: Sequence[ScoredCandidate]) -> ScoredCandidate:
    return max(members, key=lambda c: (c.reward, -c.sample_index))


def self_consistency(candidates: Sequence[ScoredCandidate], n: int) -> Selection:
    """Pick the modal answer among the first n.

    Ties break toward the answer whose first occurrence is earliest; the
    returned solution is the highest-reward member of the winning class.
    """
    pool = _prefix(candidates, n)
    classes = _answer_classes(pool)
    winner = max(
        classes,
        key=lambda a: (len(classes[a]), -classes[a][0].sample_index),
    )
    rep = _representative(classes[winner])
    return Selection(rep.solution_id, winner, Method.SC)


def weighted_self_consistency(candidates: Sequence[ScoredCandidate], n: int) -> Selection:
    """Answer vote weighted by reward; expects rewards already normalized.

    The winning answer maximizes the summed rewards of its supporters;
    the representative solution is the highest-reward supporter.
    """
    pool = _prefix(candidates, n)
    classes = _answer_classes(pool)
    winner = max(
        classes,
        key=lambda a: (sum(c.reward for c in classes[a]), -classes[a][0].sample_index),
    )
    rep = _representative(classes[winner])
    return Selection(rep.solution_id, winner, Method.WSC)


def pass_at_n(verdicts: Sequence[AutoVerdict], n: int) -> bool:
    """True iff any of the first n verdicts is correct."""
    if n < 1 or n > len(verdicts):
        raise RangeError(f"n={n} out of range for {len(verdicts)} verdicts")
    return any(v.correct for v in verdicts[:n])


_SELECTORS = {
    Method.BON: best_of_n,
    Method.SC: self_consistency,
    Method.WSC: weighted_self_consistency,
}


def select(candidates: Sequence[ScoredCandidate], n: int, method: Method) -> Selection:
    try:
        selector = _SELECTORS[method]
    except KeyError:
        raise RangeError(f"{method.value} is not a selection method") from None
    return selector(candidates, n)


def _pool_outcome(pool: CandidatePool, n: int, method: Method) -> tuple[bool, bool | None]:
    """(automatically correct, manually correct) for one pool at one n."""
    ordered = sorted(range(len(pool.candidates)), key=lambda i: pool.candidates[i].sample_index)
    prefix = ordered[:n]
    if method is Method.PASS:
        auto = any(pool.correct[i] for i in prefix)
        manual = None
        if pool.false_positive is not None:
            manual = any(pool.correct[i] and not pool.false_positive[i] for i in prefix)
        return auto, manual
    selection = select(pool.candidates, n, method)
    chosen = next(i for i in prefix if pool.candidates[i].solution_id == selection.chosen_solution_id)
    auto = pool.correct[chosen]
    manual = None
    if pool.false_positive is not None:
        manual = auto and not pool.false_positive[chosen]
    return auto, manual


def scaling_curve(
    pools: Sequence[CandidatePool],
    ns: Sequence[int],
    method: Method,
) -> list[CurvePoint]:
    """Accuracy of the method's selection over the first N samples, per N.

    Raises RangeError naming the problem whose stored samples cannot cover
    a requested N. Manual accuracy is included when every pool carries
    false-positive flags.
    """
    if not pools:
        raise RangeError("scaling_curve needs at least one problem")
    for pool in pools:
        for n in ns:
            if n > len(pool.candidates):
                raise RangeError(
                    f"problem {pool.problem_id!r} has {len(pool.candidates)} samples, N={n} requested"
                )
    with_manual = all(pool.false_positive is not None for pool in pools)
    points = []
    for n in ns:
        outcomes = [_pool_outcome(pool, n, method) for pool in pools]
        auto = sum(1 for a, _ in outcomes if a) / len(pools)
        manual = None
        if with_manual:
            manual = sum(1 for _, m in outcomes if m) / len(pools)
        points.append(CurvePoint(method=method, n=n, automatic_accuracy=auto, manual_accuracy=manual))
    return points
