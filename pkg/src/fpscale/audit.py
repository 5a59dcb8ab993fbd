"""False-positive detection and evaluation metrics.

A false positive is a solution whose final answer matches the gold answer
while the reasoning contains errors. Metrics here follow three headline
quantities: automatic accuracy (rule-based), false positive rate (share of
false positives among automatically correct responses), and manual
accuracy (automatically correct and free of false positives), which
satisfy manual = automatic * (1 - fp_rate) identically.

Judge verdicts and human labels are kept separate and never merged
implicitly; detection quality is reported as precision/recall/F1 of the
judge's false-positive set against the human-labeled set.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .aggregate import Method, ScoredCandidate, normalize_rewards, select
from .clients import JudgeVerdict, ModelClient, bounded_map
from .errors import CoverageError, UnparseableVerdictError, ValidationError
from .grading import AutoVerdict
from .store import ErrorType, HumanLabel, StoredRun, effective_labels
from .util import canonical_json


@dataclass(frozen=True)
class MetricsReport:
    automatic_accuracy: float
    false_positive_rate: float
    manual_accuracy: float
    total: int
    auto_correct: int
    false_positives: int
    error_type_counts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DetectionResult:
    """Judge verdicts over auto-correct solutions, plus any skipped ones."""

    verdicts: list[JudgeVerdict]
    unparseable: list[tuple[str, str]]

    def model_fp_set(self) -> set[str]:
        return {v.solution_id for v in self.verdicts if not v.verdict}


@dataclass(frozen=True)
class LengthRow:
    """Whitespace-token length statistics for one solution population."""

    population: str
    count: int
    avg: float | None
    max: int | None
    min: int | None


def resolve_fp_flags(
    labels: list[HumanLabel], *, annotator: str | None = None
) -> dict[str, bool]:
    """Per-solution false-positive flag from (possibly multiple) labels.

    With an annotator given, only that annotator's latest label counts;
    otherwise a majority vote across annotators decides, with ties
    resolved as not-false-positive. Exempted solutions are never false
    positives (the label type already enforces this).
    """
    chosen = effective_labels(labels)
    if annotator is not None:
        chosen = [lbl for lbl in chosen if lbl.annotator == annotator]
    votes: dict[str, list[bool]] = {}
    for lbl in chosen:
        votes.setdefault(lbl.solution_id, []).append(lbl.is_false_positive)
    return {
        sid: sum(flags) * 2 > len(flags)
        for sid, flags in votes.items()
    }


def _auto_correct_ids(verdicts: list[AutoVerdict]) -> list[str]:
    return [v.solution_id for v in verdicts if v.correct]


def _require_coverage(auto_correct: list[str], flags: dict[str, bool]) -> None:
    missing = [sid for sid in auto_correct if sid not in flags]
    if missing:
        raise CoverageError(
            f"{len(missing)} auto-correct solution(s) lack labels: {missing[:5]}",
            missing_ids=missing,
        )


def false_positive_rate(
    verdicts: list[AutoVerdict],
    labels: list[HumanLabel],
    *,
    annotator: str | None = None,
) -> float:
    """Share of false positives among automatically correct responses.

    Zero when nothing is automatically correct (documented convention).
    """
    auto_correct = _auto_correct_ids(verdicts)
    if not auto_correct:
        return 0.0
    flags = resolve_fp_flags(labels, annotator=annotator)
    _require_coverage(auto_correct, flags)
    fp = sum(1 for sid in auto_correct if flags[sid])
    return fp / len(auto_correct)


def manual_accuracy(
    verdicts: list[AutoVerdict],
    labels: list[HumanLabel],
    *,
    annotator: str | None = None,
) -> float:
    """(auto-correct - false positives) / total; equals auto * (1 - fp rate)."""
    if not verdicts:
        return 0.0
    auto_correct = _auto_correct_ids(verdicts)
    if not auto_correct:
        return 0.0
    flags = resolve_fp_flags(labels, annotator=annotator)
    _require_coverage(auto_correct, flags)
    fp = sum(1 for sid in auto_correct if flags[sid])
    return (len(auto_correct) - fp) / len(verdicts)


def compute_metrics(
    verdicts: list[AutoVerdict],
    labels: list[HumanLabel],
    *,
    annotator: str | None = None,
) -> MetricsReport:
    total = len(verdicts)
    auto_correct = _auto_correct_ids(verdicts)
    if auto_correct:
        flags = resolve_fp_flags(labels, annotator=annotator)
        _require_coverage(auto_correct, flags)
        fp = sum(1 for sid in auto_correct if flags[sid])
    else:
        fp = 0
    automatic = len(auto_correct) / total if total else 0.0
    fp_rate = fp / len(auto_correct) if auto_correct else 0.0
    manual = (len(auto_correct) - fp) / total if total else 0.0
    return MetricsReport(
        automatic_accuracy=automatic,
        false_positive_rate=fp_rate,
        manual_accuracy=manual,
        total=total,
        auto_correct=len(auto_correct),
        false_positives=fp,
        error_type_counts=error_type_stats(labels),
    )


def f1_detection(
    model_set: set[str],
    human_set: set[str],
    *,
    universe: set[str] | None = None,
) -> tuple[float, float, float]:
    """Precision/recall/F1 of the model's false-positive set B against the
    human-labeled set A: precision = |A&B|/|B|, recall = |A&B|/|A|.

    Empty-set conventions: |B|=0 gives precision 0, |A|=0 gives recall 0,
    and P=R=0 gives F1=0.
    """
    if universe is not None:
        stray = (model_set | human_set) - universe
        if stray:
            raise ValidationError(f"ids outside the solution universe: {sorted(stray)[:5]}")
    overlap = len(model_set & human_set)
    precision = overlap / len(model_set) if model_set else 0.0
    recall = overlap / len(human_set) if human_set else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def detect_false_positives(
    run: StoredRun,
    judge: ModelClient,
    *,
    max_workers: int | None = None,
) -> DetectionResult:
    """Ask the judge about every automatically correct solution.

    Solutions the automatic grader rejected are never judged. Long-CoT
    solutions are judged on their answer part only. Unparseable verdicts
    go into a skip report instead of failing the batch.
    """
    if run.problems is None:
        raise ValidationError("run has no stored problems; cannot build judge prompts")
    statements = {p.id: p.statement for p in run.problems}
    correct_ids = {v.solution_id for v in run.verdicts if v.correct}
    targets = [s for s in run.solutions if s.solution_id in correct_ids]
    for s in targets:
        if s.problem_id not in statements:
            raise ValidationError(f"problem {s.problem_id!r} missing from the run's problem file")

    def judge_one(solution):
        text = solution.answer_part if solution.answer_part is not None else solution.text
        try:
            return solution.solution_id, judge.judge_solution(
                statements[solution.problem_id], text, solution_id=solution.solution_id
            ), None
        except UnparseableVerdictError as exc:
            return solution.solution_id, None, str(exc)

    workers = max_workers if max_workers is not None else judge.cfg.max_concurrency
    results = bounded_map(judge_one, targets, workers)
    verdicts = [v for _, v, _ in results if v is not None]
    unparseable = [(sid, err) for sid, _, err in results if err is not None]
    return DetectionResult(verdicts=verdicts, unparseable=unparseable)


def error_type_stats(labels: list[HumanLabel]) -> dict:
    """Error-type counts over false-positive labels; a multi-type label
    increments each of its types."""
    counts: Counter = Counter()
    for label in labels:
        if label.is_false_positive:
            counts.update(label.error_types)
    return {etype: counts.get(etype, 0) for etype in ErrorType}


def _length_row(population: str, lengths: list[int]) -> LengthRow:
    if not lengths:
        return LengthRow(population=population, count=0, avg=None, max=None, min=None)
    return LengthRow(
        population=population,
        count=len(lengths),
        avg=sum(lengths) / len(lengths),
        max=max(lengths),
        min=min(lengths),
    )


def length_stats(
    solutions: list,
    verdicts: list[AutoVerdict],
    labels: list[HumanLabel],
    *,
    annotator: str | None = None,
) -> list[LengthRow]:
    """Length statistics (whitespace-delimited tokens) for three nested
    populations: all solutions, final-answer-correct ones, and false
    positives among those."""
    correct_ids = set(_auto_correct_ids(verdicts))
    flags = resolve_fp_flags(labels, annotator=annotator)
    all_lengths = []
    correct_lengths = []
    fp_lengths = []
    for solution in solutions:
        n_tokens = len(solution.text.split())
        all_lengths.append(n_tokens)
        if solution.solution_id in correct_ids:
            correct_lengths.append(n_tokens)
            if flags.get(solution.solution_id, False):
                fp_lengths.append(n_tokens)
    return [
        _length_row("all", all_lengths),
        _length_row("final_answer_correct", correct_lengths),
        _length_row("false_positive", fp_lengths),
    ]


def build_detection_benchmark(
    contributions: list[tuple[StoredRun, Method]],
    out_path: str | Path | None = None,
) -> list[dict]:
    """Assemble a detection benchmark from method-selected, labeled runs.

    Each run contributes its selected solution per problem; only
    automatically correct selections enter the benchmark, and each must
    carry a human label (its gold false-positive flag). Records keep full
    provenance so detector scores can be sliced by source run.
    """
    records: list[dict] = []
    seen: set[tuple[str, str]] = set()
    for run, method in contributions:
        statements = {p.id: p.statement for p in run.problems} if run.problems else {}
        verdict_by_id = {v.solution_id: v for v in run.verdicts}
        flags = resolve_fp_flags(run.labels)
        by_problem: dict[str, list] = {}
        for solution in run.solutions:
            by_problem.setdefault(solution.problem_id, []).append(solution)
        for problem_id in sorted(by_problem):
            key = (run.manifest.run_id, problem_id)
            if key in seen:
                raise ValidationError(f"duplicate (run, problem) pair {key}")
            seen.add(key)
            group = sorted(by_problem[problem_id], key=lambda s: s.sample_index)
            rewards = normalize_rewards([s.orm_reward or 0.0 for s in group])
            candidates = [
                ScoredCandidate(
                    solution_id=s.solution_id,
                    answer=(s.extracted.canonical if s.extracted else ""),
                    reward=rewards[i],
                    sample_index=s.sample_index,
                )
                for i, s in enumerate(group)
            ]
            selection = select(candidates, len(candidates), method)
            verdict = verdict_by_id.get(selection.chosen_solution_id)
            if verdict is None or not verdict.correct:
                continue
            if selection.chosen_solution_id not in flags:
                raise CoverageError(
                    f"selected solution {selection.chosen_solution_id!r} has no label",
                    missing_ids=[selection.chosen_solution_id],
                )
            chosen = next(s for s in group if s.solution_id == selection.chosen_solution_id)
            records.append(
                {
                    "problem_id": problem_id,
                    "problem": statements.get(problem_id, ""),
                    "solution_id": chosen.solution_id,
                    "solution": chosen.text,
                    "is_false_positive": flags[selection.chosen_solution_id],
                    "run_id": run.manifest.run_id,
                    "method": method.value,
                    "policy_model": run.manifest.policy_model,
                }
            )
    if out_path is not None:
        with Path(out_path).open("w", encoding="utf-8") as fh:
            for record in records:
                fh.write(canonical_json(record) + "\n")
    return records
