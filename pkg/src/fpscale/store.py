"""Run persistence: manifests, solutions, verdicts, labels, judge verdicts.

Each run lives in its own directory of UTF-8 line-delimited record files:

    <out>/<run_id>/
        manifest.json         one canonical-JSON object
        problems.jsonl        the problems the run was sampled against
        solutions.jsonl       SolutionRecord per line
        verdicts.jsonl        AutoVerdict per line
        labels.jsonl          HumanLabel per line (append-only)
        judge_verdicts.jsonl  JudgeVerdict per line

Files are written in canonical JSON (sorted keys, compact separators), so
identical runs are byte-identical and diff cleanly. Stored records are
never mutated; label corrections append new versions and the latest entry
per (solution, annotator) wins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .aggregate import Method
from .clients import JudgeVerdict, SamplingParams
from .corpus import ProblemSet, load_problems, save_problems
from .errors import ConflictError, ParseError, ValidationError
from .grading import AnswerKind, AutoVerdict, ExtractedAnswer
from .search.interfaces import STEP_DELIMITER, join_steps
from .util import stable_digest

MANIFEST_FILE = "manifest.json"
PROBLEMS_FILE = "problems.jsonl"
SOLUTIONS_FILE = "solutions.jsonl"
VERDICTS_FILE = "verdicts.jsonl"
LABELS_FILE = "labels.jsonl"
JUDGE_VERDICTS_FILE = "judge_verdicts.jsonl"

_REQUIRED_PARAMS = {
    Method.BON: {"n"},
    Method.SC: {"n"},
    Method.WSC: {"n"},
    Method.PASS: {"n"},
    Method.DVTS: {"n", "m", "lookahead", "iterations"},
    Method.MCTS: {"n_paths", "tree_width", "max_depth", "exploration"},
}


class ErrorType(str, Enum):
    JUMP_IN_REASONING = "JUMP_IN_REASONING"
    LOGICAL = "LOGICAL"
    CALCULATION = "CALCULATION"
    CONCEPTUAL = "CONCEPTUAL"


class Exemption(str, Enum):
    MINOR_ERROR = "MINOR_ERROR"
    SELF_CORRECTED = "SELF_CORRECTED"


@dataclass(frozen=True)
class RunManifest:
    """One experiment: method, parameters, model ids, dataset id."""

    run_id: str
    method: Method
    params: dict
    policy_model: str
    dataset_id: str
    sampling: SamplingParams
    created_at: str
    reward_model: str | None = None
    judge_model: str | None = None

    def __post_init__(self):
        if not self.run_id:
            raise ValidationError("run_id must be non-empty")
        missing = _REQUIRED_PARAMS[self.method] - set(self.params)
        if missing:
            raise ValidationError(
                f"method {self.method.value} requires params {sorted(missing)}"
            )


@dataclass(frozen=True)
class SolutionRecord:
    """One sampled solution with its steps, extraction, and rewards."""

    solution_id: str
    run_id: str
    problem_id: str
    sample_index: int
    text: str
    steps: tuple[str, ...]
    extracted: ExtractedAnswer | None = None
    auto_correct: bool | None = None
    orm_reward: float | None = None
    prm_values: tuple[float, ...] | None = None
    answer_part: str | None = None

    def __post_init__(self):
        if join_steps(self.steps) != self.text:
            raise ValidationError(
                f"solution {self.solution_id!r}: steps joined with {STEP_DELIMITER!r} "
                "must reconstruct text exactly"
            )
        if self.prm_values is not None and len(self.prm_values) != len(self.steps):
            raise ValidationError(
                f"solution {self.solution_id!r}: prm_values must have one value per step"
            )


@dataclass(frozen=True)
class HumanLabel:
    """One annotator judgment of one solution."""

    solution_id: str
    annotator: str
    is_false_positive: bool
    error_types: tuple[ErrorType, ...] = ()
    exemption: Exemption | None = None
    answer_part_only: bool = False
    notes: str = ""
    saved_at: str | None = None

    def __post_init__(self):
        if self.is_false_positive and not self.error_types:
            raise ValidationError("a false-positive label needs at least one error type")
        if self.exemption is not None and self.is_false_positive:
            raise ValidationError("an exempted solution cannot be a false positive")


@dataclass
class StoredRun:
    run_dir: Path
    manifest: RunManifest
    solutions: list[SolutionRecord]
    verdicts: list[AutoVerdict] = field(default_factory=list)
    labels: list[HumanLabel] = field(default_factory=list)
    judge_verdicts: list[JudgeVerdict] = field(default_factory=list)
    problems: ProblemSet | None = None


def make_solution_id(run_id: str, problem_id: str, sample_index: int) -> str:
    """Deterministic digest so re-runs stay referentially stable."""
    return stable_digest("solution", run_id, problem_id, sample_index)


def split_long_cot(text: str) -> tuple[str, str]:
    """Split reasoning-model output into (think_part, answer_part).

    Without markers the whole text is the answer part; an unclosed
    ``<answer>`` tag claims the remainder after the tag.
    """
    think = ""
    answer = text
    tstart = text.find("<think>")
    if tstart >= 0:
        tend = text.find("</think>", tstart + len("<think>"))
        if tend >= 0:
            think = text[tstart + len("<think>") : tend]
            answer = text[:tstart] + text[tend + len("</think>") :]
        else:
            think = text[tstart + len("<think>") :]
            answer = text[:tstart]
    astart = answer.find("<answer>")
    if astart >= 0:
        aend = answer.find("</answer>", astart + len("<answer>"))
        if aend >= 0:
            answer = answer[astart + len("<answer>") : aend]
        else:
            answer = answer[astart + len("<answer>") :]
    return think, answer


# ---------------------------------------------------------------------------
# record (de)serialization

def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def manifest_to_record(m: RunManifest) -> dict:
    return {
        "run_id": m.run_id,
        "method": m.method.value,
        "params": m.params,
        "policy_model": m.policy_model,
        "reward_model": m.reward_model,
        "judge_model": m.judge_model,
        "dataset_id": m.dataset_id,
        "sampling": {
            "temperature": m.sampling.temperature,
            "top_p": m.sampling.top_p,
            "max_tokens": m.sampling.max_tokens,
            "n": m.sampling.n,
            "stop": list(m.sampling.stop) if m.sampling.stop is not None else None,
            "seed": m.sampling.seed,
        },
        "created_at": m.created_at,
    }


def manifest_from_record(record: dict) -> RunManifest:
    sampling = record["sampling"]
    return RunManifest(
        run_id=record["run_id"],
        method=Method(record["method"]),
        params=record["params"],
        policy_model=record["policy_model"],
        reward_model=record.get("reward_model"),
        judge_model=record.get("judge_model"),
        dataset_id=record["dataset_id"],
        sampling=SamplingParams(
            temperature=sampling["temperature"],
            top_p=sampling["top_p"],
            max_tokens=sampling["max_tokens"],
            n=sampling["n"],
            stop=tuple(sampling["stop"]) if sampling.get("stop") else None,
            seed=sampling.get("seed"),
        ),
        created_at=record["created_at"],
    )


def solution_to_record(s: SolutionRecord) -> dict:
    record = {
        "solution_id": s.solution_id,
        "run_id": s.run_id,
        "problem_id": s.problem_id,
        "sample_index": s.sample_index,
        "text": s.text,
        "steps": list(s.steps),
        "orm_reward": s.orm_reward,
        "prm_values": list(s.prm_values) if s.prm_values is not None else None,
        "answer_part": s.answer_part,
        "auto_correct": s.auto_correct,
    }
    if s.extracted is not None:
        record["extracted"] = {
            "raw": s.extracted.raw,
            "canonical": s.extracted.canonical,
            "kind": s.extracted.kind.value,
        }
    else:
        record["extracted"] = None
    return record


def solution_from_record(record: dict) -> SolutionRecord:
    extracted = None
    if record.get("extracted") is not None:
        e = record["extracted"]
        extracted = ExtractedAnswer(raw=e["raw"], canonical=e["canonical"], kind=AnswerKind(e["kind"]))
    return SolutionRecord(
        solution_id=record["solution_id"],
        run_id=record["run_id"],
        problem_id=record["problem_id"],
        sample_index=record["sample_index"],
        text=record["text"],
        steps=tuple(record["steps"]),
        extracted=extracted,
        auto_correct=record.get("auto_correct"),
        orm_reward=record.get("orm_reward"),
        prm_values=tuple(record["prm_values"]) if record.get("prm_values") is not None else None,
        answer_part=record.get("answer_part"),
    )


def verdict_to_record(v: AutoVerdict) -> dict:
    return {
        "solution_id": v.solution_id,
        "correct": v.correct,
        "raw": v.extracted.raw,
        "canonical": v.extracted.canonical,
        "kind": v.extracted.kind.value,
    }


def verdict_from_record(record: dict) -> AutoVerdict:
    return AutoVerdict(
        solution_id=record["solution_id"],
        correct=record["correct"],
        extracted=ExtractedAnswer(
            raw=record["raw"], canonical=record["canonical"], kind=AnswerKind(record["kind"])
        ),
    )


def label_to_record(label: HumanLabel) -> dict:
    return {
        "solution_id": label.solution_id,
        "annotator": label.annotator,
        "is_false_positive": label.is_false_positive,
        "error_types": [e.value for e in label.error_types],
        "exemption": label.exemption.value if label.exemption else None,
        "answer_part_only": label.answer_part_only,
        "notes": label.notes,
        "saved_at": label.saved_at,
    }


def label_from_record(record: dict) -> HumanLabel:
    return HumanLabel(
        solution_id=record["solution_id"],
        annotator=record["annotator"],
        is_false_positive=record["is_false_positive"],
        error_types=tuple(ErrorType(e) for e in record.get("error_types", [])),
        exemption=Exemption(record["exemption"]) if record.get("exemption") else None,
        answer_part_only=record.get("answer_part_only", False),
        notes=record.get("notes", ""),
        saved_at=record.get("saved_at"),
    )


def judge_verdict_to_record(v: JudgeVerdict) -> dict:
    return {
        "solution_id": v.solution_id,
        "verdict": v.verdict,
        "raw_reply": v.raw_reply,
        "judge_model": v.judge_model,
    }


def judge_verdict_from_record(record: dict) -> JudgeVerdict:
    return JudgeVerdict(
        solution_id=record["solution_id"],
        verdict=record["verdict"],
        raw_reply=record["raw_reply"],
        judge_model=record["judge_model"],
    )


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(_dump(record) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                records.append(json.loads(raw))
            except ValueError as exc:
                raise ParseError(f"{path.name}: {exc}", line=lineno) from None
    return records


# ---------------------------------------------------------------------------
# run directory operations

def save_run(
    manifest: RunManifest,
    solutions: list[SolutionRecord],
    out_dir: str | Path,
    *,
    verdicts: list[AutoVerdict] | None = None,
    problems: ProblemSet | None = None,
) -> Path:
    """Persist a run; idempotent for identical content, append-only otherwise.

    Re-saving the same run is a no-op; saving different content under an
    existing run_id raises ConflictError.
    """
    for s in solutions:
        if s.run_id != manifest.run_id:
            raise ValidationError(
                f"solution {s.solution_id!r} belongs to run {s.run_id!r}, not {manifest.run_id!r}"
            )
    run_dir = Path(out_dir) / manifest.run_id
    manifest_text = _dump(manifest_to_record(manifest)) + "\n"
    solutions_text = "".join(_dump(solution_to_record(s)) + "\n" for s in solutions)

    manifest_path = run_dir / MANIFEST_FILE
    if manifest_path.exists():
        existing = manifest_path.read_text(encoding="utf-8")
        existing_solutions = (run_dir / SOLUTIONS_FILE).read_text(encoding="utf-8")
        if existing != manifest_text or existing_solutions != solutions_text:
            raise ConflictError(
                f"run {manifest.run_id!r} already exists with different content"
            )
        return run_dir

    run_dir.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(manifest_text, encoding="utf-8")
    (run_dir / SOLUTIONS_FILE).write_text(solutions_text, encoding="utf-8")
    if verdicts is not None:
        write_verdicts(run_dir, verdicts)
    if problems is not None:
        save_problems(problems, run_dir / PROBLEMS_FILE)
    return run_dir


def write_verdicts(run_dir: str | Path, verdicts: list[AutoVerdict]) -> None:
    _write_jsonl(Path(run_dir) / VERDICTS_FILE, [verdict_to_record(v) for v in verdicts])


def write_judge_verdicts(run_dir: str | Path, verdicts: list[JudgeVerdict]) -> None:
    _write_jsonl(
        Path(run_dir) / JUDGE_VERDICTS_FILE, [judge_verdict_to_record(v) for v in verdicts]
    )


def append_labels(run_dir: str | Path, labels: list[HumanLabel]) -> None:
    path = Path(run_dir) / LABELS_FILE
    with path.open("a", encoding="utf-8") as fh:
        for label in labels:
            fh.write(_dump(label_to_record(label)) + "\n")


def effective_labels(labels: list[HumanLabel]) -> list[HumanLabel]:
    """Latest version per (solution, annotator), preserving first-seen order."""
    latest: dict[tuple[str, str], HumanLabel] = {}
    order: list[tuple[str, str]] = []
    for label in labels:
        key = (label.solution_id, label.annotator)
        if key not in latest:
            order.append(key)
        latest[key] = label
    return [latest[key] for key in order]


def load_run(run_dir: str | Path) -> StoredRun:
    run_dir = Path(run_dir)
    manifest_path = run_dir / MANIFEST_FILE
    if not manifest_path.exists():
        raise ValidationError(f"{run_dir} is not a run directory (no {MANIFEST_FILE})")
    manifest = manifest_from_record(json.loads(manifest_path.read_text(encoding="utf-8")))
    solutions = [solution_from_record(r) for r in _read_jsonl(run_dir / SOLUTIONS_FILE)]
    verdicts = [verdict_from_record(r) for r in _read_jsonl(run_dir / VERDICTS_FILE)]
    labels = [label_from_record(r) for r in _read_jsonl(run_dir / LABELS_FILE)]
    judge_verdicts = [judge_verdict_from_record(r) for r in _read_jsonl(run_dir / JUDGE_VERDICTS_FILE)]
    problems = None
    problems_path = run_dir / PROBLEMS_FILE
    if problems_path.exists():
        problems = load_problems(problems_path, dataset_id=manifest.dataset_id)
    return StoredRun(
        run_dir=run_dir,
        manifest=manifest,
        solutions=solutions,
        verdicts=verdicts,
        labels=labels,
        judge_verdicts=judge_verdicts,
        problems=problems,
    )


__all__ = [
    "ErrorType",
    "Exemption",
    "HumanLabel",
    "RunManifest",
    "SolutionRecord",
    "StoredRun",
    "append_labels",
    "effective_labels",
    "load_run",
    "make_solution_id",
    "save_run",
    "split_long_cot",
    "write_judge_verdicts",
    "write_verdicts",
]
