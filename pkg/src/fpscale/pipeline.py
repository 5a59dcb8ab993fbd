"""End-to-end orchestration: configuration, sampling, search, reporting.

A pipeline is configured by a single JSON file (validated strictly;
unknown keys are rejected) plus CLI flag overrides. Run ids derive from a
digest of the effective configuration, and the manifest timestamp honors
SOURCE_DATE_EPOCH, so identical configurations against deterministic
endpoints reproduce byte-identical run directories.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from .aggregate import CandidatePool, Method, ScoredCandidate, normalize_rewards
from .clients import (
    STEP_LEVEL_SAMPLING,
    SOLVE_INSTRUCTION,
    EndpointConfig,
    ModelClient,
    SamplingParams,
    bounded_map,
    default_sampling_for,
)
from .corpus import ProblemSet, Problem, load_problems, sample_subset
from .errors import ConfigurationError, ValidationError
from .grading import AutoVerdict, grade
from .search import SearchTrace, dvts, mcts
from .search.interfaces import join_steps, split_steps
from .store import (
    RunManifest,
    SolutionRecord,
    StoredRun,
    make_solution_id,
    save_run,
    split_long_cot,
)
from .util import stable_digest, stable_hash

_ENDPOINT_KEYS = {
    "base_url",
    "model_name",
    "api_key_env",
    "timeout",
    "max_retries",
    "max_concurrency",
    "backoff_base",
}
_SAMPLING_KEYS = {"temperature", "top_p", "max_tokens", "n", "stop", "seed"}
_CONFIG_KEYS = {
    "dataset",
    "out",
    "seed",
    "method",
    "n",
    "beam_width",
    "lookahead",
    "iterations",
    "tree_width",
    "max_depth",
    "exploration",
    "subset_k",
    "subset_seed",
    "concurrency",
    "policy",
    "orm",
    "prm",
    "judge",
    "sampling",
    "created_at",
}

SAMPLE_METHODS = (Method.BON, Method.SC, Method.WSC, Method.PASS)
SEARCH_METHODS = (Method.DVTS, Method.MCTS)


@dataclass(frozen=True)
class PipelineConfig:
    dataset: str
    out: str
    method: Method
    seed: int = 0
    n: int = 4
    beam_width: int = 4
    lookahead: int = 0
    iterations: int = 40
    tree_width: int = 4
    max_depth: int = 40
    exploration: float = 1.0
    subset_k: int | None = None
    subset_seed: int | None = None
    concurrency: int = 4
    policy: EndpointConfig | None = None
    orm: EndpointConfig | None = None
    prm: EndpointConfig | None = None
    judge: EndpointConfig | None = None
    sampling: SamplingParams | None = None
    created_at: str | None = None


def _check_keys(mapping: dict, allowed: set, context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigurationError(f"unknown {context} key(s): {sorted(unknown)}")


def _endpoint_from(mapping: dict | None, context: str) -> EndpointConfig | None:
    if mapping is None:
        return None
    _check_keys(mapping, _ENDPOINT_KEYS, context)
    if "base_url" not in mapping or "model_name" not in mapping:
        raise ConfigurationError(f"{context} endpoint needs base_url and model_name")
    return EndpointConfig(**mapping)


def _sampling_from(mapping: dict | None) -> SamplingParams | None:
    if mapping is None:
        return None
    _check_keys(mapping, _SAMPLING_KEYS, "sampling")
    if "stop" in mapping and mapping["stop"] is not None:
        mapping = dict(mapping, stop=tuple(mapping["stop"]))
    return SamplingParams(**mapping)


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Parse and validate a config file; flag overrides win over the file."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    merged = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    _check_keys(merged, _CONFIG_KEYS, "config")
    for required in ("dataset", "out", "method"):
        if required not in merged:
            raise ConfigurationError(f"config lacks required key {required!r}")
    try:
        method = Method(str(merged["method"]).upper())
    except ValueError:
        raise ConfigurationError(f"unknown method {merged['method']!r}") from None
    kwargs = {
        key: merged[key]
        for key in (
            "seed",
            "n",
            "beam_width",
            "lookahead",
            "iterations",
            "tree_width",
            "max_depth",
            "exploration",
            "subset_k",
            "subset_seed",
            "concurrency",
            "created_at",
        )
        if key in merged
    }
    return PipelineConfig(
        dataset=merged["dataset"],
        out=merged["out"],
        method=method,
        policy=_endpoint_from(merged.get("policy"), "policy"),
        orm=_endpoint_from(merged.get("orm"), "orm"),
        prm=_endpoint_from(merged.get("prm"), "prm"),
        judge=_endpoint_from(merged.get("judge"), "judge"),
        sampling=_sampling_from(merged.get("sampling")),
        **kwargs,
    )


def resolve_created_at(config: PipelineConfig) -> str:
    """Manifest timestamp: config value, then SOURCE_DATE_EPOCH, then now."""
    if config.created_at:
        return config.created_at
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _load_dataset(config: PipelineConfig) -> ProblemSet:
    problems = load_problems(config.dataset)
    if config.subset_k is not None:
        problems = sample_subset(
            problems,
            config.subset_k,
            config.subset_seed if config.subset_seed is not None else config.seed,
        )
    return problems


def _method_params(config: PipelineConfig) -> dict:
    if config.method in SAMPLE_METHODS:
        return {"n": config.n}
    if config.method is Method.DVTS:
        return {
            "n": config.n,
            "m": config.beam_width,
            "lookahead": config.lookahead,
            "iterations": config.iterations,
        }
    return {
        "n_paths": config.n,
        "tree_width": config.tree_width,
        "max_depth": config.max_depth,
        "exploration": config.exploration,
    }


def derive_run_id(config: PipelineConfig, dataset_id: str) -> str:
    digest = stable_digest(
        "run",
        dataset_id,
        config.method.value,
        sorted(_method_params(config).items()),
        config.policy.model_name if config.policy else "",
        config.orm.model_name if config.orm else "",
        config.prm.model_name if config.prm else "",
        config.seed,
    )
    return f"run-{digest[:12]}"


def _effective_sampling(config: PipelineConfig, *, step_level: bool) -> SamplingParams:
    if config.sampling is not None:
        return config.sampling
    if step_level:
        temperature, top_p = STEP_LEVEL_SAMPLING
        return SamplingParams(temperature=temperature, top_p=top_p)
    if config.policy is not None:
        return default_sampling_for(config.policy.model_name)
    return SamplingParams()


def _record_from_steps(
    run_id: str,
    problem: Problem,
    sample_index: int,
    steps: list[str],
    *,
    orm_reward: float | None = None,
    prm_values: list[float] | None = None,
) -> tuple[SolutionRecord, AutoVerdict]:
    text = join_steps(steps)
    solution_id = make_solution_id(run_id, problem.id, sample_index)
    verdict = grade(text, problem.gold_answer, solution_id=solution_id)
    think, answer = split_long_cot(text)
    record = SolutionRecord(
        solution_id=solution_id,
        run_id=run_id,
        problem_id=problem.id,
        sample_index=sample_index,
        text=text,
        steps=tuple(steps),
        extracted=verdict.extracted,
        auto_correct=verdict.correct,
        orm_reward=orm_reward,
        prm_values=tuple(prm_values) if prm_values is not None else None,
        answer_part=answer if answer != text else None,
    )
    return record, verdict


def run_sample(config: PipelineConfig) -> Path:
    """Sample N solutions per problem, grade, score, and persist the run."""
    if config.method not in SAMPLE_METHODS:
        raise ConfigurationError(f"sample expects a solution-level method, got {config.method.value}")
    if config.policy is None:
        raise ConfigurationError("sample requires a policy endpoint")
    problems = _load_dataset(config)
    run_id = derive_run_id(config, problems.dataset_id)
    sampling = _effective_sampling(config, step_level=False)
    policy = ModelClient(config.policy)
    orm = ModelClient(config.orm) if config.orm else None

    def sample_problem(problem: Problem):
        params = replace(
            sampling, n=config.n, seed=stable_hash(config.seed, problem.id) % 2**31
        )
        prompt = f"{problem.statement}\n\n{SOLVE_INSTRUCTION}"
        texts = policy.sample_completions(prompt, params)
        out = []
        for index, text in enumerate(texts):
            reward = orm.score_outcome(problem.statement, text) if orm else None
            out.append(
                _record_from_steps(
                    run_id, problem, index, split_steps(text), orm_reward=reward
                )
            )
        return out

    try:
        per_problem = bounded_map(sample_problem, problems, config.concurrency)
    finally:
        policy.close()
        if orm:
            orm.close()

    records = [record for batch in per_problem for record, _ in batch]
    verdicts = [verdict for batch in per_problem for _, verdict in batch]
    manifest = RunManifest(
        run_id=run_id,
        method=config.method,
        params=_method_params(config),
        policy_model=config.policy.model_name,
        reward_model=config.orm.model_name if config.orm else None,
        judge_model=config.judge.model_name if config.judge else None,
        dataset_id=problems.dataset_id,
        sampling=replace(sampling, n=config.n),
        created_at=resolve_created_at(config),
    )
    return save_run(manifest, records, config.out, verdicts=verdicts, problems=problems)


class HttpStepGenerator:
    """StepGenerator over a chat endpoint; a step ends at a blank line.

    An empty completion is kept as an empty terminal marker step; prefixes
    ending in a boxed answer or an empty marker are terminal.
    """

    def __init__(self, client: ModelClient, statement: str, sampling: SamplingParams):
        self.client = client
        self.statement = statement
        self.sampling = sampling

    def _prompt(self, prefix) -> str:
        base = f"{self.statement}\n\n{SOLVE_INSTRUCTION}"
        if prefix:
            base += "\n\n" + join_steps(list(prefix)) + "\n\n"
        return base

    def sample_steps(self, prefix, k: int, *, seed: int | None = None) -> list[str]:
        params = replace(self.sampling, n=k, stop=("\n\n",), seed=seed)
        return self.client.sample_completions(self._prompt(prefix), params)

    def greedy_continue(self, prefix, limit: int) -> list[str]:
        if limit <= 0:
            return []
        params = replace(self.sampling, n=1, stop=None, temperature=0.0, seed=None)
        text = self.client.sample_completions(self._prompt(prefix), params)[0]
        return [s for s in split_steps(text) if s][:limit]

    def is_terminal(self, prefix) -> bool:
        if not prefix:
            return False
        return "\\boxed{" in prefix[-1] or prefix[-1] == ""


class HttpStepScorer:
    """StepScorer over a process-reward endpoint; scores the full prefix."""

    def __init__(self, client: ModelClient):
        self.client = client

    def score(self, question: str, steps) -> float:
        return self.client.score_steps(question, list(steps))[-1]


def run_search(config: PipelineConfig) -> Path:
    """Run DVTS or MCTS per problem and persist trajectories as solutions."""
    if config.method not in SEARCH_METHODS:
        raise ConfigurationError(f"search expects DVTS or MCTS, got {config.method.value}")
    if config.policy is None or config.prm is None:
        raise ConfigurationError("search requires policy and prm endpoints")
    if config.method is Method.DVTS and config.n % config.beam_width != 0:
        raise ConfigurationError(
            f"beam width {config.beam_width} must divide candidate count {config.n}"
        )
    problems = _load_dataset(config)
    run_id = derive_run_id(config, problems.dataset_id)
    sampling = _effective_sampling(config, step_level=True)
    policy = ModelClient(config.policy)
    prm = ModelClient(config.prm)

    def search_problem(problem: Problem):
        gen = HttpStepGenerator(policy, problem.statement, sampling)
        scorer = HttpStepScorer(prm)
        problem_seed = stable_hash(config.seed, problem.id)
        if config.method is Method.DVTS:
            found = dvts(
                problem.statement,
                gen,
                scorer,
                n_candidates=config.n,
                beam_width=config.beam_width,
                lookahead=config.lookahead,
                max_iterations=config.iterations,
                seed=problem_seed,
            )
            step_lists = [list(sol.steps) for sol in found]
        else:
            trajectories = mcts(
                problem.statement,
                gen,
                scorer,
                n_paths=config.n,
                tree_width=config.tree_width,
                max_depth=config.max_depth,
                exploration=config.exploration,
                seed=problem_seed,
            )
            step_lists = [list(t.steps) for t in trajectories]
        out = []
        for index, steps in enumerate(step_lists):
            steps = [s for s in steps if s] or [""]
            prm_values = prm.score_steps(problem.statement, steps) if any(steps) else None
            out.append(
                _record_from_steps(run_id, problem, index, steps, prm_values=prm_values)
            )
        return out

    try:
        per_problem = bounded_map(search_problem, problems, config.concurrency)
    finally:
        policy.close()
        prm.close()

    records = [record for batch in per_problem for record, _ in batch]
    verdicts = [verdict for batch in per_problem for _, verdict in batch]
    manifest = RunManifest(
        run_id=run_id,
        method=config.method,
        params=_method_params(config),
        policy_model=config.policy.model_name,
        reward_model=config.prm.model_name,
        judge_model=config.judge.model_name if config.judge else None,
        dataset_id=problems.dataset_id,
        sampling=sampling,
        created_at=resolve_created_at(config),
    )
    return save_run(manifest, records, config.out, verdicts=verdicts, problems=problems)


def build_pools(run: StoredRun, *, require_labels: bool = False) -> list[CandidatePool]:
    """Per-problem candidate pools from a stored run, rewards normalized.

    Pools carry false-positive flags when the run has labels covering all
    auto-correct solutions (always when require_labels is set).
    """
    from .audit import resolve_fp_flags

    verdict_by_id = {v.solution_id: v for v in run.verdicts}
    flags = resolve_fp_flags(run.labels) if run.labels else {}
    by_problem: dict[str, list[SolutionRecord]] = {}
    for solution in run.solutions:
        by_problem.setdefault(solution.problem_id, []).append(solution)

    pools = []
    for problem_id in sorted(by_problem):
        group = sorted(by_problem[problem_id], key=lambda s: s.sample_index)
        raw_rewards = [
            s.orm_reward
            if s.orm_reward is not None
            else (s.prm_values[-1] if s.prm_values else 0.0)
            for s in group
        ]
        rewards = normalize_rewards(raw_rewards)
        candidates = tuple(
            ScoredCandidate(
                solution_id=s.solution_id,
                answer=s.extracted.canonical if s.extracted else "",
                reward=rewards[i],
                sample_index=s.sample_index,
            )
            for i, s in enumerate(group)
        )
        correct = tuple(
            verdict_by_id[s.solution_id].correct if s.solution_id in verdict_by_id else bool(s.auto_correct)
            for s in group
        )
        fp: tuple[bool, ...] | None = None
        covered = all(
            (not correct[i]) or (group[i].solution_id in flags) for i in range(len(group))
        )
        if flags and covered:
            fp = tuple(
                correct[i] and flags.get(group[i].solution_id, False) for i in range(len(group))
            )
        elif require_labels:
            missing = [
                group[i].solution_id
                for i in range(len(group))
                if correct[i] and group[i].solution_id not in flags
            ]
            raise ValidationError(f"labels missing for auto-correct solutions: {missing[:5]}")
        pools.append(
            CandidatePool(
                problem_id=problem_id,
                candidates=candidates,
                correct=correct,
                false_positive=fp,
            )
        )
    return pools
