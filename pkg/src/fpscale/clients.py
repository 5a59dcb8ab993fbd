"""HTTP clients for policy, outcome-reward, process-reward, and judge models.

The policy and judge speak the OpenAI-compatible chat-completions protocol
(``POST {base_url}/v1/chat/completions``). Reward models use a minimal
documented contract: ``POST /score_outcome`` with ``{model, question,
solution}`` returning ``{"score": float}``, and ``POST /score_steps`` with
``{model, question, steps}`` returning ``{"scores": [...]}``, one value per
step prefix. All payloads are UTF-8 JSON; the API key named by
``api_key_env`` is sent as a bearer credential.

Request bodies are pure functions of (config, inputs, params); the
``build_*_request`` helpers are kept separate so golden tests can pin the
serialized forms.
"""

from __future__ import annotations

import os
import re
import threading
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .errors import (
    ConfigurationError,
    EndpointError,
    ProtocolError,
    RangeError,
    UnparseableVerdictError,
)

#: Default (temperature, top_p) per policy-model family for solution-level
#: sampling; step-level sampling uses 0.7 / 1.0 for every family. Most
#: specific family first: R1 distills carry "llama" in their names too.
FAMILY_SAMPLING_DEFAULTS = {
    "deepseek-r1": (0.6, 0.95),
    "llama": (0.6, 0.9),
    "qwen": (0.7, 0.8),
}
STEP_LEVEL_SAMPLING = (0.7, 1.0)

SOLVE_INSTRUCTION = "Please reason step by step, and put your final answer within \\boxed{}."

JUDGE_PROMPT_TEMPLATE = """You are an expert mathematician and your task is to verify the correctness of a step-by-step solution to a math problem. Carefully analyze each step for logical consistency, mathematical accuracy, and adherence to any given formulas or rules. Disregard minor errors that do not affect the validity of the final answer or are irrelevant to it.

Problem:
{problem}

Solution:
{solution}

Based on the problem and solution provided above:
1. Output True if the solution is considered correct.
2. Output False if the solution is considered incorrect and contains some errors.

Please comprehensively evaluate all the steps in the solution and provide only True or False as your final output."""

_VERDICT_TOKEN_RE = re.compile(r"\b(true|false)\b", re.IGNORECASE)


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.7
    top_p: float = 1.0
    max_tokens: int = 1024
    n: int = 1
    stop: tuple[str, ...] | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigurationError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ConfigurationError("top_p must be in (0, 1]")
        if self.n < 1 or self.max_tokens < 1:
            raise ConfigurationError("n and max_tokens must be >= 1")


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    api_key_env: str | None = None
    timeout: float = 60.0
    max_retries: int = 3
    max_concurrency: int = 4
    backoff_base: float = 0.2

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ConfigurationError("max_concurrency must be >= 1")
        if self.max_retries < 1:
            raise ConfigurationError("max_retries must be >= 1")


@dataclass(frozen=True)
class JudgeVerdict:
    """A model judgment of one solution; True means judged correct."""

    solution_id: str
    verdict: bool
    raw_reply: str
    judge_model: str


def default_sampling_for(model_name: str) -> SamplingParams:
    """Family defaults keyed on the model name; overridable in config."""
    lowered = model_name.lower()
    for family, (temperature, top_p) in FAMILY_SAMPLING_DEFAULTS.items():
        if family in lowered:
            return SamplingParams(temperature=temperature, top_p=top_p)
    return SamplingParams()


def build_chat_request(cfg: EndpointConfig, prompt: str, params: SamplingParams) -> dict:
    body = {
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_tokens,
        "n": params.n,
    }
    if params.stop is not None:
        body["stop"] = list(params.stop)
    if params.seed is not None:
        body["seed"] = params.seed
    return body


def build_outcome_request(cfg: EndpointConfig, question: str, solution: str) -> dict:
    return {"model": cfg.model_name, "question": question, "solution": solution}


def build_steps_request(cfg: EndpointConfig, question: str, steps: Sequence[str]) -> dict:
    return {"model": cfg.model_name, "question": question, "steps": list(steps)}


def parse_judge_reply(reply: str) -> bool:
    """Take the last standalone true/false token, case-insensitively."""
    tokens = _VERDICT_TOKEN_RE.findall(reply)
    if not tokens:
        raise UnparseableVerdictError(
            "judge reply contains neither a True nor a False token", raw_reply=reply
        )
    return tokens[-1].lower() == "true"


class ModelClient:
    """A shareable client for one endpoint; enforces its concurrency bound.

    Transient failures (connection errors, timeouts, 429 and 5xx statuses)
    are retried with exponential backoff inside a total attempt budget of
    ``max_retries``. Other HTTP errors fail immediately.
    """

    def __init__(self, cfg: EndpointConfig):
        self.cfg = cfg
        self._semaphore = threading.BoundedSemaphore(cfg.max_concurrency)
        self._http = httpx.Client(base_url=cfg.base_url, timeout=cfg.timeout)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "ModelClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.cfg.api_key_env:
            key = os.environ.get(self.cfg.api_key_env)
            if not key:
                raise ConfigurationError(
                    f"environment variable {self.cfg.api_key_env!r} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, path: str, body: dict) -> dict:
        headers = self._headers()
        last_error: str = ""
        last_status: int | None = None
        for attempt in range(1, self.cfg.max_retries + 1):
            if attempt > 1:
                time.sleep(self.cfg.backoff_base * 2 ** (attempt - 2))
            try:
                with self._semaphore:
                    response = self._http.post(path, json=body, headers=headers)
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                continue
            if response.status_code == 200:
                try:
                    return response.json()
                except ValueError as exc:
                    raise ProtocolError(f"{path}: response is not JSON: {exc}") from None
            last_status = response.status_code
            last_error = f"HTTP {response.status_code}"
            if response.status_code not in (429,) and response.status_code < 500:
                raise EndpointError(
                    f"{path} failed: {last_error}", status=last_status, attempts=attempt
                )
        raise EndpointError(
            f"{path} failed after {self.cfg.max_retries} attempts: {last_error}",
            status=last_status,
            attempts=self.cfg.max_retries,
        )

    def sample_completions(self, prompt: str, params: SamplingParams) -> list[str]:
        """Return exactly params.n completion texts."""
        body = build_chat_request(self.cfg, prompt, params)
        reply = self._post("/v1/chat/completions", body)
        try:
            choices = reply["choices"]
            texts = [choice["message"]["content"] for choice in choices]
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed chat completion reply: {exc}") from None
        if len(texts) != params.n:
            raise ProtocolError(f"requested n={params.n} completions, got {len(texts)}")
        return texts

    def score_outcome(self, question: str, solution: str) -> float:
        """Score one whole solution; the scalar may be negative."""
        body = build_outcome_request(self.cfg, question, solution)
        reply = self._post("/score_outcome", body)
        if "score" not in reply:
            raise ProtocolError("score_outcome reply lacks a 'score' field")
        return float(reply["score"])

    def score_steps(self, question: str, steps: Sequence[str]) -> list[float]:
        """Score each step prefix; value i covers steps[0..i]."""
        if not steps:
            raise RangeError("score_steps requires a non-empty step list")
        body = build_steps_request(self.cfg, question, steps)
        reply = self._post("/score_steps", body)
        scores = reply.get("scores")
        if not isinstance(scores, list):
            raise ProtocolError("score_steps reply lacks a 'scores' list")
        if len(scores) != len(steps):
            raise ProtocolError(
                f"score_steps returned {len(scores)} values for {len(steps)} steps"
            )
        return [float(s) for s in scores]

    def judge_solution(self, problem: str, solution: str, *, solution_id: str = "") -> JudgeVerdict:
        """Render the verification prompt verbatim and parse the reply.

        The verdict is the last standalone true/false token of the reply;
        a reply with neither raises UnparseableVerdictError.
        """
        prompt = JUDGE_PROMPT_TEMPLATE.format(problem=problem, solution=solution)
        params = SamplingParams(temperature=0.0, top_p=1.0, max_tokens=2048, n=1)
        reply = self.sample_completions(prompt, params)[0]
        return JudgeVerdict(
            solution_id=solution_id,
            verdict=parse_judge_reply(reply),
            raw_reply=reply,
            judge_model=self.cfg.model_name,
        )


def bounded_map(fn: Callable, items: Iterable, max_workers: int) -> list:
    """Apply fn across items with bounded parallelism, preserving order."""
    items = list(items)
    if not items:
        return []
    workers = max(1, min(max_workers, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
