"""Deterministic, scriptable in-process model server for tests and demos.

The server speaks the same wire protocols as the real endpoints (chat
completions, ``/score_outcome``, ``/score_steps``). Every response is a
pure function of the request body, so reruns of a pipeline against the
mock are byte-identical. Behavior can be overridden per request through a
script that maps request keys (a digest of path + canonical body) to
responses; script entries can also inject a fixed number of transient
failures to exercise retry logic.

The default policy behaves like a tiny math model: it emits multi-step
solutions ending in a boxed integer derived from a hash of the problem
paragraph, continues partial step histories coherently, and answers
verification prompts with a deterministic True/False.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from random import Random

from .clients import SOLVE_INSTRUCTION
from .errors import ValidationError
from .util import canonical_json, stable_digest, stable_hash

_JUDGE_MARKER = "provide only True or False as your final output"

#: Answers drawn by the mock policy stay below this bound.
_ANSWER_SPAN = 50


def request_key(path: str, body: dict) -> str:
    """Digest identifying one exact request; used to script the mock."""
    return stable_digest("request", path, canonical_json(body))


@dataclass
class _ScriptEntry:
    response: dict | None = None
    status: int = 200
    fail_times: int = 0


@dataclass
class MockScript:
    """Maps request keys to scripted responses and failure injections."""

    entries: dict[str, _ScriptEntry] = field(default_factory=dict)

    def expect(
        self,
        path: str,
        body: dict,
        *,
        response: dict | None = None,
        status: int = 200,
        fail_times: int = 0,
    ) -> str:
        key = request_key(path, body)
        self.entries[key] = _ScriptEntry(response=response, status=status, fail_times=fail_times)
        return key

    @classmethod
    def load(cls, path: str | Path) -> "MockScript":
        """Load a line-delimited fixture; records carry either an explicit
        ``key`` or a ``path`` + ``body`` pair from which the key is derived."""
        script = cls()
        with Path(path).open("r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                record = json.loads(raw)
                if "key" in record:
                    key = record["key"]
                elif "path" in record and "body" in record:
                    key = request_key(record["path"], record["body"])
                else:
                    raise ValidationError(f"script line {lineno} lacks 'key' or 'path'+'body'")
                script.entries[key] = _ScriptEntry(
                    response=record.get("response"),
                    status=int(record.get("status", 200)),
                    fail_times=int(record.get("fail_times", 0)),
                )
        return script


def _mock_answer(problem: str, rng: Random, greedy: bool) -> int:
    base = stable_hash("mock-answer", problem) % _ANSWER_SPAN
    if greedy:
        return base
    return base + rng.choice([0, 0, 0, 1, 2])


def mock_next_step(
    problem: str,
    prev_steps: tuple[str, ...],
    variant: int,
    seed: int | None,
    greedy: bool,
) -> str:
    """The mock policy's next reasoning step for a prefix; pure function."""
    h = stable_hash("mock-step", problem, prev_steps, variant, seed or 0, greedy)
    rng = Random(h)
    depth = len(prev_steps)
    target_depth = 2 + stable_hash("mock-depth", problem) % 2
    if depth >= target_depth or (depth >= 1 and not greedy and rng.random() < 0.35):
        return f"The final answer is $\\boxed{{{_mock_answer(problem, rng, greedy)}}}$"
    quantity = rng.randrange(100)
    return f"Step {depth + 1}: we evaluate the intermediate quantity and obtain {quantity}."


def mock_solution_steps(
    problem: str,
    prev_steps: tuple[str, ...],
    variant: int,
    seed: int | None,
    greedy: bool,
) -> list[str]:
    """Continue a prefix to completion (at most 8 further steps)."""
    steps = list(prev_steps)
    added: list[str] = []
    for _ in range(8):
        step = mock_next_step(problem, tuple(steps), variant, seed, greedy)
        steps.append(step)
        added.append(step)
        if "\\boxed{" in step:
            break
    return added


def _split_prompt(prompt: str) -> tuple[str, tuple[str, ...]]:
    """Recover (problem paragraph, prior steps) from a policy prompt."""
    paragraphs = prompt.split("\n\n")
    problem = paragraphs[0]
    steps = tuple(p for p in paragraphs[1:] if p and p != SOLVE_INSTRUCTION)
    return problem, steps


def mock_judge_verdict(prompt: str) -> bool:
    """Deterministic default verdict; roughly one third come back False."""
    return stable_hash("mock-judge", prompt) % 3 != 0


def _default_chat(body: dict) -> dict:
    messages = body.get("messages") or []
    prompt = messages[-1].get("content", "") if messages else ""
    n = int(body.get("n", 1))
    temperature = float(body.get("temperature", 1.0))
    seed = body.get("seed")
    stop = body.get("stop") or []
    greedy = temperature == 0
    choices = []
    for i in range(n):
        variant = 0 if greedy else i
        if _JUDGE_MARKER in prompt:
            verdict = mock_judge_verdict(prompt)
            text = (
                "After reviewing each step, the reasoning holds. True"
                if verdict
                else "One of the steps is not justified, so the solution is flawed. False"
            )
        else:
            problem, prev = _split_prompt(prompt)
            if "\n\n" in stop:
                text = mock_next_step(problem, prev, variant, seed, greedy)
            else:
                text = "\n\n".join(mock_solution_steps(problem, prev, variant, seed, greedy))
        choices.append(
            {
                "index": i,
                "message": {"role": "assistant", "content": text},
                "finish_reason": "stop",
            }
        )
    return {
        "id": f"mock-{stable_digest('chat', canonical_json(body))}",
        "object": "chat.completion",
        "model": body.get("model", "mock"),
        "choices": choices,
    }


def _default_score_outcome(body: dict) -> dict:
    for field_name in ("question", "solution"):
        if field_name not in body:
            return {"error": f"missing field {field_name!r}", "_status": 400}
    h = stable_hash("mock-orm", body["question"], body["solution"])
    return {"score": (h % 6001) / 1000.0 - 3.0}


def _default_score_steps(body: dict) -> dict:
    steps = body.get("steps")
    if not isinstance(steps, list) or not steps:
        return {"error": "steps must be a non-empty list", "_status": 400}
    question = body.get("question", "")
    scores = [
        (stable_hash("mock-prm", question, tuple(steps[: i + 1])) % 1000) / 999.0
        for i in range(len(steps))
    ]
    return {"scores": scores}


_DEFAULT_HANDLERS = {
    "/v1/chat/completions": _default_chat,
    "/score_outcome": _default_score_outcome,
    "/score_steps": _default_score_steps,
}


class MockModelServer:
    """Threaded HTTP server hosting the mock endpoints on a local port."""

    def __init__(
        self,
        script: MockScript | None = None,
        *,
        host: str = "127.0.0.1",
        port: int = 0,
        latency: float = 0.0,
    ):
        self.script = script or MockScript()
        self.latency = latency
        self._lock = threading.Lock()
        self._in_flight = 0
        self.peak_in_flight = 0
        self.request_count = 0
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):  # keep test output quiet
                pass

            def _reply(self, status: int, payload: dict) -> None:
                data = json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self):
                if self.path == "/health":
                    self._reply(200, {"status": "ok"})
                else:
                    self._reply(404, {"error": "not found"})

            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length)
                try:
                    body = json.loads(raw.decode("utf-8"))
                except ValueError:
                    self._reply(400, {"error": "invalid JSON"})
                    return
                with outer._lock:
                    outer._in_flight += 1
                    outer.request_count += 1
                    outer.peak_in_flight = max(outer.peak_in_flight, outer._in_flight)
                try:
                    if outer.latency:
                        time.sleep(outer.latency)
                    status, payload = outer.handle(self.path, body)
                finally:
                    with outer._lock:
                        outer._in_flight -= 1
                self._reply(status, payload)

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def handle(self, path: str, body: dict) -> tuple[int, dict]:
        entry = self.script.entries.get(request_key(path, body))
        if entry is not None:
            with self._lock:
                if entry.fail_times > 0:
                    entry.fail_times -= 1
                    return 503, {"error": "scripted transient failure"}
            if entry.response is not None or entry.status != 200:
                return entry.status, entry.response or {}
        handler = _DEFAULT_HANDLERS.get(path)
        if handler is None:
            return 404, {"error": f"no handler for {path}"}
        payload = handler(body)
        status = payload.pop("_status", 200)
        return status, payload

    def start(self) -> "MockModelServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "MockModelServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
