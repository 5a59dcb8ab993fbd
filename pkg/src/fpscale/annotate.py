"""Annotation service: a label API plus static hosting for the review UI.

Human review walks each automatically correct solution step by step and
records whether it is a false positive, with error types from the
four-category taxonomy and exemptions for minor or self-corrected
mistakes. The service owns label writes for one run: labels append to the
run's label file, serialized under a lock, and every write is validated
with the same invariants the metrics layer enforces, so the UI can never
persist a label the audit would reject.

Endpoints:

    GET  /api/items?run=<run_id>   item summaries, pending-first
    GET  /api/items/<id>           full item detail
    PUT  /api/items/<id>/label     validate + append one label
    GET  /api/progress             labeling progress counters
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .errors import ValidationError
from .store import (
    ErrorType,
    Exemption,
    HumanLabel,
    append_labels,
    effective_labels,
    label_to_record,
    load_run,
    split_long_cot,
)

_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>Annotation service</title></head>
<body>
<h1>Annotation service</h1>
<p>The annotation API is running. No UI bundle was configured; start the
service with <code>--ui-dir frontend/dist</code> after building the
frontend, or talk to the API directly:</p>
<ul>
<li><code>GET /api/items</code></li>
<li><code>GET /api/items/&lt;id&gt;</code></li>
<li><code>PUT /api/items/&lt;id&gt;/label</code></li>
<li><code>GET /api/progress</code></li>
</ul>
</body></html>
"""

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
}


class AnnotationService:
    """In-memory view of one run plus serialized label writes."""

    def __init__(self, run_dir: str | Path):
        self.run = load_run(run_dir)
        if self.run.problems is None:
            raise ValidationError("run has no stored problems; cannot serve annotation items")
        self._statements = {p.id: p for p in self.run.problems}
        self._verdicts = {v.solution_id: v for v in self.run.verdicts}
        self._labels = list(self.run.labels)
        self._write_lock = threading.Lock()

    @property
    def run_id(self) -> str:
        return self.run.manifest.run_id

    def _labels_for(self, solution_id: str) -> list[HumanLabel]:
        return [lbl for lbl in effective_labels(self._labels) if lbl.solution_id == solution_id]

    def _item_order(self):
        """Auto-correct solutions pending labels first, then the rest."""
        labeled = {lbl.solution_id for lbl in self._labels}

        def sort_key(idx_solution):
            idx, solution = idx_solution
            auto = bool(self._verdicts.get(solution.solution_id) and self._verdicts[solution.solution_id].correct)
            return (not auto, solution.solution_id in labeled, idx)

        return [s for _, s in sorted(enumerate(self.run.solutions), key=sort_key)]

    def item_summaries(self) -> list[dict]:
        labeled = {lbl.solution_id for lbl in self._labels}
        out = []
        for solution in self._item_order():
            verdict = self._verdicts.get(solution.solution_id)
            out.append(
                {
                    "solution_id": solution.solution_id,
                    "problem_id": solution.problem_id,
                    "auto_correct": bool(verdict and verdict.correct),
                    "labeled": solution.solution_id in labeled,
                    "extracted_answer": solution.extracted.canonical if solution.extracted else "",
                }
            )
        return out

    def item_detail(self, solution_id: str) -> dict | None:
        solution = next((s for s in self.run.solutions if s.solution_id == solution_id), None)
        if solution is None:
            return None
        problem = self._statements.get(solution.problem_id)
        verdict = self._verdicts.get(solution_id)
        long_cot = solution.answer_part is not None
        judgment_text = solution.answer_part if long_cot else solution.text
        think_part = ""
        if long_cot:
            think_part, _ = split_long_cot(solution.text)
        return {
            "solution_id": solution.solution_id,
            "problem_id": solution.problem_id,
            "problem": problem.statement if problem else "",
            "gold_answer": problem.gold_answer if problem else "",
            "steps": list(solution.steps),
            "text": solution.text,
            "extracted_answer": solution.extracted.canonical if solution.extracted else "",
            "auto_correct": bool(verdict and verdict.correct),
            "long_cot": long_cot,
            "think_part": think_part,
            "judgment_text": judgment_text,
            "judgment_steps": [s for s in (judgment_text or "").split("\n\n") if s],
            "labels": [label_to_record(lbl) for lbl in self._labels_for(solution_id)],
        }

    def submit_label(self, solution_id: str, payload: dict) -> HumanLabel:
        """Validate and append one label; raises ValidationError on bad input."""
        if not any(s.solution_id == solution_id for s in self.run.solutions):
            raise ValidationError(f"unknown solution {solution_id!r}")
        allowed = {
            "annotator",
            "is_false_positive",
            "error_types",
            "exemption",
            "answer_part_only",
            "notes",
        }
        unknown = set(payload) - allowed
        if unknown:
            raise ValidationError(f"unknown label field(s): {sorted(unknown)}")
        annotator = str(payload.get("annotator", "")).strip()
        if not annotator:
            raise ValidationError("annotator must be non-empty")
        try:
            error_types = tuple(ErrorType(e) for e in payload.get("error_types", []))
        except ValueError as exc:
            raise ValidationError(f"unknown error type: {exc}") from None
        exemption = None
        if payload.get("exemption"):
            try:
                exemption = Exemption(payload["exemption"])
            except ValueError as exc:
                raise ValidationError(f"unknown exemption: {exc}") from None
        label = HumanLabel(
            solution_id=solution_id,
            annotator=annotator,
            is_false_positive=bool(payload.get("is_false_positive", False)),
            error_types=error_types,
            exemption=exemption,
            answer_part_only=bool(payload.get("answer_part_only", False)),
            notes=str(payload.get("notes", "")),
            saved_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        )
        with self._write_lock:
            append_labels(self.run.run_dir, [label])
            self._labels.append(label)
        return label

    def progress(self) -> dict:
        labeled = {lbl.solution_id for lbl in self._labels}
        auto_correct = {
            s.solution_id
            for s in self.run.solutions
            if self._verdicts.get(s.solution_id) and self._verdicts[s.solution_id].correct
        }
        total = len(self.run.solutions)
        return {
            "run_id": self.run_id,
            "total": total,
            "labeled": len(labeled & {s.solution_id for s in self.run.solutions}),
            "pending": total - len(labeled),
            "auto_correct": len(auto_correct),
            "auto_correct_labeled": len(auto_correct & labeled),
        }


class AnnotationServer:
    """HTTP front for an AnnotationService plus static UI hosting."""

    def __init__(
        self,
        service: AnnotationService,
        *,
        host: str = "127.0.0.1",
        port: int = 0,
        ui_dir: str | Path | None = None,
    ):
        self.service = service
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):
                pass

            def _reply_json(self, status: int, payload) -> None:
                data = json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def _reply_bytes(self, data: bytes, content_type: str) -> None:
                self.send_response(200)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def _serve_static(self, path: str) -> None:
                if outer.ui_dir is None:
                    self._reply_bytes(_FALLBACK_PAGE.encode("utf-8"), _CONTENT_TYPES[".html"])
                    return
                rel = path.lstrip("/") or "index.html"
                target = (outer.ui_dir / rel).resolve()
                if not target.is_relative_to(outer.ui_dir) or not target.is_file():
                    self._reply_json(404, {"error": "not found"})
                    return
                ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
                self._reply_bytes(target.read_bytes(), ctype)

            def do_GET(self):
                parsed = urlparse(self.path)
                if parsed.path == "/api/items":
                    query = parse_qs(parsed.query)
                    wanted = query.get("run", [outer.service.run_id])[0]
                    if wanted != outer.service.run_id:
                        self._reply_json(404, {"error": f"run {wanted!r} is not served here"})
                        return
                    self._reply_json(
                        200, {"run_id": outer.service.run_id, "items": outer.service.item_summaries()}
                    )
                elif parsed.path.startswith("/api/items/"):
                    solution_id = parsed.path[len("/api/items/") :]
                    detail = outer.service.item_detail(solution_id)
                    if detail is None:
                        self._reply_json(404, {"error": f"unknown item {solution_id!r}"})
                    else:
                        self._reply_json(200, detail)
                elif parsed.path == "/api/progress":
                    self._reply_json(200, outer.service.progress())
                else:
                    self._serve_static(parsed.path)

            def do_PUT(self):
                parsed = urlparse(self.path)
                if not (parsed.path.startswith("/api/items/") and parsed.path.endswith("/label")):
                    self._reply_json(404, {"error": "not found"})
                    return
                solution_id = parsed.path[len("/api/items/") : -len("/label")]
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    payload = json.loads(self.rfile.read(length).decode("utf-8"))
                except ValueError:
                    self._reply_json(400, {"error": "invalid JSON"})
                    return
                try:
                    label = outer.service.submit_label(solution_id, payload)
                except ValidationError as exc:
                    self._reply_json(422, {"error": str(exc)})
                    return
                self._reply_json(200, {"ok": True, "label": label_to_record(label)})

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "AnnotationServer":
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

    def __enter__(self) -> "AnnotationServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
