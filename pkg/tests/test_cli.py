import json
from pathlib import Path

import pytest

from fpscale.cli import main
from fpscale.clients import (
    JUDGE_PROMPT_TEMPLATE,
    EndpointConfig,
    SamplingParams,
    build_chat_request,
)
from fpscale.store import ErrorType, HumanLabel, append_labels, load_run
from fpscale.util import stable_hash

from conftest import make_problems, write_problem_file


def mock_gold(statement):
    """Gold answer matching the mock policy's greedy answer for a problem."""
    return str(stable_hash("mock-answer", statement) % 50)


def write_dataset(tmp_path, n_problems=2, *, solvable=True):
    problems = make_problems(n_problems)
    if solvable:
        rebuilt = []
        for p in problems:
            rebuilt.append(
                type(p)(id=p.id, statement=p.statement, gold_answer=mock_gold(p.statement))
            )
        problems = type(problems)(dataset_id=problems.dataset_id, problems=tuple(rebuilt))
    return write_problem_file(tmp_path / "problems.jsonl", problems)


def write_config(tmp_path, server, *, name="config.json", **overrides):
    dataset = overrides.pop("dataset", None) or str(write_dataset(tmp_path))
    endpoint = {
        "base_url": server.base_url,
        "model_name": "mock-qwen",
        "max_retries": 2,
        "backoff_base": 0.0,
        "timeout": 20.0,
    }
    config = {
        "dataset": str(dataset),
        "out": str(tmp_path / "runs"),
        "seed": 7,
        "method": "BON",
        "n": 4,
        "concurrency": 2,
        "policy": endpoint,
        "orm": dict(endpoint, model_name="mock-orm"),
        "prm": dict(endpoint, model_name="mock-prm"),
        "judge": dict(endpoint, model_name="mock-judge"),
    }
    config.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(config, indent=1), encoding="utf-8")
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


def printed_run_dir(capsys):
    return Path(capsys.readouterr().out.strip().splitlines()[-1])


def test_unknown_config_key_rejected(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server)
    data = json.loads(config.read_text())
    data["surprise"] = True
    config.write_text(json.dumps(data))
    assert run_cli("sample", "--config", config) == 2
    assert "surprise" in capsys.readouterr().err


def test_sample_counts_and_rerun_identity(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server)
    assert run_cli("sample", "--config", config) == 0
    run_dir = printed_run_dir(capsys)
    run = load_run(run_dir)
    assert len(run.solutions) == 8  # 2 problems x N=4
    assert all(s.orm_reward is not None for s in run.solutions)
    assert len(run.verdicts) == 8

    config2 = write_config(tmp_path, mock_server, name="config2.json", out=str(tmp_path / "runs2"))
    # Same dataset/seed/method: identical solution ids in a fresh out dir.
    data = json.loads(config2.read_text())
    data["dataset"] = json.loads(config.read_text())["dataset"]
    config2.write_text(json.dumps(data))
    assert run_cli("sample", "--config", config2) == 0
    run2 = load_run(printed_run_dir(capsys))
    assert [s.solution_id for s in run.solutions] == [s.solution_id for s in run2.solutions]


def test_search_dvts_and_mcts(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server, method="DVTS", n=8, beam_width=4)
    assert run_cli("search", "--config", config) == 0
    run = load_run(printed_run_dir(capsys))
    by_problem = {}
    for s in run.solutions:
        by_problem.setdefault(s.problem_id, []).append(s)
    for group in by_problem.values():
        assert len(group) <= 8
        assert all(s.prm_values is not None for s in group)
    assert run.manifest.params == {"n": 8, "m": 4, "lookahead": 0, "iterations": 40}

    config2 = write_config(
        tmp_path, mock_server, name="mcts.json", method="MCTS", n=5, out=str(tmp_path / "runs-mcts")
    )
    assert run_cli("search", "--config", config2) == 0
    run2 = load_run(printed_run_dir(capsys))
    counts = {}
    for s in run2.solutions:
        counts[s.problem_id] = counts.get(s.problem_id, 0) + 1
    assert all(count == 5 for count in counts.values())


def test_search_beam_width_must_divide(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server, method="DVTS", n=8, beam_width=3)
    assert run_cli("search", "--config", config) == 2
    assert "beam width" in capsys.readouterr().err


def test_grade_command(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server)
    run_cli("sample", "--config", config)
    run_dir = printed_run_dir(capsys)
    before = load_run(run_dir).verdicts
    assert run_cli("grade", "--run", run_dir) == 0
    after = load_run(run_dir).verdicts
    assert before == after  # regrading a graded run is a fixed point


def test_aggregate_command_rows(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server)
    run_cli("sample", "--config", config)
    run_dir = printed_run_dir(capsys)
    out_csv = tmp_path / "curves.csv"
    assert run_cli(
        "aggregate", "--run", run_dir, "--ns", "1,2,4", "--methods", "BON,PASS", "--out", out_csv
    ) == 0
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0] == "method,N,automatic_accuracy"
    assert len(lines) == 1 + 3 * 2  # header + 3 Ns x 2 methods


def test_audit_command_f1_against_labels(tmp_path, mock_script_server, capsys):
    server, script = mock_script_server
    config = write_config(tmp_path, server)
    run_cli("sample", "--config", config)
    run_dir = printed_run_dir(capsys)
    run = load_run(run_dir)
    correct = [v.solution_id for v in run.verdicts if v.correct]
    assert len(correct) >= 2
    human_fp = set(correct[:1])
    # Humans label every auto-correct solution; judge is scripted to agree.
    labels = [
        HumanLabel(
            solution_id=sid,
            annotator="ann",
            is_false_positive=sid in human_fp,
            error_types=(ErrorType.LOGICAL,) if sid in human_fp else (),
        )
        for sid in correct
    ]
    append_labels(run_dir, labels)
    statements = {p.id: p.statement for p in run.problems}
    cfg = EndpointConfig(base_url=server.base_url, model_name="mock-judge",
                         max_retries=2, backoff_base=0.0, timeout=20.0)
    for solution in run.solutions:
        if solution.solution_id not in correct:
            continue
        reply = "False" if solution.solution_id in human_fp else "True"
        prompt = JUDGE_PROMPT_TEMPLATE.format(
            problem=statements[solution.problem_id], solution=solution.text
        )
        body = build_chat_request(
            cfg, prompt, SamplingParams(temperature=0.0, top_p=1.0, max_tokens=2048, n=1)
        )
        script.expect(
            "/v1/chat/completions",
            body,
            response={"choices": [{"index": 0, "message": {"role": "assistant", "content": reply}}]},
        )
    assert run_cli("audit", "--run", run_dir, "--config", config) == 0
    out = capsys.readouterr().out
    assert "precision=1.000 recall=1.000 f1=1.000" in out
    assert len(load_run(run_dir).judge_verdicts) == len(correct)


def test_report_command(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server)
    run_cli("sample", "--config", config)
    run_dir = printed_run_dir(capsys)
    out_dir = tmp_path / "report"
    assert run_cli(
        "report", "--runs", run_dir, "--ns", "1,2,4", "--methods", "BON,PASS", "--out", out_dir
    ) == 0
    report = (out_dir / "report.md").read_text(encoding="utf-8")
    assert "Automatic accuracy" in report
    curves = (out_dir / "curves.csv").read_text(encoding="utf-8").strip().splitlines()
    assert len(curves) == 1 + 3 * 2


def _labeled_fixture_run(tmp_path, run_id, policy_model, n_correct, n_fp):
    from fpscale.aggregate import Method
    from fpscale.clients import SamplingParams
    from fpscale.corpus import Problem, ProblemSet
    from fpscale.grading import grade
    from fpscale.store import (
        RunManifest,
        SolutionRecord,
        append_labels,
        make_solution_id,
        save_run,
    )

    problems = ProblemSet(
        dataset_id="aime-like",
        problems=tuple(
            Problem(id=f"{run_id}-p{i}", statement=f"Question {i}?", gold_answer="7")
            for i in range(90)
        ),
    )
    solutions, verdicts, labels = [], [], []
    for i, problem in enumerate(problems):
        correct = i < n_correct
        text = f"Step 1: derive.\n\nThe final answer is $\\boxed{{{7 if correct else 9}}}$"
        sid = make_solution_id(run_id, problem.id, 0)
        verdict = grade(text, problem.gold_answer, solution_id=sid)
        solutions.append(
            SolutionRecord(
                solution_id=sid,
                run_id=run_id,
                problem_id=problem.id,
                sample_index=0,
                text=text,
                steps=tuple(text.split("\n\n")),
                extracted=verdict.extracted,
                auto_correct=verdict.correct,
                orm_reward=1.0,
            )
        )
        verdicts.append(verdict)
        if correct:
            labels.append(
                HumanLabel(
                    solution_id=sid,
                    annotator="ann",
                    is_false_positive=i < n_fp,
                    error_types=(ErrorType.LOGICAL,) if i < n_fp else (),
                )
            )
    manifest = RunManifest(
        run_id=run_id,
        method=Method.BON,
        params={"n": 1},
        policy_model=policy_model,
        dataset_id=problems.dataset_id,
        sampling=SamplingParams(),
        created_at="2026-01-01T00:00:00Z",
    )
    run_dir = save_run(manifest, solutions, tmp_path, verdicts=verdicts, problems=problems)
    append_labels(run_dir, labels)
    return run_dir


def test_report_comparison_rows_from_counts(tmp_path, capsys):
    # Two labeled 90-problem runs with 27/90 + 7 FP and 25/90 + 4 FP give
    # three-decimal comparison cells of 0.300/0.259 and 0.278/0.160.
    run_a = _labeled_fixture_run(tmp_path, "run-zero", "math-1.5b-tuned-zero", 27, 7)
    run_b = _labeled_fixture_run(tmp_path, "run-instruct", "math-1.5b-instruct", 25, 4)
    out_dir = tmp_path / "cmp-report"
    assert run_cli("report", "--runs", f"{run_a},{run_b}", "--manual", "--out", out_dir) == 0
    capsys.readouterr()
    report = (out_dir / "report.md").read_text(encoding="utf-8")
    assert "| math-1.5b-tuned-zero | 0.300 | 0.259 |" in report
    assert "| math-1.5b-instruct | 0.278 | 0.160 |" in report


def test_report_manual_without_labels_fails(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server)
    run_cli("sample", "--config", config)
    run_dir = printed_run_dir(capsys)
    assert run_cli("report", "--runs", run_dir, "--manual", "--out", tmp_path / "r2") == 2
    assert "manual" in capsys.readouterr().err.lower()


def test_flag_overrides_win(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server, n=2)
    assert run_cli("sample", "--config", config, "--n", "3") == 0
    run = load_run(printed_run_dir(capsys))
    assert len(run.solutions) == 6  # 2 problems x overridden N=3


def test_bad_bind_rejected(tmp_path, mock_server, capsys):
    config = write_config(tmp_path, mock_server)
    run_cli("sample", "--config", config)
    run_dir = printed_run_dir(capsys)
    assert run_cli("annotate-serve", "--run", run_dir, "--bind", "nonsense") == 2
