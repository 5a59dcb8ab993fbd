import json

import pytest

from fpscale.corpus import Problem, ProblemSet
from fpscale.mock_server import MockModelServer, MockScript


def make_problems(n, *, prefix="p", answer=None, dataset_id="toy"):
    problems = tuple(
        Problem(
            id=f"{prefix}{i}",
            statement=f"Compute the quantity number {i}.",
            gold_answer=str(answer if answer is not None else i),
        )
        for i in range(n)
    )
    return ProblemSet(dataset_id=dataset_id, problems=problems)


def write_problem_file(path, problems):
    with open(path, "w", encoding="utf-8") as fh:
        for p in problems:
            record = {"id": p.id, "problem": p.statement, "answer": p.gold_answer}
            fh.write(json.dumps(record) + "\n")
    return path


@pytest.fixture
def mock_server():
    server = MockModelServer()
    server.start()
    yield server
    server.stop()


@pytest.fixture
def mock_script_server():
    script = MockScript()
    server = MockModelServer(script)
    server.start()
    yield server, script
    server.stop()
