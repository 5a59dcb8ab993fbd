import pytest

from fpscale.errors import ConfigurationError
from fpscale.search import dvts
from fpscale.util import stable_hash


class SeededToyGen:
    """Deterministic toy policy whose steps encode (depth, index, seed)."""

    def __init__(self, terminal_depth=3):
        self.terminal_depth = terminal_depth

    def sample_steps(self, prefix, k, *, seed=None):
        d = len(prefix)
        tag = (seed or 0) % 997
        if d >= self.terminal_depth - 1:
            return [f"FINAL.{d}.{i}.{tag}" for i in range(k)]
        return [f"s{d}.{i}.{tag}" for i in range(k)]

    def greedy_continue(self, prefix, limit):
        steps = []
        d = len(prefix)
        for j in range(limit):
            if d + j >= self.terminal_depth - 1:
                steps.append(f"LOOK.FINAL.{d + j}")
                break
            steps.append(f"LOOK.{d + j}")
        return steps

    def is_terminal(self, prefix):
        return bool(prefix) and prefix[-1].startswith(("FINAL", "LOOK.FINAL"))


class HashScorer:
    """Pure deterministic scorer; remembers every prefix it scored."""

    def __init__(self):
        self.seen = []

    def score(self, question, steps):
        self.seen.append(tuple(steps))
        return (stable_hash("toy-score", question, tuple(steps)) % 1000) / 999.0


def test_n16_m4_creates_four_subtrees():
    solutions = dvts("q", SeededToyGen(), HashScorer(), n_candidates=16, beam_width=4, seed=1)
    assert len(solutions) == 16
    assert {s.subtree_id for s in solutions} == {0, 1, 2, 3}
    for j in range(4):
        assert sum(1 for s in solutions if s.subtree_id == j) == 4


def test_beam_width_must_divide_candidates():
    with pytest.raises(ConfigurationError):
        dvts("q", SeededToyGen(), HashScorer(), n_candidates=8, beam_width=3)


def test_immediate_terminal_yields_exactly_n():
    gen = SeededToyGen(terminal_depth=1)
    solutions = dvts("q", gen, HashScorer(), n_candidates=8, beam_width=4, max_iterations=1)
    assert len(solutions) == 8
    assert all(len(s.steps) == 1 for s in solutions)


def test_greedy_path_matches_enumeration_oracle():
    # Two-level toy tree with explicit values; l=0 selection is the
    # locally-max-value step at each level. The oracle enumerates the tree.
    values = {
        ("A0",): 0.9,
        ("A1",): 0.1,
        ("A0", "F0"): 0.2,
        ("A0", "F1"): 0.8,
        ("A1", "F0"): 0.99,
        ("A1", "F1"): 0.98,
    }

    class TwoLevelGen:
        def sample_steps(self, prefix, k, *, seed=None):
            assert k == 2
            if len(prefix) == 0:
                return ["A0", "A1"]
            return ["F0", "F1"]

        def greedy_continue(self, prefix, limit):
            return []

        def is_terminal(self, prefix):
            return bool(prefix) and prefix[-1].startswith("F")

    class TableScorer:
        def score(self, question, steps):
            return values[tuple(steps)]

    # Oracle: exhaustive enumeration, level by level.
    level0 = max(["A0", "A1"], key=lambda s: values[(s,)])
    level1 = max(["F0", "F1"], key=lambda s: values[(level0, s)])

    solutions = dvts("q", TwoLevelGen(), TableScorer(), n_candidates=2, beam_width=2)
    chosen = max(solutions, key=lambda s: s.score)
    assert chosen.steps == (level0, level1) == ("A0", "F1")
    # The completed beam contributes both final candidates.
    assert sorted(s.steps for s in solutions) == [("A0", "F0"), ("A0", "F1")]


def test_subtree_independence_byte_identical():
    question = "independence"
    joint = dvts(
        question, SeededToyGen(), HashScorer(), n_candidates=16, beam_width=4, seed=42
    )
    for j in range(4):
        isolated = dvts(
            question,
            SeededToyGen(),
            HashScorer(),
            n_candidates=4,
            beam_width=4,
            subtree_seeds=[stable_hash(42, j)],
        )
        joint_slice = [(s.steps, s.score) for s in joint if s.subtree_id == j]
        assert joint_slice == [(s.steps, s.score) for s in isolated]


def test_lookahead_scored_but_never_committed():
    gen = SeededToyGen(terminal_depth=3)
    scorer = HashScorer()
    solutions = dvts(
        "q", gen, scorer, n_candidates=8, beam_width=4, lookahead=2, max_iterations=10, seed=5
    )
    assert len(solutions) == 8
    for solution in solutions:
        assert all(not step.startswith("LOOK") for step in solution.steps)
    # Lookahead steps did reach the scorer.
    assert any(any(step.startswith("LOOK") for step in seen) for seen in scorer.seen)


def test_force_finalize_when_budget_too_small():
    gen = SeededToyGen(terminal_depth=5)
    solutions = dvts(
        "q", gen, HashScorer(), n_candidates=4, beam_width=4, max_iterations=2, seed=9
    )
    # One unfinished beam finalized by a greedy completion pass.
    assert len(solutions) == 1
    assert gen.is_terminal(list(solutions[0].steps))
    assert len(solutions) <= 4


def test_output_cardinality_never_exceeds_n():
    for depth in (1, 2, 4, 6):
        gen = SeededToyGen(terminal_depth=depth)
        solutions = dvts(
            "q", gen, HashScorer(), n_candidates=8, beam_width=4, max_iterations=3, seed=2
        )
        assert len(solutions) <= 8


def test_trace_export_line_delimited(tmp_path):
    import json

    from fpscale.search import SearchTrace, mcts
    from test_search_mcts import EnumTreeGen

    trace = SearchTrace()
    dvts("q", SeededToyGen(), HashScorer(), n_candidates=4, beam_width=4, seed=3, trace=trace)
    records = trace.records
    assert records and all(r["algo"] == "dvts" for r in records)
    assert {"iteration", "subtree", "candidates", "scores", "chosen"} <= set(records[0])

    mcts_trace = SearchTrace()
    mcts("q", EnumTreeGen(branching=2, depth=2), HashScorer(), n_paths=3, tree_width=2,
         max_depth=3, trace=mcts_trace)
    assert len(mcts_trace.records) == 3

    path = tmp_path / "trace.jsonl"
    trace.write_jsonl(path)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert len(lines) == len(records)
    assert json.loads(lines[0])["algo"] == "dvts"
