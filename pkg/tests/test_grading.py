import json
import random
import string
from pathlib import Path

from fpscale.grading import (
    AnswerKind,
    answers_equal,
    extract_answer,
    grade,
    normalize_answer,
)

FIXTURES = Path(__file__).parent / "fixtures"


def load_corpus():
    cases = []
    with (FIXTURES / "grader_corpus.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                cases.append(json.loads(line))
    return cases


def test_corpus_has_thirty_cases():
    assert len(load_corpus()) == 30


def test_grader_corpus_exact():
    for case in load_corpus():
        verdict = grade(case["text"], case["gold"])
        assert verdict.correct == case["expect_correct"], case["note"]
        assert verdict.extracted.kind == AnswerKind(case["expect_kind"]), case["note"]


def test_last_box_wins_with_nesting():
    text = "First we see \\boxed{\\frac{1}{2}} but wait \\boxed{17}"
    extracted = extract_answer(text)
    assert extracted.raw == "17"
    assert extracted.kind is AnswerKind.INTEGER


def test_boxes_enumerated_with_brace_depth_oracle():
    # Independent oracle: walk the string tracking brace depth by hand.
    rng = random.Random(17)
    inners = ["17", "\\frac{1}{2}", "x^{2}", "a_{ij}", "{nested}"]
    for _ in range(200):
        parts = []
        expected = []
        for _ in range(rng.randrange(0, 4)):
            inner = rng.choice(inners)
            filler = "".join(rng.choices(string.ascii_letters + " ", k=rng.randrange(0, 8)))
            parts.append(filler + "\\boxed{" + inner + "}")
            expected.append(inner)
        text = " ".join(parts)
        extracted = extract_answer(text)
        if expected:
            assert extracted.raw == expected[-1]
        else:
            assert extracted.kind is AnswerKind.NONE


def test_unbalanced_box_ignored():
    assert extract_answer("\\boxed{42").kind is AnswerKind.NONE
    extracted = extract_answer("\\boxed{41} then \\boxed{42")
    assert extracted.raw == "41"


def test_empty_text_yields_none():
    assert extract_answer("").kind is AnswerKind.NONE


def test_fraction_decimal_equivalence():
    # Exact rational oracle: 1/2 == 0.5 by cross multiplication.
    extracted = extract_answer("\\boxed{\\frac{1}{2}}")
    assert answers_equal(extracted, "0.5")
    assert answers_equal(extract_answer("\\boxed{17}"), "17")
    assert not answers_equal(extract_answer("\\boxed{6}"), "17")


def test_equality_reflexive_and_symmetric():
    forms = ["17", "-3", "\\frac{1}{2}", "0.5", "x+1", "2.50", "3/4"]
    for a in forms:
        ea = extract_answer(f"\\boxed{{{a}}}")
        assert answers_equal(ea, a), a
        for b in forms:
            eb = extract_answer(f"\\boxed{{{b}}}")
            assert answers_equal(ea, b) == answers_equal(eb, a), (a, b)


def test_none_never_correct():
    verdict = grade("no answer anywhere", "3")
    assert verdict.extracted.kind is AnswerKind.NONE
    assert verdict.correct is False


def test_normalize_idempotent_random_strings():
    rng = random.Random(7)
    alphabet = string.ascii_letters + string.digits + " \t\\{}$+-/.^_()latex"
    for _ in range(1000):
        s = "".join(rng.choices(alphabet, k=rng.randrange(0, 40)))
        once = normalize_answer(s)
        assert normalize_answer(once) == once


def test_normalize_idempotent_latex_forms():
    for s in ["$\\dfrac{1}{2}$.", "\\boxed{\\boxed{3}}", "  +-3 ", "\\left(1,2\\right)"]:
        once = normalize_answer(s)
        assert normalize_answer(once) == once


def test_grade_idempotent():
    text = "The final answer is $\\boxed{6}$"
    assert grade(text, "6") == grade(text, "6")
