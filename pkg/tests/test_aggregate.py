import random

import pytest

from fpscale.aggregate import (
    CandidatePool,
    CurvePoint,
    Method,
    ScoredCandidate,
    best_of_n,
    normalize_rewards,
    pass_at_n,
    scaling_curve,
    self_consistency,
    weighted_self_consistency,
)
from fpscale.errors import RangeError
from fpscale.grading import AnswerKind, AutoVerdict, ExtractedAnswer, NO_ANSWER


def cand(i, answer, reward):
    return ScoredCandidate(solution_id=f"s{i}", answer=answer, reward=reward, sample_index=i)


def verdict(i, correct):
    extracted = (
        ExtractedAnswer(raw="1", canonical="1", kind=AnswerKind.INTEGER) if correct else NO_ANSWER
    )
    return AutoVerdict(solution_id=f"s{i}", correct=correct, extracted=extracted)


# --- independent brute-force implementations -------------------------------

def brute_best_of_n(candidates, n):
    pool = sorted(candidates, key=lambda c: c.sample_index)[:n]
    best = pool[0]
    for c in pool[1:]:
        if c.reward > best.reward:
            best = c
    return best.solution_id


def brute_majority(candidates, n, weights=None):
    pool = sorted(candidates, key=lambda c: c.sample_index)[:n]
    tally = {}
    order = []
    for c in pool:
        w = c.reward if weights else 1
        if c.answer not in tally:
            tally[c.answer] = 0
            order.append(c.answer)
        tally[c.answer] += w
    best = order[0]
    for answer in order[1:]:
        if tally[answer] > tally[best]:
            best = answer
    members = [c for c in pool if c.answer == best]
    rep = members[0]
    for c in members[1:]:
        if c.reward > rep.reward:
            rep = c
    return best, rep.solution_id


def random_instance(rng):
    k = rng.randrange(1, 9)
    candidates = [
        cand(i, rng.choice("abcd"), round(rng.random(), 1)) for i in range(k)
    ]
    shuffled = candidates[:]
    rng.shuffle(shuffled)
    return shuffled, k


# --- unit cases -------------------------------------------------------------

def test_normalize_rewards_cases():
    assert normalize_rewards([-2, 0, 2]) == [0.0, 0.5, 1.0]
    assert normalize_rewards([5, 5, 5]) == [1.0, 1.0, 1.0]
    assert normalize_rewards([0.1, 0.9]) == [0.0, 1.0]
    with pytest.raises(RangeError):
        normalize_rewards([])


def test_normalize_rewards_properties():
    rng = random.Random(5)
    for _ in range(200):
        rewards = [rng.uniform(-10, 10) for _ in range(rng.randrange(1, 10))]
        out = normalize_rewards(rewards)
        assert all(0.0 <= v <= 1.0 for v in out)
        for i in range(len(rewards)):
            for j in range(len(rewards)):
                if rewards[i] < rewards[j]:
                    assert out[i] <= out[j]
        if max(rewards) > min(rewards):
            assert out[rewards.index(min(rewards))] == 0.0
            assert out[rewards.index(max(rewards))] == 1.0


def test_best_of_n_cases():
    cs = [cand(0, "a", 0.2), cand(1, "b", 0.9), cand(2, "c", 0.5)]
    assert best_of_n(cs, 3).chosen_solution_id == "s1"
    assert best_of_n([cand(0, "a", 0.1)], 1).chosen_solution_id == "s0"
    ties = [cand(0, "a", 0.7), cand(1, "b", 0.7)]
    assert best_of_n(ties, 2).chosen_solution_id == "s0"
    with pytest.raises(RangeError):
        best_of_n(cs, 4)
    with pytest.raises(RangeError):
        best_of_n(cs, 0)


def test_self_consistency_cases():
    cs = [cand(0, "a", 0.1), cand(1, "a", 0.9), cand(2, "b", 0.5)]
    sel = self_consistency(cs, 3)
    assert sel.chosen_answer == "a"
    assert sel.chosen_solution_id == "s1"  # highest reward in the winning class
    tie = [cand(0, "a", 0.1), cand(1, "b", 0.9)]
    assert self_consistency(tie, 2).chosen_answer == "a"
    five = [cand(0, "b", 0), cand(1, "a", 0), cand(2, "a", 0), cand(3, "b", 0), cand(4, "b", 0)]
    assert self_consistency(five, 5).chosen_answer == "b"


def test_weighted_self_consistency_cases():
    cs = [cand(0, "a", 0.3), cand(1, "b", 0.4), cand(2, "a", 0.2)]
    sel = weighted_self_consistency(cs, 3)
    assert sel.chosen_answer == "a"  # 0.5 > 0.4
    assert sel.chosen_solution_id == "s0"  # 0.3 beats 0.2 within the class
    single = weighted_self_consistency([cand(0, "z", 1.0)], 1)
    assert single.chosen_solution_id == "s0"


def test_wsc_degenerates_to_sc_with_constant_rewards():
    rng = random.Random(11)
    for _ in range(200):
        k = rng.randrange(1, 9)
        reward = round(rng.random(), 2)
        cs = [cand(i, rng.choice("abc"), reward) for i in range(k)]
        assert weighted_self_consistency(cs, k).chosen_answer == self_consistency(cs, k).chosen_answer


def test_oracle_equivalence_randomized():
    rng = random.Random(97)
    for _ in range(1000):
        candidates, k = random_instance(rng)
        n = rng.randrange(1, k + 1)
        assert best_of_n(candidates, n).chosen_solution_id == brute_best_of_n(candidates, n)
        answer, rep = brute_majority(candidates, n)
        sel = self_consistency(candidates, n)
        assert (sel.chosen_answer, sel.chosen_solution_id) == (answer, rep)
        answer_w, rep_w = brute_majority(candidates, n, weights=True)
        sel_w = weighted_self_consistency(candidates, n)
        assert (sel_w.chosen_answer, sel_w.chosen_solution_id) == (answer_w, rep_w)


def test_pass_at_n():
    vs = [verdict(0, False), verdict(1, False), verdict(2, True)]
    assert pass_at_n(vs, 3) is True
    assert pass_at_n(vs, 2) is False
    assert pass_at_n([verdict(0, False)], 1) is False
    with pytest.raises(RangeError):
        pass_at_n(vs, 4)


def test_pass_at_n_monotone():
    rng = random.Random(3)
    for _ in range(100):
        vs = [verdict(i, rng.random() < 0.3) for i in range(rng.randrange(1, 10))]
        values = [pass_at_n(vs, n) for n in range(1, len(vs) + 1)]
        assert values == sorted(values)


def pool_from(correct_flags, rewards=None, answers=None):
    k = len(correct_flags)
    rewards = rewards or [0.5] * k
    answers = answers or [str(i) for i in range(k)]
    candidates = tuple(cand(i, answers[i], rewards[i]) for i in range(k))
    return CandidatePool(problem_id="p", candidates=candidates, correct=tuple(correct_flags))


def test_scaling_curve_pass_hand_case():
    pools = [
        CandidatePool("p1", (cand(0, "a", 0.1), cand(1, "b", 0.2)), (False, True)),
        CandidatePool("p2", (cand(0, "a", 0.1), cand(1, "b", 0.2)), (False, False)),
    ]
    points = scaling_curve(pools, [1, 2], Method.PASS)
    assert points == [
        CurvePoint(Method.PASS, 1, 0.0, None),
        CurvePoint(Method.PASS, 2, 0.5, None),
    ]


def test_scaling_curve_bon_n1_uses_sample_zero():
    pools = [
        CandidatePool("p1", (cand(0, "a", 0.9), cand(1, "b", 0.1)), (True, False)),
        CandidatePool("p2", (cand(0, "a", 0.9), cand(1, "b", 0.1)), (False, True)),
    ]
    (point,) = scaling_curve(pools, [1], Method.BON)
    assert point.automatic_accuracy == 0.5


def test_scaling_curve_range_error_names_problem():
    pools = [CandidatePool("short", (cand(0, "a", 0.1),), (True,))]
    with pytest.raises(RangeError, match="short"):
        scaling_curve(pools, [2], Method.BON)


def test_pass_dominates_bon_property():
    rng = random.Random(23)
    for _ in range(300):
        n_problems = rng.randrange(1, 5)
        k = rng.randrange(1, 6)
        pools = []
        for p in range(n_problems):
            candidates = tuple(cand(i, rng.choice("ab"), round(rng.random(), 2)) for i in range(k))
            correct = tuple(rng.random() < 0.4 for _ in range(k))
            pools.append(CandidatePool(f"p{p}", candidates, correct))
        for n in range(1, k + 1):
            (bon,) = scaling_curve(pools, [n], Method.BON)
            (pas,) = scaling_curve(pools, [n], Method.PASS)
            assert pas.automatic_accuracy >= bon.automatic_accuracy
