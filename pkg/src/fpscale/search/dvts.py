"""Subtree-split step-level beam search with greedy lookahead.

The N-candidate budget is split into N/M independent subtrees of beam
width M. Each live beam repeatedly samples M candidate next steps,
extends each candidate by up to l greedy lookahead steps purely for
scoring, commits the candidate whose scored continuation is best, and
completes when the committed step is terminal. A completed beam
contributes its final M candidates to the output pool, so a fully
terminating run yields exactly N solutions.

Sampling seeds derive only from (per-subtree seed, beam-local call
index), which makes every subtree byte-reproducible in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigurationError
from ..util import stable_hash
from .interfaces import SearchTrace, StepGenerator, StepScorer, join_steps

#: Step budget for the final greedy completion pass of unfinished beams.
FINALIZE_STEP_CAP = 256


@dataclass
class BeamState:
    """One live beam inside a subtree; never reactivates once closed."""

    subtree_id: int
    history: list[str] = field(default_factory=list)
    active: bool = True
    calls: int = 0

    def deactivate(self) -> None:
        self.active = False


@dataclass(frozen=True)
class SearchSolution:
    """A complete (or force-finalized) candidate produced by search."""

    steps: tuple[str, ...]
    subtree_id: int
    score: float

    @property
    def text(self) -> str:
        return join_steps(self.steps)


def _candidate_score(
    question: str,
    history: list[str],
    candidate: str,
    lookahead: int,
    gen: StepGenerator,
    scorer: StepScorer,
) -> tuple[float, list[str]]:
    """Score a candidate on its step plus greedy lookahead continuation."""
    extended = history + [candidate]
    look: list[str] = []
    if lookahead > 0 and not gen.is_terminal(extended):
        look = list(gen.greedy_continue(extended, lookahead))
    return scorer.score(question, extended + look), look


def dvts(
    question: str,
    gen: StepGenerator,
    scorer: StepScorer,
    *,
    n_candidates: int,
    beam_width: int = 4,
    lookahead: int = 0,
    max_iterations: int = 40,
    seed: int = 0,
    subtree_seeds: list[int] | None = None,
    trace: SearchTrace | None = None,
) -> list[SearchSolution]:
    """Run the subtree beam search and return up to n_candidates solutions.

    ``subtree_seeds`` overrides the derived per-subtree seeds; passing the
    seed of a single subtree reproduces that subtree's slice of a larger
    run exactly.
    """
    if n_candidates < 1 or beam_width < 1:
        raise ConfigurationError("n_candidates and beam_width must be >= 1")
    if n_candidates % beam_width != 0:
        raise ConfigurationError(
            f"beam width {beam_width} must divide candidate count {n_candidates}"
        )
    if lookahead < 0 or max_iterations < 1:
        raise ConfigurationError("lookahead must be >= 0 and max_iterations >= 1")

    num_beams = n_candidates // beam_width
    if subtree_seeds is None:
        subtree_seeds = [stable_hash(seed, j) for j in range(num_beams)]
    elif len(subtree_seeds) != num_beams:
        raise ConfigurationError(f"expected {num_beams} subtree seeds, got {len(subtree_seeds)}")

    beams = [BeamState(subtree_id=j) for j in range(num_beams)]
    solutions: list[SearchSolution] = []
    last_candidates: dict[int, list[tuple[str, float]]] = {}

    for iteration in range(1, max_iterations + 1):
        live = [b for b in beams if b.active]
        if not live:
            break
        for beam in live:
            call_seed = stable_hash(subtree_seeds[beam.subtree_id], beam.calls)
            beam.calls += 1
            candidates = gen.sample_steps(beam.history, beam_width, seed=call_seed)
            scored = [
                _candidate_score(question, beam.history, cand, lookahead, gen, scorer)
                for cand in candidates
            ]
            values = [s for s, _ in scored]
            best = max(range(len(candidates)), key=lambda k: (values[k], -k))
            if trace is not None:
                trace.emit(
                    {
                        "algo": "dvts",
                        "iteration": iteration,
                        "subtree": beam.subtree_id,
                        "history_len": len(beam.history),
                        "candidates": list(candidates),
                        "scores": values,
                        "chosen": best,
                    }
                )
            beam.history.append(candidates[best])
            last_candidates[beam.subtree_id] = list(zip(candidates, values))
            if gen.is_terminal(beam.history):
                beam.deactivate()
                base = beam.history[:-1]
                for cand, value in last_candidates[beam.subtree_id]:
                    solutions.append(
                        SearchSolution(
                            steps=tuple(base + [cand]),
                            subtree_id=beam.subtree_id,
                            score=value,
                        )
                    )

    # Beams still live after the iteration budget are finalized with one
    # greedy completion pass so the run always yields candidates.
    for beam in beams:
        if not beam.active:
            continue
        tail = list(gen.greedy_continue(beam.history, FINALIZE_STEP_CAP))
        steps = beam.history + tail
        value = scorer.score(question, steps)
        beam.deactivate()
        if trace is not None:
            trace.emit(
                {
                    "algo": "dvts",
                    "iteration": max_iterations,
                    "subtree": beam.subtree_id,
                    "forced_finalize": True,
                    "history_len": len(beam.history),
                    "tail_len": len(tail),
                }
            )
        solutions.append(SearchSolution(steps=tuple(steps), subtree_id=beam.subtree_id, score=value))

    return solutions
