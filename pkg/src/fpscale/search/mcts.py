"""Vanilla Monte Carlo tree search with PUCT child selection.

One shared tree serves all reasoning paths. Each iteration walks from the
root, expanding any leaf met mid-walk to w children (uniform priors,
initial values from the step scorer), until the walk reaches a terminal
step or the depth bound. The scored value of the reached prefix is then
backpropagated along the walked path as a running mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, Sequence

from ..errors import ConfigurationError, ValidationError
from ..util import stable_hash
from .interfaces import SearchTrace, StepGenerator, StepScorer, join_steps


@dataclass
class SearchNode:
    """One tree node: a reasoning prefix with search statistics.

    ``value`` starts at the scorer's estimate for the prefix and becomes
    the running mean of backpropagated values once visited. ``prior`` is
    the selection prior P; siblings' priors sum to 1.
    """

    prefix: tuple[str, ...]
    prior: float
    terminal: bool
    prm_score: float
    value: float = 0.0
    visits: int = 0
    children: list["SearchNode"] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.prefix)

    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Trajectory:
    """One complete reasoning path produced by a search iteration."""

    steps: tuple[str, ...]
    value: float
    iteration: int
    truncated: bool

    @property
    def text(self) -> str:
        return join_steps(self.steps)


def puct_select(node: SearchNode, c: float) -> SearchNode:
    """Select the child maximizing v' + c * P' * sqrt(N) / (N' + 1).

    Ties break toward the lowest child index. Calling this on a leaf is a
    contract violation.
    """
    if node.is_leaf():
        raise ValidationError("puct_select requires a node with children")
    parent_term = sqrt(node.visits)

    def score(child: SearchNode) -> float:
        return child.value + c * child.prior * parent_term / (child.visits + 1)

    best = node.children[0]
    best_score = score(best)
    for child in node.children[1:]:
        s = score(child)
        if s > best_score:
            best, best_score = child, s
    return best


def backpropagate(path: Sequence[SearchNode], value: float) -> None:
    """Add one visit along the path, folding value into each running mean."""
    for node in path:
        node.value = (node.value * node.visits + value) / (node.visits + 1)
        node.visits += 1


def _expand(
    node: SearchNode,
    question: str,
    width: int,
    gen: StepGenerator,
    scorer: StepScorer,
    seed: int,
) -> None:
    steps = gen.sample_steps(node.prefix, width, seed=seed)
    prior = 1.0 / len(steps)
    for step in steps:
        child_prefix = node.prefix + (step,)
        prm = scorer.score(question, child_prefix)
        node.children.append(
            SearchNode(
                prefix=child_prefix,
                prior=prior,
                terminal=gen.is_terminal(child_prefix),
                prm_score=prm,
                value=prm,
            )
        )


def mcts(
    question: str,
    gen: StepGenerator,
    scorer: StepScorer,
    *,
    n_paths: int,
    tree_width: int = 4,
    max_depth: int = 40,
    exploration: float = 1.0,
    seed: int = 0,
    trace: SearchTrace | None = None,
    on_iteration: Callable[[SearchNode, int], None] | None = None,
) -> list[Trajectory]:
    """Run n_paths search iterations over one shared tree.

    Returns one trajectory per iteration; no trajectory exceeds max_depth
    steps. ``on_iteration(root, i)`` is invoked after each iteration's
    backpropagation, which is what invariant checks hook into.
    """
    if n_paths < 1 or tree_width < 1 or max_depth < 1:
        raise ConfigurationError("n_paths, tree_width, and max_depth must be >= 1")
    if exploration < 0:
        raise ConfigurationError("exploration constant must be >= 0")

    root = SearchNode(prefix=(), prior=1.0, terminal=False, prm_score=0.0)
    trajectories: list[Trajectory] = []

    for iteration in range(1, n_paths + 1):
        node = root
        path = [root]
        truncated = False
        while True:
            if node.is_leaf():
                _expand(node, question, tree_width, gen, scorer, stable_hash(seed, node.prefix))
            node = puct_select(node, exploration)
            path.append(node)
            if node.terminal:
                break
            if node.depth >= max_depth:
                truncated = True
                break
        value = node.prm_score
        backpropagate(path, value)
        if trace is not None:
            trace.emit(
                {
                    "algo": "mcts",
                    "iteration": iteration,
                    "steps": list(node.prefix),
                    "value": value,
                    "truncated": truncated,
                }
            )
        trajectories.append(
            Trajectory(steps=node.prefix, value=value, iteration=iteration, truncated=truncated)
        )
        if on_iteration is not None:
            on_iteration(root, iteration)

    return trajectories
