"""Step-level inference scaling over abstract step generation and scoring."""

from .interfaces import SearchTrace, StepGenerator, StepScorer
from .dvts import BeamState, SearchSolution, dvts
from .mcts import SearchNode, Trajectory, backpropagate, mcts, puct_select

__all__ = [
    "BeamState",
    "SearchNode",
    "SearchSolution",
    "SearchTrace",
    "StepGenerator",
    "StepScorer",
    "Trajectory",
    "backpropagate",
    "dvts",
    "mcts",
    "puct_select",
]
