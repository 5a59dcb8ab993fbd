"""Inference-time scaling harness for math reasoning, with rule-based answer
grading and false-positive auditing against pluggable model endpoints.

Subpackages and modules:

* ``corpus``      -- benchmark problem sets (load / validate / subsample)
* ``grading``     -- answer extraction and rule-based equivalence
* ``aggregate``   -- solution-level reranking (best-of-n, self-consistency,
  weighted self-consistency, pass@n) and scaling curves
* ``search``      -- step-level search: subtree beam search with lookahead
  and vanilla MCTS with PUCT selection
* ``clients``     -- HTTP clients for policy / reward / judge endpoints
* ``mock_server`` -- deterministic, scriptable in-process model server
* ``store``       -- run persistence (manifests, solutions, verdicts, labels)
* ``audit``       -- false-positive detection and evaluation metrics
* ``report``      -- Markdown / CSV report rendering
* ``annotate``    -- label API + static UI service for human review
* ``cli``         -- command-line entry point
"""

__version__ = "0.1.0"
