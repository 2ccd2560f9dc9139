"""Model-guided greybox fuzzing testbed."""

from ._core import (
    PathModel,
    entropy,
    execute,
    featurize,
    fuzz,
    list_targets,
    rank_scores,
    run_experiment,
)

__all__ = [
    "PathModel",
    "entropy",
    "execute",
    "featurize",
    "fuzz",
    "list_targets",
    "rank_scores",
    "run_experiment",
]
