"""Search-based agents on combinatorial environments, trained two ways:
by gradient descent on the planning loss, or by direct episode-score
maximization with distributed antithetic evolution strategies."""

__version__ = "0.1.0"

from .episode import (ActionMode, EpisodeRecord, Observation, StepResult,
                      compute_returns, rollout)
from .mcts import SearchConfig, SearchResult, search
from .rng import derive_seed, make_rng

__all__ = [
    "ActionMode", "EpisodeRecord", "Observation", "SearchConfig", "SearchResult",
    "StepResult", "compute_returns", "derive_seed", "make_rng", "rollout", "search",
    "__version__",
]
