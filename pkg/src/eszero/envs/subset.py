"""Subset-selection environments: vertex k-center and maximum diversity.

Both sample n points in the unit square and ask the agent to pick a subset
of k, one point per step.  The episode ends on the k-th selection with a
single terminal reward:

  vertex k-center : minus the largest distance from any point to its
                    nearest selected point (cover the cloud tightly);
  max diversity   : the smallest pairwise distance within the selection
                    (spread the picks out).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..episode import (
    ActionMode,
    ConfigurationError,
    IllegalActionError,
    Observation,
    StepResult,
)
from ..rng import make_rng


@dataclass(frozen=True)
class SubsetState:
    points: np.ndarray    # (n, 2) in the unit square
    selected: np.ndarray  # (n,) bool
    k: int


@dataclass(frozen=True)
class _SubsetEnv:
    n: int = 40
    k: int = 20
    min_k: int = 1

    def __post_init__(self):
        if not self.min_k <= self.k <= self.n:
            raise ConfigurationError(f"need {self.min_k} <= k <= n, got k={self.k}, n={self.n}")

    @property
    def horizon(self) -> int:
        return self.k

    def reset(self, seed: int) -> SubsetState:
        rng = make_rng(seed, "subset-reset")
        return self.from_points(rng.random((self.n, 2)))

    def from_points(self, points: np.ndarray) -> SubsetState:
        points = np.asarray(points, dtype=np.float64)
        if points.shape != (self.n, 2):
            raise ConfigurationError(f"expected {self.n}x2 point array, got {points.shape}")
        return SubsetState(points, np.zeros(self.n, dtype=bool), self.k)

    def is_terminal(self, state: SubsetState) -> bool:
        return int(state.selected.sum()) == self.k

    def step(self, state: SubsetState, action: int) -> StepResult:
        if state.selected[action]:
            raise IllegalActionError(f"point {action} already selected")
        selected = state.selected.copy()
        selected[action] = True
        next_state = SubsetState(state.points, selected, self.k)
        if int(selected.sum()) == self.k:
            return StepResult(self._final_score(state.points, selected), 0.0, next_state)
        return StepResult(0.0, 1.0, next_state)

    def observe(self, state: SubsetState) -> Observation:
        feats = np.zeros((self.n, 3), dtype=np.float64)
        feats[:, :2] = state.points
        feats[:, 2] = state.selected
        return Observation(feats, ActionMode.SET_INDEXED, self.n, ~state.selected)

    def _final_score(self, points: np.ndarray, selected: np.ndarray) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class VertexKCenter(_SubsetEnv):
    """Score: -max over points of the distance to the nearest selected point."""

    def _final_score(self, points, selected):
        diff = points[:, None, :] - points[None, selected, :]
        nearest = np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)
        return -float(nearest.max())


@dataclass(frozen=True)
class MaxDiversity(_SubsetEnv):
    """Score: min pairwise distance among the selected points."""

    min_k: int = 2

    def _final_score(self, points, selected):
        chosen = points[selected]
        diff = chosen[:, None, :] - chosen[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        iu = np.triu_indices(len(chosen), k=1)
        return float(dist[iu].min())
