"""Tour-construction environment for the Euclidean traveling salesman problem.

A fresh instance is sampled per episode.  The agent picks one unvisited city
per step; when the last city is picked the episode ends with reward equal to
minus the closed tour length, so the score is the negated tour length.
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


def tour_length(cities: np.ndarray, order) -> float:
    """Length of the closed tour visiting ``order`` and returning to its start."""
    order = np.asarray(order, dtype=np.intp)
    legs = cities[order] - cities[np.roll(order, -1)]
    return float(np.sqrt((legs ** 2).sum(axis=1)).sum())


@dataclass(frozen=True)
class TspState:
    cities: np.ndarray       # (n, 2) in the unit square
    order: tuple[int, ...]   # distinct visited city indices, in visit order
    visited: np.ndarray      # (n,) bool, == mask of `order`


@dataclass(frozen=True)
class Tsp:
    n: int = 20

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("tsp needs at least 2 cities")

    @property
    def horizon(self) -> int:
        return self.n

    def reset(self, seed: int) -> TspState:
        rng = make_rng(seed, "tsp-reset")
        return self.from_cities(rng.random((self.n, 2)))

    def from_cities(self, cities: np.ndarray) -> TspState:
        cities = np.asarray(cities, dtype=np.float64)
        if cities.shape != (self.n, 2):
            raise ConfigurationError(f"expected {self.n}x2 city array, got {cities.shape}")
        return TspState(cities, (), np.zeros(self.n, dtype=bool))

    def is_terminal(self, state: TspState) -> bool:
        return len(state.order) == self.n

    def step(self, state: TspState, action: int) -> StepResult:
        if state.visited[action]:
            raise IllegalActionError(f"city {action} already visited")
        order = state.order + (int(action),)
        visited = state.visited.copy()
        visited[action] = True
        next_state = TspState(state.cities, order, visited)
        if len(order) == self.n:
            return StepResult(-tour_length(state.cities, order), 0.0, next_state)
        return StepResult(0.0, 1.0, next_state)

    def observe(self, state: TspState) -> Observation:
        n = self.n
        feats = np.zeros((n, 5), dtype=np.float64)
        feats[:, :2] = state.cities
        feats[:, 2] = state.visited
        if state.order:
            feats[state.order[0], 3] = 1.0
            feats[state.order[-1], 4] = 1.0
        return Observation(feats, ActionMode.SET_INDEXED, n, ~state.visited)
