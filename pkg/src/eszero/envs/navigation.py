"""Gridworld target-collection environment.

An agent walks a square grid and earns +1 for each target tile it reaches
before the time limit.  Moves past the border are no-ops; the episode ends
exactly when the step budget runs out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..episode import ActionMode, ConfigurationError, Observation, StepResult
from ..rng import make_rng

# Action indices shared with Sokoban: up, down, left, right.
DIRECTIONS = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass(frozen=True)
class NavState:
    agent: tuple[int, int]
    targets: np.ndarray        # (n_targets, 2) int rows/cols
    reached: np.ndarray        # (n_targets,) bool
    steps_remaining: int


@dataclass(frozen=True)
class Navigation:
    grid_size: int = 10
    n_targets: int = 20
    horizon: int = 50

    def __post_init__(self):
        if self.n_targets + 1 > self.grid_size * self.grid_size:
            raise ConfigurationError("more targets than free tiles")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be positive")

    def reset(self, seed: int) -> NavState:
        rng = make_rng(seed, "nav-reset")
        # Agent and targets occupy pairwise-distinct tiles.
        tiles = rng.choice(self.grid_size * self.grid_size, size=self.n_targets + 1,
                           replace=False)
        rows, cols = np.divmod(tiles, self.grid_size)
        agent = (int(rows[0]), int(cols[0]))
        targets = np.stack([rows[1:], cols[1:]], axis=1).astype(np.int64)
        return NavState(agent, targets, np.zeros(self.n_targets, dtype=bool), self.horizon)

    def is_terminal(self, state: NavState) -> bool:
        return state.steps_remaining == 0

    def step(self, state: NavState, action: int) -> StepResult:
        if state.steps_remaining <= 0:
            raise ValueError("step on a terminated navigation state")
        dr, dc = DIRECTIONS[action]
        r = min(max(state.agent[0] + dr, 0), self.grid_size - 1)
        c = min(max(state.agent[1] + dc, 0), self.grid_size - 1)
        hit = (state.targets[:, 0] == r) & (state.targets[:, 1] == c) & ~state.reached
        reward = float(hit.any())
        reached = state.reached | hit
        remaining = state.steps_remaining - 1
        next_state = NavState((r, c), state.targets, reached, remaining)
        return StepResult(reward, 0.0 if remaining == 0 else 1.0, next_state)

    def observe(self, state: NavState) -> Observation:
        span = max(self.grid_size - 1, 1)
        n = self.n_targets
        feats = np.empty((n, 6), dtype=np.float64)
        feats[:, 0] = state.targets[:, 0] / span
        feats[:, 1] = state.targets[:, 1] / span
        feats[:, 2] = state.agent[0] / span
        feats[:, 3] = state.agent[1] / span
        feats[:, 4] = state.reached
        feats[:, 5] = state.steps_remaining / self.horizon
        return Observation(feats, ActionMode.FIXED, 4, np.ones(4, dtype=bool))
