"""Shared test fixtures: a deterministic one-step bandit and episode helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eszero.episode import ActionMode, Observation, StepResult
from eszero.rng import make_rng


@dataclass(frozen=True)
class BanditState:
    done: bool


@dataclass(frozen=True)
class OneStepBandit:
    """k-armed one-step environment with fixed, known rewards.

    Rewards are part of the instance, so the optimal action is the true
    argmax regardless of any network: the oracle for search tests.
    """

    rewards: tuple[float, ...]
    horizon: int = 1

    @property
    def k(self) -> int:
        return len(self.rewards)

    def reset(self, seed: int) -> BanditState:
        return BanditState(done=False)

    def is_terminal(self, state: BanditState) -> bool:
        return state.done

    def step(self, state: BanditState, action: int) -> StepResult:
        if state.done:
            raise ValueError("bandit episode already over")
        return StepResult(float(self.rewards[action]), 0.0, BanditState(done=True))

    def observe(self, state: BanditState) -> Observation:
        feats = np.stack([np.arange(self.k) / max(self.k - 1, 1),
                          np.ones(self.k)], axis=1)
        return Observation(feats, ActionMode.FIXED, self.k, np.ones(self.k, dtype=bool))


def euclid(p, q) -> float:
    """sqrt(dx^2 + dy^2) with the same rounding as the vectorized env code
    (math.dist scales for overflow safety and can differ by an ulp)."""
    import math
    return math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2)


def random_weight_agent(env, agent_seed: int):
    """Picks a uniform random legal action with random legal-only weights."""

    def agent(state, rng: np.random.Generator):
        obs = env.observe(state)
        legal = np.flatnonzero(obs.legal_mask)
        action = int(rng.choice(legal))
        w = np.zeros(obs.n_actions)
        w[legal] = make_rng(agent_seed, "w", int(legal[0]), len(legal)).random(len(legal))
        w /= w.sum()
        return action, w

    return agent
