"""Episodic environment contract and the episode runner.

An environment is a pure-value-semantics object: ``reset`` samples an
initial state from a seed, ``step`` maps (state, action) to a reward, a
discount factor and a successor state without mutating its input, and
``observe`` encodes a state as a set of per-item feature vectors.  The
discount factor doubles as the termination signal: it is 1.0 on every
non-terminal step and 0.0 on the terminal one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Protocol, Sequence

import numpy as np

from .rng import make_rng


class ActionMode(Enum):
    """How a policy head addresses the action space.

    SET_INDEXED: one action per input item (choose an element of the set).
    FIXED: a fixed action count independent of the input set size.
    """

    SET_INDEXED = "set_indexed"
    FIXED = "fixed"


@dataclass(frozen=True)
class Observation:
    """Network input: per-item feature vectors plus an action descriptor.

    features   : (n_items, d_feat) float array
    action_mode: SET_INDEXED or FIXED
    n_actions  : action-space size (== n_items for SET_INDEXED)
    legal_mask : boolean vector of length n_actions
    """

    features: np.ndarray
    action_mode: ActionMode
    n_actions: int
    legal_mask: np.ndarray

    def __post_init__(self):
        if self.action_mode is ActionMode.SET_INDEXED and self.n_actions != self.features.shape[0]:
            raise ValueError("set-indexed action count must equal the item count")
        if self.legal_mask.shape != (self.n_actions,):
            raise ValueError("legal mask length must equal the action count")


@dataclass(frozen=True)
class StepResult:
    """One transition: reward, discount (0 terminates) and the next state."""

    reward: float
    discount: float
    next_state: Any

    def __post_init__(self):
        if not np.isfinite(self.reward):
            raise ValueError(f"non-finite reward {self.reward!r}")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError(f"discount {self.discount!r} outside [0, 1]")


class Environment(Protocol):
    """Contract every benchmark environment implements."""

    horizon: int

    def reset(self, seed: int) -> Any: ...

    def step(self, state: Any, action: int) -> StepResult: ...

    def observe(self, state: Any) -> Observation: ...

    def is_terminal(self, state: Any) -> bool: ...


class IllegalActionError(ValueError):
    """An action violated a step precondition (never silently masked)."""


class ConfigurationError(ValueError):
    """An environment or experiment configuration is inconsistent."""


@dataclass(frozen=True)
class Step:
    """One recorded decision step of an episode."""

    observation: Observation
    action: int
    weights: np.ndarray  # root action weights from search, sums to 1 over legal
    reward: float
    discount: float


@dataclass(frozen=True)
class EpisodeRecord:
    """A full trajectory with returns computed by the discount recursion."""

    steps: tuple[Step, ...]
    returns: np.ndarray

    @property
    def score(self) -> float:
        """Return at the initial timestep; the quantity ES maximizes."""
        return float(self.returns[0])


def compute_returns(rewards: Sequence[float], discounts: Sequence[float]) -> np.ndarray:
    """Backward recursion ``R[t] = r[t] + discount[t] * R[t+1]``.

    The last entry's discount is expected to be 0, so ``R[-1] == r[-1]``.
    Accumulation is in float64 so recomputing returns from a stored episode
    reproduces them exactly.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    discounts = np.asarray(discounts, dtype=np.float64)
    if rewards.size == 0:
        raise ValueError("cannot compute returns of an empty episode")
    if rewards.shape != discounts.shape:
        raise ValueError("rewards and discounts must have equal length")
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(rewards.size - 1, -1, -1):
        acc = rewards[t] + discounts[t] * acc
        out[t] = acc
    return out


# An agent maps (state, rng) to (action, root action weights).
Agent = Callable[[Any, np.random.Generator], tuple[int, np.ndarray]]


def rollout(env: Environment, agent: Agent, seed: int) -> EpisodeRecord:
    """Run one episode to termination and record every step.

    Deterministic given (env, agent parameters, seed): the episode draws all
    randomness from a generator derived from ``seed``.  Raises
    IllegalActionError if the agent picks a masked action and RuntimeError if
    the episode outlives the environment's horizon (unreachable for the
    built-in environments, whose discounts hit 0 by construction).
    """
    rng = make_rng(seed, "episode")
    state = env.reset(seed)
    steps: list[Step] = []
    for _ in range(env.horizon):
        obs = env.observe(state)
        action, weights = agent(state, rng)
        if not obs.legal_mask[action]:
            raise IllegalActionError(f"agent chose illegal action {action}")
        result = env.step(state, action)
        steps.append(Step(obs, int(action), np.asarray(weights, dtype=np.float64),
                          result.reward, result.discount))
        state = result.next_state
        if result.discount == 0.0:
            break
    else:
        raise RuntimeError(f"episode exceeded horizon {env.horizon} without terminating")
    returns = compute_returns([s.reward for s in steps], [s.discount for s in steps])
    return EpisodeRecord(tuple(steps), returns)
