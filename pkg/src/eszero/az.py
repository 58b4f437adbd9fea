"""Planning-loss trainer: gradient descent on value MSE + policy cross-entropy.

Episodes are generated fresh each epoch by acting with the search policy,
then the recorded root action-weights and returns supervise the network.
The per-batch gradient is the mean over episodes of each episode's
step-summed loss gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .deepsets import backward, forward, unflatten
from .episode import EpisodeRecord, Environment, rollout
from .mcts import SearchConfig, make_agent
from .optim import Optimizer, OptState
from .rng import derive_seed


@dataclass(frozen=True)
class PlanningLossReport:
    value_loss: float
    policy_loss: float

    @property
    def total(self) -> float:
        return self.value_loss + self.policy_loss


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max()
    return logits - (m + np.log(np.exp(logits - m).sum()))


def planning_loss(episode: EpisodeRecord, params, with_grad: bool = True):
    """Loss over one episode; returns (report, flat gradient or None).

    value loss = sum_t (R_t - v_t)^2, policy loss = sum_t H(w_t, p_t).
    """
    value_loss = 0.0
    policy_loss = 0.0
    grad = None
    for t, step in enumerate(episode.steps):
        obs = step.observation
        w = step.weights
        if np.any(w[~obs.legal_mask] != 0.0):
            raise ValueError(f"step {t}: action weights put mass on illegal actions")
        v, logits, cache = forward(params, obs)
        ret = episode.returns[t]
        value_loss += (ret - v) ** 2
        logp = _log_softmax(logits)
        policy_loss += float(-(w[obs.legal_mask] * logp[obs.legal_mask]).sum())
        if with_grad:
            p = np.exp(logp)
            flat = backward(params, cache, 2.0 * (v - ret), p - w)
            grad = flat.values if grad is None else grad + flat.values
    return PlanningLossReport(float(value_loss), float(policy_loss)), grad


@dataclass(frozen=True)
class EpochMetrics:
    mean_score: float
    value_loss: float
    policy_loss: float


def generate_episodes(env: Environment, params, search: SearchConfig,
                      n: int, seed: int) -> list[EpisodeRecord]:
    agent = make_agent(env, params, search)
    return [rollout(env, agent, derive_seed(seed, "episode", i)) for i in range(n)]


def az_epoch(env: Environment, layout, opt: Optimizer, state: OptState,
             batch_size: int, search: SearchConfig, lr: float,
             seed: int) -> tuple[OptState, EpochMetrics]:
    """Generate a batch, take one optimizer step, report pre-update metrics."""
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    params = unflatten(state.x, layout)
    episodes = generate_episodes(env, params, search, batch_size, seed)
    grad_sum = np.zeros_like(state.x)
    score = value = policy = 0.0
    for ep in episodes:
        report, grad = planning_loss(ep, params)
        grad_sum += grad
        score += ep.score
        value += report.value_loss
        policy += report.policy_loss
    n = len(episodes)
    state = opt.update_state(state, grad_sum / n, lr)
    return state, EpochMetrics(score / n, value / n, policy / n)


def az_train(env: Environment, layout, opt: Optimizer, x0: np.ndarray,
             epochs: int, batch_size: int, search: SearchConfig, lr: float,
             run_seed: int) -> tuple[np.ndarray, list[EpochMetrics]]:
    state = opt.init(x0)
    rows = []
    for epoch in range(epochs):
        state, metrics = az_epoch(env, layout, opt, state, batch_size, search,
                                  lr, derive_seed(run_seed, "epoch", epoch))
        rows.append(metrics)
    return state.x, rows
