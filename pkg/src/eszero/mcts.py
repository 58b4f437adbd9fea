"""Gumbel-style Monte Carlo tree search over the real environment.

Each decision step runs a fixed simulation budget.  The root samples up to
m actions by Gumbel top-m on the prior logits and allocates simulations by
sequential halving; interior nodes follow the deterministic
improved-policy rule.  Expansion calls the environment's step function, so
rewards and discounts on tree edges are exact.  The only randomness is the
root Gumbel draw.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .deepsets import forward, softmax
from .episode import Environment


@dataclass(frozen=True)
class SearchConfig:
    budget: int = 8
    max_considered: int = 16
    c_visit: float = 50.0
    c_scale: float = 1.0

    def __post_init__(self):
        if self.budget < 2:
            raise ValueError("budget must be at least 2")
        if self.max_considered < 2:
            raise ValueError("max_considered must be at least 2")


@dataclass(frozen=True)
class SearchResult:
    action: int
    weights: np.ndarray
    root_value: float


class _Node:
    __slots__ = ("state", "terminal", "v", "logits", "legal", "N", "W", "r", "g", "child")

    def __init__(self, state, terminal: bool, v: float, logits, legal, n_actions: int):
        self.state = state
        self.terminal = terminal
        self.v = v
        self.logits = logits
        self.legal = legal
        self.N = np.zeros(n_actions, dtype=np.int64)
        self.W = np.zeros(n_actions)  # sum of backed-up G values per edge
        self.r = np.zeros(n_actions)
        self.g = np.zeros(n_actions)
        self.child = np.full(n_actions, -1, dtype=np.int64)

    @property
    def Q(self) -> np.ndarray:
        # stored as (sum, count) so Q is the float-exact mean of its G values
        return np.where(self.N > 0, self.W / np.maximum(self.N, 1), 0.0)


class Tree:
    """Flat arena of nodes; node 0 is the root, children addressed by (node, action)."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def add(self, node: _Node) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1


def sigma_q(node: _Node, completed: np.ndarray, config: SearchConfig) -> np.ndarray:
    """(c_visit + max N) * c_scale * q on min-max-normalized completed Q values."""
    return (config.c_visit + node.N.max()) * config.c_scale * completed


def completed_q(node: _Node) -> np.ndarray:
    """Q for visited edges, the node's value estimate elsewhere, normalized
    to the visited edges' min-max range; all zeros when nothing is visited."""
    visited = node.N > 0
    if not visited.any():
        return np.zeros_like(node.Q)
    q = np.where(visited, node.Q, node.v)
    lo = node.Q[visited].min()
    hi = node.Q[visited].max()
    if hi <= lo:
        return np.zeros_like(q)
    return (q - lo) / (hi - lo)


def _expand(tree: Tree, env: Environment, params, node_id: int, action: int) -> int:
    node = tree.nodes[node_id]
    if node.child[action] >= 0:
        raise ValueError(f"edge ({node_id}, {action}) already has a child")
    step = env.step(node.state, action)
    node.r[action] = step.reward
    node.g[action] = step.discount
    if step.discount == 0.0:
        child = _Node(step.next_state, True, 0.0, None, None, 0)
    else:
        obs = env.observe(step.next_state)
        v, logits, _ = forward(params, obs)
        child = _Node(step.next_state, False, v, logits, obs.legal_mask, obs.n_actions)
    child_id = tree.add(child)
    node.child[action] = child_id
    return child_id


def _improved_policy(node: _Node, config: SearchConfig) -> np.ndarray:
    """Softmax of logits + sigma_q over legal actions only.

    Masking must come after the sigma term: a near-degenerate visited Q
    range can stretch the normalized node value past the masking logit,
    and an illegal action must never win on sigma alone.
    """
    score = node.logits + sigma_q(node, completed_q(node), config)
    return softmax(np.where(node.legal, score, -np.inf))


def _interior_action(node: _Node, config: SearchConfig) -> int:
    score = _improved_policy(node, config) - node.N / (1.0 + node.N.sum())
    score = np.where(node.legal, score, -np.inf)
    return int(np.argmax(score))


def _simulate(tree: Tree, env: Environment, params, root_action: int,
              config: SearchConfig, trace) -> None:
    """One select/expand/backup pass through the given root edge."""
    path = [(0, root_action)]
    node_id, action = 0, root_action
    while True:
        child_id = tree.nodes[node_id].child[action]
        if child_id < 0:
            child_id = _expand(tree, env, params, node_id, action)
            leaf_value = tree.nodes[child_id].v
            break
        child = tree.nodes[child_id]
        if child.terminal:
            # nothing below a terminal state; back up its stored value
            leaf_value = child.v
            break
        node_id = child_id
        action = _interior_action(child, config)
        path.append((node_id, action))
    G = leaf_value
    for node_id, action in reversed(path):
        node = tree.nodes[node_id]
        G = node.r[action] + node.g[action] * G
        node.W[action] += G
        node.N[action] += 1
        if trace is not None:
            trace.append((node_id, action, float(G)))


def root_weights(tree: Tree, config: SearchConfig) -> np.ndarray:
    return _improved_policy(tree.nodes[0], config)


def run_search(env: Environment, state, params, config: SearchConfig,
               rng: np.random.Generator, trace=None) -> tuple[SearchResult, Tree]:
    if env.is_terminal(state):
        raise ValueError("search from a terminal state")
    obs = env.observe(state)
    v, logits, _ = forward(params, obs)
    tree = Tree()
    tree.add(_Node(state, False, v, logits, obs.legal_mask, obs.n_actions))
    root = tree.nodes[0]

    gumbel = rng.gumbel(size=obs.n_actions)
    n_legal = int(obs.legal_mask.sum())
    m = min(config.max_considered, n_legal, config.budget)
    base = np.where(obs.legal_mask, gumbel + logits, -np.inf)
    considered = list(np.argsort(-base)[:m])

    def ranking() -> np.ndarray:
        return base + sigma_q(root, completed_q(root), config)

    remaining = config.budget
    phases = max(1, math.ceil(math.log2(m)))
    while remaining > 0:
        if len(considered) == 1:
            per = remaining
        else:
            per = max(1, config.budget // (phases * len(considered)))
        for _ in range(per):
            for a in considered:
                if remaining == 0:
                    break
                _simulate(tree, env, params, int(a), config, trace)
                remaining -= 1
            if remaining == 0:
                break
        if len(considered) > 1:
            keep = math.ceil(len(considered) / 2)
            scores = ranking()
            considered.sort(key=lambda a: -scores[a])
            considered = considered[:keep]

    scores = ranking()
    action = int(max(considered, key=lambda a: scores[a]))
    return SearchResult(action, root_weights(tree, config), root.v), tree


def search(env: Environment, state, params, config: SearchConfig,
           rng: np.random.Generator) -> SearchResult:
    result, _ = run_search(env, state, params, config, rng)
    return result


def make_agent(env: Environment, params, config: SearchConfig):
    """Adapt search to the rollout agent signature (state, rng) -> (action, weights)."""
    def agent(state, rng: np.random.Generator):
        result = search(env, state, params, config, rng)
        return result.action, result.weights
    return agent


def dump_tree(tree: Tree) -> str:
    """Stable JSON rendering of node statistics for golden-file comparisons."""
    nodes = []
    for i, node in enumerate(tree.nodes):
        entry: dict = {"id": i, "terminal": node.terminal, "v": node.v}
        if not node.terminal:
            entry["N"] = node.N.tolist()
            entry["Q"] = node.Q.tolist()
            entry["r"] = node.r.tolist()
            entry["discount"] = node.g.tolist()
            entry["child"] = node.child.tolist()
            entry["priors"] = softmax(node.logits).tolist()
        nodes.append(entry)
    return json.dumps({"nodes": nodes}, indent=1, sort_keys=True)
