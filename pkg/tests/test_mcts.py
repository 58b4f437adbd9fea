import collections
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from conftest import OneStepBandit
from eszero.deepsets import flatten, init, softmax, unflatten
from eszero.envs import Navigation, Tsp
from eszero.episode import ActionMode, Observation, StepResult, rollout
from eszero.mcts import (SearchConfig, _interior_action, _Node, completed_q,
                         dump_tree, make_agent, root_weights, run_search,
                         search, sigma_q)
from eszero.rng import derive_seed, make_rng

GOLDEN = Path(__file__).parent / "data" / "golden_tree.json"


def zero_params(d_in, mode, n_actions=None, hidden=4):
    p = init(0, d_in=d_in, mode=mode, n_actions=n_actions, hidden=hidden)
    flat = flatten(p)
    return unflatten(np.zeros(flat.values.shape), flat.layout)


def constant_value_params(v, d_in, mode, n_actions=None, hidden=4):
    """All-zero network except the value bias: v everywhere, uniform priors."""
    p = init(0, d_in=d_in, mode=mode, n_actions=n_actions, hidden=hidden)
    flat = flatten(p)
    values = np.zeros(flat.values.shape)
    for name, shape, offset in flat.layout:
        if name == "value.b":
            values[offset] = v
    return unflatten(values, flat.layout)


@dataclass(frozen=True)
class Chain:
    """Single-file corridor with scripted edge rewards and discounts.

    Position k is the state; every action advances to k+1.  With the
    constant-value network this makes every backed-up return a hand
    computable number.
    """

    rewards: tuple[float, ...]
    discounts: tuple[float, ...]
    n_actions: int = 1

    @property
    def horizon(self) -> int:
        return len(self.rewards)

    def reset(self, seed: int) -> int:
        return 0

    def is_terminal(self, state: int) -> bool:
        return state >= len(self.rewards)

    def step(self, state: int, action: int) -> StepResult:
        return StepResult(self.rewards[state], self.discounts[state], state + 1)

    def observe(self, state: int) -> Observation:
        feats = np.array([[state / len(self.rewards), 1.0]])
        return Observation(feats, ActionMode.FIXED, self.n_actions,
                           np.ones(self.n_actions, dtype=bool))


def bandit_setup(rewards, hidden=4):
    env = OneStepBandit(rewards)
    return env, zero_params(2, ActionMode.FIXED, n_actions=env.k, hidden=hidden)


class TestConfig:
    def test_defaults(self):
        c = SearchConfig()
        assert (c.budget, c.max_considered, c.c_visit, c.c_scale) == (8, 16, 50.0, 1.0)

    @pytest.mark.parametrize("kwargs", [dict(budget=1), dict(budget=0),
                                        dict(max_considered=1)])
    def test_rejects_degenerate(self, kwargs):
        with pytest.raises(ValueError):
            SearchConfig(**kwargs)


class TestScoring:
    def make_node(self, logits, legal, N, W, v=0.0):
        node = _Node(None, False, v, np.asarray(logits, dtype=float),
                     np.asarray(legal, dtype=bool), len(logits))
        node.N[:] = N
        node.W[:] = W
        return node

    def test_q_is_mean_of_backed_up_values(self):
        node = self.make_node([0, 0], [1, 1], N=[2, 0], W=[3.0, 0.0])
        assert node.Q.tolist() == [1.5, 0.0]

    def test_completed_q_all_zero_without_visits(self):
        node = self.make_node([0, 0, 0], [1, 1, 1], N=[0, 0, 0], W=[0, 0, 0])
        assert completed_q(node).tolist() == [0.0, 0.0, 0.0]

    def test_completed_q_normalizes_to_visited_range(self):
        node = self.make_node([0, 0, 0], [1, 1, 1], N=[1, 1, 0], W=[0.0, 1.0, 0.0],
                              v=2.0)
        # unvisited edge falls back on the node value, which may leave [0, 1]
        assert completed_q(node).tolist() == [0.0, 1.0, 2.0]

    def test_completed_q_flat_q_gives_zeros(self):
        node = self.make_node([0, 0], [1, 1], N=[3, 1], W=[1.5, 0.5])
        assert completed_q(node).tolist() == [0.0, 0.0]

    def test_sigma_q_scale(self):
        node = self.make_node([0, 0], [1, 1], N=[2, 1], W=[2.0, 0.5])
        got = sigma_q(node, completed_q(node), SearchConfig(c_visit=50, c_scale=1.0))
        assert got.tolist() == [52.0, 0.0]
        half = sigma_q(node, completed_q(node), SearchConfig(c_visit=50, c_scale=0.5))
        assert half.tolist() == [26.0, 0.0]

    def test_interior_action_fresh_node_follows_priors(self):
        node = self.make_node([0.1, 0.9, 0.3], [1, 1, 1], N=[0, 0, 0], W=[0, 0, 0])
        assert _interior_action(node, SearchConfig()) == 1

    def test_interior_action_discounts_visit_counts(self):
        node = self.make_node([0.0, 0.0, 0.0], [1, 1, 1], N=[5, 0, 0],
                              W=[0.0, 0, 0])
        assert _interior_action(node, SearchConfig()) == 1

    def test_interior_action_skips_illegal(self):
        node = self.make_node([5.0, 0.0, 0.0], [0, 1, 1], N=[0, 0, 0], W=[0, 0, 0])
        assert _interior_action(node, SearchConfig()) in (1, 2)

    def test_ulp_wide_q_range_cannot_resurrect_illegal_actions(self):
        # visited Q values one ulp apart stretch the unvisited fallback to
        # ~1e15 after normalization; sigma_q then dwarfs any masking logit,
        # so legality has to be enforced after the sigma term is added
        from eszero.deepsets import MASK_LOGIT
        from eszero.mcts import Tree, root_weights
        node = self.make_node([0.0, 0.0, MASK_LOGIT], [1, 1, 0], N=[1, 3, 0],
                              W=[0.4, 1.2000000000000002, 0.0], v=0.9)
        tree = Tree()
        tree.add(node)
        w = root_weights(tree, SearchConfig())
        assert np.isfinite(w).all()
        assert w[2] == 0.0
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert _interior_action(node, SearchConfig()) in (0, 1)


class TestBandit:
    def test_oracle_sample(self):
        # full 100-instance sweep lives in the acceptance suite
        for i in range(20):
            rng = make_rng(derive_seed(7, "bandit", i), "inst")
            rewards = tuple(rng.permutation(4.0 * np.arange(4) / 3)
                            + rng.uniform(-0.1, 0.1, size=4))
            env, params = bandit_setup(rewards)
            result = search(env, env.reset(0), params, SearchConfig(budget=8),
                            make_rng(derive_seed(7, "search", i), "s"))
            assert result.action == int(np.argmax(rewards)), rewards

    def test_terminal_children_not_reexpanded(self):
        env, params = bandit_setup((0.0, 1.0, 0.5, 0.25))
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=8),
                             make_rng(0, "s"))
        assert len(tree.nodes) == 5  # root + one terminal child per arm
        assert tree.nodes[0].N.sum() == 8
        assert all(tree.nodes[i].terminal for i in range(1, 5))
        assert all(tree.nodes[i].v == 0.0 for i in range(1, 5))

    def test_q_equals_arm_reward(self):
        env, params = bandit_setup((0.3, -0.2, 0.9, 0.1))
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=8),
                             make_rng(1, "s"))
        root = tree.nodes[0]
        visited = root.N > 0
        assert np.array_equal(root.Q[visited], np.asarray(env.rewards)[visited])

    def test_equal_arms_give_prior_weights(self):
        # 0.5 sums and averages exactly at every visit count, so all arms
        # share one Q, the min-max range collapses and priors pass through
        env, params = bandit_setup((0.5, 0.5, 0.5, 0.5))
        result, tree = run_search(env, env.reset(0), params, SearchConfig(budget=8),
                                  make_rng(2, "s"))
        assert np.allclose(result.weights, 0.25, atol=1e-15)

    def test_search_from_terminal_rejected(self):
        env, params = bandit_setup((0.0, 1.0))
        done = env.step(env.reset(0), 0).next_state
        with pytest.raises(ValueError):
            search(env, done, params, SearchConfig(), make_rng(3, "s"))


class TestHalving:
    def test_two_arms_split_evenly(self):
        env, params = bandit_setup((0.0, 1.0))
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=8),
                             make_rng(4, "s"))
        assert tree.nodes[0].N.tolist() == [4, 4]

    def test_three_arms_phase_counts(self):
        env, params = bandit_setup((0.0, 0.5, 1.0))
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=8),
                             make_rng(5, "s"))
        assert sorted(tree.nodes[0].N.tolist()) == [1, 3, 4]

    def test_four_arms_phase_counts(self):
        env, params = bandit_setup((0.0, 0.25, 0.5, 1.0))
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=8),
                             make_rng(6, "s"))
        assert sorted(tree.nodes[0].N.tolist()) == [1, 1, 3, 3]

    def test_budget_matching_arms_gives_single_visits(self):
        env = Tsp(8)
        params = zero_params(5, ActionMode.SET_INDEXED, hidden=4)
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=8),
                             make_rng(7, "s"))
        assert tree.nodes[0].N.tolist() == [1] * 8

    @pytest.mark.parametrize("budget", [2, 3, 5, 8, 13, 32])
    def test_root_visits_always_sum_to_budget(self, budget):
        env = Navigation(grid_size=5, n_targets=3, horizon=12)
        params = init(11, d_in=6, mode=ActionMode.FIXED, n_actions=4, hidden=4)
        for seed in range(5):
            state = env.reset(seed)
            _, tree = run_search(env, state, params, SearchConfig(budget=budget),
                                 make_rng(seed, "visits"))
            assert tree.nodes[0].N.sum() == budget

    def test_nodes_equal_budget_plus_one_away_from_terminals(self):
        # searches too shallow to reach episode end expand once per simulation
        env = Tsp(20)
        params = init(12, d_in=5, mode=ActionMode.SET_INDEXED, hidden=4)
        for seed in range(5):
            _, tree = run_search(env, env.reset(seed), params,
                                 SearchConfig(budget=8), make_rng(seed, "n"))
            assert len(tree.nodes) == 9


class TestBackup:
    def test_single_visit_boots_from_leaf_value(self):
        env = Chain(rewards=(1.0, 0.0), discounts=(1.0, 1.0), n_actions=2)
        params = constant_value_params(0.5, 2, ActionMode.FIXED, n_actions=2)
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=2),
                             make_rng(8, "s"))
        root = tree.nodes[0]
        assert root.N.tolist() == [1, 1]
        assert root.Q.tolist() == [1.5, 1.5]
        assert root.r.tolist() == [1.0, 1.0]
        assert root.g.tolist() == [1.0, 1.0]

    def test_mean_over_two_different_returns(self):
        env = Chain(rewards=(1.5, 2.0, 0.0), discounts=(1.0, 1.0, 1.0))
        params = constant_value_params(0.5, 2, ActionMode.FIXED, n_actions=1)
        trace = []
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=2),
                             make_rng(9, "s"), trace=trace)
        root = tree.nodes[0]
        assert [g for nid, a, g in trace if nid == 0] == [2.0, 4.0]
        assert root.N.tolist() == [2]
        assert root.W.tolist() == [6.0]
        assert root.Q.tolist() == [3.0]
        assert tree.nodes[1].Q.tolist() == [2.5]

    def test_zero_discount_cuts_the_bootstrap(self):
        env = Chain(rewards=(0.7,), discounts=(0.0,))
        params = constant_value_params(0.5, 2, ActionMode.FIXED, n_actions=1)
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=4),
                             make_rng(10, "s"))
        root = tree.nodes[0]
        assert len(tree.nodes) == 2 and tree.nodes[1].terminal
        assert root.N.tolist() == [4]
        assert root.Q.tolist() == [0.7]

    @pytest.mark.parametrize("seed", range(6))
    def test_trace_replay_reproduces_every_q(self, seed):
        env = Tsp(6)
        params = init(13, d_in=5, mode=ActionMode.SET_INDEXED, hidden=4)
        trace = []
        _, tree = run_search(env, env.reset(seed), params, SearchConfig(budget=8),
                             make_rng(seed, "replay"), trace=trace)
        per_edge = collections.defaultdict(list)
        for nid, action, g in trace:
            per_edge[(nid, action)].append(g)
        for (nid, action), gs in per_edge.items():
            total = 0.0
            for g in gs:  # accumulate in visit order, as the tree does
                total += g
            node = tree.nodes[nid]
            assert node.N[action] == len(gs)
            assert node.Q[action] == total / len(gs)
        visited = [(i, a) for i, n in enumerate(tree.nodes) if not n.terminal
                   for a in np.flatnonzero(n.N)]
        assert sorted(per_edge) == sorted(visited)


class TestSearchOutputs:
    def test_same_seed_reproduces_everything(self):
        env = Tsp(7)
        params = init(14, d_in=5, mode=ActionMode.SET_INDEXED, hidden=4)
        state = env.reset(3)
        runs = [run_search(env, state, params, SearchConfig(budget=8),
                           make_rng(21, "det")) for _ in range(2)]
        (r1, t1), (r2, t2) = runs
        assert r1.action == r2.action
        assert np.array_equal(r1.weights, r2.weights)
        assert r1.root_value == r2.root_value
        assert dump_tree(t1) == dump_tree(t2)

    def test_seed_changes_root_sampling(self):
        # near-tied arms: the gumbel draw decides who enters consideration
        env, params = bandit_setup((0.0, 0.001, 0.0011, 0.0009))
        actions = {search(env, env.reset(0), params, SearchConfig(budget=2),
                          make_rng(s, "g")).action for s in range(30)}
        assert len(actions) > 1

    def test_weights_are_a_distribution_over_legal_actions(self):
        env = Tsp(6)
        params = init(15, d_in=5, mode=ActionMode.SET_INDEXED, hidden=4)
        state = env.reset(1)
        state = env.step(state, search(env, state, params, SearchConfig(),
                                       make_rng(0, "w")).action).next_state
        result = search(env, state, params, SearchConfig(), make_rng(1, "w"))
        legal = env.observe(state).legal_mask
        assert result.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert (result.weights >= 0).all()
        assert (result.weights[~legal] == 0.0).all()

    def test_root_value_is_network_estimate(self):
        env = Tsp(5)
        params = constant_value_params(0.25, 5, ActionMode.SET_INDEXED)
        result = search(env, env.reset(0), params, SearchConfig(),
                        make_rng(2, "rv"))
        assert result.root_value == 0.25

    def test_visits_pull_weights_toward_better_arms(self):
        env, params = bandit_setup((0.0, 1.0))
        result = search(env, env.reset(0), params, SearchConfig(budget=8),
                        make_rng(3, "pull"))
        assert result.action == 1
        assert result.weights[1] > 0.99

    def test_agent_adapter_matches_search(self):
        env = Tsp(6)
        params = init(16, d_in=5, mode=ActionMode.SET_INDEXED, hidden=4)
        state = env.reset(2)
        agent = make_agent(env, params, SearchConfig())
        action, weights = agent(state, make_rng(4, "adapter"))
        direct = search(env, state, params, SearchConfig(), make_rng(4, "adapter"))
        assert action == direct.action
        assert np.array_equal(weights, direct.weights)

    def test_full_rollout_with_search_agent(self):
        env = Tsp(5)
        params = init(17, d_in=5, mode=ActionMode.SET_INDEXED, hidden=4)
        episode = rollout(env, make_agent(env, params, SearchConfig(budget=4)), 9)
        assert len(episode.steps) == 5
        assert episode.score < 0


class TestDump:
    def test_golden_tree(self):
        env, params = bandit_setup((0.05, 1.0, 0.3, 0.7))
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=8),
                             make_rng(20250515, "golden"))
        assert dump_tree(tree) == GOLDEN.read_text()

    def test_dump_is_valid_json_with_one_entry_per_node(self):
        env = Tsp(5)
        params = init(18, d_in=5, mode=ActionMode.SET_INDEXED, hidden=4)
        _, tree = run_search(env, env.reset(0), params, SearchConfig(budget=4),
                             make_rng(5, "json"))
        doc = json.loads(dump_tree(tree))
        assert [n["id"] for n in doc["nodes"]] == list(range(len(tree.nodes)))
        assert all("N" in n for n in doc["nodes"] if not n["terminal"])
