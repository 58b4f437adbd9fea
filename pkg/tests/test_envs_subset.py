import math
from itertools import combinations

import numpy as np
import pytest

from conftest import euclid, random_weight_agent
from eszero.envs import MaxDiversity, VertexKCenter
from eszero.episode import ConfigurationError, IllegalActionError, rollout
from eszero.rng import make_rng


def brute_force_vkcp(points, chosen) -> float:
    """-max over points of distance to nearest chosen; plain loops."""
    worst = 0.0
    for p in points:
        nearest = min(euclid(p, points[j]) for j in chosen)
        worst = max(worst, nearest)
    return -worst


def brute_force_mdp(points, chosen) -> float:
    return min(euclid(points[i], points[j]) for i, j in combinations(chosen, 2))


class TestConfig:
    def test_k_must_fit(self):
        with pytest.raises(ConfigurationError):
            VertexKCenter(n=5, k=6)
        with pytest.raises(ConfigurationError):
            MaxDiversity(n=5, k=1)  # diversity needs at least a pair

    def test_reselect_rejected(self):
        env = VertexKCenter(n=4, k=3)
        s = env.step(env.reset(0), 1).next_state
        with pytest.raises(IllegalActionError):
            env.step(s, 1)


class TestScores:
    def test_cover_with_every_point_is_perfect(self):
        env = VertexKCenter(n=5, k=5)
        ep = rollout(env, random_weight_agent(env, 1), seed=3)
        assert ep.score == 0.0

    def test_collinear_diversity_best_is_endpoints(self):
        env = MaxDiversity(n=3, k=2)
        pts = np.array([[0.0, 0.5], [0.5, 0.5], [1.0, 0.5]])
        scores = {}
        for pair in combinations(range(3), 2):
            s = env.from_points(pts)
            s = env.step(s, pair[0]).next_state
            scores[pair] = env.step(s, pair[1]).reward
        assert max(scores.values()) == scores[(0, 2)] == 1.0

    def test_intermediate_steps_pay_zero(self):
        env = MaxDiversity(n=5, k=3)
        s = env.reset(2)
        out = env.step(s, 0)
        assert out.reward == 0.0 and out.discount == 1.0

    def test_terminal_scores_match_brute_force(self):
        # the n <= 8 exhaustive oracle, on randomly played episodes
        for case in range(60):
            rng = make_rng(1234, "subset-oracle", case)
            n = int(rng.integers(3, 9))
            k = int(rng.integers(2, n + 1))
            for env_cls, oracle in ((VertexKCenter, brute_force_vkcp),
                                    (MaxDiversity, brute_force_mdp)):
                env = env_cls(n=n, k=k)
                ep = rollout(env, random_weight_agent(env, case), seed=case)
                chosen = [s.action for s in ep.steps]
                assert ep.score == oracle(env.reset(case).points, chosen)

    def test_score_bounds(self):
        for seed in range(5):
            vk = VertexKCenter(n=8, k=3)
            ep = rollout(vk, random_weight_agent(vk, seed), seed=seed)
            assert -math.sqrt(2.0) <= ep.score <= 0.0
            md = MaxDiversity(n=8, k=3)
            ep = rollout(md, random_weight_agent(md, seed), seed=seed)
            assert 0.0 <= ep.score <= math.sqrt(2.0)


class TestObserve:
    def test_selected_flag_tracks_choices(self):
        env = VertexKCenter(n=4, k=2)
        s = env.step(env.reset(0), 2).next_state
        obs = env.observe(s)
        assert obs.features.shape == (4, 3)
        assert obs.features[:, 2].tolist() == [0, 0, 1, 0]
        assert obs.legal_mask.tolist() == [True, True, False, True]
