"""Tour of the five benchmark environments.

Every environment is a frozen config object with pure reset/step/observe
methods; an episode ends when a step reports discount 0 and the episode
score is the discounted return from the first step.
"""

import numpy as np

from eszero.envs import Sokoban, bundled_levels, make_env
from eszero.episode import rollout
from eszero.rng import make_rng


def random_agent(env):
    # uniform over legal actions; weights are what a search would report
    def agent(state, rng):
        mask = env.observe(state).legal_mask
        legal = np.flatnonzero(mask)
        w = np.zeros(mask.size)
        w[legal] = 1.0 / legal.size
        return int(rng.choice(legal)), w
    return agent


def show(state):
    tiles = np.full(state.walls.shape, ".")
    tiles[state.walls] = "#"
    tiles[state.goals] = "O"
    tiles[state.boxes & state.goals] = "*"
    tiles[state.boxes & ~state.goals] = "$"
    tiles[state.agent] = "@"
    print("\n".join("".join(row) for row in tiles))


print("=== navigation: collect targets on a grid before time runs out ===")
env = make_env("navigation")
obs = env.observe(env.reset(0))
print(f"observation: {obs.features.shape[0]} items x {obs.features.shape[1]} features, "
      f"{obs.n_actions} move actions")
for seed in range(3):
    ep = rollout(env, random_agent(env), seed)
    print(f"  seed {seed}: {len(ep.steps)} steps, score {ep.score:.0f} targets")

print("\n=== sokoban: push every box onto a goal ===")
env = Sokoban(levels=bundled_levels(), horizon=30)
state = env.reset(4)
show(state)
ep = rollout(env, random_agent(env), 4)
print(f"random play covers {ep.score:.0f} goals in {len(ep.steps)} steps")

print("\n=== tsp: build a closed tour city by city ===")
env = make_env("tsp", n=8)
ep = rollout(env, random_agent(env), 1)
print(f"random tour length {-ep.score:.3f} (score {ep.score:.3f})")

print("\n=== vertex k-center: pick k points covering everything ===")
env = make_env("vkcp", n=10, k=3)
ep = rollout(env, random_agent(env), 1)
print(f"selected {[s.action for s in ep.steps]}, worst cover distance {-ep.score:.3f}")

print("\n=== max diversity: pick k points far from each other ===")
env = make_env("mdp", n=10, k=3)
ep = rollout(env, random_agent(env), 2)
print(f"selected {[s.action for s in ep.steps]}, min pairwise distance {ep.score:.3f}")

print("\nevery rollout is a pure function of (env, agent, seed):")
a = rollout(env, random_agent(env), 7).score
b = rollout(env, random_agent(env), 7).score
print(f"  rollout(seed=7) twice -> {a:.6f}, {b:.6f}")
