"""The prediction network: a DeepSets model over item sets.

One net architecture serves every environment: the value head is
permutation-invariant, and in set-indexed mode the per-item logits are
permutation-equivariant, so the same weights score a city set no matter
how the cities are listed.
"""

import tempfile

import numpy as np

from eszero.deepsets import (flatten, forward, init, load_params, save_params,
                             unflatten)
from eszero.envs import make_env
from eszero.rng import make_rng

env = make_env("tsp", n=6)
obs = env.observe(env.reset(0))
params = init(seed=0, d_in=obs.features.shape[1], mode=obs.action_mode, hidden=16)

value, logits, _ = forward(params, obs)
print(f"value {value:+.4f}, one logit per city: {np.round(logits, 3)}")

perm = make_rng(0, "demo-perm").permutation(6)
shuffled = env.observe(env.reset(0))
shuffled = type(obs)(obs.features[perm], obs.action_mode, obs.n_actions,
                     obs.legal_mask[perm])
pvalue, plogits, _ = forward(params, shuffled)
print(f"after shuffling the cities with {perm}:")
print(f"  value {pvalue:+.4f} (unchanged), logits follow the items: "
      f"{np.allclose(logits[perm], plogits)}")

# the whole net round-trips through one flat vector, which is what the
# evolution-strategies trainer perturbs
flat = flatten(params)
print(f"\n{flat.values.size} parameters in blocks:")
for name, shape, offset in flat.layout:
    print(f"  {name:18s} {str(shape):10s} at {offset}")
same = unflatten(flat.values, flat.layout)
print("flatten -> unflatten is exact:",
      np.array_equal(flatten(same).values, flat.values))

with tempfile.NamedTemporaryFile(suffix=".bin") as fh:
    save_params(fh.name, params)
    reloaded = load_params(fh.name)
    print("checkpoint round trip is bitwise:",
          np.array_equal(flatten(reloaded).values, flat.values))
