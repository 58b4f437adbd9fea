"""The experiment driver end to end: sweep, manifest, aggregate.

Same thing the `eszero-bench` CLI does; this runs a deliberately tiny
sweep so it finishes in about a minute. Rerunning with the same seed
reproduces the CSV byte for byte, and a finished sweep is skipped unless
forced, so interrupted sweeps resume where they stopped.
"""

import json
import sys
from pathlib import Path

from eszero.bench import (ExperimentConfig, aggregate, manifest_path, run,
                          write_aggregate)

out = Path("demo_metrics.csv")
config = ExperimentConfig(env="tsp", env_sizes={"n": 6}, es=(0, 1),
                          lrs=(1e-2, 3e-2), trials=2, epochs=10, batch_size=8,
                          hidden=8, population=8, episodes_per_eval=1,
                          master_seed=5, out=str(out))

path = run(config)
lines = path.read_text().splitlines()
print(f"wrote {path} ({len(lines) - 1} rows)")
print("  " + lines[0])
for line in lines[1:4]:
    print("  " + line)

manifest = json.loads(manifest_path(out).read_text())
print(f"\nmanifest: status {manifest['status']}, "
      f"{len(manifest['run_seeds'])} runs, {manifest['total_wall_ms']} ms total")

run(config)  # already completed: returns immediately, no rewrite

print("\nper-epoch mean and standard error over trials:")
rows = aggregate([path])
write_aggregate([r for r in rows if r["epoch"] in (0, 9)], sys.stdout)

print("\nplots: feed this CSV to the frontend package,")
print(f"  cd frontend && npm run plot -- --input ../{out} --out-dir ../plots")
path.unlink()
manifest_path(out).unlink()
