"""Experiment driver: lr sweeps x trainers x trials, with reproducible output.

Metrics go to a CSV whose bytes are a pure function of the config and
master seed; anything nondeterministic (wall time, timestamps, host info)
lives in a JSON manifest next to it.  The manifest also records a config
hash and a status field so finished runs are skipped on rerun and
interrupted ones are detected and redone.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .az import az_epoch
from .deepsets import flatten, init
from .envs import ENV_NAMES, make_env
from .episode import ActionMode
from .es import EsConfig, InProcessPool, es_iteration
from .mcts import SearchConfig
from .optim import KINDS, Optimizer
from .rng import derive_seed

log = logging.getLogger(__name__)

CSV_COLUMNS = ("env", "es", "lr", "trial", "epoch", "mean_score", "value_loss", "policy_loss")
DEFAULT_LR_GRID = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1)


def fmt(x: float) -> str:
    """17 significant digits: enough for bit-exact float64 round trips."""
    return f"{x:.17g}"


@dataclass(frozen=True)
class ExperimentConfig:
    env: str = "tsp"
    env_sizes: dict = field(default_factory=dict)
    es: tuple[int, ...] = (0, 1)
    lrs: tuple[float, ...] = DEFAULT_LR_GRID
    trials: int = 3
    epochs: int = 100
    batch_size: int = 32
    hidden: int = 16
    optimizer: str = "adabelief"
    search: SearchConfig = SearchConfig()
    sigma: float = 0.1
    population: int = 8
    episodes_per_eval: int = 2
    rank_shaping: bool = False
    master_seed: int = 0
    out: str = "metrics.csv"
    pool: str = "inproc"

    def __post_init__(self):
        if self.env not in ENV_NAMES:
            raise ValueError(f"unknown environment {self.env!r}; pick one of {ENV_NAMES}")
        if not set(self.es) <= {0, 1}:
            raise ValueError("es flags must be 0 or 1")
        if not self.es or not self.lrs:
            raise ValueError("need at least one trainer flag and one lr")
        if self.trials < 1 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("trials must be >= 1, epochs >= 0, batch_size >= 1")
        if self.optimizer not in KINDS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.pool not in ("inproc", "tcp"):
            raise ValueError(f"unknown pool {self.pool!r}")
        EsConfig(sigma=self.sigma, population=self.population,
                 episodes_per_eval=self.episodes_per_eval)

    def es_config(self, lr: float) -> EsConfig:
        return EsConfig(lr=lr, sigma=self.sigma, population=self.population,
                        episodes_per_eval=self.episodes_per_eval,
                        rank_shaping=self.rank_shaping)


def config_to_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["es"] = list(config.es)
    d["lrs"] = [fmt(lr) for lr in config.lrs]
    d["search"] = asdict(config.search)
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    if "search" in d:
        d["search"] = SearchConfig(**d["search"])
    if "lrs" in d:
        d["lrs"] = tuple(float(lr) for lr in d["lrs"])
    if "es" in d:
        d["es"] = tuple(int(e) for e in d["es"])
    return ExperimentConfig(**d)


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def manifest_path(out) -> Path:
    return Path(str(out) + ".manifest.json")


def run_seed_for(config: ExperimentConfig, es_flag: int, lr: float, trial: int) -> int:
    return derive_seed(config.master_seed, "run", config.env, es_flag, fmt(lr), trial)


def _probe_net(config: ExperimentConfig, env, seed: int):
    """Size the network from one observation; returns (x0, layout)."""
    obs = env.observe(env.reset(derive_seed(seed, "probe")))
    mode = obs.action_mode
    params = init(derive_seed(seed, "init"), d_in=obs.features.shape[1], mode=mode,
                  n_actions=obs.n_actions if mode is ActionMode.FIXED else None,
                  hidden=config.hidden)
    flat = flatten(params)
    return flat.values, flat.layout


def _write_manifest(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run(config: ExperimentConfig, force: bool = False) -> Path:
    """Execute the sweep; returns the metrics CSV path."""
    if config.pool != "inproc":
        raise ValueError("run drives the in-process pool; start TCP workers "
                         "with the 'worker' subcommand instead")
    env = make_env(config.env, **config.env_sizes)
    out = Path(config.out)
    mpath = manifest_path(out)
    digest = config_hash(config)
    if mpath.exists() and not force:
        try:
            old = json.loads(mpath.read_text())
        except json.JSONDecodeError:
            old = {}
        if old.get("config_hash") == digest and old.get("status") == "completed" \
                and out.exists():
            log.info("config already completed at %s; skipping (use force to redo)", out)
            return out
        if old.get("config_hash") == digest:
            log.info("found partial run at %s; redoing from scratch", out)
    out.parent.mkdir(parents=True, exist_ok=True)

    opt = Optimizer(kind=config.optimizer)
    seeds: dict[str, int] = {}
    manifest = {
        "config": config_to_dict(config),
        "config_hash": digest,
        "version": __version__,
        "status": "running",
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "run_seeds": seeds,
        "wall_ms": {},
    }
    _write_manifest(mpath, manifest)

    t_start = time.monotonic()
    try:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            fh.flush()
            for es_flag in config.es:
                for lr in config.lrs:
                    for trial in range(config.trials):
                        key = f"env={config.env},es={es_flag},lr={fmt(lr)},trial={trial}"
                        seeds[key] = run_seed_for(config, es_flag, lr, trial)
                        t0 = time.monotonic()
                        _run_one(config, env, opt, es_flag, lr, trial, seeds[key],
                                 writer, fh)
                        manifest["wall_ms"][key] = int((time.monotonic() - t0) * 1000)
                        log.info("finished %s in %d ms", key, manifest["wall_ms"][key])
    except BaseException:
        manifest["status"] = "failed"
        _write_manifest(mpath, manifest)
        raise
    manifest["status"] = "completed"
    manifest["finished_at"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    manifest["total_wall_ms"] = int((time.monotonic() - t_start) * 1000)
    _write_manifest(mpath, manifest)
    return out


def _run_one(config, env, opt, es_flag: int, lr: float, trial: int, run_seed: int,
             writer, fh) -> None:
    x, layout = _probe_net(config, env, run_seed)
    state = opt.init(x)
    pool = InProcessPool(config.population) if es_flag else None
    es_cfg = config.es_config(lr) if es_flag else None
    for epoch in range(config.epochs):
        if es_flag:
            state, m = es_iteration(env, layout, opt, state, es_cfg, config.search,
                                    pool, run_seed, epoch)
        else:
            state, m = az_epoch(env, layout, opt, state, config.batch_size,
                                config.search, lr, derive_seed(run_seed, "epoch", epoch))
        writer.writerow([config.env, es_flag, fmt(lr), trial, epoch,
                         fmt(m.mean_score), fmt(m.value_loss), fmt(m.policy_loss)])
        fh.flush()


# --- aggregation ----------------------------------------------------------


def _mean_sem(values: list[float]) -> tuple[float, float]:
    arr = np.array(values)
    if len(arr) == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(len(arr)))


AGGREGATE_COLUMNS = ("env", "es", "lr", "epoch", "trials",
                     "mean_score_mean", "mean_score_sem",
                     "value_loss_mean", "value_loss_sem",
                     "policy_loss_mean", "policy_loss_sem")


def aggregate(paths) -> list[dict]:
    """Mean and SEM across trials per (env, es, lr, epoch), sorted."""
    groups: dict[tuple, dict[str, list[float]]] = {}
    seen_keys: set[tuple] = set()
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != list(CSV_COLUMNS):
                raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
            for row in reader:
                row_key = (row["env"], row["es"], row["lr"], row["trial"], row["epoch"])
                if row_key in seen_keys:
                    raise ValueError(f"{path}: duplicate row for {row_key}")
                seen_keys.add(row_key)
                group = groups.setdefault(
                    (row["env"], int(row["es"]), row["lr"], int(row["epoch"])),
                    {"mean_score": [], "value_loss": [], "policy_loss": []})
                for col in ("mean_score", "value_loss", "policy_loss"):
                    group[col].append(float(row[col]))
    out = []
    for (env, es_flag, lr, epoch) in sorted(groups, key=lambda k: (k[0], k[1], float(k[2]), k[3])):
        g = groups[(env, es_flag, lr, epoch)]
        row = {"env": env, "es": es_flag, "lr": lr, "epoch": epoch,
               "trials": len(g["mean_score"])}
        for col in ("mean_score", "value_loss", "policy_loss"):
            mean, sem = _mean_sem(g[col])
            row[f"{col}_mean"] = mean
            row[f"{col}_sem"] = sem
        out.append(row)
    return out


def write_aggregate(rows: list[dict], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(AGGREGATE_COLUMNS)
    for row in rows:
        writer.writerow([row["env"], row["es"], row["lr"], row["epoch"], row["trials"]]
                        + [fmt(row[f"{c}_{s}"])
                           for c in ("mean_score", "value_loss", "policy_loss")
                           for s in ("mean", "sem")])
