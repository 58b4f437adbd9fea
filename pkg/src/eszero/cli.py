"""Command line entry points: run sweeps, aggregate metrics, serve as a worker.

Every run flag has a mirror key in an optional JSON config file
(--config); explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .bench import (DEFAULT_LR_GRID, ExperimentConfig, aggregate, config_from_dict,
                    config_to_dict, run, run_seed_for, write_aggregate)
from .deepsets import save_params, unflatten
from .envs import ENV_NAMES, make_env
from .es import TcpPool, es_train
from .mcts import SearchConfig
from .optim import KINDS, Optimizer


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with the same keys as the flags below")
    p.add_argument("--env", choices=ENV_NAMES)
    p.add_argument("--size", action="append", metavar="KEY=N",
                   help="environment size override, repeatable (e.g. --size n=8)")
    p.add_argument("--es", action="append", type=int, choices=(0, 1),
                   help="trainer flag, repeatable: 0 = planning loss, 1 = ES")
    p.add_argument("--lr", action="append", type=float,
                   help=f"learning rate, repeatable; default grid {list(DEFAULT_LR_GRID)}")
    p.add_argument("--trials", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--optimizer", choices=KINDS)
    p.add_argument("--budget", type=int, help="MCTS simulation budget")
    p.add_argument("--sigma", type=float, help="ES perturbation scale")
    p.add_argument("--workers", type=int, help="ES population (antithetic pairs)")
    p.add_argument("--episodes-per-eval", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="metrics CSV path")
    p.add_argument("--pool", choices=("inproc", "tcp"))


def _parse_sizes(items) -> dict:
    sizes = {}
    for item in items or ():
        key, _, value = item.partition("=")
        if not value:
            raise SystemExit(f"--size expects KEY=N, got {item!r}")
        sizes[key] = int(value)
    return sizes


_FLAG_TO_FIELD = {
    "env": "env", "es": "es", "lr": "lrs", "trials": "trials", "epochs": "epochs",
    "batch_size": "batch_size", "hidden": "hidden", "optimizer": "optimizer",
    "sigma": "sigma", "workers": "population", "episodes_per_eval": "episodes_per_eval",
    "seed": "master_seed", "out": "out", "pool": "pool",
}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    overrides: dict = {}
    for flag, fld in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[fld] = tuple(value) if isinstance(value, list) else value
    sizes = _parse_sizes(getattr(args, "size", None))
    if sizes:
        overrides["env_sizes"] = sizes
    if getattr(args, "budget", None) is not None:
        overrides["search"] = {"budget": args.budget}
    merged = dict(base)
    for key, value in overrides.items():
        if key == "search" and isinstance(merged.get("search"), dict):
            merged["search"] = {**merged["search"], **value}
        else:
            merged[key] = value
    return config_from_dict(merged)


def _cmd_run(args) -> int:
    config = config_from_args(args)
    out = run(config, force=args.force)
    print(f"metrics: {out}")
    print(f"manifest: {out}.manifest.json")
    return 0


def _cmd_aggregate(args) -> int:
    rows = aggregate(args.metrics)
    if args.out and args.out != "-":
        with open(args.out, "w", newline="") as fh:
            write_aggregate(rows, fh)
        print(f"aggregate: {args.out}")
    else:
        write_aggregate(rows, sys.stdout)
    return 0


def _cmd_worker(args) -> int:
    config = config_from_args(args)
    if len(config.es) != 1 or config.es[0] != 1 or len(config.lrs) != 1:
        raise SystemExit("worker mode trains one ES configuration: pass --es 1 and one --lr")
    peers = args.peers.split(",")
    if config.population != len(peers):
        raise SystemExit(f"--workers {config.population} does not match "
                         f"{len(peers)} peer addresses")
    env = make_env(config.env, **config.env_sizes)
    lr = config.lrs[0]
    run_seed = run_seed_for(config, 1, lr, args.trial)
    from .bench import _probe_net
    x0, layout = _probe_net(config, env, run_seed)
    pool = TcpPool(args.rank, peers, timeout=args.timeout)
    try:
        x, rows = es_train(env, layout, Optimizer(kind=config.optimizer), x0,
                           config.epochs, config.es_config(lr), config.search,
                           run_seed, pool)
    finally:
        pool.close()
    if args.params_out:
        save_params(args.params_out, unflatten(x, layout))
        print(f"rank {args.rank}: params -> {args.params_out}")
    if rows:
        print(f"rank {args.rank}: final mean score {rows[-1].mean_score:.6f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="eszero-bench",
        description="Train search agents by planning-loss gradients or by "
                    "direct score maximization with evolution strategies.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a trainer/lr/trial sweep")
    _add_run_flags(p_run)
    p_run.add_argument("--force", action="store_true", help="redo completed runs")
    p_run.set_defaults(fn=_cmd_run)

    p_agg = sub.add_parser("aggregate", help="mean and SEM across trials")
    p_agg.add_argument("metrics", nargs="+", help="metrics CSV files")
    p_agg.add_argument("--out", help="output CSV path ('-' for stdout)")
    p_agg.set_defaults(fn=_cmd_aggregate)

    p_w = sub.add_parser("worker", help="join a TCP worker pool for one ES run")
    _add_run_flags(p_w)
    p_w.add_argument("--rank", type=int, required=True)
    p_w.add_argument("--peers", required=True,
                     help="comma-separated host:port list indexed by rank")
    p_w.add_argument("--trial", type=int, default=0)
    p_w.add_argument("--timeout", type=float, default=60.0)
    p_w.add_argument("--params-out", help="write final parameters to this file")
    p_w.set_defaults(fn=_cmd_worker)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
