"""Command-line entry point.

Exit codes: 0 on success, 1 for configuration errors, 2 for runtime errors.
``SWARM_PERCEPTION_SEED`` overrides the base seed of any loaded config.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import seeding
from .recordio import RecordError
from .runner import ConfigError, analyze, load_config, run_sweep, with_overrides
from .topology import KINDS, build_topology

SEED_ENV = "SWARM_PERCEPTION_SEED"


def _load(path, mode=None, out=None):
    spec = load_config(path)
    env_seed = os.environ.get(SEED_ENV)
    seed = None
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}: not an integer: {env_seed!r}") from None
    return with_overrides(spec, mode=mode, output_dir=out, base_seed=seed)


def cmd_run(args):
    spec = _load(args.config, args.mode, args.out)
    manifest = run_sweep(spec, args.parallelism)
    print(f"{len(manifest['records'])}/{manifest['runs']} trials written to {spec.output_dir}"
          f" ({len(manifest['errors'])} failed)")
    return 0 if not manifest["errors"] else 2


def cmd_analyze(args):
    for path in analyze(args.inp, args.out):
        print(path)
    return 0


def cmd_validate(args):
    spec = _load(args.config)
    print(f"ok: {spec.mode} sweep, {len(spec.cells())} cells x {spec.trials} trials = {spec.n_runs} runs")
    return 0


def cmd_graph(args):
    rng = seeding.stream(args.seed, seeding.TOPOLOGY)
    try:
        g = build_topology(args.topology, args.n, args.m, rng)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    text = g.to_edge_list()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarm-perception",
                                description="Collective perception with imperfect binary sensors.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--parallelism", type=int, default=1)
    r.add_argument("--mode", choices=("static", "dynamic"))
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="aggregate a finished sweep")
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("graph", help="print a topology as an edge list")
    g.add_argument("--topology", choices=KINDS, default="scale_free")
    g.add_argument("-n", "--n", type=int, default=100)
    g.add_argument("-m", "--m", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_graph)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (RecordError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
