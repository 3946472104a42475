"""Command-line entry point.

    ringcav run <config.json | recipe:NAME> [--seed S] [--out DIR] [--n-traj N]
    ringcav recipes [--show NAME]
    ringcav validate <config.json | recipe:NAME>

Exit codes: 0 success, 2 configuration error, 3 physics-regime error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from typing import Optional, Sequence

from .config import ExperimentConfig, load_config
from .errors import ConfigError, NumericalError, RegimeError
from .recipes import get_recipe, list_recipes

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_NUMERICAL = 4


def resolve_config(source: str) -> ExperimentConfig:
    if source.startswith("recipe:"):
        try:
            return get_recipe(source[len("recipe:"):]).build()
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    return load_config(source)


def _check_models(cfg: ExperimentConfig):
    # parameter-regime checks live in the model constructors
    from .experiments import oscillator_params, ring_params

    if cfg.model.kind == "ring":
        ring_params(cfg)
    else:
        oscillator_params(cfg)


def cmd_run(args) -> int:
    from .experiments import run_experiment, write_result

    cfg = resolve_config(args.config).with_overrides(seed=args.seed, out=args.out, n_traj=args.n_traj)
    _check_models(cfg)
    t0 = time.perf_counter()
    res = run_experiment(cfg)
    files = write_result(cfg, res)
    print(f"{cfg.experiment}: wrote {len(files)} files to {cfg.outputs.directory} "
          f"in {time.perf_counter() - t0:.1f} s")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = resolve_config(args.config)
    _check_models(cfg)
    print(f"ok: {cfg.experiment}")
    return EXIT_OK


def cmd_recipes(args) -> int:
    if args.show:
        try:
            r = get_recipe(args.show)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        print(json.dumps(r.build().to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    for r in list_recipes():
        cfg = r.build()
        m = cfg.model.model_dump()
        params = ", ".join(f"{k}={v:g}" for k, v in m.items() if isinstance(v, float))
        print(f"{r.name:15s} {r.figure:10s} {cfg.experiment:20s} {r.runtime:>8s}  {params}")
        print(f"{'':15s} {r.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ringcav", description="Two-particle ring-cavity simulations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("config", help="JSON config path, or recipe:NAME")
    run.add_argument("--seed", type=int, help="override numerics.base_seed")
    run.add_argument("--out", help="override outputs.directory")
    run.add_argument("--n-traj", type=int, help="override numerics.n_traj")
    run.set_defaults(func=cmd_run)

    rec = sub.add_parser("recipes", help="list built-in recipes")
    rec.add_argument("--show", metavar="NAME", help="print the full config of one recipe")
    rec.set_defaults(func=cmd_recipes)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config", help="JSON config path, or recipe:NAME")
    val.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
