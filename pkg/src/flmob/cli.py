"""Command line entry point: ``flmob simulate | sweep | oracle``.

Exit codes: 0 success, 2 configuration error, 3 I/O error. Any config key
can also be set through an ``FLMOB_<KEY>`` environment variable; ``--set``
overrides win over both the environment and the config file.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .core import ConfigError, load_config
from .scheduler import POLICIES, get_policy
from .sim import ExperimentSpec, oracle_solve, random_instance, run_experiment

EXIT_CONFIG = 2
EXIT_IO = 3


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def _overrides(pairs) -> dict[str, str]:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flmob", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat 'key = value' config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    s = sub.add_parser("simulate", help="run policies over seeds and write per-round CSV")
    common(s)
    s.add_argument("--policy", required=True, help=f"comma-separated, from {sorted(POLICIES)}")
    s.add_argument("--rounds", type=int)
    s.add_argument("--time-budget", type=float)
    s.add_argument("--seed", type=_seeds, default=[0])
    s.add_argument("--out", required=True)

    w = sub.add_parser("sweep", help="run one experiment family")
    common(w)
    w.add_argument("--experiment", required=True, choices=experiments.EXPERIMENTS)
    w.add_argument("--out", required=True, help="output directory")
    w.add_argument("--seeds", type=_seeds, default=list(experiments.DEFAULT_SEEDS))
    w.add_argument("--rounds", type=int, default=experiments.REFERENCE_ROUNDS)
    w.add_argument("--time-budget", type=float)

    o = sub.add_parser("oracle", help="exhaustive optimum vs. the policies on a small instance")
    common(o)
    o.add_argument("--users", type=int, required=True)
    o.add_argument("--bs", type=int, required=True)
    o.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, _overrides(args.set))
        if args.command == "simulate":
            policies = [x.strip() for x in args.policy.split(",")]
            for name in policies:
                get_policy(name)
            spec = ExperimentSpec(config=config, policies=policies, seeds=args.seed, num_rounds=args.rounds,
                                  time_budget_s=args.time_budget, output_path=args.out)
            run_experiment(spec)
        elif args.command == "sweep":
            experiments.sweep(args.experiment, config, args.out, args.seeds, args.rounds, args.time_budget)
        else:
            cfg = config.replace(num_users=args.users, num_bs=args.bs, bs_bandwidth_mhz=None)
            inp = random_instance(cfg, args.seed)
            best, sched = oracle_solve(inp)
            report = {"oracle_latency_s": best,
                      "oracle_assignments": {str(k): list(v) for k, v in sched.assignments.items()}}
            for name, policy in POLICIES.items():
                inp = random_instance(cfg, args.seed)
                report[f"{name}_latency_s"] = policy(inp).round_latency
            print(json.dumps(report, indent=2))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
