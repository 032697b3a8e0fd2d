"""``decswitch`` command line.

Exit status: 0 on success, 2 for a configuration error, 3 when the run fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config, parse_value
from .experiments import RUNNERS, sample_trajectories

log = logging.getLogger("decswitch")

#: Subcommand -> experiment kinds it may run.
COMMANDS = {
    "memory": ("memory", "threshold-curve"),
    "gaps": ("gap-histogram",),
    "spectrum": ("spectrum",),
    "tradeoff": ("tradeoff",),
    "backlog": ("backlog",),
    "bounds": ("bounds",),
}

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decswitch", description="Decoder-switching experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--seed", help="64-bit seed")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        p.add_argument("--shots", help="shots per grid point (ensemble size for backlog)")
        p.add_argument("--d", help="code distance(s), comma separated")
        p.add_argument("--p", help="physical error rate(s), comma separated")
        p.add_argument("--gth-db", help="switching threshold(s) in dB, comma separated")
        p.add_argument("--scheme", help="backlog scheme(s), comma separated")
        p.add_argument("--gamma", help="switching rate(s) per d rounds, comma separated")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    allowed = COMMANDS[args.command]
    config = load_config(args.config) if args.config else ExperimentConfig(experiment=allowed[0])
    if args.config and config.experiment not in allowed:
        if config.experiment != ExperimentConfig().experiment:
            raise ConfigError(f"config experiment {config.experiment!r} does not match command {args.command!r}")
        config = config.replace(experiment=allowed[0])
    overrides = {}
    for flag, key in (("seed", "seed"), ("d", "distances"), ("p", "p"), ("gth_db", "g_th_db"),
                      ("scheme", "schemes"), ("gamma", "gammas")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = parse_value(key, value)
    if args.shots is not None:
        key = "ensemble" if args.command == "backlog" else "shots"
        overrides[key] = parse_value(key, args.shots)
    if args.gamma is not None:
        overrides["gamma_factors"] = ()
    return config.replace(**overrides).validate()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        start = time.perf_counter()
        table = RUNNERS[config.experiment](config)
        csv_path, json_path = table.write(args.out, time.perf_counter() - start)
        log.info("wrote %s and %s", csv_path, json_path)
        if config.experiment == "backlog" and config.trajectory_samples > 0:
            sample_trajectories(config).write(args.out)
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(csv_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
