"""Command-line driver.

Exit codes: 0 on success, 1 for configuration errors, 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .bbo_engine import selection_to_hex, transform_loss
from .experiment import (
    ConfigError,
    ExperimentConfig,
    analyze_directory,
    oracle_losses,
    oracle_table,
    run_experiment,
)
from .task_data import dataset_to_csv, theoretical_solution

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _load(args) -> ExperimentConfig:
    return ExperimentConfig.from_file(args.config, args.set or ())


def cmd_gen(args) -> int:
    config = _load(args)
    text = dataset_to_csv(config.dataset())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load(args)
    summary = run_experiment(config, args.out)
    out = args.out or config.output_dir
    print(f"{len(summary.seeds)} runs written to {out}")
    print(f"mean best validation loss: {summary.best_raw_loss.mean():.6f}")
    print(f"mean Hamming distance to the clean selection: {summary.hamming.mean():.2f}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    summary = analyze_directory(args.input)
    print(f"re-analyzed {len(summary.seeds)} runs in {args.input}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    config = _load(args)
    dataset = config.dataset()
    losses = oracle_losses(dataset, config.train_settings())
    n = dataset.n
    if args.out:
        Path(args.out).write_text(oracle_table(losses, n, config.transform, config.loss_floor), encoding="utf-8")
    best = int(np.argmin(losses))
    theo = theoretical_solution(dataset)
    theo_index = int(sum(int(b) << i for i, b in enumerate(theo)))
    rank = int(np.sum(losses < losses[theo_index]))
    bits = ((best >> np.arange(n)) & 1).astype(np.uint8)
    print(f"selections: {losses.size}")
    print(f"best: {selection_to_hex(bits)} raw={losses[best]!r} "
          f"transformed={transform_loss(losses[best], config.transform, config.loss_floor)!r}")
    print(f"clean selection: {selection_to_hex(theo)} raw={losses[theo_index]!r} rank={rank}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qubo-cleanse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="key=value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        return p

    p = with_config(sub.add_parser("gen", help="write the dataset CSV"))
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = with_config(sub.add_parser("run", help="run all seeds and write traces and tables"))
    p.add_argument("--out", help="output directory (default: output_dir from the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="recompute aggregate tables from stored traces")
    p.add_argument("--in", dest="input", required=True, help="experiment directory")
    p.set_defaults(func=cmd_analyze)

    p = with_config(sub.add_parser("oracle", help="enumerate every selection (n <= 16)"))
    p.add_argument("--out", help="write the full loss table as CSV")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status 2
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
