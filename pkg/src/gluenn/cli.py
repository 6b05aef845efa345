"""Command line entry point: ``gluenn <stage> --config PATH [--seed N] [--out DIR]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import OUTPUT_ROOT_ENV, ConfigError, resolve_config
from .report import MissingArtifact
from .training import TrainingDivergence

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

log = logging.getLogger("gluenn")

STAGES = {
    "oracle": "integrate the full equation and write oracle.csv",
    "train": "train the coefficient network (samples.csv, history.csv, checkpoint.json)",
    "match": "run the classical matching baseline (matching.json)",
    "report": "evaluate a checkpoint (evaluation.csv, summary.json)",
    "compare": "tabulate methods against the oracle (comparison.json)",
    "run": "all of the above in order",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gluenn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in STAGES.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="config file, or a bundled config name such as 'chemical'")
        p.add_argument("--seed", type=int, default=None, help="override training.seed")
        p.add_argument("--out", default=None, help=f"artifact directory (default: ${OUTPUT_ROOT_ENV} or ./runs, plus the experiment name)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _progress(step, bd):
    log.info("step %d  total %.6g  data %.3g  residual %.3g  patch %s", step, bd.total, bd.data, bd.residual, [f"{v:.3g}" for v in bd.patch])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("training.seed", "must be nonnegative")
            cfg = cfg.with_seed(args.seed)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = cfg.output_dir(args.out)

    try:
        if args.command == "oracle":
            print(pipeline.stage_oracle(cfg, out_dir))
        elif args.command == "train":
            pipeline.stage_train(cfg, out_dir, _progress)
        elif args.command == "match":
            print(pipeline.stage_match(cfg, out_dir).central)
        elif args.command == "report":
            print(pipeline.stage_report(cfg, out_dir)["methods"])
        elif args.command == "compare":
            print(pipeline.stage_compare(out_dir)["verdicts"])
        else:
            print(pipeline.run_experiment(cfg, out_dir, _progress)["methods"])
    except TrainingDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"artifacts in {Path(out_dir)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
