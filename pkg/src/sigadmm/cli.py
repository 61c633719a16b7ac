"""Command-line entry point for running experiment sweeps."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from .bench import TARGETS
from .experiment import OPTIMIZERS, emit_outputs, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sigadmm", description="Run a grid x trials training sweep.")
    p.add_argument("--config", help="key = value config file; flags below override it")
    p.add_argument("--task", choices=TARGETS)
    p.add_argument("--optimizer", choices=OPTIMIZERS)
    p.add_argument("--out", default="results", help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--trials", type=int)
    p.add_argument("--mode", choices=("practical", "theory"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, task=args.task, optimizer=args.optimizer, seed=args.seed,
                          trials=args.trials, mode=args.mode, epochs=args.epochs, workers=args.workers)
    except (OSError, ValueError, TypeError) as exc:
        print(f"sigadmm: bad configuration: {exc}", file=sys.stderr)
        return 2
    try:
        table = run_experiment(cfg)
        paths = emit_outputs(table, args.out)
    except Exception as exc:
        print(f"sigadmm: {exc}", file=sys.stderr)
        return 1
    best = table.best
    failed = sum(not r.ok for r in table.trials)
    print(f"{len(table.rows)} grid points x {cfg.trials} trials, {failed} failed; results in {paths['results']}")
    if best is not None:
        print(f"best: depth={best.depth} width={best.width} init={best.init} mean={best.mean:.3e} "
              f"median={best.median:.3e} std={best.std:.3e}")
        return 0
    print("sigadmm: every trial failed", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
