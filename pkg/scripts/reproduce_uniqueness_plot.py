"""Monte Carlo sweep of unique-mean proportions under the l-infinity norm.

Writes a CSV of dimension histograms and an SVG plot, one series per k.

    python3 scripts/reproduce_uniqueness_plot.py --out results/ --trials 100
"""

import argparse
import logging
from pathlib import Path

from polymean.experiments import ExperimentConfig, ExperimentResult, emit_csv, emit_plot, run_uniqueness_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--norm", default="linf")
    ap.add_argument("--k", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--n-max", type=int, default=10)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)

    result = ExperimentResult()
    for k in args.k:
        cfg = ExperimentConfig(args.norm, k, (2, args.n_max), args.trials, args.seed)
        part = run_uniqueness_experiment(cfg, workers=args.workers)
        for c in part.cells:
            print(f"{c.norm} k={c.k} n={c.n:2d}  unique {c.unique_count:3d}/{c.trials}")
        result = result.merge(part)

    args.out.mkdir(parents=True, exist_ok=True)
    emit_csv(result, args.out / "uniqueness.csv")
    emit_plot(result, args.out / "uniqueness.svg")
    print(f"wrote {args.out / 'uniqueness.csv'} and {args.out / 'uniqueness.svg'}")


if __name__ == "__main__":
    main()
