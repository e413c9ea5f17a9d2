#!/usr/bin/env python3
"""Reproduce the coin-bending prior experiment: ten chain realizations at each
of 100/1000/10000 retained samples, plus the exact reference curve.

Writes one artifact directory per sample size; plot any samples_XX.csv as a
50-bin histogram against reference.csv to get the figure-style panels.
"""

import argparse
from pathlib import Path

from jeffreys_mala.experiments import DEFAULT_SEED, ExperimentConfig, run_coin


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-o", "--output", default="results/coin")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    parser.add_argument("--realizations", type=int, default=10)
    args = parser.parse_args()

    for n in args.sizes:
        meta = run_coin(ExperimentConfig(
            experiment="coin", iterations=n, realizations=args.realizations,
            output_dir=str(Path(args.output) / f"n{n}"), seed=args.seed,
        ))
        tvs = [r["tv_distance"] for r in meta["realizations"]]
        accs = [r["acceptance_rate"] for r in meta["realizations"]]
        print(f"N={n}: TV to reference min/median/max = "
              f"{min(tvs):.3f}/{sorted(tvs)[len(tvs) // 2]:.3f}/{max(tvs):.3f}, "
              f"mean acceptance {sum(accs) / len(accs):.2f}")


if __name__ == "__main__":
    main()
