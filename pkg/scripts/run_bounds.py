"""Compare sampler telemetry with the theoretical bounds for every built-in density.

Usage: python3 scripts/run_bounds.py [--n 20000] [--jobs 4] [--out bounds.csv]
"""

import argparse
import csv
import sys

from bitsampler.analysis import ExperimentConfig, run_experiment
from bitsampler.oracle import DENSITY_REGISTRY


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20_000)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out")
    args = parser.parse_args()

    epsilons = [2.0**-6, 2.0**-10, 2.0**-14]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["density", "bound_name", "theoretical", "empirical_mean", "stderr", "satisfied"])
    for name in sorted(DENSITY_REGISTRY):
        config = ExperimentConfig(name, epsilons, args.n, seed=args.seed, jobs=args.jobs)
        for r in run_experiment(config):
            writer.writerow([name, r.bound_name, r.theoretical, r.empirical_mean, r.empirical_stderr, r.satisfied])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
