"""Mean total bits against log2(1/eps), with the universal lower bound alongside.

Usage: python3 scripts/bits_vs_epsilon.py --density linear [--n 5000]
"""

import argparse
import math

from bitsampler.analysis import bits_slope, collect_telemetry, differential_entropy, ky_lower_bound
from bitsampler.oracle import get_density


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--density", default="linear")
    parser.add_argument("--n", type=int, default=5_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    target = get_density(args.density)
    h = differential_entropy(target)
    epsilons = [2.0**-k for k in range(4, 15)]
    means = []
    print("log2(1/eps),mean_total_bits,lower_bound")
    for eps in epsilons:
        data = collect_telemetry(args.density, eps, args.n, args.seed)
        mean = float((data["decision_bits"] + data["bisection_bits"]).mean())
        means.append(mean)
        print(f"{-math.log2(eps):g},{mean!r},{ky_lower_bound(h, target.dimension, eps)!r}")
    print(f"# slope {bits_slope(epsilons, means):.4f} (dimension {target.dimension})")


if __name__ == "__main__":
    main()
