#!/usr/bin/env python3
"""Time the pair fill over a ladder of strand lengths and report table memory.

The fill scales as O(N^4 M^2 + N^2 M^4) time and O(N^2 M^2) space; doubling the
square size should cost roughly 2^6 in time and 2^4 in memory.
"""

import argparse
import random
import time

from jointfold.energy import EnergyModel
from jointfold.inside import estimate_memory_bytes, fold
from jointfold.outside import joint_bpp

DEFAULT_SIZES = "8,12,16,20,24,30"


def random_seq(rng: random.Random, k: int) -> str:
    return "".join(rng.choice("ACGU") for _ in range(k))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default=DEFAULT_SIZES,
                        help="comma-separated square sizes N (=M)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="threads for the width-wave fill")
    parser.add_argument("--theta", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--with-probabilities", action="store_true",
                        help="also time the full probability pass")
    args = parser.parse_args()

    sizes = [int(tok) for tok in args.sizes.split(",") if tok]
    rng = random.Random(args.seed)
    model = EnergyModel.unit(theta=args.theta)

    fold(random_seq(rng, 6), random_seq(rng, 6), model, jobs=args.jobs)  # warm-up
    if args.with_probabilities:
        joint_bpp(random_seq(rng, 6), random_seq(rng, 6), model)

    header = f"{'N=M':>5} {'fill [s]':>10} {'tables [MiB]':>13}"
    if args.with_probabilities:
        header += f" {'probabilities [s]':>18}"
    print(header)
    for size in sizes:
        seq_r = random_seq(rng, size)
        seq_s = random_seq(rng, size)
        t0 = time.perf_counter()
        tables = fold(seq_r, seq_s, model, jobs=args.jobs)
        t_fill = time.perf_counter() - t0
        mib = estimate_memory_bytes(size, size) / 2**20
        line = f"{size:>5} {t_fill:>10.3f} {mib:>13.1f}"
        if args.with_probabilities:
            t0 = time.perf_counter()
            joint_bpp(seq_r, seq_s, model, inside=tables)
            line += f" {time.perf_counter() - t0:>18.3f}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
