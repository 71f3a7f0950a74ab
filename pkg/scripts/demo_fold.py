#!/usr/bin/env python3
"""Fold a demonstration strand pair and print its pairing landscape.

The default pair is two hairpins with complementary loops, so the ensemble is
dominated by a loop-loop (kissing) interaction.  Sequences are given 5'->3'.
"""

import argparse

from jointfold.cli import _dotplot_text, format_number
from jointfold.energy import EnergyModel
from jointfold.inside import fold
from jointfold.model import PairPolicy, Strand
from jointfold.outside import joint_bpp

DEMO_R = "GGGAAAACCC"  # stem GGG/CCC around an AAAA loop
DEMO_S = "GGGUUUUCCC"  # same stem, UUUU loop: the loops can hybridize


def top_entries(matrix, k=5, upper_only=False):
    """Largest k entries of a matrix as (row, col, value), 1-based.

    ``upper_only`` keeps i < j, for symmetric within-strand matrices.
    """
    flat = matrix.ravel()
    n_cols = matrix.shape[1]
    out = []
    for idx in flat.argsort()[::-1]:
        i, j = int(idx // n_cols) + 1, int(idx % n_cols) + 1
        if flat[idx] <= 0.0 or (upper_only and i >= j):
            continue
        out.append((i, j, float(flat[idx])))
        if len(out) == k:
            break
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seq1", default=DEMO_R, help="first strand, 5'->3'")
    parser.add_argument("--seq2", default=DEMO_S, help="second strand, 5'->3'")
    parser.add_argument("--theta", type=int, default=3,
                        help="min unpaired bases under a hairpin-closing arc")
    parser.add_argument("--policy", choices=["any", "canonical"],
                        default="canonical")
    args = parser.parse_args()

    model = EnergyModel.unit(theta=args.theta,
                             pair_policy=PairPolicy(args.policy))
    strand_r = Strand("R", args.seq1)
    strand_s = Strand("S", args.seq2[::-1])  # the grammar indexes S from its 3' end
    tables = fold(strand_r, strand_s, model)
    mats = joint_bpp(strand_r, strand_s, model, inside=tables)

    n, m = strand_r.length, strand_s.length
    q = tables.q_joint
    print(f"strands: {args.seq1} ({n} nt)  x  {args.seq2} ({m} nt)")
    print(f"partition function (unit weights = structure count): {format_number(q)}")
    print(f"probability of the fully open structure: {format_number(1.0 / q)}")
    print()

    rs_input = mats.p_rs[:, ::-1]  # second strand back in input order
    for name, matrix, sym in (("strand1-strand1", mats.p_rr, True),
                              ("strand2-strand2", mats.p_ss[::-1, ::-1], True),
                              ("strand1-strand2", rs_input, False)):
        print(f"top {name} pairs (1-based, P > 0):")
        entries = top_entries(matrix, upper_only=sym)
        if not entries:
            print("  none")
        for i, j, p in entries:
            print(f"  ({i:>2}, {j:>2})  P = {format_number(p)}")
        print()

    print(_dotplot_text(rs_input), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
