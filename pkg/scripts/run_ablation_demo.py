#!/usr/bin/env python3
"""Run the selection-mechanism ablation on synthetic candidate pools.

Compares mean intersectional diversity of the selected references across
four variants: plain Top-K, balanced sampling only, milder pool skew only
(standing in for query debiasing), and both together. Thin wrapper over
`fairref ablation-demo` for people who prefer a script entry point.
"""

from __future__ import annotations

import argparse
import sys

from fairref.ablation import AblationConfig, format_table, run_ablation
from fairref.demographics import GroupSpace


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pool-size", type=int, default=250)
    parser.add_argument("--k", type=int, default=20)
    parser.add_argument("--seeds", type=int, default=200)
    parser.add_argument("--master-seed", type=int, default=0)
    parser.add_argument("--majority-fraction", type=float, default=0.8)
    parser.add_argument("--debiased-fraction", type=float, default=0.6)
    parser.add_argument("--dim", type=int, default=16)
    args = parser.parse_args(argv)

    config = AblationConfig(
        pool_size=args.pool_size,
        k=args.k,
        num_seeds=args.seeds,
        master_seed=args.master_seed,
        majority_fraction=args.majority_fraction,
        debiased_fraction=args.debiased_fraction,
        dim=args.dim,
        space=GroupSpace(),
    )
    means = run_ablation(config)
    print(format_table(means))
    gap = means["full"] - means["plain_top_k"]
    print(f"\nfull - plain_top_k = {gap:+.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
