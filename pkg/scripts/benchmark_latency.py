#!/usr/bin/env python3
"""Measure the retrieval → selection → projection latency on a large store.

Builds a synthetic population (default 330,777 embeddings at dim 768, the
scale of a compact-image-pool deployment), then times the full single-query
pipeline: exact Top-N retrieval, balanced selection of K references, and one
projector application per selected reference. Reports per-stage and total
milliseconds over several repetitions of a warm store.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from fairref.conditioning import apply_projector, make_projector
from fairref.retrieval import balanced_select
from fairref.store import top_n
from fairref.synth import PopulationSpec, synth_population, uniform_prior


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=330_777)
    parser.add_argument("--dim", type=int, default=768)
    parser.add_argument("--n", type=int, default=250)
    parser.add_argument("--k", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args(argv)

    print(f"building store: {args.count} x {args.dim} ...", flush=True)
    build_start = time.perf_counter()
    store = synth_population(
        PopulationSpec(count=args.count, dim=args.dim, group_prior=uniform_prior(), seed=args.seed)
    )
    print(f"built in {time.perf_counter() - build_start:.1f} s", flush=True)

    rng = np.random.default_rng(args.seed + 1)
    query = rng.normal(size=args.dim)
    query /= np.linalg.norm(query)
    projector = make_projector(
        rng.normal(size=(args.dim, args.dim)).astype(np.float32),
        np.zeros(args.dim, dtype=np.float32),
    )

    def run_once():
        t0 = time.perf_counter()
        candidates = top_n(store, query, args.n)
        t1 = time.perf_counter()
        selection = balanced_select(candidates, args.k, seed=args.seed)
        t2 = time.perf_counter()
        for candidate in selection.chosen:
            apply_projector(projector, store.matrix[candidate.row])
        t3 = time.perf_counter()
        return (t1 - t0, t2 - t1, t3 - t2, t3 - t0)

    run_once()  # warm-up
    run_once()
    rows = [run_once() for _ in range(args.repeats)]
    labels = ("retrieve", "select", "project", "total")
    print(f"\n{'stage':<10}{'min ms':>10}{'median ms':>12}{'max ms':>10}")
    print("-" * 42)
    for index, label in enumerate(labels):
        values = sorted(row[index] * 1e3 for row in rows)
        print(
            f"{label:<10}{values[0]:>10.2f}{values[len(values) // 2]:>12.2f}{values[-1]:>10.2f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
