"""Self-contained ablation of the two fairness mechanisms.

Runs selection over synthetic skewed pools so no image data or encoder is
needed. The debiased query cannot change a precomputed pool, so its effect
is modeled the way it shows up in practice: retrieval with the broadened
query yields a candidate pool whose majority skew is milder. Four variants
are compared on mean intersectional diversity of the selected references:

* ``plain_top_k``        - biased pool, similarity-only Top-K
* ``no_debiased_query``  - biased pool, balanced sampling
* ``no_balanced_sampling`` - debiased pool, similarity-only Top-K
* ``full``               - debiased pool, balanced sampling
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .demographics import GroupSpace
from .errors import InvalidFraction, NonPositiveK
from .metrics import apply_no_face_penalty
from .retrieval import SelectionResult, balanced_select, plain_select
from .synth import synth_skewed_pool

VARIANTS = ("plain_top_k", "no_debiased_query", "no_balanced_sampling", "full")


@dataclass(frozen=True)
class AblationConfig:
    pool_size: int = 250
    k: int = 20
    num_seeds: int = 200
    master_seed: int = 0
    majority_fraction: float = 0.8
    debiased_fraction: float = 0.6
    dim: int = 16
    space: GroupSpace = GroupSpace()

    def __post_init__(self) -> None:
        if self.num_seeds < 1:
            raise NonPositiveK(f"num_seeds must be positive, got {self.num_seeds}")
        if not 0.0 < self.debiased_fraction <= self.majority_fraction < 1.0:
            raise InvalidFraction(
                "expected 0 < debiased_fraction <= majority_fraction < 1, got "
                f"{self.debiased_fraction} / {self.majority_fraction}"
            )


def selection_diversity(selection: SelectionResult, space: GroupSpace = GroupSpace()) -> float:
    """Intersectional diversity of the selected references."""
    groups = [candidate.group for candidate in selection.chosen]
    return apply_no_face_penalty(groups, space).scores().intersectional


def run_ablation(config: AblationConfig = AblationConfig()) -> dict[str, float]:
    """Mean intersectional diversity per variant over ``num_seeds`` pools.

    Seed i uses master_seed + i (mod 2**64) for both pool synthesis and
    selection, so the whole table is reproducible from one number.
    """
    totals = {variant: 0.0 for variant in VARIANTS}
    for index in range(config.num_seeds):
        seed = (config.master_seed + index) % 2**64
        biased = synth_skewed_pool(config.majority_fraction, config.pool_size, config.dim, seed)
        debiased = synth_skewed_pool(config.debiased_fraction, config.pool_size, config.dim, seed)
        results = {
            "plain_top_k": plain_select(biased, config.k, seed),
            "no_debiased_query": balanced_select(biased, config.k, seed, config.space),
            "no_balanced_sampling": plain_select(debiased, config.k, seed),
            "full": balanced_select(debiased, config.k, seed, config.space),
        }
        for variant, result in results.items():
            totals[variant] += selection_diversity(result, config.space)
    return {variant: totals[variant] / config.num_seeds for variant in VARIANTS}


def format_table(means: Mapping[str, float]) -> str:
    """Fixed-width text table, one line per variant."""
    header = f"{'variant':<24}{'mean intersectional diversity':>32}"
    lines = [header, "-" * len(header)]
    lines.extend(f"{variant:<24}{means[variant]:>32.4f}" for variant in VARIANTS)
    return "\n".join(lines)


__all__ = ["VARIANTS", "AblationConfig", "format_table", "run_ablation", "selection_diversity"]
