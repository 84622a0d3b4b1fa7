from __future__ import annotations

import pytest

from conftest import make_candidate, make_group
from fairref import errors
from fairref.ablation import (
    VARIANTS,
    AblationConfig,
    format_table,
    run_ablation,
    selection_diversity,
)
from fairref.retrieval import balanced_select


def test_selection_diversity_of_balanced_pick():
    g1 = make_group(age=1, gender=0, skin=5)
    g2 = make_group(age=2, gender=1, skin=8)
    pool = [make_candidate(0, 0.9, g1), make_candidate(1, 0.8, g2)]
    selection = balanced_select(pool, k=2, seed=0)
    value = selection_diversity(selection)
    import math

    assert value == pytest.approx(math.log(2) / math.log(120), abs=1e-12)


def test_run_ablation_orders_variants():
    config = AblationConfig(pool_size=120, k=10, num_seeds=10, dim=8)
    means = run_ablation(config)
    assert set(means) == set(VARIANTS)
    assert all(0.0 <= v <= 1.0 for v in means.values())
    # balancing and the milder skew each help; together they help most
    assert means["full"] > means["plain_top_k"]
    assert means["no_debiased_query"] > means["plain_top_k"]
    assert means["no_balanced_sampling"] > means["plain_top_k"]
    assert means["full"] >= means["no_debiased_query"] - 0.02


def test_run_ablation_deterministic():
    config = AblationConfig(pool_size=60, k=5, num_seeds=4, dim=6)
    assert run_ablation(config) == run_ablation(config)


def test_ablation_config_validation():
    with pytest.raises(errors.NonPositiveK):
        AblationConfig(num_seeds=0)
    with pytest.raises(errors.InvalidFraction):
        AblationConfig(majority_fraction=0.5, debiased_fraction=0.6)
    with pytest.raises(errors.InvalidFraction):
        AblationConfig(majority_fraction=1.0)


def test_format_table_lists_all_variants():
    means = {v: 0.5 for v in VARIANTS}
    table = format_table(means)
    lines = table.splitlines()
    assert len(lines) == 2 + len(VARIANTS)
    for variant in VARIANTS:
        assert any(line.startswith(variant) for line in lines)
    assert "0.5000" in table
