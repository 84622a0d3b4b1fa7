from __future__ import annotations

import collections
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_candidate, make_group
from fairref import errors
from fairref.demographics import (
    AgeGroup,
    Gender,
    GroupSpace,
    IntersectionalGroup,
    SkinTone,
    default_universe,
)
from fairref.retrieval import (
    DEFAULT_QUERY_SUFFIX,
    balanced_select,
    compute_weights,
    fair_retrieve,
    group_stats,
    make_debiased_query,
    plain_select,
    selection_from_json,
    selection_to_json,
    selection_to_json_dict,
)

# --- debiased query ----------------------------------------------------------------


def test_default_suffix_text():
    assert DEFAULT_QUERY_SUFFIX == "with any age, gender, skin tone"
    q = make_debiased_query("Photo of a doctor")
    assert q.debiased_text == "Photo of a doctor with any age, gender, skin tone"
    assert q.original == "Photo of a doctor"
    assert q.embedding is None


def test_empty_suffix_is_identity():
    q = make_debiased_query("Photo of a doctor", suffix="")
    assert q.debiased_text == "Photo of a doctor"


def test_empty_prompt_rejected():
    with pytest.raises(errors.EmptyPrompt):
        make_debiased_query("")


# --- weights ----------------------------------------------------------------------


def test_weight_formula_frozen_examples():
    g1 = make_group(age=1, gender=0, skin=5)  # (20-29, male, 5)
    g2 = make_group(age=1, gender=1, skin=5)  # (20-29, female, 5)
    g3 = make_group(age=2, gender=0, skin=2)  # (30-39, male, 2)
    weights = compute_weights(group_stats([g1, g2, g3]))
    assert weights[g1] == pytest.approx(0.652174, abs=1e-6)
    assert weights[g2] == pytest.approx(0.967742, abs=1e-6)

    solo = compute_weights(group_stats([g1]))
    assert solo[g1] == pytest.approx(1.304348, abs=1e-6)


def test_group_stats_counts_unique_groups_only():
    g1 = make_group(age=1, gender=0, skin=5)
    g2 = make_group(age=1, gender=1, skin=5)
    # duplicates collapse before counting
    stats = group_stats([g1, g1, g1, g2])
    assert stats.groups == (g1, g2)
    assert stats.counts["age"][AgeGroup(1)] == 2
    assert stats.counts["gender"][Gender(0)] == 1
    assert stats.counts["gender"][Gender(1)] == 1
    assert stats.counts["skin"][SkinTone(5)] == 2


def test_group_stats_keeps_age_and_gender_counts_apart():
    # AgeGroup(1) and Gender(1) share the integer value; counts must not merge
    g1 = make_group(age=1, gender=1, skin=3)
    stats = group_stats([g1])
    assert stats.counts["age"] == {AgeGroup(1): 1}
    assert stats.counts["gender"] == {Gender(1): 1}


def test_group_stats_rejects_empty():
    with pytest.raises(errors.EmptyGroupSet):
        group_stats([])


@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=2, max_value=40))
def test_rarer_groups_get_strictly_larger_weights(seed, size):
    """A group unique in every attribute outweighs one sharing attributes."""
    gen = np.random.default_rng(seed)
    universe = default_universe()
    picks = gen.choice(len(universe), size=size, replace=False)
    groups = [universe[i] for i in picks]
    stats = group_stats(groups)
    weights = compute_weights(stats)
    assert all(w > 0 and np.isfinite(w) for w in weights.values())

    def denom(group):
        return (
            stats.counts["age"][group.age] / 6
            + stats.counts["gender"][group.gender] / 2
            + stats.counts["skin"][group.skin] / 10
        )

    for group in stats.groups:
        assert weights[group] == pytest.approx(1.0 / denom(group), rel=1e-12)
    # strictly smaller denominator -> strictly larger weight
    ordered = sorted(stats.groups, key=denom)
    assert weights[ordered[0]] == max(weights.values())


# --- balanced selection --------------------------------------------------------------


def _pool():
    g1 = make_group(age=1, gender=0, skin=5)
    g2 = make_group(age=1, gender=1, skin=5)
    g3 = make_group(age=2, gender=0, skin=2)
    return [
        make_candidate(0, 0.99, g1),
        make_candidate(1, 0.98, g1),
        make_candidate(2, 0.97, g2),
        make_candidate(3, 0.96, g3),
        make_candidate(4, 0.95, g2),
        make_candidate(5, 0.94, None),
    ]


def test_balanced_select_basics():
    result = balanced_select(_pool(), k=4, seed=0)
    assert len(result.chosen) == 4
    assert result.k_requested == 4
    assert result.n_used == 6
    assert result.skipped_unannotated == 1
    assert result.rng == "pcg64"
    # no candidate repeats
    assert len({c.row for c in result.chosen}) == 4
    # within a group, selection follows descending score
    by_group = collections.defaultdict(list)
    for c in result.chosen:
        by_group[c.group].append(c.score)
    for scores in by_group.values():
        assert scores == sorted(scores, reverse=True)


def test_balanced_select_deterministic():
    a = balanced_select(_pool(), k=4, seed=123)
    b = balanced_select(_pool(), k=4, seed=123)
    assert a == b
    c = balanced_select(_pool(), k=4, seed=124)
    assert isinstance(c.chosen, tuple)


def test_balanced_select_input_order_invariant(rng):
    pool = _pool()
    base = balanced_select(pool, k=4, seed=7)
    for _ in range(5):
        shuffled = [pool[i] for i in rng.permutation(len(pool))]
        assert balanced_select(shuffled, k=4, seed=7) == base


def test_balanced_select_exhausts_all_groups():
    result = balanced_select(_pool(), k=50, seed=0)
    # only 5 annotated candidates exist
    assert len(result.chosen) == 5
    assert {c.row for c in result.chosen} == {0, 1, 2, 3, 4}


def test_balanced_select_requires_annotations():
    unannotated = [make_candidate(i, 0.9 - i * 0.01, None) for i in range(4)]
    with pytest.raises(errors.NoAnnotatedCandidates):
        balanced_select(unannotated, k=2, seed=0)


def test_balanced_select_validates_k_and_seed():
    with pytest.raises(errors.NonPositiveK):
        balanced_select(_pool(), k=0, seed=0)
    with pytest.raises(errors.InvalidSeed):
        balanced_select(_pool(), k=2, seed=-1)
    with pytest.raises(errors.InvalidSeed):
        balanced_select(_pool(), k=2, seed=2**64)


def test_first_draw_follows_weights():
    """Over many seeds the first pick lands on each group at its weight share."""
    pool = _pool()
    weights = balanced_select(pool, k=1, seed=0).weights
    total = sum(weights.values())
    counts = collections.Counter(
        balanced_select(pool, k=1, seed=seed).chosen[0].group for seed in range(4000)
    )
    for group, weight in weights.items():
        expected = weight / total
        observed = counts[group] / 4000
        sigma = (expected * (1 - expected) / 4000) ** 0.5
        assert abs(observed - expected) < 4 * sigma + 1e-9


def test_plain_select_takes_top_scores():
    result = plain_select(_pool(), k=3, seed=5)
    assert [c.row for c in result.chosen] == [0, 1, 2]
    assert result.weights == {}
    assert result.skipped_unannotated == 0
    assert result.seed == 5


@settings(max_examples=40)
@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    k=st.integers(min_value=1, max_value=30),
)
def test_balanced_select_properties(seed, k):
    gen = np.random.default_rng(seed)
    universe = default_universe()
    size = int(gen.integers(1, 60))
    pool = []
    for row in range(size):
        group = universe[int(gen.integers(0, len(universe)))]
        if gen.random() < 0.1:
            group = None
        pool.append(make_candidate(row, float(gen.normal()), group))
    if all(c.group is None for c in pool):
        with pytest.raises(errors.NoAnnotatedCandidates):
            balanced_select(pool, k=k, seed=seed)
        return
    result = balanced_select(pool, k=k, seed=seed)
    annotated = [c for c in pool if c.group is not None]
    assert len(result.chosen) == min(k, len(annotated))
    assert len({c.row for c in result.chosen}) == len(result.chosen)
    assert all(c.group is not None for c in result.chosen)
    assert result.skipped_unannotated == len(pool) - len(annotated)
    # reproducible
    assert balanced_select(pool, k=k, seed=seed) == result


def test_balanced_matches_plain_on_uniform_pool():
    """With no skew to correct, balancing should neither help nor hurt much."""
    from fairref.metrics import apply_no_face_penalty
    from fairref.synth import synth_skewed_pool

    universe = default_universe()
    gen = np.random.default_rng(0)
    balanced_scores = []
    plain_scores = []
    for seed in range(60):
        # near-uniform pool: every group equally unlikely to dominate
        pool = synth_skewed_pool(1.0 / 120, count=240, dim=8, seed=seed)
        assert sum(1 for c in pool if c.group == universe[0]) <= 3
        balanced_scores.append(
            apply_no_face_penalty(
                [c.group for c in balanced_select(pool, k=20, seed=seed).chosen]
            )
            .scores()
            .intersectional
        )
        plain_scores.append(
            apply_no_face_penalty(
                [c.group for c in plain_select(pool, k=20, seed=seed).chosen]
            )
            .scores()
            .intersectional
        )
    assert abs(float(np.mean(balanced_scores)) - float(np.mean(plain_scores))) < 0.05


# --- end-to-end retrieval -------------------------------------------------------------


def test_fair_retrieve_balanced(annotated_store, rng):
    q = rng.normal(size=8)
    q /= np.linalg.norm(q)
    query = make_debiased_query("Photo of a chef", embedding=q)
    result = fair_retrieve(annotated_store, query, n=30, k=6, seed=1)
    assert len(result.chosen) == 6
    assert result.n_used == 30
    ids = {c.id for c in result.chosen}
    assert len(ids) == 6


def test_fair_retrieve_plain(annotated_store, rng):
    q = rng.normal(size=8)
    q /= np.linalg.norm(q)
    query = make_debiased_query("Photo of a chef", embedding=q)
    result = fair_retrieve(annotated_store, query, n=10, k=3, seed=0, balanced=False)
    assert [c.row for c in result.chosen] == [
        c.row for c in fair_retrieve(annotated_store, query, n=10, k=3, seed=9, balanced=False).chosen
    ]
    assert result.weights == {}


def test_fair_retrieve_requires_embedding(annotated_store):
    query = make_debiased_query("Photo of a chef")
    with pytest.raises(errors.MissingEmbedding):
        fair_retrieve(annotated_store, query, n=10, k=3)


def test_fair_retrieve_requires_n_at_least_k(annotated_store, rng):
    q = rng.normal(size=8)
    q /= np.linalg.norm(q)
    query = make_debiased_query("x", embedding=q)
    with pytest.raises(errors.NonPositiveK):
        fair_retrieve(annotated_store, query, n=3, k=5)


# --- serialization ----------------------------------------------------------------


def test_selection_json_round_trip():
    result = balanced_select(_pool(), k=4, seed=3)
    text = selection_to_json(result)
    back = selection_from_json(text)
    assert back == result


def test_selection_json_shape():
    result = balanced_select(_pool(), k=2, seed=0)
    data = selection_to_json_dict(result)
    assert set(data) == {"chosen", "weights", "seed", "n", "k", "skipped_unannotated", "rng"}
    assert data["seed"] == 0 and data["n"] == 6 and data["k"] == 2
    assert data["rng"] == "pcg64"
    groups = [json.dumps(w["group"], sort_keys=True) for w in data["weights"]]
    assert groups == sorted(groups) or len(groups) == len(set(groups))
    for entry in data["chosen"]:
        assert set(entry) == {"row", "id", "score", "group"}


def test_selection_json_none_group():
    result = plain_select(_pool(), k=6, seed=0)
    data = selection_to_json_dict(result)
    assert any(entry["group"] is None for entry in data["chosen"])
    back = selection_from_json(selection_to_json(result))
    assert back == result


def test_selection_from_json_error_taxonomy():
    with pytest.raises(errors.ParseError):
        selection_from_json("{not json")
    with pytest.raises(errors.ParseError):
        selection_from_json("[]")
    with pytest.raises(errors.ParseError):
        selection_from_json('{"chosen": []}')
    good = selection_to_json(balanced_select(_pool(), k=2, seed=0))
    broken = good.replace('"skin_tone": 5', '"skin_tone": 99', 1)
    with pytest.raises(errors.ParseError):
        selection_from_json(broken)
