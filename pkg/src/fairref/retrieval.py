"""Fairness-aware retrieval: debiased queries and balanced reference selection.

Plain similarity retrieval over a demographically skewed pool returns a
skewed reference set. Two mitigations compose here:

* the query text is broadened with a suffix that strips demographic intent
  ("with any age, gender, skin tone"), and
* the final K references are drawn group-by-group with weights that favor
  demographic combinations whose individual attributes are rare among the
  retrieved candidates.

Weights are computed once over the unique intersectional groups G present in
the Top-N candidates. For a group g, each attribute a (age, gender, skin)
contributes m_g[a] / n_a to the denominator, where m_g[a] counts how many
groups in G share g's value of attribute a and n_a is the attribute's
cardinality; the weight is the reciprocal of the sum. Selection then
repeatedly samples a non-empty group with probability proportional to its
weight and takes that group's best-scored unused candidate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .demographics import GroupSpace, IntersectionalGroup
from .errors import (
    EmptyGroupSet,
    EmptyPrompt,
    InvalidSeed,
    MissingEmbedding,
    NoAnnotatedCandidates,
    NonPositiveK,
    ParseError,
)
from .store import Candidate, EmbeddingStore, top_n

#: Suffix appended to prompts so the retrieval query carries no demographic cue.
DEFAULT_QUERY_SUFFIX = "with any age, gender, skin tone"

#: Algorithm behind the seeded generator; recorded in results for audit.
RNG_ALGORITHM = "pcg64"

_MAX_SEED = 2**64


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidSeed(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < _MAX_SEED:
        raise InvalidSeed(f"seed must lie in [0, 2**64), got {seed}")
    return int(seed)


def _check_k(k: int, name: str = "k") -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise NonPositiveK(f"{name} must be a positive integer, got {k!r}")
    return int(k)


@dataclass(frozen=True)
class DebiasedQuery:
    """A retrieval query: original prompt, broadened text, optional embedding."""

    original: str
    debiased_text: str
    embedding: np.ndarray | None = None


def make_debiased_query(
    prompt: str,
    suffix: str = DEFAULT_QUERY_SUFFIX,
    embedding: np.ndarray | None = None,
) -> DebiasedQuery:
    """Join prompt and suffix with a single space; an empty suffix is identity."""
    if not isinstance(prompt, str) or not prompt:
        raise EmptyPrompt("prompt must be a non-empty string")
    text = prompt if suffix == "" else f"{prompt} {suffix}"
    return DebiasedQuery(original=prompt, debiased_text=text, embedding=embedding)


@dataclass(frozen=True)
class GroupStats:
    """Unique groups among candidates plus per-attribute occurrence counts.

    ``counts[a][v]`` is the number of unique groups whose attribute ``a``
    equals ``v``; for each attribute the counts sum to ``len(groups)``.
    """

    groups: tuple[IntersectionalGroup, ...]
    counts: Mapping[str, Mapping[object, int]]
    space: GroupSpace


def group_stats(
    groups: Iterable[IntersectionalGroup], space: GroupSpace = GroupSpace()
) -> GroupStats:
    """Collect the unique-group statistics that drive weight computation."""
    unique = sorted(set(groups))
    if not unique:
        raise EmptyGroupSet("at least one intersectional group is required")
    counts: dict[str, dict[object, int]] = {"age": {}, "gender": {}, "skin": {}}
    for group in unique:
        for attribute in counts:
            value = group[attribute]
            counts[attribute][value] = counts[attribute].get(value, 0) + 1
    return GroupStats(groups=tuple(unique), counts=counts, space=space)


def compute_weights(stats: GroupStats) -> dict[IntersectionalGroup, float]:
    """Balanced sampling weight for every group in ``stats``.

    w_g = 1 / sum_a (m_g[a] / n_a). Rarer attribute combinations receive
    strictly larger weights; all weights are positive and finite.
    """
    cardinalities = stats.space.attribute_counts()
    weights: dict[IntersectionalGroup, float] = {}
    for group in stats.groups:
        denom = sum(
            stats.counts[attribute][group[attribute]] / cardinalities[attribute]
            for attribute in cardinalities
        )
        weights[group] = 1.0 / denom
    return weights


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of selecting k references from n retrieved candidates."""

    chosen: tuple[Candidate, ...]
    weights: Mapping[IntersectionalGroup, float]
    seed: int
    n_used: int
    k_requested: int
    skipped_unannotated: int
    rng: str = RNG_ALGORITHM


def _sorted_candidates(candidates: Sequence[Candidate]) -> list[Candidate]:
    # Defensive re-sort: makes the result invariant to input permutations.
    return sorted(candidates, key=lambda c: (-c.score, c.row))


def balanced_select(
    candidates: Sequence[Candidate],
    k: int,
    seed: int,
    space: GroupSpace = GroupSpace(),
) -> SelectionResult:
    """Draw up to k candidates, balancing across intersectional groups.

    Candidates without a full demographic annotation are skipped (and
    counted). Weights are computed once from the unique groups present; each
    draw samples a still-non-empty group with probability proportional to its
    weight and pops that group's highest-scored unused candidate. Selection
    stops early only when every group is exhausted.

    The same candidates, k, and seed always reproduce the same result; the
    generator algorithm is recorded on the result.
    """
    k = _check_k(k)
    seed = _check_seed(seed)
    ordered = _sorted_candidates(candidates)
    annotated = [c for c in ordered if c.group is not None]
    skipped = len(ordered) - len(annotated)
    if not annotated:
        raise NoAnnotatedCandidates(
            f"balanced selection needs annotated candidates; all {len(ordered)} lack labels"
        )

    queues: dict[IntersectionalGroup, list[Candidate]] = {}
    for candidate in annotated:
        queues.setdefault(candidate.group, []).append(candidate)

    stats = group_stats(queues.keys(), space)
    weights = compute_weights(stats)

    active = sorted(queues)  # lexicographic group order fixes the PRNG layout
    positions = {group: 0 for group in active}
    rng = np.random.default_rng(seed)
    chosen: list[Candidate] = []
    while len(chosen) < k and active:
        probabilities = np.array([weights[g] for g in active], dtype=np.float64)
        probabilities /= probabilities.sum()
        group = active[int(rng.choice(len(active), p=probabilities))]
        queue = queues[group]
        chosen.append(queue[positions[group]])
        positions[group] += 1
        if positions[group] == len(queue):
            active.remove(group)

    return SelectionResult(
        chosen=tuple(chosen),
        weights=weights,
        seed=seed,
        n_used=len(ordered),
        k_requested=k,
        skipped_unannotated=skipped,
    )


def plain_select(candidates: Sequence[Candidate], k: int, seed: int = 0) -> SelectionResult:
    """Similarity-only baseline: the first k candidates by descending score."""
    k = _check_k(k)
    seed = _check_seed(seed)
    ordered = _sorted_candidates(candidates)
    return SelectionResult(
        chosen=tuple(ordered[:k]),
        weights={},
        seed=seed,
        n_used=len(ordered),
        k_requested=k,
        skipped_unannotated=0,
    )


def fair_retrieve(
    store: EmbeddingStore,
    query: DebiasedQuery,
    n: int = 250,
    k: int = 20,
    seed: int = 0,
    space: GroupSpace = GroupSpace(),
    balanced: bool = True,
) -> SelectionResult:
    """Retrieve Top-N by exact similarity, then select K references."""
    if query.embedding is None:
        raise MissingEmbedding("the query carries no embedding")
    if _check_k(n, "n") < _check_k(k, "k"):
        raise NonPositiveK(f"n ({n}) must be at least k ({k})")
    top = top_n(store, query.embedding, n)
    if balanced:
        return balanced_select(top, k, seed, space)
    return plain_select(top, k, seed)


# --- serialization ---------------------------------------------------------------


def selection_to_json_dict(result: SelectionResult) -> dict:
    return {
        "seed": result.seed,
        "n": result.n_used,
        "k": result.k_requested,
        "skipped_unannotated": result.skipped_unannotated,
        "rng": result.rng,
        "weights": [
            {"group": group.to_json_dict(), "w": float(result.weights[group])}
            for group in sorted(result.weights)
        ],
        "chosen": [
            {
                "row": candidate.row,
                "id": candidate.id,
                "score": float(candidate.score),
                "group": None if candidate.group is None else candidate.group.to_json_dict(),
            }
            for candidate in result.chosen
        ],
    }


def selection_to_json(result: SelectionResult) -> str:
    return json.dumps(selection_to_json_dict(result), sort_keys=True, indent=2)


def candidate_from_json_dict(entry: Mapping, where: str, default_row: int) -> Candidate:
    """Parse one candidate record; ``where`` names the source for error text."""
    try:
        row = int(entry.get("row", default_row))
        record_id = entry["id"]
        score = float(entry["score"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: candidate needs 'id' and numeric 'score': {exc}") from exc
    if not isinstance(record_id, str) or not record_id:
        raise ParseError(f"{where}: candidate 'id' must be a non-empty string")
    group_data = entry.get("group")
    try:
        group = None if group_data is None else IntersectionalGroup.from_json_dict(group_data)
    except Exception as exc:
        raise ParseError(f"{where}: bad group: {exc}") from exc
    return Candidate(row=row, id=record_id, score=score, group=group)


def selection_from_json(text: str, where: str = "selection") -> SelectionResult:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{where}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{where}: selection must be a JSON object")
    try:
        seed = int(data["seed"])
        n_used = int(data["n"])
        k_requested = int(data["k"])
        skipped = int(data["skipped_unannotated"])
        chosen_entries = data["chosen"]
        weight_entries = data.get("weights", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: missing or malformed field: {exc}") from exc
    chosen = tuple(
        candidate_from_json_dict(entry, f"{where}:chosen[{index}]", index)
        for index, entry in enumerate(chosen_entries)
    )
    weights: dict[IntersectionalGroup, float] = {}
    for index, entry in enumerate(weight_entries):
        try:
            group = IntersectionalGroup.from_json_dict(entry["group"])
            weights[group] = float(entry["w"])
        except Exception as exc:
            raise ParseError(f"{where}:weights[{index}]: {exc}") from exc
    return SelectionResult(
        chosen=chosen,
        weights=weights,
        seed=seed,
        n_used=n_used,
        k_requested=k_requested,
        skipped_unannotated=skipped,
        rng=str(data.get("rng", RNG_ALGORITHM)),
    )


__all__ = [
    "DEFAULT_QUERY_SUFFIX",
    "RNG_ALGORITHM",
    "DebiasedQuery",
    "GroupStats",
    "SelectionResult",
    "balanced_select",
    "candidate_from_json_dict",
    "compute_weights",
    "fair_retrieve",
    "group_stats",
    "make_debiased_query",
    "plain_select",
    "selection_from_json",
    "selection_to_json",
    "selection_to_json_dict",
]
