"""Synthetic populations for experiments, benchmarks, and tests.

Two generators: a clustered population whose embeddings concentrate around
one unit centroid per demographic group, and a flat candidate pool whose
group composition is skewed toward one majority group while similarity stays
independent of demographics. Both are fully determined by their seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .demographics import GroupSpace, IntersectionalGroup, default_universe
from .errors import (
    DimensionMismatch,
    InvalidFraction,
    InvalidPrior,
    InvalidSeed,
    NonPositiveK,
    ZeroVector,
)
from .store import Annotation, Candidate, EmbeddingStore

_CHUNK_ROWS = 16384


@dataclass(frozen=True)
class PopulationSpec:
    """Recipe for a synthetic population.

    Embeddings are drawn as ``normalize(centroid[group] + noise)`` where each
    group centroid is a random unit vector and the noise is isotropic
    Gaussian with scale ``cluster_noise``. A prior of exactly 1 on one group
    with zero noise therefore reproduces that group's centroid everywhere.
    """

    count: int
    dim: int
    group_prior: Mapping[IntersectionalGroup, float]
    cluster_noise: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.count, bool) or not isinstance(self.count, int) or self.count < 1:
            raise NonPositiveK(f"count must be a positive integer, got {self.count!r}")
        if isinstance(self.dim, bool) or not isinstance(self.dim, int) or self.dim < 2:
            raise DimensionMismatch(f"dim must be an integer >= 2, got {self.dim!r}")
        if not self.group_prior:
            raise InvalidPrior("group prior must name at least one group")
        total = 0.0
        for group, probability in self.group_prior.items():
            if not isinstance(group, IntersectionalGroup):
                raise InvalidPrior(f"prior keys must be intersectional groups, got {group!r}")
            if not isinstance(probability, (int, float)) or math.isnan(probability):
                raise InvalidPrior(f"prior for {group} must be a number")
            if probability < 0.0:
                raise InvalidPrior(f"prior for {group} is negative: {probability}")
            total += float(probability)
        if abs(total - 1.0) > 1e-9:
            raise InvalidPrior(f"prior sums to {total!r}, expected 1 within 1e-9")
        if not isinstance(self.cluster_noise, (int, float)) or self.cluster_noise < 0.0:
            raise InvalidPrior(f"cluster_noise must be >= 0, got {self.cluster_noise!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise InvalidSeed(f"seed must be an integer in [0, 2**64), got {self.seed!r}")


def synth_population(spec: PopulationSpec) -> EmbeddingStore:
    """Generate a fully annotated store; identical spec -> identical store.

    Row i carries id ``synth-{i:06d}``. Generation is chunked so that even
    multi-gigabyte float32 stores never materialize a full float64 copy.
    """
    rng = np.random.default_rng(spec.seed)
    groups = sorted(spec.group_prior)
    probabilities = np.array([spec.group_prior[g] for g in groups], dtype=np.float64)
    probabilities /= probabilities.sum()

    centroids = rng.standard_normal((len(groups), spec.dim))
    _normalize_rows(centroids)
    assignment = rng.choice(len(groups), size=spec.count, p=probabilities)

    matrix = np.empty((spec.count, spec.dim), dtype=np.float32)
    for start in range(0, spec.count, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, spec.count)
        chunk = centroids[assignment[start:stop]]
        if spec.cluster_noise > 0.0:
            chunk = chunk + spec.cluster_noise * rng.standard_normal((stop - start, spec.dim))
        else:
            chunk = chunk.copy()
        _normalize_rows(chunk)
        matrix[start:stop] = chunk.astype(np.float32)

    ids = tuple(f"synth-{i:06d}" for i in range(spec.count))
    annotations = tuple(
        Annotation(age=g.age, gender=g.gender, skin=g.skin)
        for g in (groups[index] for index in assignment)
    )
    matrix.setflags(write=False)
    return EmbeddingStore(matrix=matrix, ids=ids, annotations=annotations)


def _normalize_rows(rows: np.ndarray) -> None:
    norms = np.sqrt(np.einsum("ij,ij->i", rows, rows))
    if norms.min() < 1e-12:
        raise ZeroVector("a synthetic embedding collapsed to zero norm")
    rows /= norms[:, None]


def synth_skewed_pool(
    majority_fraction: float,
    count: int,
    dim: int,
    seed: int,
    majority_group: IntersectionalGroup | None = None,
) -> list[Candidate]:
    """Build a scored candidate pool dominated by one intersectional group.

    The majority group receives floor(majority_fraction * count) candidates;
    the remainder is spread as evenly as possible over the other groups of
    the default 120-group universe (which minorities get the odd extras is
    seeded). Embeddings are i.i.d. unit vectors, so similarity to the random
    query is independent of demographics: any demographic skew in a Top-K is
    composition bias, not signal. Candidates come back sorted by descending
    score, ties broken by ascending row.
    """
    if not isinstance(majority_fraction, (int, float)) or not 0.0 < majority_fraction < 1.0:
        raise InvalidFraction(f"majority_fraction must lie in (0, 1), got {majority_fraction!r}")
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise NonPositiveK(f"count must be a positive integer, got {count!r}")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
        raise DimensionMismatch(f"dim must be an integer >= 2, got {dim!r}")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise InvalidSeed(f"seed must be an integer in [0, 2**64), got {seed!r}")

    universe = default_universe()
    majority = universe[0] if majority_group is None else majority_group
    others = [group for group in universe if group != majority]

    majority_count = math.floor(majority_fraction * count)
    remainder = count - majority_count
    base, extras = divmod(remainder, len(others))

    rng = np.random.default_rng(seed)
    extra_receivers = rng.permutation(len(others))[:extras]
    group_list: list[IntersectionalGroup] = [majority] * majority_count
    per_other = np.full(len(others), base, dtype=np.int64)
    per_other[extra_receivers] += 1
    for index, group in enumerate(others):
        group_list.extend([group] * int(per_other[index]))
    order = rng.permutation(count)
    group_list = [group_list[i] for i in order]

    embeddings = rng.standard_normal((count, dim))
    _normalize_rows(embeddings)
    query = rng.standard_normal(dim)
    query /= np.linalg.norm(query)
    scores = embeddings @ query

    ranked = sorted(range(count), key=lambda i: (-float(scores[i]), i))
    return [
        Candidate(
            row=i,
            id=f"cand-{i:05d}",
            score=float(scores[i]),
            group=group_list[i],
        )
        for i in ranked
    ]


def uniform_prior(space: GroupSpace = GroupSpace()) -> dict[IntersectionalGroup, float]:
    """Uniform prior over the default universe (space must match its shape)."""
    universe = default_universe()
    if space.n_intersectional != len(universe):
        raise InvalidPrior(
            f"uniform prior covers the default {len(universe)}-group universe, "
            f"not a space of {space.n_intersectional}"
        )
    return {group: 1.0 / len(universe) for group in universe}


def skewed_prior(
    majority_fraction: float,
    majority_group: IntersectionalGroup | None = None,
) -> dict[IntersectionalGroup, float]:
    """Prior giving one group ``majority_fraction`` and the rest the remainder."""
    if not 0.0 < majority_fraction < 1.0:
        raise InvalidFraction(f"majority_fraction must lie in (0, 1), got {majority_fraction!r}")
    universe = default_universe()
    majority = universe[0] if majority_group is None else majority_group
    share = (1.0 - majority_fraction) / (len(universe) - 1)
    return {group: (majority_fraction if group == majority else share) for group in universe}


__all__ = [
    "PopulationSpec",
    "skewed_prior",
    "synth_population",
    "synth_skewed_pool",
    "uniform_prior",
]
