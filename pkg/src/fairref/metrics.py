"""Evaluation metrics: demographic diversity, prompt alignment, and FID.

Diversity is normalized entropy. For a histogram with occupancy
probabilities p_i over n_possible groups,

    D = (sum_i p_i ln p_i) / ln(1 / n_possible),          0 ln 0 := 0,

so a uniform spread over all groups scores 1 and a point mass scores 0.
Generated images in which no face was found are not dropped: each one is
assigned to the most frequent classified group of its prompt, which pushes
the score toward 0 and keeps "generate no faces" from gaming the metric.

FID between two feature sets with stats (mu_a, S_a), (mu_b, S_b) is

    ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}),

computed through symmetric eigendecompositions only.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .demographics import GroupSpace, IntersectionalGroup
from .errors import (
    DimensionMismatch,
    EmptyHistogram,
    EmptyList,
    InvalidGroupCount,
    KeyMismatch,
    NegativeEigenvalue,
    NonConvergedEigen,
    NonFiniteInput,
    NotNormalized,
    TooFewSamples,
)

#: Eigenvalues of a nominally-PSD matrix may round below zero by this much;
#: anything lower means the input was not a covariance matrix.
NEGATIVE_EIGENVALUE_TOL = 1e-10

#: Unit-norm tolerance for CLIP-style embeddings.
CLIP_NORM_TOL = 1e-6


@dataclass(frozen=True)
class GroupHistogram:
    """Occurrence counts over a group domain of known size."""

    counts: Mapping[Hashable, int]
    n_possible: int

    def __post_init__(self) -> None:
        if isinstance(self.n_possible, bool) or not isinstance(self.n_possible, int):
            raise InvalidGroupCount(f"n_possible must be an integer, got {self.n_possible!r}")
        for key, value in self.counts.items():
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise InvalidGroupCount(f"count for {key!r} must be a non-negative integer")

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def diversity(histogram: GroupHistogram) -> float:
    """Normalized entropy of a histogram, in [0, 1].

    Raises:
        EmptyHistogram: if the total count is zero.
        InvalidGroupCount: if n_possible < 2 or more groups are occupied
            than n_possible allows.
    """
    if histogram.n_possible < 2:
        raise InvalidGroupCount(
            f"n_possible must be at least 2, got {histogram.n_possible}"
        )
    total = histogram.total
    if total == 0:
        raise EmptyHistogram("diversity is undefined on an empty histogram")
    occupied = sum(1 for value in histogram.counts.values() if value > 0)
    if occupied > histogram.n_possible:
        raise InvalidGroupCount(
            f"{occupied} occupied groups exceed n_possible={histogram.n_possible}"
        )
    acc = 0.0
    for value in histogram.counts.values():
        if value > 0:
            p = value / total
            acc += p * math.log(p)
    # acc and the denominator are both <= 0; adding 0.0 normalizes -0.0.
    return acc / math.log(1.0 / histogram.n_possible) + 0.0


@dataclass(frozen=True)
class DiversityScores:
    """Diversity along each attribute and over the intersectional groups."""

    age: float
    gender: float
    skin: float
    intersectional: float


@dataclass(frozen=True)
class PromptHistograms:
    """Per-prompt histograms after the no-face penalty has been applied."""

    intersectional: GroupHistogram
    age: GroupHistogram
    gender: GroupHistogram
    skin: GroupHistogram
    unclassified: int

    def scores(self) -> DiversityScores:
        """Diversities for this prompt; all zero when nothing was classified."""
        if self.intersectional.total == 0:
            return DiversityScores(age=0.0, gender=0.0, skin=0.0, intersectional=0.0)
        return DiversityScores(
            age=diversity(self.age),
            gender=diversity(self.gender),
            skin=diversity(self.skin),
            intersectional=diversity(self.intersectional),
        )


def apply_no_face_penalty(
    classified: Sequence[IntersectionalGroup | None],
    space: GroupSpace = GroupSpace(),
) -> PromptHistograms:
    """Histogram a prompt's classifications, penalizing unclassified images.

    Every ``None`` entry (no face found, or a classifier gave up) is
    reassigned to the prompt's most frequent classified group, ties resolving
    to the lexicographically smallest group. The single reassignment feeds
    the intersectional histogram and all three per-attribute histograms. If
    nothing was classified the histograms stay empty and the prompt scores 0.
    """
    known = [group for group in classified if group is not None]
    unclassified = len(classified) - len(known)
    if known:
        frequencies = Counter(known)
        top_count = max(frequencies.values())
        fallback = min(group for group, count in frequencies.items() if count == top_count)
        assigned = known + [fallback] * unclassified
    else:
        assigned = []
    return PromptHistograms(
        intersectional=GroupHistogram(
            counts=dict(Counter(assigned)), n_possible=space.n_intersectional
        ),
        age=GroupHistogram(
            counts=dict(Counter(group.age for group in assigned)), n_possible=space.n_age
        ),
        gender=GroupHistogram(
            counts=dict(Counter(group.gender for group in assigned)), n_possible=space.n_gender
        ),
        skin=GroupHistogram(
            counts=dict(Counter(group.skin for group in assigned)), n_possible=space.n_skin
        ),
        unclassified=unclassified,
    )


# --- prompt alignment ----------------------------------------------------------


def clip_score(image_embs: np.ndarray | Sequence[np.ndarray], text_emb: np.ndarray) -> float:
    """Mean cosine similarity between each image embedding and the prompt's.

    All embeddings must be unit-norm, so the dot product is the cosine.
    """
    try:
        images = np.asarray(image_embs, dtype=np.float64)
    except ValueError as exc:
        raise DimensionMismatch(f"image embeddings are ragged: {exc}") from exc
    if images.ndim == 1:
        images = images.reshape(1, -1) if images.size else images.reshape(0, 0)
    if images.shape[0] == 0:
        raise EmptyList("clip_score needs at least one image embedding")
    if images.ndim != 2:
        raise DimensionMismatch(f"image embeddings must be (n, d), got shape {images.shape}")
    text = np.asarray(text_emb, dtype=np.float64)
    if text.ndim != 1 or text.shape[0] != images.shape[1]:
        raise DimensionMismatch(
            f"text embedding shape {text.shape} does not match images {images.shape}"
        )
    if not (np.isfinite(images).all() and np.isfinite(text).all()):
        raise NonFiniteInput("embeddings contain non-finite values")
    norms = np.sqrt(np.einsum("ij,ij->i", images, images))
    if np.abs(norms - 1.0).max() > CLIP_NORM_TOL:
        worst = int(np.abs(norms - 1.0).argmax())
        raise NotNormalized(f"image embedding {worst} has norm {float(norms[worst])!r}")
    text_norm = float(np.linalg.norm(text))
    if abs(text_norm - 1.0) > CLIP_NORM_TOL:
        raise NotNormalized(f"text embedding has norm {text_norm!r}")
    return float(np.mean(images @ text))


# --- FID -------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureSetStats:
    """Mean and unbiased covariance of a feature set."""

    mean: np.ndarray
    cov: np.ndarray
    n_samples: int


def feature_stats(features: np.ndarray) -> FeatureSetStats:
    """Estimate (mean, covariance) of an (n, d) feature array.

    The covariance uses the unbiased n-1 denominator and is symmetrized to
    cancel accumulation asymmetry.
    """
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"features must be (n, d), got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise TooFewSamples(f"need at least 2 samples, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise NonFiniteInput("features contain non-finite values")
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = centered.T @ centered / (arr.shape[0] - 1)
    cov = (cov + cov.T) / 2.0
    return FeatureSetStats(mean=mean, cov=cov, n_samples=arr.shape[0])


def _psd_eigh(matrix: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose a symmetric PSD matrix, clamping tiny negative noise."""
    try:
        values, vectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NonConvergedEigen(f"eigendecomposition of {what} failed: {exc}") from exc
    smallest = float(values.min())
    if smallest < -NEGATIVE_EIGENVALUE_TOL:
        raise NegativeEigenvalue(
            f"{what} has eigenvalue {smallest!r} below -{NEGATIVE_EIGENVALUE_TOL}"
        )
    return np.clip(values, 0.0, None), vectors


def fid(a: FeatureSetStats, b: FeatureSetStats) -> float:
    """Frechet distance between two Gaussian feature summaries.

    The cross term tr((S_a S_b)^{1/2}) is computed as the trace square root
    of the symmetrized product S_a^{1/2} S_b S_a^{1/2}, which needs only
    symmetric eigendecompositions. The result is clamped at 0 so rounding on
    identical inputs cannot produce a negative distance.
    """
    if a.mean.shape != b.mean.shape or a.cov.shape != b.cov.shape:
        raise DimensionMismatch(
            f"feature stats disagree: mean {a.mean.shape} vs {b.mean.shape}, "
            f"cov {a.cov.shape} vs {b.cov.shape}"
        )
    values_a, vectors_a = _psd_eigh((a.cov + a.cov.T) / 2.0, "covariance A")
    sqrt_a = (vectors_a * np.sqrt(values_a)) @ vectors_a.T
    inner = sqrt_a @ ((b.cov + b.cov.T) / 2.0) @ sqrt_a
    inner = (inner + inner.T) / 2.0
    values_inner, _ = _psd_eigh(inner, "sqrt(A) B sqrt(A)")
    trace_cross = float(np.sqrt(values_inner).sum())

    diff = a.mean - b.mean
    value = float(diff @ diff) + float(np.trace(a.cov) + np.trace(b.cov)) - 2.0 * trace_cross
    return max(value, 0.0)


# --- prompt-set evaluation ----------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    """Diversity, alignment, and distribution metrics over a prompt set."""

    per_prompt: Mapping[str, DiversityScores]
    aggregate: DiversityScores
    no_face_counts: Mapping[str, int]
    clip_per_prompt: Mapping[str, float]
    clip_score: float
    fid: float


def _check_prompt_keys(name: str, expected: set[str], actual: Mapping) -> None:
    keys = set(actual)
    if keys != expected:
        missing = sorted(expected - keys)
        extra = sorted(keys - expected)
        raise KeyMismatch(f"{name}: missing prompts {missing}, unexpected prompts {extra}")


def evaluate_prompt_set(
    per_prompt_classifications: Mapping[str, Sequence[IntersectionalGroup | None]],
    per_prompt_image_embs: Mapping[str, np.ndarray],
    text_embs: Mapping[str, np.ndarray],
    gen_features: np.ndarray | Mapping[str, np.ndarray],
    real_features: np.ndarray | Mapping[str, np.ndarray],
    space: GroupSpace = GroupSpace(),
    fid_per_prompt: bool = False,
) -> EvalReport:
    """Score a full prompt set; aggregation is the mean over prompts.

    All three per-prompt mappings must share the same prompt keys, and each
    prompt must have exactly one image embedding per classification entry.
    FID is pooled over all prompts by default; with ``fid_per_prompt`` the
    feature arguments must be mappings keyed by prompt and the reported FID
    is the mean of per-prompt distances.
    """
    prompts = sorted(per_prompt_classifications)
    if not prompts:
        raise EmptyList("evaluation needs at least one prompt")
    expected = set(prompts)
    _check_prompt_keys("image embeddings", expected, per_prompt_image_embs)
    _check_prompt_keys("text embeddings", expected, text_embs)

    per_prompt: dict[str, DiversityScores] = {}
    no_face: dict[str, int] = {}
    clips: dict[str, float] = {}
    for prompt in prompts:
        classifications = per_prompt_classifications[prompt]
        try:
            images = np.asarray(per_prompt_image_embs[prompt], dtype=np.float64)
        except ValueError as exc:
            raise KeyMismatch(f"prompt {prompt!r}: ragged image embeddings: {exc}") from exc
        if images.ndim != 2 or images.shape[0] != len(classifications):
            raise KeyMismatch(
                f"prompt {prompt!r}: {len(classifications)} classifications but "
                f"image embeddings have shape {images.shape}"
            )
        histograms = apply_no_face_penalty(classifications, space)
        per_prompt[prompt] = histograms.scores()
        no_face[prompt] = histograms.unclassified
        clips[prompt] = clip_score(images, text_embs[prompt])

    aggregate = DiversityScores(
        age=_mean(scores.age for scores in per_prompt.values()),
        gender=_mean(scores.gender for scores in per_prompt.values()),
        skin=_mean(scores.skin for scores in per_prompt.values()),
        intersectional=_mean(scores.intersectional for scores in per_prompt.values()),
    )
    mean_clip = _mean(clips.values())

    if fid_per_prompt:
        if not isinstance(gen_features, Mapping) or not isinstance(real_features, Mapping):
            raise KeyMismatch(
                "per-prompt FID needs feature arrays keyed by prompt on both sides"
            )
        _check_prompt_keys("generated features", expected, gen_features)
        _check_prompt_keys("real features", expected, real_features)
        fid_value = _mean(
            fid(feature_stats(gen_features[prompt]), feature_stats(real_features[prompt]))
            for prompt in prompts
        )
    else:
        if isinstance(gen_features, Mapping) or isinstance(real_features, Mapping):
            raise KeyMismatch("pooled FID expects plain feature arrays, not mappings")
        fid_value = fid(feature_stats(gen_features), feature_stats(real_features))

    return EvalReport(
        per_prompt=per_prompt,
        aggregate=aggregate,
        no_face_counts=no_face,
        clip_per_prompt=clips,
        clip_score=mean_clip,
        fid=fid_value,
    )


def _mean(values) -> float:
    items = list(values)
    return float(sum(items) / len(items))


def report_to_json_dict(report: EvalReport) -> dict:
    def scores_dict(scores: DiversityScores) -> dict:
        return {
            "age": scores.age,
            "gender": scores.gender,
            "skin_tone": scores.skin,
            "intersectional": scores.intersectional,
        }

    return {
        "aggregate": scores_dict(report.aggregate),
        "clip_score": report.clip_score,
        "clip_score_per_prompt": {p: report.clip_per_prompt[p] for p in sorted(report.clip_per_prompt)},
        "fid": report.fid,
        "no_face_counts": {p: report.no_face_counts[p] for p in sorted(report.no_face_counts)},
        "per_prompt": {p: scores_dict(report.per_prompt[p]) for p in sorted(report.per_prompt)},
    }


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_json_dict(report), sort_keys=True, indent=2)


__all__ = [
    "CLIP_NORM_TOL",
    "NEGATIVE_EIGENVALUE_TOL",
    "DiversityScores",
    "EvalReport",
    "FeatureSetStats",
    "GroupHistogram",
    "PromptHistograms",
    "apply_no_face_penalty",
    "clip_score",
    "diversity",
    "evaluate_prompt_set",
    "feature_stats",
    "fid",
    "report_to_json",
    "report_to_json_dict",
]
