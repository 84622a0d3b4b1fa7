"""Demographic attributes and classifiers for face crops and embeddings.

Three attributes are modeled: age group (6 buckets), binary perceived gender,
and a 10-point skin-tone scale. Their product forms the intersectional group
used by balanced selection and the diversity metrics.

Classifiers here are deliberately lightweight: age arrives as an integer
estimate from an upstream face analyzer, gender is a nearest-prompt decision
between two precomputed text embeddings, and skin tone is a nearest-swatch
match in CIELAB over pixels that pass an RGB skin filter.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .color import delta_e76, linear_rgb_to_lab, srgb8_to_lab
from .errors import (
    DimensionMismatch,
    InvalidAge,
    InvalidAttribute,
    InvalidPalette,
    NonFiniteInput,
    NoSkinPixels,
    NotNormalized,
)

#: Prompt pair whose embeddings drive :func:`classify_gender`. The embeddings
#: themselves are produced upstream by the same text encoder as the queries.
GENDER_PROMPTS = (
    "photo of a male or a man or a boy",
    "photo of a female or a woman or a girl",
)

#: Unit-norm tolerance for classifier inputs.
NORM_TOL = 1e-6


class AgeGroup(enum.IntEnum):
    """Age buckets; integer order follows chronological order."""

    UNDER_20 = 0
    AGE_20_29 = 1
    AGE_30_39 = 2
    AGE_40_49 = 3
    AGE_50_59 = 4
    AGE_60_PLUS = 5

    @property
    def label(self) -> str:
        return _AGE_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "AgeGroup":
        try:
            return _AGE_BY_LABEL[label]
        except KeyError:
            raise InvalidAttribute(f"unknown age group label: {label!r}") from None


_AGE_LABELS = {
    AgeGroup.UNDER_20: "<20",
    AgeGroup.AGE_20_29: "20-29",
    AgeGroup.AGE_30_39: "30-39",
    AgeGroup.AGE_40_49: "40-49",
    AgeGroup.AGE_50_59: "50-59",
    AgeGroup.AGE_60_PLUS: "60+",
}
_AGE_BY_LABEL = {label: group for group, label in _AGE_LABELS.items()}


class Gender(enum.IntEnum):
    """Perceived binary gender; a coarse label, not an identity claim."""

    MALE = 0
    FEMALE = 1

    @property
    def label(self) -> str:
        return "male" if self is Gender.MALE else "female"

    @classmethod
    def from_label(cls, label: str) -> "Gender":
        if label == "male":
            return Gender.MALE
        if label == "female":
            return Gender.FEMALE
        raise InvalidAttribute(f"unknown gender label: {label!r}")


@dataclass(frozen=True, order=True)
class SkinTone:
    """One point on the 10-step skin-tone scale (1 = lightest)."""

    mst: int

    def __post_init__(self) -> None:
        if isinstance(self.mst, bool) or not isinstance(self.mst, (int, np.integer)):
            raise InvalidAttribute(f"skin tone must be an integer, got {self.mst!r}")
        if not 1 <= self.mst <= 10:
            raise InvalidAttribute(f"skin tone must lie in [1, 10], got {self.mst}")


@dataclass(frozen=True, order=True)
class IntersectionalGroup:
    """A (age, gender, skin tone) triple; ordering is lexicographic."""

    age: AgeGroup
    gender: Gender
    skin: SkinTone

    def __getitem__(self, attribute: str) -> AgeGroup | Gender | SkinTone:
        if attribute == "age":
            return self.age
        if attribute == "gender":
            return self.gender
        if attribute == "skin":
            return self.skin
        raise KeyError(attribute)

    def to_json_dict(self) -> dict:
        return {
            "age_group": self.age.label,
            "gender": self.gender.label,
            "skin_tone": self.skin.mst,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "IntersectionalGroup":
        return cls(
            age=AgeGroup.from_label(data["age_group"]),
            gender=Gender.from_label(data["gender"]),
            skin=SkinTone(int(data["skin_tone"])),
        )


#: Attribute names, in the order used for lexicographic comparisons.
ATTRIBUTES = ("age", "gender", "skin")


@dataclass(frozen=True)
class GroupSpace:
    """Cardinality of each demographic attribute.

    The defaults describe the scheme used throughout: 6 age buckets, 2
    genders, 10 skin tones. A coarser scheme (e.g. 3 skin-tone levels) only
    needs different cardinalities here; the selection and diversity code is
    agnostic to what the levels mean.
    """

    n_age: int = 6
    n_gender: int = 2
    n_skin: int = 10

    def __post_init__(self) -> None:
        for name, value in self.attribute_counts().items():
            if not isinstance(value, int) or value < 1:
                raise InvalidAttribute(f"cardinality of {name} must be a positive integer")

    def attribute_counts(self) -> dict[str, int]:
        return {"age": self.n_age, "gender": self.n_gender, "skin": self.n_skin}

    @property
    def n_intersectional(self) -> int:
        return self.n_age * self.n_gender * self.n_skin


def default_universe() -> tuple[IntersectionalGroup, ...]:
    """All 120 intersectional groups of the default scheme, in sorted order."""
    return tuple(
        IntersectionalGroup(age, gender, SkinTone(mst))
        for age, gender, mst in itertools.product(AgeGroup, Gender, range(1, 11))
    )


def bucket_age(years: int) -> AgeGroup:
    """Map an integer age estimate to its bucket."""
    if not isinstance(years, (int, np.integer)) or isinstance(years, bool):
        raise InvalidAge(f"age must be an integer, got {years!r}")
    if years < 0:
        raise InvalidAge(f"age must be non-negative, got {years}")
    if years < 20:
        return AgeGroup.UNDER_20
    if years < 30:
        return AgeGroup.AGE_20_29
    if years < 40:
        return AgeGroup.AGE_30_39
    if years < 50:
        return AgeGroup.AGE_40_49
    if years < 60:
        return AgeGroup.AGE_50_59
    return AgeGroup.AGE_60_PLUS


def _check_unit(name: str, vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionMismatch(f"{name} must be a 1-d vector, got shape {vec.shape}")
    if not np.isfinite(vec).all():
        raise NonFiniteInput(f"{name} contains non-finite values")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > NORM_TOL:
        raise NotNormalized(f"{name} has norm {norm!r}, expected 1 within {NORM_TOL}")
    return vec


def classify_gender(
    image_emb: np.ndarray, male_emb: np.ndarray, female_emb: np.ndarray
) -> Gender:
    """Assign the gender whose prompt embedding is most similar to the image.

    All three embeddings must be unit-norm and share one dimension. An exact
    similarity tie resolves to :attr:`Gender.MALE` so the decision is total.
    """
    image = _check_unit("image embedding", image_emb)
    male = _check_unit("male prompt embedding", male_emb)
    female = _check_unit("female prompt embedding", female_emb)
    if not (image.shape == male.shape == female.shape):
        raise DimensionMismatch(
            f"embedding dims differ: {image.shape[0]}, {male.shape[0]}, {female.shape[0]}"
        )
    return Gender.MALE if np.dot(image, male) >= np.dot(image, female) else Gender.FEMALE


# --- skin tone ----------------------------------------------------------------


def is_skin_pixel(r: int, g: int, b: int) -> bool:
    """RGB skin filter for uniform-daylight lighting.

    A pixel counts as skin when all hold: R > 95, G > 40, B > 20,
    max(R,G,B) - min(R,G,B) > 15, |R - G| > 15, R > G, R > B.
    """
    return (
        r > 95
        and g > 40
        and b > 20
        and max(r, g, b) - min(r, g, b) > 15
        and abs(r - g) > 15
        and r > g
        and r > b
    )


def skin_pixel_mask(pixels: np.ndarray) -> np.ndarray:
    """Vectorized :func:`is_skin_pixel` over an (n, 3) integer array."""
    r = pixels[:, 0].astype(np.int64)
    g = pixels[:, 1].astype(np.int64)
    b = pixels[:, 2].astype(np.int64)
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    return (
        (r > 95)
        & (g > 40)
        & (b > 20)
        & (mx - mn > 15)
        & (np.abs(r - g) > 15)
        & (r > g)
        & (r > b)
    )


@dataclass(frozen=True)
class MstPalette:
    """Ten reference swatches, index i (0-based) holding tone i+1."""

    swatches: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        if len(self.swatches) != 10:
            raise InvalidPalette(f"palette must hold exactly 10 swatches, got {len(self.swatches)}")
        for rgb in self.swatches:
            if len(rgb) != 3 or any(not isinstance(c, int) or not 0 <= c <= 255 for c in rgb):
                raise InvalidPalette(f"swatch {rgb!r} is not three ints in [0, 255]")

    def swatch(self, tone: SkinTone) -> tuple[int, int, int]:
        return self.swatches[tone.mst - 1]

    def labs(self) -> list[tuple[float, float, float]]:
        return [srgb8_to_lab(*rgb) for rgb in self.swatches]


def load_palette(path: str | Path | None = None) -> MstPalette:
    """Load a palette config; ``None`` loads the bundled default."""
    if path is None:
        text = resources.files("fairref.data").joinpath("mst_palette.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        data = json.loads(text)
        entries = data["swatches"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InvalidPalette(f"palette file is not valid JSON with a 'swatches' key: {exc}") from exc
    if not isinstance(entries, list) or len(entries) != 10:
        raise InvalidPalette("palette must list exactly 10 swatches")
    by_index: dict[int, tuple[int, int, int]] = {}
    for entry in entries:
        try:
            index = int(entry["tone"])
            rgb = tuple(int(c) for c in entry["rgb"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidPalette(f"bad swatch entry {entry!r}") from exc
        if index in by_index:
            raise InvalidPalette(f"duplicate tone index {index}")
        by_index[index] = rgb  # type: ignore[assignment]
    if sorted(by_index) != list(range(1, 11)):
        raise InvalidPalette("swatch tone indices must be exactly 1..10")
    return MstPalette(swatches=tuple(by_index[i] for i in range(1, 11)))


def classify_skin_tone(pixels: np.ndarray, palette: MstPalette) -> SkinTone:
    """Estimate the skin tone of a face crop.

    Pixels failing :func:`is_skin_pixel` are discarded; the survivors are
    averaged channel-wise in linear sRGB, and the average is matched to the
    nearest palette swatch by CIE76 distance in CIELAB. Distance ties resolve
    to the lower tone index.

    Args:
        pixels: integer array shaped (n, 3) or (h, w, 3), channels in [0, 255].
        palette: reference swatches.

    Raises:
        NoSkinPixels: if the filter removes every pixel.
    """
    arr = np.asarray(pixels)
    if arr.ndim == 3 and arr.shape[-1] == 3:
        arr = arr.reshape(-1, 3)
    if arr.ndim != 2 or arr.shape[-1] != 3:
        raise DimensionMismatch(f"pixels must be (n, 3) or (h, w, 3), got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise DimensionMismatch(f"pixels must be integer-typed, got dtype {arr.dtype}")
    if arr.size == 0:
        raise NoSkinPixels("empty pixel array")
    if arr.min() < 0 or arr.max() > 255:
        raise DimensionMismatch("pixel channels must lie in [0, 255]")

    kept = arr[skin_pixel_mask(arr)]
    if kept.shape[0] == 0:
        raise NoSkinPixels(f"none of {arr.shape[0]} pixels passed the skin filter")

    # Average in linear light, then convert the single average color to Lab.
    linear = _linearize_channels(kept)
    mean_r, mean_g, mean_b = (float(c) for c in linear.mean(axis=0))
    mean_lab = linear_rgb_to_lab(mean_r, mean_g, mean_b)

    best_tone = 1
    best_dist = float("inf")
    for index, lab in enumerate(palette.labs(), start=1):
        dist = delta_e76(mean_lab, lab)
        if dist < best_dist:
            best_tone, best_dist = index, dist
    return SkinTone(best_tone)


def _linearize_channels(pixels: np.ndarray) -> np.ndarray:
    scaled = pixels.astype(np.float64) / 255.0
    return np.where(scaled <= 0.04045, scaled / 12.92, ((scaled + 0.055) / 1.055) ** 2.4)


__all__ = [
    "GENDER_PROMPTS",
    "NORM_TOL",
    "ATTRIBUTES",
    "AgeGroup",
    "Gender",
    "SkinTone",
    "IntersectionalGroup",
    "GroupSpace",
    "MstPalette",
    "bucket_age",
    "classify_gender",
    "classify_skin_tone",
    "default_universe",
    "is_skin_pixel",
    "load_palette",
    "skin_pixel_mask",
]
