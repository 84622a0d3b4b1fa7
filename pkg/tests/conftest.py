from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairref.demographics import AgeGroup, Gender, IntersectionalGroup, SkinTone
from fairref.store import Annotation, Candidate, build_store

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def make_group(age: int = 1, gender: int = 0, skin: int = 5) -> IntersectionalGroup:
    return IntersectionalGroup(age=AgeGroup(age), gender=Gender(gender), skin=SkinTone(skin))


def make_candidate(row: int, score: float, group: IntersectionalGroup | None) -> Candidate:
    return Candidate(row=row, id=f"cand-{row:05d}", score=score, group=group)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def annotated_store():
    """A 60-row unit-norm store cycling through ages, genders, and tones."""
    gen = np.random.default_rng(42)
    matrix = gen.normal(size=(60, 8))
    annotations = [
        Annotation(
            age=AgeGroup(i % 6),
            gender=Gender(i % 2),
            skin=SkinTone(i % 10 + 1),
            age_years=18 + i % 50,
        )
        for i in range(60)
    ]
    return build_store(matrix, [f"img-{i:03d}" for i in range(60)], annotations)
