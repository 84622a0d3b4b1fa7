from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairref import errors
from fairref.color import delta_e76, srgb8_to_lab, srgb8_to_linear, srgb_to_linear
from fairref.demographics import (
    ATTRIBUTES,
    AgeGroup,
    Gender,
    GroupSpace,
    IntersectionalGroup,
    MstPalette,
    SkinTone,
    bucket_age,
    classify_gender,
    classify_skin_tone,
    default_universe,
    is_skin_pixel,
    load_palette,
    skin_pixel_mask,
)

# --- age buckets -----------------------------------------------------------------


@pytest.mark.parametrize(
    "age,label",
    [
        (0, "<20"),
        (19, "<20"),
        (20, "20-29"),
        (29, "20-29"),
        (30, "30-39"),
        (39, "30-39"),
        (40, "40-49"),
        (49, "40-49"),
        (50, "50-59"),
        (59, "50-59"),
        (60, "60+"),
        (97, "60+"),
    ],
)
def test_bucket_age_boundaries(age, label):
    assert bucket_age(age).label == label


def test_bucket_age_rejects_bad_input():
    with pytest.raises(errors.InvalidAge):
        bucket_age(-1)
    with pytest.raises(errors.InvalidAge):
        bucket_age(30.5)
    with pytest.raises(errors.InvalidAge):
        bucket_age(True)
    with pytest.raises(errors.InvalidAge):
        bucket_age("30")


@given(st.integers(min_value=0, max_value=200))
def test_bucket_age_matches_rule_oracle(age):
    if age < 20:
        expected = AgeGroup.UNDER_20
    elif age >= 60:
        expected = AgeGroup.AGE_60_PLUS
    else:
        expected = AgeGroup(age // 10 - 1)
    assert bucket_age(age) is expected


@given(st.integers(min_value=0, max_value=199))
def test_bucket_age_monotone(age):
    assert bucket_age(age + 1) >= bucket_age(age)


def test_age_group_labels_round_trip():
    for group in AgeGroup:
        assert AgeGroup.from_label(group.label) is group
    with pytest.raises(errors.InvalidAttribute):
        AgeGroup.from_label("20s")


# --- gender ----------------------------------------------------------------------


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def test_classify_gender_argmax_and_tie():
    male = np.zeros(4)
    male[0] = 1.0
    female = np.zeros(4)
    female[1] = 1.0
    assert classify_gender(_unit(np.array([0.9, 0.1, 0, 0])), male, female) is Gender.MALE
    assert classify_gender(_unit(np.array([0.1, 0.9, 0, 0])), male, female) is Gender.FEMALE
    # exact tie resolves to male
    tie = _unit(np.array([1.0, 1.0, 0.0, 0.0]))
    assert classify_gender(tie, male, female) is Gender.MALE


def test_classify_gender_validates_inputs():
    male = np.zeros(3)
    male[0] = 1.0
    female = np.zeros(3)
    female[1] = 1.0
    with pytest.raises(errors.NotNormalized):
        classify_gender(np.array([1.0, 1.0, 0.0]), male, female)
    with pytest.raises(errors.DimensionMismatch):
        classify_gender(np.array([1.0, 0.0]), male, female)
    bad = np.array([np.nan, 0.0, 0.0])
    with pytest.raises(errors.NonFiniteInput):
        classify_gender(bad, male, female)


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_classify_gender_matches_dot_product_oracle(seed):
    gen = np.random.default_rng(seed)
    image = _unit(gen.normal(size=6))
    male = _unit(gen.normal(size=6))
    female = _unit(gen.normal(size=6))
    expected = Gender.MALE if float(image @ male) >= float(image @ female) else Gender.FEMALE
    assert classify_gender(image, male, female) is expected


def test_gender_labels():
    assert Gender.from_label("male") is Gender.MALE
    assert Gender.from_label("female") is Gender.FEMALE
    with pytest.raises(errors.InvalidAttribute):
        Gender.from_label("Male")


# --- groups and spaces -------------------------------------------------------------


def test_skin_tone_domain():
    assert SkinTone(1) < SkinTone(10)
    for bad in (0, 11, 1.5, True, "3"):
        with pytest.raises(errors.InvalidAttribute):
            SkinTone(bad)


def test_intersectional_group_round_trip_and_order():
    group = IntersectionalGroup(AgeGroup.AGE_30_39, Gender.FEMALE, SkinTone(7))
    data = group.to_json_dict()
    assert data == {"age_group": "30-39", "gender": "female", "skin_tone": 7}
    assert IntersectionalGroup.from_json_dict(data) == group
    assert group["age"] is AgeGroup.AGE_30_39
    assert group["gender"] is Gender.FEMALE
    assert group["skin"] == SkinTone(7)
    with pytest.raises(KeyError):
        group["height"]
    smaller = IntersectionalGroup(AgeGroup.AGE_20_29, Gender.FEMALE, SkinTone(10))
    assert smaller < group  # lexicographic on (age, gender, skin)


def test_group_space_defaults_and_universe():
    space = GroupSpace()
    assert space.attribute_counts() == {"age": 6, "gender": 2, "skin": 10}
    assert space.n_intersectional == 120
    universe = default_universe()
    assert len(universe) == 120
    assert len(set(universe)) == 120
    assert universe == tuple(sorted(universe))
    assert ATTRIBUTES == ("age", "gender", "skin")
    with pytest.raises(errors.InvalidAttribute):
        GroupSpace(n_age=0)


# --- skin pixel rule ---------------------------------------------------------------


@pytest.mark.parametrize(
    "rgb,expected",
    [
        ((200, 150, 120), True),
        ((255, 255, 255), False),  # max-min == 0
        ((80, 80, 80), False),
        ((96, 41, 21), True),  # every clause passes: spread 75, |R-G| 55
        ((95, 150, 120), False),  # R not > 95
        ((200, 40, 120), False),  # G not > 40
        ((200, 150, 20), False),  # B not > 20
        ((120, 110, 105), False),  # max-min == 15, needs > 15
        ((120, 105, 30), False),  # |R-G| == 15, needs > 15
        ((150, 200, 120), False),  # R not > G
        ((150, 100, 200), False),  # R not > B
    ],
)
def test_is_skin_pixel_cases(rgb, expected):
    assert is_skin_pixel(*rgb) is expected
    mask = skin_pixel_mask(np.array([rgb], dtype=np.uint8))
    assert bool(mask[0]) is expected


def _skin_rule_oracle(r: int, g: int, b: int) -> bool:
    return (
        r > 95
        and g > 40
        and b > 20
        and max(r, g, b) - min(r, g, b) > 15
        and abs(r - g) > 15
        and r > g
        and r > b
    )


@given(
    st.integers(min_value=0, max_value=255),
    st.integers(min_value=0, max_value=255),
    st.integers(min_value=0, max_value=255),
)
def test_skin_rule_matches_oracle(r, g, b):
    assert is_skin_pixel(r, g, b) is _skin_rule_oracle(r, g, b)


def test_skin_pixel_mask_matches_scalar_on_random_block(rng):
    pixels = rng.integers(0, 256, size=(2000, 3), dtype=np.uint8)
    mask = skin_pixel_mask(pixels)
    for i in range(0, 2000, 97):
        r, g, b = (int(c) for c in pixels[i])
        assert bool(mask[i]) is is_skin_pixel(r, g, b)


# --- color conversion ---------------------------------------------------------------


def test_srgb_to_linear_breakpoints():
    assert srgb_to_linear(0.0) == 0.0
    assert srgb_to_linear(1.0) == pytest.approx(1.0, abs=1e-12)
    # below the toe the curve is linear
    assert srgb_to_linear(0.04045) == pytest.approx(0.04045 / 12.92, abs=1e-15)
    assert srgb_to_linear(0.5) == pytest.approx(((0.5 + 0.055) / 1.055) ** 2.4, abs=1e-15)


def test_srgb8_white_maps_to_lab_white():
    l, a, b = srgb8_to_lab(255, 255, 255)
    assert l == pytest.approx(100.0, abs=1e-3)
    assert a == pytest.approx(0.0, abs=1e-3)
    assert b == pytest.approx(0.0, abs=1e-3)
    assert srgb8_to_lab(0, 0, 0)[0] == pytest.approx(0.0, abs=1e-9)


def test_delta_e76_is_euclidean():
    assert delta_e76((50.0, 0.0, 0.0), (50.0, 3.0, 4.0)) == pytest.approx(5.0, abs=1e-12)
    assert delta_e76((10.0, 2.0, -3.0), (10.0, 2.0, -3.0)) == 0.0


# --- palette and skin-tone classification ----------------------------------------------


def test_bundled_palette_shape():
    palette = load_palette()
    assert len(palette.swatches) == 10
    assert palette.swatches[0] == (246, 237, 228)
    assert palette.swatches[9] == (41, 36, 32)
    assert palette.swatch(SkinTone(6)) == (160, 126, 86)


def test_palette_validation():
    with pytest.raises(errors.InvalidPalette):
        MstPalette(swatches=((1, 2, 3),) * 9)
    with pytest.raises(errors.InvalidPalette):
        MstPalette(swatches=((1, 2, 3),) * 9 + ((256, 0, 0),))


def test_load_palette_rejects_malformed(tmp_path):
    bad = tmp_path / "pal.json"
    bad.write_text("{}")
    with pytest.raises(errors.InvalidPalette):
        load_palette(bad)
    bad.write_text('{"swatches": []}')
    with pytest.raises(errors.InvalidPalette):
        load_palette(bad)


def test_swatch_fixed_points_for_rule_passing_tones():
    palette = load_palette()
    passing = []
    for tone_index, rgb in enumerate(palette.swatches, start=1):
        block = np.array([rgb], dtype=np.uint8)
        if bool(skin_pixel_mask(block)[0]):
            passing.append(tone_index)
            assert classify_skin_tone(block, palette).mst == tone_index
    # the mid-scale swatches pass the rule; extremes are filtered by it
    assert passing == [4, 5, 6, 7, 8]


def test_classify_skin_tone_averages_in_linear_space():
    palette = load_palette()
    # two pixels straddling swatch 6; the linear-space mean decides
    pixels = np.array([[170, 136, 96], [150, 116, 76]], dtype=np.uint8)
    tone = classify_skin_tone(pixels, palette)
    mean_linear = np.mean(
        [srgb8_to_linear(*(int(c) for c in px)) for px in pixels], axis=0
    )
    from fairref.color import linear_rgb_to_lab

    mean_lab = linear_rgb_to_lab(*mean_linear)
    distances = [delta_e76(mean_lab, lab) for lab in palette.labs()]
    assert tone.mst == int(np.argmin(distances)) + 1


def test_classify_skin_tone_ignores_non_skin_pixels():
    palette = load_palette()
    swatch6 = np.array(palette.swatch(SkinTone(6)), dtype=np.uint8)
    gray = np.array([90, 90, 90], dtype=np.uint8)  # fails the rule
    pixels = np.stack([swatch6, gray, swatch6])
    assert classify_skin_tone(pixels, palette).mst == 6


def test_classify_skin_tone_accepts_image_layout():
    palette = load_palette()
    image = np.tile(np.array(palette.swatch(SkinTone(5)), dtype=np.uint8), (4, 3, 1))
    assert image.shape == (4, 3, 3)
    assert classify_skin_tone(image, palette).mst == 5


def test_classify_skin_tone_no_skin_pixels():
    palette = load_palette()
    gray = np.full((5, 3), 90, dtype=np.uint8)
    with pytest.raises(errors.NoSkinPixels):
        classify_skin_tone(gray, palette)


def test_classify_skin_tone_tie_prefers_lower_tone():
    # palette with two identical swatches: the tie must resolve to the lower index
    swatches = tuple((200, 150, 120) if i in (2, 3) else (10 + i, 5, 5) for i in range(10))
    palette = MstPalette(swatches=swatches)
    pixels = np.array([[200, 150, 120]], dtype=np.uint8)
    assert classify_skin_tone(pixels, palette).mst == 3


def test_classify_skin_tone_rejects_bad_arrays():
    palette = load_palette()
    with pytest.raises(errors.DimensionMismatch):
        classify_skin_tone(np.zeros((3, 4), dtype=np.uint8), palette)
    with pytest.raises(errors.DimensionMismatch):
        classify_skin_tone(np.array([[0.5, 0.5, 0.5]]), palette)
    with pytest.raises(errors.DimensionMismatch):
        classify_skin_tone(np.array([[300, 100, 100]], dtype=np.int64), palette)


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_classify_skin_tone_matches_nearest_lab_oracle(seed):
    gen = np.random.default_rng(seed)
    palette = load_palette()
    pixels = gen.integers(96, 256, size=(8, 3)).astype(np.int64)
    pixels[:, 1] = gen.integers(41, 200, size=8)
    pixels[:, 2] = gen.integers(21, 180, size=8)
    mask = skin_pixel_mask(pixels)
    if not mask.any():
        with pytest.raises(errors.NoSkinPixels):
            classify_skin_tone(pixels, palette)
        return
    surviving = pixels[mask]
    mean_linear = np.mean(
        [srgb8_to_linear(*(int(c) for c in px)) for px in surviving], axis=0
    )
    from fairref.color import linear_rgb_to_lab

    mean_lab = linear_rgb_to_lab(*mean_linear)
    distances = np.array([delta_e76(mean_lab, lab) for lab in palette.labs()])
    expected = int(np.argmin(distances)) + 1
    got = classify_skin_tone(pixels, palette).mst
    if not math.isclose(sorted(distances)[0], sorted(distances)[1], rel_tol=1e-9):
        assert got == expected
