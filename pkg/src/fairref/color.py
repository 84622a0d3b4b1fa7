"""sRGB to CIELAB conversion and the CIE76 color difference.

All conversions assume the sRGB color space with the D65 reference white
(2-degree observer), which is the standard assumption for images without an
embedded profile.
"""

from __future__ import annotations

import math

# D65 reference white, 2-degree observer.
_XN, _YN, _ZN = 95.047, 100.0, 108.883

# Linear-RGB -> XYZ matrix rows for sRGB primaries.
_RGB_TO_XYZ = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)


def srgb_to_linear(channel: float) -> float:
    """Invert the sRGB transfer function for one channel in [0, 1]."""
    if channel <= 0.04045:
        return channel / 12.92
    return ((channel + 0.055) / 1.055) ** 2.4


def srgb8_to_linear(r: int, g: int, b: int) -> tuple[float, float, float]:
    """Convert 8-bit sRGB channels to linear RGB in [0, 1]."""
    return (
        srgb_to_linear(r / 255.0),
        srgb_to_linear(g / 255.0),
        srgb_to_linear(b / 255.0),
    )


def _lab_f(t: float) -> float:
    # CIE tristimulus compression; linear segment below (6/29)^3.
    if t > 0.008856451679035631:
        return t ** (1.0 / 3.0)
    return 7.787037037037035 * t + 4.0 / 29.0


def linear_rgb_to_lab(r: float, g: float, b: float) -> tuple[float, float, float]:
    """Convert linear RGB in [0, 1] to CIELAB (L*, a*, b*) under D65."""
    x = (_RGB_TO_XYZ[0][0] * r + _RGB_TO_XYZ[0][1] * g + _RGB_TO_XYZ[0][2] * b) * 100.0
    y = (_RGB_TO_XYZ[1][0] * r + _RGB_TO_XYZ[1][1] * g + _RGB_TO_XYZ[1][2] * b) * 100.0
    z = (_RGB_TO_XYZ[2][0] * r + _RGB_TO_XYZ[2][1] * g + _RGB_TO_XYZ[2][2] * b) * 100.0
    fx = _lab_f(x / _XN)
    fy = _lab_f(y / _YN)
    fz = _lab_f(z / _ZN)
    return (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))


def srgb8_to_lab(r: int, g: int, b: int) -> tuple[float, float, float]:
    """Convert 8-bit sRGB channels straight to CIELAB."""
    return linear_rgb_to_lab(*srgb8_to_linear(r, g, b))


def delta_e76(lab_a: tuple[float, float, float], lab_b: tuple[float, float, float]) -> float:
    """CIE76 color difference: Euclidean distance in CIELAB."""
    return math.sqrt(
        (lab_a[0] - lab_b[0]) ** 2
        + (lab_a[1] - lab_b[1]) ** 2
        + (lab_a[2] - lab_b[2]) ** 2
    )
