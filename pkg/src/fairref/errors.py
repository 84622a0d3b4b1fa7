"""Exception types raised across the package.

Every error that callers are expected to handle derives from
:class:`FairrefError` so that CLI entry points can catch one base class,
report to stderr, and exit nonzero.
"""

from __future__ import annotations


class FairrefError(Exception):
    """Base class for all errors raised by this package."""


# --- vector / array validation ---------------------------------------------


class DimensionMismatch(FairrefError):
    """Operands have incompatible shapes or dimensions."""


class NotNormalized(FairrefError):
    """A vector required to be unit-norm is outside tolerance."""


class NonFiniteInput(FairrefError):
    """An input array contains NaN or infinity."""


class ZeroVector(FairrefError):
    """A vector with (numerically) zero norm cannot be normalized."""


# --- embedding store ---------------------------------------------------------


class DuplicateId(FairrefError):
    """Two rows in a store share the same identifier."""


class EmptyStore(FairrefError):
    """The operation requires a store with at least one row."""


class StoreFormatError(FairrefError):
    """A serialized store or weight file violates the binary format."""


class BadMagic(StoreFormatError):
    """The file does not start with the expected magic bytes."""


class TruncatedFile(StoreFormatError):
    """The file ends before the declared payload is complete."""


class VersionMismatch(StoreFormatError):
    """The file declares an unsupported format version."""


# --- retrieval and selection -------------------------------------------------


class EmptyPrompt(FairrefError):
    """A prompt string must be non-empty."""


class EmptyGroupSet(FairrefError):
    """Weight computation needs at least one intersectional group."""


class NoAnnotatedCandidates(FairrefError):
    """Balanced selection received no candidate with demographic labels."""


class NonPositiveK(FairrefError):
    """The number of items to select must be at least 1."""


class InvalidSeed(FairrefError):
    """Seeds must be integers in [0, 2**64)."""


# --- demographic classification ----------------------------------------------


class InvalidAge(FairrefError):
    """Ages must be non-negative integers."""


class InvalidAttribute(FairrefError):
    """A demographic attribute value or label is out of its domain."""


class NoSkinPixels(FairrefError):
    """No pixel survived the skin filter; tone cannot be estimated."""


class InvalidPalette(FairrefError):
    """A skin-tone palette file is malformed."""


# --- metrics -------------------------------------------------------------------


class EmptyHistogram(FairrefError):
    """Diversity is undefined on a histogram with zero total count."""


class InvalidGroupCount(FairrefError):
    """A histogram violates its count or cardinality constraints."""


class EmptyList(FairrefError):
    """The metric requires at least one element."""


class TooFewSamples(FairrefError):
    """Covariance estimation needs at least two samples."""


class NonConvergedEigen(FairrefError):
    """The symmetric eigendecomposition failed to converge."""


class NegativeEigenvalue(FairrefError):
    """A matrix expected to be PSD has an eigenvalue below -1e-10."""


class KeyMismatch(FairrefError):
    """Per-prompt inputs disagree on prompt keys or lengths."""


# --- conditioning --------------------------------------------------------------


class MissingEmbedding(FairrefError):
    """A required embedding is absent (query without one, or an id not in the store)."""


# --- synthetic fixtures ---------------------------------------------------------


class InvalidPrior(FairrefError):
    """A group prior must be non-empty, non-negative, and sum to 1."""


class InvalidFraction(FairrefError):
    """A fraction must lie strictly between 0 and 1."""


# --- configuration and I/O -------------------------------------------------------


class InvalidConfig(FairrefError):
    """A run configuration value is out of range or of the wrong type."""


class ParseError(FairrefError):
    """An input file failed to parse; the message names file and line."""


class BackendUnavailable(FairrefError):
    """The generation backend could not be reached after retries."""
