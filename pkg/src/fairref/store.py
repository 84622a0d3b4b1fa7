"""In-memory embedding store with exact brute-force retrieval.

The store holds a row-major float32 matrix of unit-norm embeddings plus one
annotation record per row. Retrieval is an exact full scan: scores are the
float64 dot products of the stored rows with the query, so results match a
naive per-row oracle bit for bit. A float32 BLAS pass is used only to
prefilter candidates, with a margin wide enough to cover its worst-case
rounding error, so the prefilter can never change the result.

On disk a store is two files: ``<path>`` holds the matrix in a small binary
format (magic ``FRG1``) and ``<path>.meta.jsonl`` holds one JSON record per
row. Both serializers are deterministic, so save -> load -> save reproduces
both files byte for byte.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .demographics import AgeGroup, Gender, IntersectionalGroup, SkinTone
from .errors import (
    BadMagic,
    DimensionMismatch,
    DuplicateId,
    EmptyStore,
    NonFiniteInput,
    NonPositiveK,
    NotNormalized,
    ParseError,
    StoreFormatError,
    TruncatedFile,
    VersionMismatch,
    ZeroVector,
)

MAGIC = b"FRG1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")  # magic, version, dim, count

#: Row norms must sit within this distance of 1 when a store is loaded.
ROW_NORM_TOL = 1e-5
#: Queries must be unit-norm within this tolerance.
QUERY_NORM_TOL = 1e-6

# Below this row count a direct float64 scan is cheap enough to skip the
# float32 prefilter entirely.
_PREFILTER_MIN_ROWS = 4096


@dataclass(frozen=True)
class Annotation:
    """Demographic labels for one stored image; any attribute may be absent."""

    age: AgeGroup | None = None
    gender: Gender | None = None
    skin: SkinTone | None = None
    age_years: int | None = None

    @property
    def group(self) -> IntersectionalGroup | None:
        """The intersectional group, defined only when all three labels exist."""
        if self.age is None or self.gender is None or self.skin is None:
            return None
        return IntersectionalGroup(self.age, self.gender, self.skin)

    def to_json_dict(self, record_id: str) -> dict:
        return {
            "id": record_id,
            "age_group": None if self.age is None else self.age.label,
            "gender": None if self.gender is None else self.gender.label,
            "skin_tone": None if self.skin is None else self.skin.mst,
            "age_years": self.age_years,
        }


UNANNOTATED = Annotation()


@dataclass(frozen=True)
class EmbeddingStore:
    """Unit-norm embeddings with aligned ids and annotations."""

    matrix: np.ndarray
    ids: tuple[str, ...]
    annotations: tuple[Annotation, ...]

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise DimensionMismatch(f"store matrix must be 2-d, got shape {self.matrix.shape}")
        if len(self.ids) != self.matrix.shape[0] or len(self.annotations) != self.matrix.shape[0]:
            raise DimensionMismatch(
                f"row count {self.matrix.shape[0]} does not match "
                f"{len(self.ids)} ids / {len(self.annotations)} annotations"
            )

    @property
    def count(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def row_of(self, record_id: str) -> int | None:
        return self._row_index().get(record_id)

    _index_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def _row_index(self) -> dict[str, int]:
        cached = self._index_cache.get("by_id")
        if cached is None:
            cached = {record_id: row for row, record_id in enumerate(self.ids)}
            self._index_cache["by_id"] = cached
        return cached


@dataclass(frozen=True)
class Candidate:
    """One retrieved row: position, identity, score, and optional labels."""

    row: int
    id: str
    score: float
    group: IntersectionalGroup | None


def build_store(
    embeddings: np.ndarray,
    ids: Sequence[str],
    annotations: Sequence[Annotation] | None = None,
) -> EmbeddingStore:
    """Validate inputs, L2-normalize every row, and assemble a store.

    Args:
        embeddings: (count, dim) array; any float dtype, finite, no zero rows.
        ids: unique non-empty identifiers, one per row.
        annotations: optional labels, one per row; ``None`` means unannotated.

    Raises:
        DimensionMismatch, NonFiniteInput, ZeroVector, DuplicateId.
    """
    arr = np.asarray(embeddings, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"embeddings must be 2-d, got shape {arr.shape}")
    count, dim = arr.shape
    if dim < 1:
        raise DimensionMismatch("embedding dimension must be at least 1")
    if not np.isfinite(arr).all():
        raise NonFiniteInput("embeddings contain non-finite values")

    if len(ids) != count:
        raise DimensionMismatch(f"{len(ids)} ids for {count} rows")
    seen: set[str] = set()
    for record_id in ids:
        if not isinstance(record_id, str) or not record_id:
            raise DuplicateId(f"ids must be non-empty strings, got {record_id!r}")
        if record_id in seen:
            raise DuplicateId(f"duplicate id: {record_id!r}")
        seen.add(record_id)

    if annotations is None:
        annotations = [UNANNOTATED] * count
    elif len(annotations) != count:
        raise DimensionMismatch(f"{len(annotations)} annotations for {count} rows")

    norms = np.sqrt(np.einsum("ij,ij->i", arr, arr))
    if count and norms.min() < 1e-12:
        raise ZeroVector(f"row {int(norms.argmin())} has (near-)zero norm")
    if count:
        arr = arr / norms[:, None]
    matrix = np.ascontiguousarray(arr, dtype=np.float32)
    matrix.setflags(write=False)
    return EmbeddingStore(matrix=matrix, ids=tuple(ids), annotations=tuple(annotations))


def _check_query(store: EmbeddingStore, query: np.ndarray) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1:
        raise DimensionMismatch(f"query must be 1-d, got shape {q.shape}")
    if q.shape[0] != store.dim:
        raise DimensionMismatch(f"query dim {q.shape[0]} != store dim {store.dim}")
    if not np.isfinite(q).all():
        raise NonFiniteInput("query contains non-finite values")
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > QUERY_NORM_TOL:
        raise NotNormalized(f"query norm {norm!r} outside 1 +/- {QUERY_NORM_TOL}")
    return q


def _exact_score(store: EmbeddingStore, row: int, q64: np.ndarray) -> float:
    return float(np.dot(store.matrix[row].astype(np.float64), q64))


def top_n(store: EmbeddingStore, query: np.ndarray, n: int) -> list[Candidate]:
    """Return the n highest-scoring rows, ties broken by ascending row index.

    Scores are exact float64 dot products; if fewer than n rows exist, all
    rows are returned in order.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise NonPositiveK(f"n must be a positive integer, got {n!r}")
    if store.count == 0:
        raise EmptyStore("cannot retrieve from an empty store")
    q64 = _check_query(store, query)
    limit = min(int(n), store.count)

    if store.count < _PREFILTER_MIN_ROWS or limit == store.count:
        rows = range(store.count)
    else:
        # float32 prefilter: keep every row whose approximate score could
        # still reach the exact top-n once rounding error is accounted for.
        approx = store.matrix @ q64.astype(np.float32)
        margin = 2.0 * max(1e-3, store.dim * 2.0**-24 * 8.0)
        kth_largest = np.partition(approx, store.count - limit)[store.count - limit]
        rows = np.flatnonzero(approx >= float(kth_largest) - margin)

    scored = sorted(
        ((_exact_score(store, int(row), q64), int(row)) for row in rows),
        key=lambda pair: (-pair[0], pair[1]),
    )[:limit]
    return [
        Candidate(row=row, id=store.ids[row], score=score, group=store.annotations[row].group)
        for score, row in scored
    ]


# --- binary matrix format -------------------------------------------------------


def write_matrix(path: str | Path, matrix: np.ndarray) -> None:
    """Write a float32 matrix in the FRG1 container."""
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2:
        raise DimensionMismatch(f"matrix must be 2-d, got shape {arr.shape}")
    count, dim = arr.shape
    if dim < 1:
        raise DimensionMismatch("matrix must have at least one column")
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim, count))
        handle.write(arr.tobytes(order="C"))


def read_matrix(path: str | Path) -> np.ndarray:
    """Read an FRG1 container back into a (count, dim) float32 matrix."""
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise TruncatedFile(f"{path}: file shorter than the 4-byte magic")
    if data[:4] != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r}, found {data[:4]!r}")
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"{path}: header is incomplete")
    _, version, dim, count = _HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: unsupported format version {version}")
    if dim < 1:
        raise StoreFormatError(f"{path}: declared dimension must be positive")
    expected = _HEADER.size + count * dim * 4
    if len(data) < expected:
        raise TruncatedFile(
            f"{path}: payload ends at byte {len(data)}, expected {expected}"
        )
    if len(data) > expected:
        raise StoreFormatError(f"{path}: {len(data) - expected} trailing bytes after payload")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return flat.reshape(count, dim).copy()


# --- store persistence ------------------------------------------------------------


def sidecar_path(path: str | Path) -> Path:
    """Location of the metadata JSONL that accompanies a store file."""
    return Path(str(path) + ".meta.jsonl")


def save_store(store: EmbeddingStore, path: str | Path) -> None:
    """Write the matrix container and its metadata sidecar."""
    write_matrix(path, store.matrix)
    lines = [
        json.dumps(annotation.to_json_dict(record_id))
        for record_id, annotation in zip(store.ids, store.annotations)
    ]
    sidecar_path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def parse_annotation_record(record: dict, where: str) -> tuple[str, Annotation]:
    """Interpret one sidecar JSON object; ``where`` names the source for errors."""
    if not isinstance(record, dict) or "id" not in record:
        raise ParseError(f"{where}: annotation record must be an object with an 'id'")
    record_id = record["id"]
    if not isinstance(record_id, str) or not record_id:
        raise ParseError(f"{where}: 'id' must be a non-empty string")
    try:
        age_label = record.get("age_group")
        gender_label = record.get("gender")
        skin_value = record.get("skin_tone")
        age = None if age_label is None else AgeGroup.from_label(age_label)
        gender = None if gender_label is None else Gender.from_label(gender_label)
        skin = None if skin_value is None else SkinTone(int(skin_value))
    except Exception as exc:
        raise ParseError(f"{where}: {exc}") from exc
    age_years = record.get("age_years")
    if age_years is not None and (isinstance(age_years, bool) or not isinstance(age_years, int)):
        raise ParseError(f"{where}: 'age_years' must be an integer or null")
    return record_id, Annotation(age=age, gender=gender, skin=skin, age_years=age_years)


def load_store(path: str | Path) -> EmbeddingStore:
    """Load a store, validating row norms and the metadata sidecar."""
    matrix = read_matrix(path)
    count = matrix.shape[0]
    if count:
        norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix, dtype=np.float64))
        worst = int(np.abs(norms - 1.0).argmax())
        if abs(float(norms[worst]) - 1.0) > ROW_NORM_TOL:
            raise NotNormalized(
                f"{path}: row {worst} has norm {float(norms[worst])!r}, "
                f"outside 1 +/- {ROW_NORM_TOL}"
            )

    meta = sidecar_path(path)
    if not meta.exists():
        raise TruncatedFile(f"{meta}: metadata sidecar is missing")
    lines = meta.read_text().splitlines()
    if len(lines) < count:
        raise TruncatedFile(f"{meta}: {len(lines)} records for {count} rows")
    if len(lines) > count:
        raise StoreFormatError(f"{meta}: {len(lines)} records for {count} rows")

    ids: list[str] = []
    annotations: list[Annotation] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{meta}:{lineno}: invalid JSON: {exc}") from exc
        record_id, annotation = parse_annotation_record(record, f"{meta}:{lineno}")
        if record_id in seen:
            raise DuplicateId(f"{meta}:{lineno}: duplicate id {record_id!r}")
        seen.add(record_id)
        ids.append(record_id)
        annotations.append(annotation)

    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    matrix.setflags(write=False)
    return EmbeddingStore(matrix=matrix, ids=tuple(ids), annotations=tuple(annotations))


__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "ROW_NORM_TOL",
    "QUERY_NORM_TOL",
    "Annotation",
    "UNANNOTATED",
    "EmbeddingStore",
    "Candidate",
    "build_store",
    "top_n",
    "write_matrix",
    "read_matrix",
    "sidecar_path",
    "save_store",
    "parse_annotation_record",
    "load_store",
]
