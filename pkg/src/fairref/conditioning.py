"""Conditioning-bundle assembly for a downstream image generator.

Each selected reference image is turned into one bundle: the prompt text
(optionally extended with a transfer instruction), a negative prompt, and the
reference's visual embedding projected into the generator's token space by a
learned linear map. The projector weights travel in a small binary container
(magic ``FRGW``); training them is out of scope here.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    EmptyPrompt,
    MissingEmbedding,
    NonFiniteInput,
    ParseError,
    StoreFormatError,
    TruncatedFile,
    VersionMismatch,
)
from .retrieval import SelectionResult
from .store import EmbeddingStore

#: Instruction appended to prompts so the generator honors the reference's
#: demographic attributes rather than its full appearance.
DEFAULT_INSTRUCTION = "with age, gender and skin tone of:"

#: Negative prompt applied to every generation request.
DEFAULT_NEGATIVE_PROMPT = (
    "bad, disfigured, cropped, bad anatomy, poorly drawn hands, poorly drawn fingers"
)

WEIGHTS_MAGIC = b"FRGW"
WEIGHTS_VERSION = 1
_WEIGHTS_HEADER = struct.Struct("<4sHII")  # magic, version, d_visual, d_token


@dataclass(frozen=True)
class ProjectorWeights:
    """Affine map from visual-embedding space to token space: H(v) = Wv + b."""

    weight: np.ndarray  # (d_token, d_visual) float32
    bias: np.ndarray  # (d_token,) float32

    def __post_init__(self) -> None:
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise DimensionMismatch(
                f"weight must be 2-d and bias 1-d, got {self.weight.shape} / {self.bias.shape}"
            )
        if self.weight.shape[0] != self.bias.shape[0]:
            raise DimensionMismatch(
                f"bias length {self.bias.shape[0]} != token dim {self.weight.shape[0]}"
            )
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise NonFiniteInput("projector weights contain non-finite values")

    @property
    def d_visual(self) -> int:
        return self.weight.shape[1]

    @property
    def d_token(self) -> int:
        return self.weight.shape[0]

    @cached_property
    def _weight64(self) -> np.ndarray:
        return self.weight.astype(np.float64)

    @cached_property
    def _bias64(self) -> np.ndarray:
        return self.bias.astype(np.float64)


def make_projector(weight: np.ndarray, bias: np.ndarray) -> ProjectorWeights:
    """Build validated float32 projector weights from any float arrays."""
    w = np.ascontiguousarray(weight, dtype=np.float32)
    b = np.ascontiguousarray(bias, dtype=np.float32)
    w.setflags(write=False)
    b.setflags(write=False)
    return ProjectorWeights(weight=w, bias=b)


def save_projector(weights: ProjectorWeights, path: str | Path) -> None:
    """Write weights in the FRGW container (little-endian float32)."""
    with open(path, "wb") as handle:
        handle.write(
            _WEIGHTS_HEADER.pack(WEIGHTS_MAGIC, WEIGHTS_VERSION, weights.d_visual, weights.d_token)
        )
        handle.write(np.ascontiguousarray(weights.weight, dtype="<f4").tobytes(order="C"))
        handle.write(np.ascontiguousarray(weights.bias, dtype="<f4").tobytes(order="C"))


def load_projector(path: str | Path) -> ProjectorWeights:
    """Read an FRGW container back into projector weights."""
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise TruncatedFile(f"{path}: file shorter than the 4-byte magic")
    if data[:4] != WEIGHTS_MAGIC:
        raise BadMagic(f"{path}: expected magic {WEIGHTS_MAGIC!r}, found {data[:4]!r}")
    if len(data) < _WEIGHTS_HEADER.size:
        raise TruncatedFile(f"{path}: header is incomplete")
    _, version, d_visual, d_token = _WEIGHTS_HEADER.unpack_from(data)
    if version != WEIGHTS_VERSION:
        raise VersionMismatch(f"{path}: unsupported weights version {version}")
    if d_visual < 1 or d_token < 1:
        raise StoreFormatError(f"{path}: dimensions must be positive, got {d_visual}x{d_token}")
    expected = _WEIGHTS_HEADER.size + (d_token * d_visual + d_token) * 4
    if len(data) < expected:
        raise TruncatedFile(f"{path}: payload ends at byte {len(data)}, expected {expected}")
    if len(data) > expected:
        raise StoreFormatError(f"{path}: {len(data) - expected} trailing bytes after payload")
    flat = np.frombuffer(data, dtype="<f4", offset=_WEIGHTS_HEADER.size)
    weight = flat[: d_token * d_visual].reshape(d_token, d_visual).copy()
    bias = flat[d_token * d_visual :].copy()
    return make_projector(weight, bias)


def apply_projector(weights: ProjectorWeights, visual: np.ndarray) -> np.ndarray:
    """Project a visual embedding into token space.

    Accumulates in float64 and emits float32, so the result is deterministic
    and the rounding error is bounded by the final cast.
    """
    v = np.asarray(visual, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"visual embedding must be 1-d, got shape {v.shape}")
    if v.shape[0] != weights.d_visual:
        raise DimensionMismatch(
            f"visual dim {v.shape[0]} != projector input dim {weights.d_visual}"
        )
    if not np.isfinite(v).all():
        raise NonFiniteInput("visual embedding contains non-finite values")
    return (weights._weight64 @ v + weights._bias64).astype(np.float32)


# --- prompt assembly --------------------------------------------------------------


@dataclass(frozen=True)
class BimodalPrompt:
    """Prompt words plus one reference token appended after the text."""

    text_tokens: tuple[str, ...]
    instruction: str
    reference_token: np.ndarray

    @property
    def full_text(self) -> str:
        return " ".join(self.text_tokens)


def make_bimodal_prompt(
    prompt: str,
    reference_token: np.ndarray,
    instruction: str = DEFAULT_INSTRUCTION,
) -> BimodalPrompt:
    """Compose ``prompt, instruction`` and attach the reference token.

    An empty instruction leaves the prompt untouched; the token is always
    appended.
    """
    if not isinstance(prompt, str) or not prompt:
        raise EmptyPrompt("prompt must be a non-empty string")
    token = np.asarray(reference_token, dtype=np.float32)
    if token.ndim != 1:
        raise DimensionMismatch(f"reference token must be 1-d, got shape {token.shape}")
    if not np.isfinite(token).all():
        raise NonFiniteInput("reference token contains non-finite values")
    full_text = prompt if instruction == "" else f"{prompt}, {instruction}"
    return BimodalPrompt(
        text_tokens=tuple(full_text.split()),
        instruction=instruction,
        reference_token=token,
    )


def compose_full_text(prompt: str, instruction: str) -> str:
    """The text part of a bimodal prompt: ``prompt, instruction``."""
    if not isinstance(prompt, str) or not prompt:
        raise EmptyPrompt("prompt must be a non-empty string")
    return prompt if instruction == "" else f"{prompt}, {instruction}"


# --- bundles ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConditioningBundle:
    """Everything the generator needs for one reference-conditioned sample."""

    prompt: str
    full_text: str
    reference_id: str
    token: np.ndarray  # (d_token,) float32
    selection_seed: int
    negative_prompt: str = DEFAULT_NEGATIVE_PROMPT

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConditioningBundle):
            return NotImplemented
        return (
            self.prompt == other.prompt
            and self.full_text == other.full_text
            and self.reference_id == other.reference_id
            and self.selection_seed == other.selection_seed
            and self.negative_prompt == other.negative_prompt
            and self.token.dtype == other.token.dtype
            and np.array_equal(self.token, other.token)
        )


def export_bundles(
    prompt: str,
    selection: SelectionResult,
    store_embeddings: EmbeddingStore,
    weights: ProjectorWeights,
    instruction: str = DEFAULT_INSTRUCTION,
    text_instruction: bool = True,
    negative_prompt: str = DEFAULT_NEGATIVE_PROMPT,
) -> list[ConditioningBundle]:
    """Build one bundle per selected reference, in selection order.

    Disabling ``text_instruction`` drops the instruction text while keeping
    the reference token, which isolates the two conditioning channels for
    ablations. An empty selection yields an empty list.
    """
    effective_instruction = instruction if text_instruction else ""
    full_text = compose_full_text(prompt, effective_instruction)
    bundles: list[ConditioningBundle] = []
    for candidate in selection.chosen:
        row = store_embeddings.row_of(candidate.id)
        if row is None:
            raise MissingEmbedding(f"reference id {candidate.id!r} is not in the store")
        token = apply_projector(weights, store_embeddings.matrix[row])
        bundles.append(
            ConditioningBundle(
                prompt=prompt,
                full_text=full_text,
                reference_id=candidate.id,
                token=token,
                selection_seed=selection.seed,
                negative_prompt=negative_prompt,
            )
        )
    return bundles


def bundle_to_json_dict(bundle: ConditioningBundle) -> dict:
    return {
        "prompt": bundle.prompt,
        "full_text": bundle.full_text,
        "negative_prompt": bundle.negative_prompt,
        "reference_id": bundle.reference_id,
        "token": [float(x) for x in bundle.token],
        "selection_seed": bundle.selection_seed,
    }


def bundle_to_json(bundle: ConditioningBundle) -> str:
    return json.dumps(bundle_to_json_dict(bundle), sort_keys=True, indent=2)


def bundle_from_json(text: str, where: str = "bundle") -> ConditioningBundle:
    """Parse a bundle; float32 tokens round-trip exactly through JSON."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{where}: invalid JSON: {exc}") from exc
    try:
        return ConditioningBundle(
            prompt=data["prompt"],
            full_text=data["full_text"],
            reference_id=data["reference_id"],
            token=np.asarray(data["token"], dtype=np.float32),
            selection_seed=int(data["selection_seed"]),
            negative_prompt=data["negative_prompt"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: missing or malformed field: {exc}") from exc


__all__ = [
    "DEFAULT_INSTRUCTION",
    "DEFAULT_NEGATIVE_PROMPT",
    "WEIGHTS_MAGIC",
    "WEIGHTS_VERSION",
    "ProjectorWeights",
    "BimodalPrompt",
    "ConditioningBundle",
    "apply_projector",
    "bundle_from_json",
    "bundle_to_json",
    "bundle_to_json_dict",
    "compose_full_text",
    "export_bundles",
    "load_projector",
    "make_bimodal_prompt",
    "make_projector",
    "save_projector",
]
