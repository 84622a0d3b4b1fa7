"""Run configuration: one dataclass for every tunable knob.

A config can come from three layers, later layers winning: built-in
defaults, a JSON file named by the ``FAIRRAG_CONFIG`` environment variable,
and explicit CLI flags.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .conditioning import DEFAULT_INSTRUCTION, DEFAULT_NEGATIVE_PROMPT
from .demographics import GroupSpace
from .errors import InvalidConfig, InvalidSeed
from .retrieval import DEFAULT_QUERY_SUFFIX

#: Environment variable that may point to a JSON file of config overrides.
ENV_CONFIG_VAR = "FAIRRAG_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    """Pipeline-wide settings; every CLI command resolves one of these."""

    n: int = 250
    k: int = 20
    seed: int = 0
    n_age: int = 6
    n_gender: int = 2
    n_skin: int = 10
    suffix: str = DEFAULT_QUERY_SUFFIX
    instruction: str = DEFAULT_INSTRUCTION
    negative_prompt: str = DEFAULT_NEGATIVE_PROMPT
    debiased_query: bool = True
    balanced_sampling: bool = True
    text_instruction: bool = True
    fid_per_prompt: bool = False

    def __post_init__(self) -> None:
        for name in ("n", "k", "n_age", "n_gender", "n_skin"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise InvalidConfig(f"{name} must be a positive integer, got {value!r}")
        if self.n < self.k:
            raise InvalidConfig(f"n ({self.n}) must be at least k ({self.k})")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise InvalidSeed(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidSeed(f"seed must lie in [0, 2**64), got {self.seed}")
        for name in ("suffix", "instruction", "negative_prompt"):
            if not isinstance(getattr(self, name), str):
                raise InvalidConfig(f"{name} must be a string")
        for name in ("debiased_query", "balanced_sampling", "text_instruction", "fid_per_prompt"):
            if not isinstance(getattr(self, name), bool):
                raise InvalidConfig(f"{name} must be a boolean")

    def space(self) -> GroupSpace:
        return GroupSpace(n_age=self.n_age, n_gender=self.n_gender, n_skin=self.n_skin)

    def effective_suffix(self) -> str:
        """The query suffix after the debiased-query switch is applied."""
        return self.suffix if self.debiased_query else ""


def config_from_dict(data: Mapping, base: RunConfig | None = None) -> RunConfig:
    """Overlay a mapping of overrides onto ``base`` (defaults if omitted)."""
    base = base if base is not None else RunConfig()
    if not isinstance(data, Mapping):
        raise InvalidConfig(f"config must be a JSON object, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InvalidConfig(f"unknown config keys: {unknown}")
    return dataclasses.replace(base, **dict(data))


def load_config_file(path: str | Path) -> RunConfig:
    """Read a JSON config file and overlay it onto the defaults."""
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InvalidConfig(f"config file {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def load_env_config(environ: Mapping[str, str] | None = None) -> RunConfig:
    """Resolve the config named by :data:`ENV_CONFIG_VAR`, or the defaults."""
    environ = os.environ if environ is None else environ
    path = environ.get(ENV_CONFIG_VAR)
    if not path:
        return RunConfig()
    return load_config_file(path)


__all__ = [
    "ENV_CONFIG_VAR",
    "RunConfig",
    "config_from_dict",
    "load_config_file",
    "load_env_config",
]
