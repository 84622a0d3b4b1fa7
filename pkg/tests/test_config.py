from __future__ import annotations

import json

import pytest

from fairref import errors
from fairref.config import (
    ENV_CONFIG_VAR,
    RunConfig,
    config_from_dict,
    load_config_file,
    load_env_config,
)


def test_defaults():
    config = RunConfig()
    assert config.n == 250
    assert config.k == 20
    assert config.seed == 0
    assert config.suffix == "with any age, gender, skin tone"
    assert config.instruction == "with age, gender and skin tone of:"
    assert config.negative_prompt.startswith("bad, disfigured")
    assert config.debiased_query and config.balanced_sampling and config.text_instruction
    assert not config.fid_per_prompt
    space = config.space()
    assert (space.n_age, space.n_gender, space.n_skin) == (6, 2, 10)


def test_effective_suffix_follows_toggle():
    assert RunConfig().effective_suffix() == "with any age, gender, skin tone"
    assert RunConfig(debiased_query=False).effective_suffix() == ""


def test_validation():
    with pytest.raises(errors.InvalidConfig):
        RunConfig(n=0)
    with pytest.raises(errors.InvalidConfig):
        RunConfig(k=0)
    with pytest.raises(errors.InvalidConfig):
        RunConfig(n=5, k=10)  # n must cover k
    with pytest.raises(errors.InvalidSeed):
        RunConfig(seed=-1)
    with pytest.raises(errors.InvalidSeed):
        RunConfig(seed=2**64)
    with pytest.raises(errors.InvalidConfig):
        RunConfig(n_age=0)


def test_config_from_dict_overrides_and_rejects_unknown():
    config = config_from_dict({"k": 5, "seed": 3})
    assert config.k == 5 and config.seed == 3 and config.n == 250
    base = RunConfig(n=100)
    assert config_from_dict({}, base=base) == base
    with pytest.raises(errors.InvalidConfig):
        config_from_dict({"topk": 5})
    with pytest.raises(errors.InvalidConfig):
        config_from_dict({"n": 5})  # n < default k


def test_load_config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"n": 50, "k": 4, "balanced_sampling": False}))
    config = load_config_file(path)
    assert config.n == 50 and config.k == 4 and not config.balanced_sampling
    with pytest.raises(errors.InvalidConfig):
        load_config_file(tmp_path / "missing.json")
    path.write_text("{broken")
    with pytest.raises(errors.InvalidConfig):
        load_config_file(path)
    path.write_text("[1]")
    with pytest.raises(errors.InvalidConfig):
        load_config_file(path)


def test_load_env_config(tmp_path):
    assert load_env_config({}) == RunConfig()
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"seed": 77}))
    config = load_env_config({ENV_CONFIG_VAR: str(path)})
    assert config.seed == 77
    with pytest.raises(errors.InvalidConfig):
        load_env_config({ENV_CONFIG_VAR: str(tmp_path / "gone.json")})
