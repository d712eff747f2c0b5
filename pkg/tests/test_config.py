import dataclasses
import json

import pytest

from nudgelab.config import (
    ExperimentConfig,
    NudgingGains,
    SamplerConfig,
    TimelineConfig,
    load_config,
    save_config,
)
from nudgelab.errors import ConfigError


def test_round_trip_is_bit_exact(tmp_path):
    cfg = ExperimentConfig(
        sampler=SamplerConfig(delta=0.1 + 1e-17, placement="jittered", seed=123),
        nudging=NudgingGains(lambda_rho=1.0 / 3.0, lambda_u=2.0 / 7.0 * 7.0),
    )
    path = tmp_path / "config.json"
    save_config(path, cfg)
    loaded = load_config(path)
    assert loaded == cfg
    # and a second pass through the file form is byte-identical
    save_config(tmp_path / "config2.json", loaded)
    assert (tmp_path / "config.json").read_bytes() == (tmp_path / "config2.json").read_bytes()


def test_partial_config_uses_defaults(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"grid": {"n_cells": 64}}))
    cfg = load_config(path)
    assert cfg.grid.n_cells == 64
    assert cfg.grid.length == 1.0
    assert cfg.nudging.lambda_rho == 50.0


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"grid": {"n_cells": 64, "cells": 3}}))
    with pytest.raises(ConfigError, match="cells"):
        load_config(path)
    path.write_text(json.dumps({"grids": {}}))
    with pytest.raises(ConfigError, match="grids"):
        load_config(path)


def test_bad_json_and_missing_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


@pytest.mark.parametrize(
    "mutation",
    [
        {"grid": {"n_cells": 4}},
        {"eos": {"gamma": 1.0}},
        {"eos": {"a": 0.7}},
        {"viscosity": {"mu": 0.0}},
        {"timeline": {"t_minus": 0.5}},
        {"timeline": {"t_plus": 0.5}},
        {"forcing": {"kind": "gusts"}},
        {"initial": {"amplitude": 2.0}},
        {"sampler": {"delta": -1.0}},
        {"sampler": {"placement": "grid"}},
        {"nudging": {"lambda_rho": -1.0}},
        {"solver": {"safety": 1.5}},
        {"outputs": {"format": "xml"}},
        {"sync_init": "random"},
    ],
)
def test_semantic_validation(tmp_path, mutation):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(mutation))
    with pytest.raises(ConfigError):
        load_config(path)


def test_integer_fields_rejected_on_floats(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"grid": {"n_cells": 64.5}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_replace_keeps_validity():
    cfg = ExperimentConfig()
    cfg2 = dataclasses.replace(cfg, timeline=TimelineConfig(-0.1, 0.5, 1.0))
    cfg2.validate()
    assert cfg2.timeline.t_assim_end == 0.5
