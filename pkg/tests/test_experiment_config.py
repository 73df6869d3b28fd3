import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.experiment.config import CalibrationSpec, ExperimentConfig, load_experiment_config
from src.noise.model import NoiseMode, NoiseModel, save_noise_model


def test_defaults():
    config = ExperimentConfig()
    assert config.experiment == "local"
    assert config.delta_units == "R_pow_r"
    assert config.noise_model().K == 3
    assert config.output_path.name == f"local-{config.master_seed}"


def test_shipped_config_loads():
    config = load_experiment_config(Path(__file__).parent.parent / "config" / "default_experiment.json")
    assert config.experiment == "global_sweep"
    assert config.grid.n == 64
    assert config.solver.besov.critical_dim == 2


@pytest.mark.parametrize(
    "overrides",
    [
        {"delta_values": [0.01, 0.04]},
        {"delta_values": [0.04, 0.04]},
        {"delta_values": [-0.01]},
        {"delta_values": []},
        {"n_paths": 0},
        {"master_seed": -1},
        {"master_seed": 2**64},
        {"horizon": 0.0},
        {"local_horizons": [0.1, 0.0]},
        {"experiment": "oscillating_sweep"},
        {"unknown_field": 1},
    ],
)
def test_invalid_configs(make_config, overrides):
    with pytest.raises(ValidationError):
        make_config(**overrides)


def test_norm_must_match_the_grid():
    with pytest.raises(ValidationError, match="critical"):
        ExperimentConfig.model_validate({"grid": {"d": 3, "n": 16}})


def test_calibration_factors_at_least_one():
    with pytest.raises(ValidationError):
        CalibrationSpec(safety_factor=0.5)
    with pytest.raises(ValidationError):
        CalibrationSpec(members=0)


def test_overrides(make_config):
    config = make_config()
    same = config.with_overrides(master_seed=None, n_paths=None)
    assert same is config
    changed = config.with_overrides(master_seed=11, n_paths=8, experiment="global_sweep")
    assert changed.master_seed == 11
    assert changed.n_paths == 8
    assert changed.grid == config.grid
    with pytest.raises(ValidationError):
        config.with_overrides(n_paths=0)


def test_noise_from_file(tmp_path, make_config):
    model = NoiseModel(modes=[NoiseMode(wavevector=(1, 0), coupling=0.2)])
    path = save_noise_model(model, tmp_path / "noise.json")
    assert make_config(noise=str(path)).noise_model() == model
    inline = make_config(noise=json.loads(model.model_dump_json()))
    assert inline.noise_model() == model
