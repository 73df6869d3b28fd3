import sys
from pathlib import Path

import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.flow.heat import TimeGrid
from src.noise.model import default_linear_model
from src.spectral.grid import GridSpec
from src.spectral.norms import BesovParams
from src.spectral.partition import build_partition


@pytest.fixture
def grid16():
    return GridSpec(d=2, n=16)


@pytest.fixture
def grid32():
    return GridSpec(d=2, n=32)


@pytest.fixture
def grid64():
    return GridSpec(d=2, n=64)


@pytest.fixture
def partition16(grid16):
    return build_partition(grid16)


@pytest.fixture
def partition32(grid32):
    return build_partition(grid32)


@pytest.fixture
def partition64(grid64):
    return build_partition(grid64)


@pytest.fixture
def critical2():
    return BesovParams.critical(2, 4.0, 2.0)


@pytest.fixture
def short_tg():
    return TimeGrid(t_end=0.02, n_steps=10)


@pytest.fixture
def linear_model():
    return default_linear_model(2)


@pytest.fixture
def audited_linear_model(partition16, critical2, linear_model):
    from src.noise.model import audit_noise_model, fit_envelopes

    fitted = fit_envelopes(linear_model, partition16, critical2, samples=20, seed=0, margin=1.5)
    return audit_noise_model(fitted, partition16, critical2, samples=20, seed=1)


@pytest.fixture
def small_data(grid16):
    from src.spectral.initial_data import InitialDataSpec, gaussian_divfree

    return gaussian_divfree(InitialDataSpec(seed=3, amplitude=0.05), grid16)


@pytest.fixture
def make_config(tmp_path, monkeypatch):
    """Factory for small experiment configs writing under tmp_path."""
    from config.settings import settings
    from src.experiment.config import ExperimentConfig

    # a wider margin keeps the fitted envelopes valid on fresh audit samples
    monkeypatch.setattr(settings, "envelope_margin", 1.5)

    def factory(**overrides) -> ExperimentConfig:
        d = overrides.pop("d", 2)
        base = {
            "experiment": "local",
            "grid": {"d": d, "n": 16},
            "solver": {
                "besov": {"p": 4.0, "r": 2.0, "critical_dim": d},
                "tg": {"t_end": 0.05, "n_steps": 10},
            },
            "n_paths": 4,
            "master_seed": 7,
            "output_dir": str(tmp_path / "out"),
            "local_horizons": [0.05, 0.025],
            "horizon": 0.05,
            "calibration": {
                "members": 2,
                "convolution_paths": 4,
                "fit_samples": 20,
                "audit_samples": 20,
                "t_end": 0.05,
                "n_steps": 10,
                "max_drift": 10.0,
            },
            "verify": {
                "leray_fields": 5,
                "decay_samples": 2,
                "wiener_paths": 2000,
                "ito_paths": 500,
                "ladder_paths": 2,
                "ladder_N": [2.0, 5.0, 10.0],
                "weak_order_dts": [0.02, 0.01, 0.005],
            },
            "workers": 2,
        }
        return ExperimentConfig.model_validate(base | overrides)

    return factory
