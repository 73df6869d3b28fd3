import json

import numpy as np
import pytest

from config.settings import settings
from src.experiment.calibration import (
    CalibrationError,
    ensure_manifest,
    load_manifest,
    path_initial_data,
    run_calibration,
)
from src.solver.config import radius_from_cstar
from src.spectral.partition import build_partition


def test_manifest_constants(make_config):
    config = make_config()
    manifest = run_calibration(config)
    assert manifest.C_star == pytest.approx(
        manifest.safety_factor * max(manifest.C_heat, manifest.C_B, manifest.C_F)
    )
    assert manifest.R == pytest.approx(radius_from_cstar(manifest.C_star, 2.0))
    assert manifest.M == pytest.approx(3.0 * manifest.C_star * manifest.E_u0_norm_pow_r + 1.0)
    assert manifest.T_hat is not None and manifest.T_hat > 0.0
    assert manifest.dt == pytest.approx(config.calibration.t_end / config.calibration.n_steps / 2.0)
    assert all(v <= config.calibration.max_drift for v in manifest.drift.values())
    assert manifest.noise_model.audited_for(config.grid, config.solver.besov)

    out = config.output_path
    written = json.loads((out / "manifest.json").read_text())
    assert written["hash"] == manifest.hash
    assert (out / "noise_model.json").exists()
    assert (out / "timing.txt").exists()
    assert load_manifest(out / "manifest.json") == manifest


def test_calibration_is_reproducible(make_config):
    config = make_config()
    assert run_calibration(config, write=False).hash == run_calibration(config, write=False).hash


def test_unstable_constants_raise(make_config, monkeypatch):
    monkeypatch.setattr(settings, "calibration_attempts", 2)
    calibration = make_config().calibration.model_copy(update={"max_drift": 1.0})
    config = make_config(calibration=calibration.model_dump())
    with pytest.raises(CalibrationError, match="unstable"):
        run_calibration(config, write=False)


def test_silent_noise_leaves_T_hat_unbounded(make_config):
    config = make_config(noise={"modes": [{"wavevector": [0, 0], "coupling": 0.0}]})
    manifest = run_calibration(config, write=False)
    assert manifest.C_F == 0.0
    assert manifest.T_hat is None
    assert manifest.drift["convolution"] == 1.0


def test_manifest_must_match_the_grid(make_config, tmp_path):
    config = make_config()
    run_calibration(config)
    other = make_config(grid={"d": 2, "n": 32}, manifest_path=str(config.output_path / "manifest.json"))
    with pytest.raises(ValueError, match="different grid"):
        ensure_manifest(other, build_partition(other.grid))
    same = config.with_overrides(manifest_path=str(config.output_path / "manifest.json"))
    assert ensure_manifest(same, build_partition(same.grid)) == load_manifest(same.manifest_path)


def test_initial_data_per_path(make_config):
    config = make_config()
    a, b = path_initial_data(config, 0), path_initial_data(config, 1)
    assert not np.allclose(a.coeffs, b.coeffs)
    np.testing.assert_array_equal(a.coeffs, path_initial_data(config, 0).coeffs)
