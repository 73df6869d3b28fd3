"""
Calibration of the solver constants.

C* is the largest of the measured heat-smoothing, bilinear and stochastic
convolution constants, times a safety factor. Each constant is measured at a
base step and at half of it; if any of them moves by more than the allowed
factor the whole measurement is retried with a halved base step.
"""
import logging
import time
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.experiment.config import ExperimentConfig
from src.experiment.writer import content_hash, write_json, write_timing
from src.flow.estimates import bilinear_ensemble, ensemble_field, smoothing_ensemble
from src.flow.heat import TimeGrid, heat_trajectory
from src.noise.checks import convolution_regularity_ratio
from src.noise.model import NoiseModel, certify, save_noise_model
from src.solver.config import radius_from_cstar, solver_constants
from src.spectral.grid import GridSpec, SpectralField
from src.spectral.initial_data import make_initial_data
from src.spectral.norms import BesovParams, besov_norm
from src.spectral.partition import DyadicPartition, build_partition
from src.utils.retry import RefinementDriftError, refinement_retrying
from src.utils.seeding import STREAM_INITIAL, derive_seed

logger = logging.getLogger(__name__)

CONSTANT_NAMES = ("heat", "bilinear", "convolution")


class CalibrationError(RuntimeError):
    """Measured constants kept drifting under dt refinement."""


class CalibrationManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid: GridSpec
    besov: BesovParams
    master_seed: int
    dt: float
    C_heat: float
    C_B: float
    C_F: float
    safety_factor: float
    C_star: float
    R: float
    M: float
    T_hat: float | None
    E_u0_norm_pow_r: float
    drift: dict[str, float]
    noise_model: NoiseModel

    @property
    def hash(self) -> str:
        return content_hash(self.model_dump(mode="json"))

    @property
    def r(self) -> float:
        return self.besov.r


def path_initial_data(config: ExperimentConfig, index: int) -> SpectralField:
    """Initial datum of path `index`; random kinds get their own seed stream."""
    spec = config.initial
    if spec.kind == "gaussian_divfree":
        spec = spec.model_copy(update={"seed": derive_seed(config.master_seed, STREAM_INITIAL, index)})
    return make_initial_data(spec, config.grid)


def mean_norm_pow_r(fields: list[SpectralField], params: BesovParams, P: DyadicPartition) -> float:
    return float(np.mean([besov_norm(u, params, P) ** params.r for u in fields])) if fields else 0.0


def measure_constants(config: ExperimentConfig, model: NoiseModel, P: DyadicPartition,
                      tg: TimeGrid) -> dict[str, float]:
    spec = config.calibration
    params = config.solver.besov
    seed = config.master_seed
    heat = smoothing_ensemble(config.grid, tg, params, P, spec.members, seed, config.workers)
    bilinear = bilinear_ensemble(config.grid, tg, params, P, spec.members, seed, config.workers)
    u_traj = heat_trajectory(ensemble_field(config.grid, seed, 0), tg)
    conv = convolution_regularity_ratio(model, u_traj, tg, params, P, spec.convolution_paths, seed=seed)
    return {"heat": heat.max_ratio, "bilinear": bilinear.max_ratio, "convolution": conv.ratio}


def _drift(coarse: float, fine: float) -> float:
    if coarse == 0.0 and fine == 0.0:
        return 1.0
    if coarse == 0.0 or fine == 0.0:
        return float("inf")
    return max(coarse / fine, fine / coarse)


def measure_with_refinement(config: ExperimentConfig, model: NoiseModel, P: DyadicPartition,
                            tg: TimeGrid) -> tuple[dict[str, float], dict[str, float]]:
    coarse = measure_constants(config, model, P, tg)
    fine = measure_constants(config, model, P, tg.refined(2))
    drift = {name: _drift(coarse[name], fine[name]) for name in CONSTANT_NAMES}
    worst = max(drift, key=drift.get)
    if drift[worst] > config.calibration.max_drift:
        raise RefinementDriftError(
            f"{worst} constant drifts by {drift[worst]:.3f} between dt={tg.dt:.3g} and dt={tg.dt / 2:.3g}"
        )
    return fine, drift


def calibrate_constants(config: ExperimentConfig, model: NoiseModel,
                        P: DyadicPartition) -> tuple[dict[str, float], dict[str, float], float]:
    base = TimeGrid(t_end=config.calibration.t_end, n_steps=config.calibration.n_steps)
    try:
        for attempt in refinement_retrying():
            with attempt:
                tg = base.refined(2 ** (attempt.retry_state.attempt_number - 1))
                logger.info(f"Measuring constants at dt={tg.dt:.3g}")
                constants, drift = measure_with_refinement(config, model, P, tg)
    except RefinementDriftError as e:
        raise CalibrationError(f"calibration unstable under dt refinement: {e}") from e
    return constants, drift, tg.dt / 2.0


def run_calibration(config: ExperimentConfig, P: DyadicPartition | None = None,
                    write: bool = True) -> CalibrationManifest:
    started = time.perf_counter()
    P = P or build_partition(config.grid)
    params = config.solver.besov
    spec = config.calibration

    model = certify(config.noise_model(), P, params, spec.fit_samples, spec.audit_samples,
                    seed=config.master_seed)
    constants, drift, dt = calibrate_constants(config, model, P)
    C_star = spec.safety_factor * max(constants.values())
    solver = config.solver.with_constants(C_star)
    solver.check_noise(model)

    samples = [path_initial_data(config, i) for i in range(min(config.n_paths, spec.members))]
    E_u0 = mean_norm_pow_r(samples, params, P)
    R = radius_from_cstar(C_star, params.r)
    M = 3.0 * C_star * E_u0 + 1.0
    T_hat = None
    if not model.is_silent:
        try:
            T_hat = solver_constants(solver, E_u0, model).T_hat
        except ValueError as e:
            logger.warning(f"T-hat unbounded: {e}")
    else:
        logger.warning("Noise model is silent; T-hat is unbounded")

    manifest = CalibrationManifest(
        grid=config.grid, besov=params, master_seed=config.master_seed, dt=dt,
        C_heat=constants["heat"], C_B=constants["bilinear"], C_F=constants["convolution"],
        safety_factor=spec.safety_factor, C_star=C_star, R=R, M=M, T_hat=T_hat,
        E_u0_norm_pow_r=E_u0, drift=drift, noise_model=model,
    )
    logger.info(
        f"Calibrated C*={C_star:.4g} (heat {constants['heat']:.4g}, B {constants['bilinear']:.4g}, "
        f"F {constants['convolution']:.4g}), R={R:.4g}, M={M:.4g}, T_hat={T_hat}"
    )
    if write:
        out = config.output_path
        write_json(out / "manifest.json", manifest.model_dump(mode="json") | {"hash": manifest.hash})
        save_noise_model(model, out / "noise_model.json")
        write_timing(out / "timing.txt", {"calibration": time.perf_counter() - started})
    return manifest


def load_manifest(path: str | Path) -> CalibrationManifest:
    data = Path(path).read_text()
    return CalibrationManifest.model_validate_json(data)


def ensure_manifest(config: ExperimentConfig, P: DyadicPartition) -> CalibrationManifest:
    """The manifest named in the config, checked against its grid and norm, or a fresh calibration."""
    if config.manifest_path is None:
        return run_calibration(config, P, write=False)
    manifest = load_manifest(config.manifest_path)
    if manifest.grid != config.grid or manifest.besov != config.solver.besov:
        raise ValueError("manifest was calibrated for a different grid or norm")
    return manifest
