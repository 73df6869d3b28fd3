import logging
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.settings import settings
from src.noise.model import NoiseModel, default_linear_model, load_noise_model
from src.solver.config import SolverConfig
from src.spectral.grid import GridSpec
from src.spectral.initial_data import InitialDataSpec

logger = logging.getLogger(__name__)

ExperimentKind = Literal["local", "global_sweep", "oscillating_sweep", "calibrate", "verify"]


class CalibrationSpec(BaseModel):
    """Sizes of the ensembles the solver constants are measured on."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    members: int = 8
    convolution_paths: int = 32
    fit_samples: int = 200
    audit_samples: int = 100
    # Estimate checks run on their own short horizon
    t_end: float = 0.1
    n_steps: int = 50
    safety_factor: float = Field(default_factory=lambda: settings.calibration_safety_factor)
    max_drift: float = Field(default_factory=lambda: settings.max_refinement_drift)

    @field_validator("members", "convolution_paths", "fit_samples", "audit_samples", "n_steps")
    @classmethod
    def _check_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be >= 1, got {v}")
        return v

    @field_validator("safety_factor", "max_drift")
    @classmethod
    def _check_factor(cls, v: float) -> float:
        if v < 1.0:
            raise ValueError(f"factor must be >= 1, got {v}")
        return v


class VerifySpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    leray_fields: int = 100
    decay_samples: int = 8
    wiener_paths: int = 10_000
    ito_paths: int = 500
    ladder_paths: int = 4
    ladder_N: list[float] = [2.0, 5.0, 10.0]
    weak_order_dts: list[float] = [0.02, 0.01, 0.005]
    convolution_paths: int = 1000
    convolution_dts: list[float] = [1e-2, 5e-3, 2.5e-3]
    contraction_paths: int = 100
    # Data size for the contraction suite, as a multiple of R^r
    contraction_delta: float = 0.1
    # Number of dt halvings in the Picard / stepper cross-check
    cross_refinements: int = 2
    # Random fields per algebraic property check (norms, transport, heat flow)
    property_fields: int = 5
    linearity_paths: int = 4
    # Paths per delta in the global-sweep determinism check; the horizon is calibration.t_end
    sweep_paths: int = 8


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: ExperimentKind = "local"
    grid: GridSpec = GridSpec()
    solver: SolverConfig = SolverConfig()
    # Inline model, path to a saved model, or None for the default linear model
    noise: NoiseModel | str | None = None
    initial: InitialDataSpec = InitialDataSpec(amplitude=0.05)
    n_paths: int = 100
    delta_values: list[float] = [4e-2, 1e-2, 2.5e-3]
    # "R_pow_r": delta_values are multiples of R^r from the manifest
    delta_units: Literal["absolute", "R_pow_r"] = "R_pow_r"
    master_seed: int = Field(default_factory=lambda: settings.default_master_seed)
    output_dir: str | None = None
    manifest_path: str | None = None
    local_horizons: list[float] = [0.25, 0.125, 0.0625]
    horizon: float = 1.0
    epsilon_values: list[float] = [0.25, 0.125, 0.0625]
    calibration: CalibrationSpec = CalibrationSpec()
    verify: VerifySpec = VerifySpec()
    picard_check: bool = False
    workers: int | None = None

    @field_validator("n_paths")
    @classmethod
    def _check_paths(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"n_paths must be >= 1, got {v}")
        return v

    @field_validator("master_seed")
    @classmethod
    def _check_seed(cls, v: int) -> int:
        if not (0 <= v < 2**64):
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {v}")
        return v

    @field_validator("delta_values")
    @classmethod
    def _check_deltas(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("delta_values must not be empty")
        if any(x < 0 for x in v):
            raise ValueError(f"delta_values must be nonnegative, got {v}")
        if any(a <= b for a, b in zip(v, v[1:])):
            raise ValueError(f"delta_values must be strictly decreasing, got {v}")
        return v

    @field_validator("local_horizons", "epsilon_values")
    @classmethod
    def _check_ladder(cls, v: list[float]) -> list[float]:
        if not v or any(x <= 0 for x in v):
            raise ValueError(f"ladder values must be positive, got {v}")
        return v

    @field_validator("horizon")
    @classmethod
    def _check_horizon(cls, v: float) -> float:
        if v <= 0:
            raise ValueError(f"horizon must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def _check_dimensions(self) -> "ExperimentConfig":
        if self.solver.besov.critical_dim != self.grid.d:
            raise ValueError(
                f"solver norm is critical for d={self.solver.besov.critical_dim}, grid has d={self.grid.d}"
            )
        if self.experiment == "oscillating_sweep" and self.grid.d != 3:
            raise ValueError("oscillating sweep needs a 3-dimensional grid")
        return self

    @property
    def output_path(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return settings.output_path / f"{self.experiment}-{self.master_seed}"

    def noise_model(self) -> NoiseModel:
        if self.noise is None:
            return default_linear_model(self.grid.d)
        if isinstance(self.noise, str):
            return load_noise_model(self.noise)
        return self.noise

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """CLI flags win over the file; None means not given."""
        update = {k: v for k, v in overrides.items() if v is not None}
        if not update:
            return self
        return ExperimentConfig.model_validate(self.model_dump() | update)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.model_validate_json(Path(path).read_text())
