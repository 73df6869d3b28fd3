import logging
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.flow.heat import TimeGrid
from src.noise.model import NoiseModel
from src.spectral.norms import BesovParams

logger = logging.getLogger(__name__)

# C* gamma must stay below this for the truncated map to contract
GAMMA_GATE = 0.25


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    besov: BesovParams = BesovParams.critical(2, 4.0, 2.0)
    R: float | None = None
    auto_R: bool = True
    N_cutoff: float = 10.0
    C_star: float = 1.0
    picard_tol: float = 1e-8
    picard_max_iter: int = 30
    tg: TimeGrid = TimeGrid()

    @field_validator("besov")
    @classmethod
    def _check_critical(cls, v: BesovParams) -> BesovParams:
        if v.critical_dim is None:
            raise ValueError("solver norms must be critical: build them with BesovParams.critical")
        return v

    @field_validator("R")
    @classmethod
    def _check_R(cls, v: float | None) -> float | None:
        if v is not None and not (0.0 < v <= 1.0):
            raise ValueError(f"R must lie in (0, 1], got {v}")
        return v

    @field_validator("N_cutoff", "C_star", "picard_tol")
    @classmethod
    def _check_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"must be positive, got {v}")
        return v

    @field_validator("picard_max_iter")
    @classmethod
    def _check_iters(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"picard_max_iter must be >= 1, got {v}")
        return v

    @model_validator(mode="after")
    def _check_R_source(self) -> "SolverConfig":
        if not self.auto_R and self.R is None:
            raise ValueError("R must be given when auto_R is off")
        return self

    @property
    def r(self) -> float:
        return self.besov.r

    @property
    def effective_R(self) -> float:
        if self.auto_R or self.R is None:
            return radius_from_cstar(self.C_star, self.besov.r)
        return self.R

    @property
    def rate_params(self) -> BesovParams:
        """Regularity s + 2/r of the running L^r-in-time norm."""
        return self.besov.shifted(2.0 / self.besov.r)

    def check_noise(self, model: NoiseModel) -> None:
        if self.C_star * model.gamma_bound >= GAMMA_GATE:
            raise ValueError(
                f"smallness gate violated: C* gamma = {self.C_star * model.gamma_bound:.4f} >= {GAMMA_GATE}"
            )

    def with_constants(self, C_star: float, tg: TimeGrid | None = None) -> "SolverConfig":
        return self.model_copy(update={"C_star": C_star, "tg": tg or self.tg})


def radius_from_cstar(C_star: float, r: float) -> float:
    return min(1.0, (4.0 * C_star) ** (-1.0 / r))


@dataclass
class SolverConstants:
    R: float
    M: float
    T_hat: float


def solver_constants(config: SolverConfig, E_u0_norm_pow_r: float, model: NoiseModel) -> SolverConstants:
    """R = min(1, (4C*)^(-1/r)), M = 3C* E||u0||^r + 1,
    T_hat = 1 / (3C* ((1/R^r + 1) beta1(N+1) + beta2(2N+2)))."""
    if model.beta1 is None or model.beta2 is None:
        raise ValueError("noise model carries no envelope bounds; audit it first")
    C, r, N = config.C_star, config.besov.r, config.N_cutoff
    R = radius_from_cstar(C, r)
    M = 3.0 * C * E_u0_norm_pow_r + 1.0
    denom = 3.0 * C * ((1.0 / R**r + 1.0) * model.beta1(N + 1.0) + model.beta2(2.0 * N + 2.0))
    if denom == 0.0:
        raise ValueError("zero denominator in T_hat: both noise envelopes vanish at the cut-off levels")
    return SolverConstants(R=R, M=M, T_hat=1.0 / denom)
