"""
Noise operators f(t, u) = (f_1, ..., f_K) driven by the truncated Wiener process.

linear_multiplicative  f_k(u) = sigma_k psi_k u
additive               f_k    = sigma_k psi_k e_k with e_k perpendicular to the mode wavevector

Every model carries the envelopes of its growth and difference conditions,

    ||P f(t, u)||^r         <= beta1(||u||) + gamma ||u||_{s + 2/r}^r
    ||P f(u) - P f(v)||^r   <= beta2(||u|| + ||v||) ||u - v||^r + gamma ||u - v||_{s + 2/r}^r

with the left sides measured in the H-valued Besov norm of regularity s - 1 + 2/r
(s the critical index). The solver only accepts a model whose audit passed on the
grid and norm it is about to use.
"""
import json
import logging
import math
from functools import lru_cache
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from config.settings import settings
from src.spectral.fields import leray_project, multiply_scalar
from src.spectral.grid import GridSpec, SpectralField, forward
from src.spectral.initial_data import InitialDataSpec, gaussian_divfree
from src.spectral.norms import BesovParams, besov_norm, hilbert_besov_norm
from src.spectral.partition import DyadicPartition
from src.utils.seeding import STREAM_AUDIT, derive_seed, stream_rng

logger = logging.getLogger(__name__)


class AuditError(ValueError):
    """Noise model lacks a passing condition audit, or the structure an experiment needs."""


class Envelope(BaseModel):
    model_config = ConfigDict(frozen=True)

    offset: float = 0.0
    coefficient: float = 0.0
    exponent: float = 1.0

    def __call__(self, x: float) -> float:
        return self.offset + self.coefficient * x**self.exponent

    @model_validator(mode="after")
    def _check_increasing(self) -> "Envelope":
        if self.offset < 0 or self.coefficient < 0 or self.exponent < 0:
            raise ValueError("envelope must be nonnegative and nondecreasing")
        return self


class NoiseMode(BaseModel):
    model_config = ConfigDict(frozen=True)

    # integer multiples of the fundamental frequency, one per axis
    wavevector: tuple[int, ...]
    shape: Literal["cos", "sin"] = "cos"
    coupling: float = 0.0


class AuditSummary(BaseModel):
    grid: GridSpec
    besov: BesovParams
    samples: int
    seed: int
    growth_max_ratio: float
    difference_max_ratio: float
    passed: bool


class NoiseModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    structure: Literal["linear_multiplicative", "additive"] = "linear_multiplicative"
    modes: list[NoiseMode]
    # None: fit at calibration time from the audit ensemble
    eta_bound: float | None = None
    gamma_bound: float = 0.0
    beta1: Envelope | None = None
    beta2: Envelope | None = None
    audit: AuditSummary | None = None

    @field_validator("modes")
    @classmethod
    def _check_modes(cls, v: list[NoiseMode]) -> list[NoiseMode]:
        if not v:
            raise ValueError("noise model needs at least one mode (K >= 1)")
        return v

    @field_validator("gamma_bound")
    @classmethod
    def _check_gamma(cls, v: float) -> float:
        if v < 0:
            raise ValueError(f"gamma_bound must be >= 0, got {v}")
        return v

    @model_validator(mode="after")
    def _check_structure(self) -> "NoiseModel":
        if self.structure == "additive" and any(not any(m.wavevector) for m in self.modes):
            raise ValueError("additive modes need a nonzero wavevector")
        dims = {len(m.wavevector) for m in self.modes}
        if len(dims) != 1:
            raise ValueError("all mode wavevectors must have the same dimension")
        return self

    @property
    def K(self) -> int:
        return len(self.modes)

    @property
    def couplings(self) -> np.ndarray:
        return np.array([m.coupling for m in self.modes])

    @property
    def is_silent(self) -> bool:
        return not np.any(self.couplings)

    def has_eta_structure(self, r: float) -> bool:
        """beta1(x) = eta x^r, the hypothesis behind the global-existence sweep."""
        return (
            self.beta1 is not None
            and self.beta1.offset == 0.0
            and math.isclose(self.beta1.exponent, r)
            and self.gamma_bound == 0.0
        )

    def scaled(self, factor: float) -> "NoiseModel":
        modes = [m.model_copy(update={"coupling": m.coupling * factor}) for m in self.modes]
        return NoiseModel(structure=self.structure, modes=modes, gamma_bound=self.gamma_bound)

    def audited_for(self, grid: GridSpec, params: BesovParams) -> bool:
        return (
            self.audit is not None
            and self.audit.passed
            and self.audit.grid == grid
            and self.audit.besov == params
        )

    def require_audit(self, grid: GridSpec, params: BesovParams) -> None:
        if self.is_silent:
            return
        if not self.audited_for(grid, params):
            raise AuditError(
                "noise model has no passing growth/difference audit for this grid and norm; "
                "run calibration or audit_noise_model first"
            )


@lru_cache(maxsize=16)
def _mode_shapes(model_json: str, grid: GridSpec) -> np.ndarray:
    model = NoiseModel.model_validate_json(model_json)
    coords = grid.coordinates()
    shapes = np.empty((model.K,) + grid.shape)
    for i, mode in enumerate(model.modes):
        if len(mode.wavevector) != grid.d:
            raise ValueError(f"mode wavevector {mode.wavevector} does not match d={grid.d}")
        phase = sum(grid.k_fundamental * kc * x for kc, x in zip(mode.wavevector, coords))
        shapes[i] = np.cos(phase) if mode.shape == "cos" else np.sin(phase)
    shapes.flags.writeable = False
    return shapes


def mode_shapes(model: NoiseModel, grid: GridSpec) -> np.ndarray:
    return _mode_shapes(model.model_dump_json(exclude={"audit", "beta1", "beta2", "eta_bound"}), grid)


def _transverse_direction(wavevector: tuple[int, ...]) -> np.ndarray:
    k = np.asarray(wavevector, dtype=np.float64)
    if len(k) == 2:
        e = np.array([-k[1], k[0]])
    else:
        axis = np.eye(3)[int(np.argmin(np.abs(k)))]
        e = np.cross(k, axis)
    return e / np.linalg.norm(e)


@lru_cache(maxsize=16)
def _additive_family(model_json: str, grid: GridSpec) -> np.ndarray:
    model = NoiseModel.model_validate_json(model_json)
    shapes = _mode_shapes(model_json, grid)
    out = np.empty((model.K, grid.d) + grid.shape, dtype=np.complex128)
    for i, mode in enumerate(model.modes):
        e = _transverse_direction(mode.wavevector)
        values = mode.coupling * shapes[i][np.newaxis] * e.reshape((-1,) + (1,) * grid.d)
        out[i] = forward(values, grid)
    out.flags.writeable = False
    return out


def noise_eval(model: NoiseModel, t: float, u: SpectralField, k: int) -> SpectralField:
    """f_k(t, u), before projection. The shipped models are autonomous in t."""
    mode = model.modes[k]
    if model.structure == "additive":
        key = model.model_dump_json(exclude={"audit", "beta1", "beta2", "eta_bound"})
        return SpectralField(u.grid, _additive_family(key, u.grid)[k])
    if mode.coupling == 0.0 or u.is_zero():
        return SpectralField.zeros(u.grid, u.components)
    return multiply_scalar(mode.coupling * mode_shapes(model, u.grid)[k], u)


def noise_family(model: NoiseModel, t: float, u: SpectralField) -> np.ndarray:
    """Coefficients of P f_k(t, u) for all k, shape (K, d, n, ..., n)."""
    if model.structure == "additive":
        return np.stack([leray_project(noise_eval(model, t, u, k)).coeffs for k in range(model.K)])
    out = np.zeros((model.K,) + u.coeffs.shape, dtype=np.complex128)
    if u.is_zero():
        return out
    for k in range(model.K):
        if model.modes[k].coupling != 0.0:
            out[k] = leray_project(noise_eval(model, t, u, k)).coeffs
    return out


def noise_params(params: BesovParams) -> BesovParams:
    """Regularity s - 1 + 2/r at which the noise conditions are stated."""
    return params.shifted(-1.0 + 2.0 / params.r)


def _audit_sample(grid: GridSpec, seed: int, index: int) -> SpectralField:
    rng = stream_rng(seed, STREAM_AUDIT, index)
    lo = float(rng.uniform(1.0, 3.0))
    hi = lo + float(rng.uniform(1.0, 4.0))
    amplitude = float(rng.uniform(0.1, 2.0))
    spec = InitialDataSpec(seed=derive_seed(seed, STREAM_AUDIT, index), amplitude=amplitude, band=(lo, hi))
    return gaussian_divfree(spec, grid)


def _condition_sides(model: NoiseModel, u: SpectralField, v: SpectralField, params: BesovParams,
                     P: DyadicPartition) -> dict:
    r = params.r
    npar = noise_params(params)
    fu = noise_family(model, 0.0, u)
    fv = noise_family(model, 0.0, v)
    return {
        "growth": hilbert_besov_norm(fu, npar, P) ** r,
        "difference": hilbert_besov_norm(fu - fv, npar, P) ** r,
        "norm_u": besov_norm(u, params, P),
        "norm_v": besov_norm(v, params, P),
        "norm_diff": besov_norm(u - v, params, P),
        "high_u": besov_norm(u, params.shifted(2.0 / r), P),
        "high_diff": besov_norm(u - v, params.shifted(2.0 / r), P),
    }


def _ensemble_sides(model, P, params, samples, seed) -> list[dict]:
    out = []
    for i in range(samples):
        u = _audit_sample(P.grid, seed, 2 * i)
        v = _audit_sample(P.grid, seed, 2 * i + 1)
        out.append(_condition_sides(model, u, v, params, P))
    return out


def fit_envelopes(model: NoiseModel, P: DyadicPartition, params: BesovParams,
                  samples: int | None = None, seed: int = 0, margin: float | None = None) -> NoiseModel:
    """Freeze beta1/beta2 from the worst ratio seen on a random ensemble, times a margin."""
    samples = samples or settings.audit_samples
    margin = margin or settings.envelope_margin
    r = params.r
    sides = _ensemble_sides(model, P, params, samples, seed)

    if model.structure == "additive":
        beta1 = Envelope(offset=margin * max(s["growth"] for s in sides))
        beta2 = Envelope()
        eta = None
    else:
        eta = margin * max(
            (s["growth"] / s["norm_u"] ** r for s in sides if s["norm_u"] > 0), default=0.0
        )
        eta_diff = margin * max(
            (s["difference"] / s["norm_diff"] ** r for s in sides if s["norm_diff"] > 0), default=0.0
        )
        eta = max(eta, eta_diff)
        beta1 = Envelope(coefficient=eta, exponent=r)
        beta2 = Envelope(offset=eta)

    logger.info(f"Fitted noise envelopes on {samples} samples: beta1={beta1}, beta2={beta2}")
    return model.model_copy(update={"eta_bound": eta, "beta1": beta1, "beta2": beta2, "audit": None})


def audit_noise_model(model: NoiseModel, P: DyadicPartition, params: BesovParams,
                      samples: int = 100, seed: int = 1) -> NoiseModel:
    """Check both conditions on fresh samples; returns the model with its audit attached."""
    if model.beta1 is None or model.beta2 is None:
        raise AuditError("noise model declares no envelopes to audit")
    r = params.r
    gamma = model.gamma_bound
    growth_worst = 0.0
    diff_worst = 0.0
    for s in _ensemble_sides(model, P, params, samples, seed):
        rhs1 = model.beta1(s["norm_u"]) + gamma * s["high_u"] ** r
        rhs2 = model.beta2(s["norm_u"] + s["norm_v"]) * s["norm_diff"] ** r + gamma * s["high_diff"] ** r
        growth_worst = max(growth_worst, _ratio(s["growth"], rhs1))
        diff_worst = max(diff_worst, _ratio(s["difference"], rhs2))

    passed = growth_worst <= 1.0 and diff_worst <= 1.0
    summary = AuditSummary(
        grid=P.grid, besov=params, samples=samples, seed=seed,
        growth_max_ratio=growth_worst, difference_max_ratio=diff_worst, passed=passed,
    )
    if passed:
        logger.info(f"Noise audit passed: growth {growth_worst:.3f}, difference {diff_worst:.3f}")
    else:
        logger.warning(f"Noise audit failed: growth {growth_worst:.3f}, difference {diff_worst:.3f}")
    return model.model_copy(update={"audit": summary})


def _ratio(lhs: float, rhs: float) -> float:
    if lhs <= 1e-300:
        return 0.0
    return lhs / rhs if rhs > 0 else math.inf


def certify(model: NoiseModel, P: DyadicPartition, params: BesovParams,
            fit_samples: int | None = None, audit_samples: int = 100, seed: int = 0) -> NoiseModel:
    """Fit envelopes when none are declared, then audit; raises AuditError on failure."""
    if model.audited_for(P.grid, params) or model.is_silent:
        return model
    if model.beta1 is None or model.beta2 is None:
        model = fit_envelopes(model, P, params, fit_samples, seed=derive_seed(seed, STREAM_AUDIT, 0))
    model = audit_noise_model(model, P, params, audit_samples, seed=derive_seed(seed, STREAM_AUDIT, 1))
    if not model.audit.passed:
        raise AuditError(
            f"noise model fails its condition audit (growth ratio {model.audit.growth_max_ratio:.3f}, "
            f"difference ratio {model.audit.difference_max_ratio:.3f})"
        )
    return model


def default_linear_model(d: int = 2) -> NoiseModel:
    zero = (0,) * d
    e1 = (1,) + (0,) * (d - 1)
    e2 = (0, 1) + (0,) * (d - 2)
    return NoiseModel(
        structure="linear_multiplicative",
        modes=[
            NoiseMode(wavevector=zero, shape="cos", coupling=0.1),
            NoiseMode(wavevector=e1, shape="cos", coupling=0.05),
            NoiseMode(wavevector=e2, shape="sin", coupling=0.05),
        ],
    )


def default_additive_model(d: int = 2, coupling: float = 0.05) -> NoiseModel:
    e1 = (1,) + (0,) * (d - 1)
    e2 = (0, 1) + (0,) * (d - 2)
    return NoiseModel(
        structure="additive",
        modes=[
            NoiseMode(wavevector=e1, shape="cos", coupling=coupling),
            NoiseMode(wavevector=e2, shape="sin", coupling=coupling),
        ],
    )


def load_noise_model(path: str | Path) -> NoiseModel:
    return NoiseModel.model_validate(json.loads(Path(path).read_text()))


def save_noise_model(model: NoiseModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2))
    return path
