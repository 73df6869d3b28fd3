"""
Homogeneous Besov norms and their time-dependent (Chemin-Lerner) variants.

Everything is built from one primitive, the table of block norms
||Delta_j u||_{L^p} over the resolvable shells. Vector fields (and K-mode
families) use the pointwise Euclidean magnitude over components before the
L^p quadrature.
"""
import logging
import math
from collections.abc import Iterable, Sequence

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.integrate import trapezoid

from config.settings import settings
from src.spectral.grid import GridSpec, SpectralField
from src.spectral.partition import DyadicPartition

logger = logging.getLogger(__name__)


class BesovParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: float
    p: float = 2.0
    r: float = 2.0
    q: float | None = None
    # When set, (p, r) must satisfy the admissibility range for dimension d and s = d/p - 1
    critical_dim: int | None = None

    @model_validator(mode="before")
    @classmethod
    def _fill_critical_index(cls, data):
        # {"p": .., "r": .., "critical_dim": d} is enough in config files
        if isinstance(data, dict) and "s" not in data and data.get("critical_dim") is not None:
            data = dict(data, s=data["critical_dim"] / float(data.get("p", 2.0)) - 1.0)
        return data

    @field_validator("p", "r")
    @classmethod
    def _check_exponent(cls, v: float) -> float:
        if not (2.0 <= v < math.inf):
            raise ValueError(f"exponent must lie in [2, inf), got {v}")
        return v

    @field_validator("q")
    @classmethod
    def _check_time_exponent(cls, v: float | None) -> float | None:
        if v is not None and v < 1.0:
            raise ValueError(f"time exponent q must lie in [1, inf], got {v}")
        return v

    @model_validator(mode="after")
    def _check_critical(self) -> "BesovParams":
        if self.critical_dim is None:
            return self
        d = self.critical_dim
        if not admissible(d, self.p, self.r):
            raise ValueError(
                f"(p, r) = ({self.p}, {self.r}) is not admissible in dimension {d}: "
                f"need r < 2p/(p-d) when p > d"
            )
        if abs(self.s - (d / self.p - 1.0)) > 1e-12:
            raise ValueError(f"critical regularity is s = d/p - 1 = {d / self.p - 1.0}, got {self.s}")
        return self

    @classmethod
    def critical(cls, d: int, p: float, r: float, q: float | None = None) -> "BesovParams":
        return cls(s=d / p - 1.0, p=p, r=r, q=q, critical_dim=d)

    def shifted(self, ds: float, q: float | None = None) -> "BesovParams":
        """Same (p, r) with regularity s + ds; drops the critical flag."""
        return BesovParams(s=self.s + ds, p=self.p, r=self.r, q=self.q if q is None else q)


def admissible(d: int, p: float, r: float) -> bool:
    if p < 2 or r < 2 or math.isinf(r):
        return False
    if p <= d:
        return True
    return r < 2.0 * p / (p - d)


def lp_norm(values: np.ndarray, p: float, grid: GridSpec) -> float:
    """Cell-volume weighted L^p norm of a (components, n, ..., n) physical array."""
    mag = np.sqrt(np.sum(values**2, axis=0)) if values.ndim > grid.d else np.abs(values)
    if math.isinf(p):
        return float(mag.max()) if mag.size else 0.0
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def field_lp_norm(u: SpectralField, p: float) -> float:
    return lp_norm(u.values, p, u.grid)


def block_lp_norms(coeffs: np.ndarray | SpectralField, p: float, P: DyadicPartition) -> np.ndarray:
    """||Delta_j u||_{L^p} for every shell j_min..j_max, in shell order."""
    if isinstance(coeffs, SpectralField):
        if coeffs.grid != P.grid:
            raise ValueError("field and partition live on different grids")
        coeffs = coeffs.coeffs
    grid = P.grid
    axes = tuple(range(coeffs.ndim - grid.d, coeffs.ndim))
    out = np.empty(len(P.indices))
    for idx in range(len(P.indices)):
        block = scipy.fft.ifftn(coeffs * P.filter_values[idx], axes=axes, workers=settings.fft_workers).real
        block = block.reshape((-1,) + grid.shape)
        out[idx] = lp_norm(block, p, grid)
    return out


def weighted_lr_sum(blocks: np.ndarray, s: float, r: float, P: DyadicPartition) -> float:
    weighted = (P.scales**s) * np.asarray(blocks, dtype=np.float64)
    if math.isinf(r):
        return float(weighted.max())
    return float(np.sum(weighted**r) ** (1.0 / r))


def besov_norm(u: SpectralField, params: BesovParams, P: DyadicPartition) -> float:
    if u.is_zero():
        return 0.0
    return weighted_lr_sum(block_lp_norms(u, params.p, P), params.s, params.r, P)


def hilbert_besov_norm(family: Sequence[SpectralField] | np.ndarray, params: BesovParams, P: DyadicPartition) -> float:
    """Besov norm of an H-valued field given as K mode fields; |.|_H is taken pointwise."""
    if isinstance(family, np.ndarray):
        stacked = family
    else:
        if not family:
            return 0.0
        stacked = np.stack([f.coeffs for f in family])
    stacked = stacked.reshape((-1,) + P.grid.shape)
    if not np.any(stacked):
        return 0.0
    return weighted_lr_sum(block_lp_norms(stacked, params.p, P), params.s, params.r, P)


def _split_trajectory(traj: Iterable) -> tuple[np.ndarray, list[SpectralField]]:
    samples = list(traj)
    if not samples:
        raise ValueError("empty trajectory")
    times = np.array([t for t, _ in samples], dtype=np.float64)
    return times, [u for _, u in samples]


def trajectory_block_norms(traj: Iterable, p: float, P: DyadicPartition) -> tuple[np.ndarray, np.ndarray]:
    """(times, blocks) where blocks[m, j] = ||Delta_j u(t_m)||_{L^p}."""
    times, fields = _split_trajectory(traj)
    blocks = np.stack([block_lp_norms(u, p, P) for u in fields])
    return times, blocks


def time_lq(values: np.ndarray, times: np.ndarray, q: float) -> np.ndarray:
    """L^q in time along axis 0 by trapezoid quadrature; sup over samples when q is infinite."""
    if math.isinf(q):
        return np.max(values, axis=0)
    if len(times) < 2:
        raise ValueError("a finite time exponent needs at least two samples")
    return trapezoid(values**q, times, axis=0) ** (1.0 / q)


def chemin_lerner_from_blocks(
    times: np.ndarray, blocks: np.ndarray, params: BesovParams, P: DyadicPartition
) -> float:
    q = math.inf if params.q is None else params.q
    per_block = time_lq(blocks, times, q)
    return weighted_lr_sum(per_block, params.s, params.r, P)


def chemin_lerner_norm(traj: Iterable, params: BesovParams, P: DyadicPartition) -> float:
    times, blocks = trajectory_block_norms(traj, params.p, P)
    return chemin_lerner_from_blocks(times, blocks, params, P)


def besov_series(blocks: np.ndarray, s: float, r: float, P: DyadicPartition) -> np.ndarray:
    """Instantaneous Besov norm for each row of a (samples, shells) block table."""
    weighted = (P.scales**s)[np.newaxis, :] * blocks
    if math.isinf(r):
        return weighted.max(axis=1)
    return np.sum(weighted**r, axis=1) ** (1.0 / r)
