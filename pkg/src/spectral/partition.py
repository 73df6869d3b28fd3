"""
Littlewood-Paley filter bank on the periodic grid.

The radial profile g is a smooth bump equal to 1 on [1, 2] and supported in
[3/4, 8/3]; each filter is g(2^-j |xi|) divided by the full dyadic sum, so the
partition of unity is exact wherever the shells are resolved.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from src.spectral.grid import GridSpec, SpectralField, wavenumbers

logger = logging.getLogger(__name__)

RING_INNER = 3.0 / 4.0
RING_OUTER = 8.0 / 3.0


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity transition from 0 (x <= 0) to 1 (x >= 1) built on exp(-1/x)."""
    x = np.asarray(x, dtype=np.float64)

    def h(y):
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(-1.0 / y[pos])
        return out

    a = h(x)
    b = h(1.0 - x)
    return a / (a + b)


def radial_bump(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    rising = _smooth_step((x - RING_INNER) / (1.0 - RING_INNER))
    falling = _smooth_step((RING_OUTER - x) / (RING_OUTER - 2.0))
    return rising * falling


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    grid: GridSpec
    j_min: int
    j_max: int
    filter_values: np.ndarray  # (j_max - j_min + 1, n, ..., n)
    ring_bounds: tuple[float, float] = (RING_INNER, RING_OUTER)

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def scales(self) -> np.ndarray:
        return 2.0 ** np.arange(self.j_min, self.j_max + 1, dtype=np.float64)

    @property
    def band(self) -> tuple[float, float]:
        """Frequency band on which every contributing shell is kept."""
        return 2.0 ** (self.j_min + 1), 2.0 ** (self.j_max - 1)

    def filter(self, j: int) -> np.ndarray:
        if j < self.j_min or j > self.j_max:
            raise ValueError(f"dyadic index {j} outside [{self.j_min}, {self.j_max}]")
        return self.filter_values[j - self.j_min]

    def annulus(self, j: int) -> tuple[float, float]:
        return 2.0**j * self.ring_bounds[0], 2.0**j * self.ring_bounds[1]


def shell_range(grid: GridSpec) -> tuple[int, int]:
    eps = 1e-12
    j_min = math.floor(math.log2(grid.k_fundamental / RING_OUTER) + eps) + 1
    j_max = math.ceil(math.log2(grid.k_nyquist / RING_INNER) - eps) - 1
    return j_min, j_max


def build_partition(grid: GridSpec) -> DyadicPartition:
    j_min, j_max = shell_range(grid)

    kmag = wavenumbers(grid).kmag
    j_top = math.ceil(math.log2(float(kmag.max()) / RING_INNER)) + 1
    total = np.zeros_like(kmag)
    for i in range(j_min - 2, j_top + 1):
        total += radial_bump(kmag * 2.0**-i)
    total[total == 0] = 1.0

    filters = np.empty((j_max - j_min + 1,) + grid.shape, dtype=np.float64)
    for idx, j in enumerate(range(j_min, j_max + 1)):
        filters[idx] = radial_bump(kmag * 2.0**-j) / total
    filters.flags.writeable = False

    logger.debug(f"Built dyadic partition j in [{j_min}, {j_max}] on {grid.shape}")
    return DyadicPartition(grid=grid, j_min=j_min, j_max=j_max, filter_values=filters)


def _check_grid(u: SpectralField, P: DyadicPartition) -> None:
    if u.grid != P.grid:
        raise ValueError("field and partition live on different grids")


def dyadic_block(u: SpectralField, j: int, P: DyadicPartition) -> SpectralField:
    _check_grid(u, P)
    return u.with_coeffs(u.coeffs * P.filter(j))


def low_freq_sum(u: SpectralField, j: int, P: DyadicPartition) -> SpectralField:
    _check_grid(u, P)
    if j <= P.j_min:
        return SpectralField.zeros(u.grid, u.components)
    top = min(j - 1, P.j_max)
    mask = np.sum(P.filter_values[: top - P.j_min + 1], axis=0)
    return u.with_coeffs(u.coeffs * mask)


def partition_residual(P: DyadicPartition) -> float:
    kmag = wavenumbers(P.grid).kmag
    lo, hi = P.band
    inside = (kmag >= lo) & (kmag <= hi)
    if not np.any(inside):
        return 0.0
    return float(np.max(np.abs(np.sum(P.filter_values, axis=0)[inside] - 1.0)))


def orthogonality_defect(P: DyadicPartition) -> float:
    worst = 0.0
    for a in range(len(P.indices)):
        for b in range(a + 2, len(P.indices)):
            worst = max(worst, float(np.max(P.filter_values[a] * P.filter_values[b])))
    return worst


def partition_summary(P: DyadicPartition) -> dict:
    kmag = wavenumbers(P.grid).kmag
    lo, hi = P.band
    inside = (kmag >= lo) & (kmag <= hi)
    residual = np.abs(np.sum(P.filter_values, axis=0)[inside] - 1.0)
    return {
        "grid": P.grid.model_dump(),
        "j_min": P.j_min,
        "j_max": P.j_max,
        "band": [lo, hi],
        "shells": [
            {"j": j, "annulus": list(P.annulus(j)), "modes": int(np.count_nonzero(P.filter(j)))}
            for j in P.indices
        ],
        "residual_max": float(residual.max()) if residual.size else 0.0,
        "residual_mean": float(residual.mean()) if residual.size else 0.0,
        "orthogonality_defect": orthogonality_defect(P),
    }
