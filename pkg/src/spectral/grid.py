"""
Periodic grid and the spectral field container.

Fields live as unnormalized scipy.fft coefficients over a d-dimensional torus of
side L. The zero-frequency coefficient is always forced to 0, which is the
discrete counterpart of working with distributions whose low-frequency
partial sums vanish.
"""
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, field_validator

from config.settings import settings

ZERO_MODE_POLICY = "zeroed"


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int = 2
    n: int = 64
    L: float = 2.0 * np.pi

    @field_validator("d")
    @classmethod
    def _check_dimension(cls, v: int) -> int:
        if v not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {v}")
        return v

    @field_validator("n")
    @classmethod
    def _check_points(cls, v: int) -> int:
        if v < 1 or v & (v - 1):
            raise ValueError(f"points_per_axis must be a power of two, got {v}")
        if v < 16:
            raise ValueError(f"insufficient resolution: points_per_axis={v} < 16")
        return v

    @field_validator("L")
    @classmethod
    def _check_length(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"box_length must be positive, got {v}")
        return v

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def axes(self) -> tuple[int, ...]:
        # spatial axes of a (components, n, ..., n) array
        return tuple(range(1, self.d + 1))

    @property
    def cell_volume(self) -> float:
        return (self.L / self.n) ** self.d

    @property
    def k_fundamental(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def k_nyquist(self) -> float:
        return np.pi * self.n / self.L

    @property
    def dealias_cutoff(self) -> float:
        return (2.0 / 3.0) * self.k_nyquist

    def coordinates(self) -> list[np.ndarray]:
        x = np.arange(self.n) * (self.L / self.n)
        return np.meshgrid(*([x] * self.d), indexing="ij")


@dataclass(frozen=True)
class Wavenumbers:
    k: np.ndarray        # (d, n, ..., n)
    k2: np.ndarray
    k2_inv: np.ndarray   # 0 at the zero mode
    kmag: np.ndarray
    dealias: np.ndarray  # 2/3-rule mask


@lru_cache(maxsize=16)
def wavenumbers(grid: GridSpec) -> Wavenumbers:
    klin = grid.k_fundamental * scipy.fft.fftfreq(grid.n, d=1.0 / grid.n)
    k = np.array(np.meshgrid(*([klin] * grid.d), indexing="ij"))
    k2 = np.sum(k**2, axis=0)
    k2_inv = np.zeros_like(k2)
    nonzero = k2 > 0
    k2_inv[nonzero] = 1.0 / k2[nonzero]
    dealias = np.all(np.abs(k) < grid.dealias_cutoff, axis=0)
    for arr in (k, k2, k2_inv, dealias):
        arr.flags.writeable = False
    kmag = np.sqrt(k2)
    kmag.flags.writeable = False
    return Wavenumbers(k=k, k2=k2, k2_inv=k2_inv, kmag=kmag, dealias=dealias)


def forward(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    return scipy.fft.fftn(values, axes=grid.axes, workers=settings.fft_workers)


def inverse(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    return scipy.fft.ifftn(coeffs, axes=grid.axes, workers=settings.fft_workers).real


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: GridSpec
    coeffs: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.ndim == self.grid.d:
            coeffs = coeffs[np.newaxis]
        if coeffs.shape[1:] != self.grid.shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match grid {self.grid.shape}"
            )
        coeffs[(slice(None),) + (0,) * self.grid.d] = 0.0
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def zero_mode_policy(self) -> str:
        return ZERO_MODE_POLICY

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray, **metadata) -> "SpectralField":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == grid.d:
            values = values[np.newaxis]
        return cls(grid, forward(values, grid), dict(metadata))

    @classmethod
    def zeros(cls, grid: GridSpec, components: int | None = None) -> "SpectralField":
        c = grid.d if components is None else components
        return cls(grid, np.zeros((c,) + grid.shape, dtype=np.complex128))

    @cached_property
    def values(self) -> np.ndarray:
        out = inverse(self.coeffs, self.grid)
        out.flags.writeable = False
        return out

    def physical(self) -> np.ndarray:
        return self.values

    def imaginary_residual(self) -> float:
        """Largest imaginary part of the inverse transform; 0 for a real field."""
        full = scipy.fft.ifftn(self.coeffs, axes=self.grid.axes)
        return float(np.max(np.abs(full.imag))) if full.size else 0.0

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs, dict(self.metadata))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def _check_compatible(self, other: "SpectralField") -> None:
        if other.grid != self.grid or other.coeffs.shape != self.coeffs.shape:
            raise ValueError("fields live on different grids or have different components")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__
