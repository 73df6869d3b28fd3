"""
Heat semigroup, Duhamel integration and the bilinear operator B.

Time integration is exponential quadrature: every Fourier mode carries its exact
integrating factor exp(-h|k|^2) and the forcing is interpolated linearly between
nodes, so stiff high modes impose no step restriction.
"""
import logging
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.special import exprel

from src.spectral.fields import nonlinear_term
from src.spectral.grid import GridSpec, SpectralField, wavenumbers

logger = logging.getLogger(__name__)


class TimeGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_end: float = 0.25
    n_steps: int = 250

    @field_validator("t_end")
    @classmethod
    def _check_end(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"t_end must be positive, got {v}")
        return v

    @field_validator("n_steps")
    @classmethod
    def _check_steps(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"n_steps must be >= 1, got {v}")
        return v

    @classmethod
    def from_dt(cls, t_end: float, dt: float) -> "TimeGrid":
        return cls(t_end=t_end, n_steps=max(1, int(round(t_end / dt))))

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(t_end=self.t_end, n_steps=self.n_steps * factor)


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: GridSpec
    times: np.ndarray
    coeffs: np.ndarray  # (samples, components, n, ..., n)

    def __post_init__(self):
        if self.coeffs.shape[0] != len(self.times):
            raise ValueError(f"{self.coeffs.shape[0]} samples for {len(self.times)} times")
        self.coeffs.flags.writeable = False

    @classmethod
    def from_fields(cls, times: np.ndarray, fields: list[SpectralField]) -> "Trajectory":
        return cls(fields[0].grid, np.asarray(times, dtype=np.float64), np.stack([f.coeffs for f in fields]))

    @classmethod
    def zeros(cls, grid: GridSpec, tg: TimeGrid, components: int | None = None) -> "Trajectory":
        c = grid.d if components is None else components
        return cls(grid, tg.times(), np.zeros((tg.n_steps + 1, c) + grid.shape, dtype=np.complex128))

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[tuple[float, SpectralField]]:
        for m, t in enumerate(self.times):
            yield float(t), self.field(m)

    def field(self, m: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[m])

    def final(self) -> SpectralField:
        return self.field(len(self.times) - 1)

    def scaled(self, weights: np.ndarray | float) -> "Trajectory":
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim == 1:
            w = w.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        return Trajectory(self.grid, self.times, self.coeffs * w)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        check_same_time_grid(self, other)
        return Trajectory(self.grid, self.times, self.coeffs + other.coeffs)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        check_same_time_grid(self, other)
        return Trajectory(self.grid, self.times, self.coeffs - other.coeffs)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))


def check_same_time_grid(a: Trajectory, b: Trajectory, tg: TimeGrid | None = None) -> None:
    if a.grid != b.grid:
        raise ValueError("time grid mismatch: trajectories live on different spatial grids")
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=0, atol=1e-14):
        raise ValueError("time grid mismatch")
    if tg is not None and (len(a.times) != tg.n_steps + 1 or not np.allclose(a.times, tg.times(), atol=1e-14)):
        raise ValueError("time grid mismatch")


def heat_multiplier(grid: GridSpec, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    return np.exp(-t * wavenumbers(grid).k2)


def heat_semigroup(u: SpectralField, t: float) -> SpectralField:
    return u.with_coeffs(u.coeffs * heat_multiplier(u.grid, t))


def heat_trajectory(u0: SpectralField, tg: TimeGrid) -> Trajectory:
    k2 = wavenumbers(u0.grid).k2
    factors = np.exp(-tg.times()[:, None, None] * k2.reshape(1, 1, -1))
    coeffs = (factors * u0.coeffs.reshape(1, u0.components, -1)).reshape((-1,) + u0.coeffs.shape)
    return Trajectory(u0.grid, tg.times(), coeffs)


def _phi2(a: np.ndarray) -> np.ndarray:
    """(exp(-a) - 1 + a) / a^2, with a Taylor branch near 0."""
    out = np.empty_like(a)
    small = a < 0.1
    x = a[small]
    series = np.zeros_like(x)
    term = np.full_like(x, 0.5)
    for k in range(2, 10):
        series += term
        term = term * (-x) / (k + 1)
    out[small] = series
    big = ~small
    out[big] = (1.0 - exprel(-a[big])) / a[big]
    return out


@dataclass(frozen=True, eq=False)
class ExponentialWeights:
    decay: np.ndarray   # exp(-h k^2)
    left: np.ndarray    # weight on the forcing at t_m
    right: np.ndarray   # weight on the forcing at t_{m+1}
    euler: np.ndarray   # (1 - exp(-h k^2)) / k^2, first-order weight


@lru_cache(maxsize=32)
def exponential_weights(grid: GridSpec, dt: float) -> ExponentialWeights:
    a = dt * wavenumbers(grid).k2
    phi1 = exprel(-a)
    phi2 = _phi2(a)
    return ExponentialWeights(
        decay=np.exp(-a),
        left=dt * (phi1 - phi2),
        right=dt * phi2,
        euler=dt * phi1,
    )


def duhamel_from_samples(u0: SpectralField, forcing: np.ndarray, tg: TimeGrid) -> Trajectory:
    """Exponential trapezoid with forcing given as coefficients at every node."""
    if forcing.shape[0] != tg.n_steps + 1:
        raise ValueError("time grid mismatch: forcing samples do not match the time grid")
    w = exponential_weights(u0.grid, tg.dt)
    out = np.empty((tg.n_steps + 1,) + u0.coeffs.shape, dtype=np.complex128)
    out[0] = u0.coeffs
    for m in range(tg.n_steps):
        out[m + 1] = w.decay * out[m] + w.left * forcing[m] + w.right * forcing[m + 1]
    out[(slice(None), slice(None)) + (0,) * u0.grid.d] = 0.0
    return Trajectory(u0.grid, tg.times(), out)


def duhamel_solve(
    u0: SpectralField, forcing: Callable[[float], SpectralField] | None, tg: TimeGrid
) -> Trajectory:
    if forcing is None:
        return heat_trajectory(u0, tg)
    samples = np.stack([forcing(float(t)).coeffs for t in tg.times()])
    return duhamel_from_samples(u0, samples, tg)


def nonlinear_samples(u_traj: Trajectory, v_traj: Trajectory) -> np.ndarray:
    return np.stack([nonlinear_term(u, v).coeffs for (_, u), (_, v) in zip(u_traj, v_traj)])


def bilinear_B(u_traj: Trajectory, v_traj: Trajectory, tg: TimeGrid) -> Trajectory:
    """Solution of dB/dt - Laplace B = P div(u (x) v) with B(0) = 0."""
    check_same_time_grid(u_traj, v_traj, tg)
    zero = SpectralField.zeros(v_traj.grid, v_traj.coeffs.shape[1])
    if not np.any(u_traj.coeffs) or not np.any(v_traj.coeffs):
        return Trajectory.zeros(v_traj.grid, tg, v_traj.coeffs.shape[1])
    return duhamel_from_samples(zero, nonlinear_samples(u_traj, v_traj), tg)
