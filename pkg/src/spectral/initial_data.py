"""
Initial-data constructors.

gaussian_divfree  band-limited random field, projected and scaled to an RMS amplitude
oscillating       eps^(3/p - 1) sin(x1/eps) (0, -d3 phi, d2 phi) with a Gaussian phi (3D only)
wave_packet       scalar Gaussian-enveloped cosine, used for scaling checks
file              coefficients previously written by field_io.save_field
"""
import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.spectral.field_io import load_field
from src.spectral.fields import leray_project
from src.spectral.grid import GridSpec, SpectralField, forward, inverse, wavenumbers
from src.utils.seeding import STREAM_INITIAL, stream_rng

logger = logging.getLogger(__name__)


class UnresolvableOscillation(ValueError):
    """1/epsilon sits at or above the dealiased cutoff of the grid."""


class InitialDataSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["gaussian_divfree", "oscillating", "file"] = "gaussian_divfree"
    amplitude: float = 1.0
    epsilon: float | None = None
    p_exponent: float = 6.0
    profile_width: float = 1.0
    seed: int = 0
    # Wavenumber band [lo, hi] of the random field
    band: tuple[float, float] = (1.0, 4.0)
    path: str | None = None

    @field_validator("epsilon")
    @classmethod
    def _check_epsilon(cls, v: float | None) -> float | None:
        if v is not None and not (0.0 < v < 1.0):
            raise ValueError(f"epsilon must lie in (0, 1), got {v}")
        return v

    @field_validator("profile_width")
    @classmethod
    def _check_width(cls, v: float) -> float:
        if v <= 0:
            raise ValueError(f"profile_width must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def _check_kind(self) -> "InitialDataSpec":
        if self.kind == "oscillating" and self.epsilon is None:
            raise ValueError("oscillating initial data needs epsilon")
        if self.kind == "file" and not self.path:
            raise ValueError("file initial data needs a path")
        if self.band[0] >= self.band[1]:
            raise ValueError(f"band must be increasing, got {self.band}")
        return self


def _rms(u: SpectralField) -> float:
    return float(np.sqrt(np.mean(np.sum(u.values**2, axis=0))))


def gaussian_divfree(spec: InitialDataSpec, grid: GridSpec) -> SpectralField:
    rng = stream_rng(spec.seed, STREAM_INITIAL)
    white = rng.standard_normal((grid.d,) + grid.shape)
    kmag = wavenumbers(grid).kmag
    envelope = (kmag >= spec.band[0]) & (kmag <= spec.band[1]) & wavenumbers(grid).dealias
    u = leray_project(SpectralField(grid, forward(white, grid) * envelope))
    rms = _rms(u)
    if rms == 0.0:
        raise ValueError(f"band {spec.band} holds no resolvable modes on n={grid.n}")
    return SpectralField(grid, u.coeffs * (spec.amplitude / rms), {"kind": spec.kind, "seed": spec.seed})


def _periodic_gaussian(grid: GridSpec, width: float) -> np.ndarray:
    center = grid.L / 2.0
    r2 = np.zeros(grid.shape)
    for x in grid.coordinates():
        dx = (x - center + grid.L / 2.0) % grid.L - grid.L / 2.0
        r2 += dx**2
    return np.exp(-r2 / (2.0 * width**2))


def wave_packet(grid: GridSpec, k0: float, width: float, scale: float = 1.0) -> SpectralField:
    """Scalar packet lambda g(lambda (x - c)), g a Gaussian-enveloped cos(k0 x1), c the box center.

    lambda = scale; for lambda = 2^k the critical Besov norm is unchanged.
    """
    coords = grid.coordinates()
    center = grid.L / 2.0
    r2 = sum((scale * (x - center)) ** 2 for x in coords)
    carrier = np.cos(k0 * scale * (coords[0] - center))
    return SpectralField.from_physical(grid, scale * np.exp(-r2 / (2.0 * width**2)) * carrier, kind="wave_packet")


def snap_epsilon(epsilon: float, grid: GridSpec) -> tuple[int, float]:
    """Round 1/epsilon to the nearest multiple of the fundamental frequency."""
    m = max(1, int(round(1.0 / (epsilon * grid.k_fundamental))))
    k_eps = m * grid.k_fundamental
    return m, 1.0 / k_eps


def oscillating(spec: InitialDataSpec, grid: GridSpec) -> SpectralField:
    if grid.d != 3:
        raise ValueError(f"oscillating initial data requires d = 3, got d = {grid.d}")
    m, eps_eff = snap_epsilon(spec.epsilon, grid)
    k_eps = 1.0 / eps_eff
    if k_eps >= grid.dealias_cutoff:
        raise UnresolvableOscillation(
            f"oscillation unresolvable: 1/epsilon = {k_eps:.3f} >= dealiased cutoff {grid.dealias_cutoff:.3f}"
        )

    wn = wavenumbers(grid)
    # one-component arrays: the transforms act on axes 1..d
    phi_hat = forward(_periodic_gaussian(grid, spec.profile_width)[np.newaxis], grid)
    d2_phi = inverse(1j * wn.k[1] * phi_hat, grid)[0]
    d3_phi = inverse(1j * wn.k[2] * phi_hat, grid)[0]

    x1 = grid.coordinates()[0]
    carrier = spec.amplitude * eps_eff ** (3.0 / spec.p_exponent - 1.0) * np.sin(k_eps * x1)
    values = np.stack([np.zeros(grid.shape), -carrier * d3_phi, carrier * d2_phi])
    logger.debug(f"Oscillating data: epsilon {spec.epsilon} snapped to {eps_eff:.5f} (m={m})")
    return SpectralField.from_physical(
        grid, values, kind=spec.kind, epsilon=spec.epsilon, epsilon_effective=eps_eff, frequency_index=m
    )


def from_file(spec: InitialDataSpec, grid: GridSpec) -> SpectralField:
    u = load_field(spec.path)
    if u.grid != grid:
        raise ValueError(f"field in {spec.path} lives on {u.grid}, expected {grid}")
    return u


def make_initial_data(spec: InitialDataSpec, grid: GridSpec) -> SpectralField:
    if spec.kind == "gaussian_divfree":
        return gaussian_divfree(spec, grid)
    if spec.kind == "oscillating":
        return oscillating(spec, grid)
    return from_file(spec, grid)
