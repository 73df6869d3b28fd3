"""
Leray projection and the spectral derivatives built around it.

The transport term P div(u (x) v) is formed from 2/3-truncated inputs.
"""
import numpy as np

from src.spectral.grid import SpectralField, forward, inverse, wavenumbers


def leray_project(u: SpectralField) -> SpectralField:
    """Apply I - k k^T / |k|^2 mode by mode."""
    if u.components != u.grid.d:
        raise ValueError(f"Leray projection needs a {u.grid.d}-component field, got {u.components}")
    wn = wavenumbers(u.grid)
    k_dot_u = np.sum(wn.k * u.coeffs, axis=0)
    return u.with_coeffs(u.coeffs - wn.k * (k_dot_u * wn.k2_inv))


def gradient(psi: SpectralField) -> SpectralField:
    if psi.components != 1:
        raise ValueError("gradient expects a scalar field")
    wn = wavenumbers(psi.grid)
    return SpectralField(psi.grid, 1j * wn.k * psi.coeffs[0])


def divergence(u: SpectralField) -> SpectralField:
    wn = wavenumbers(u.grid)
    return SpectralField(u.grid, np.sum(1j * wn.k * u.coeffs, axis=0)[np.newaxis])


def dealias(u: SpectralField) -> SpectralField:
    return u.with_coeffs(u.coeffs * wavenumbers(u.grid).dealias)


def tensor_divergence(u: SpectralField, v: SpectralField) -> SpectralField:
    """div(u (x) v)_i = sum_j d_j (u_j v_i), products formed on 2/3-truncated inputs."""
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    grid = u.grid
    wn = wavenumbers(grid)
    mask = wn.dealias
    u_phys = inverse(u.coeffs * mask, grid)
    v_phys = inverse(v.coeffs * mask, grid)
    out = np.zeros_like(v.coeffs)
    for j in range(grid.d):
        flux = forward(u_phys[j] * v_phys, grid)
        out += 1j * wn.k[j] * flux
    return SpectralField(grid, out * mask)


def nonlinear_term(u: SpectralField, v: SpectralField) -> SpectralField:
    """P div(u (x) v), dealiased."""
    if u.is_zero() or v.is_zero():
        return SpectralField.zeros(v.grid, v.components)
    return leray_project(tensor_divergence(u, v))


def multiply_scalar(psi: np.ndarray, u: SpectralField) -> SpectralField:
    """Dealiased product of a physical scalar profile with a field."""
    mask = wavenumbers(u.grid).dealias
    u_phys = inverse(u.coeffs * mask, u.grid)
    return SpectralField(u.grid, forward(psi[np.newaxis] * u_phys, u.grid) * mask)


def inner_product(u: SpectralField, v: SpectralField) -> float:
    return float(np.sum(u.values * v.values) * u.grid.cell_volume)


def taylor_green(grid, amplitude: float = 1.0) -> SpectralField:
    """(sin x cos y, -cos x sin y) on the first two axes; zero third component in 3D."""
    coords = grid.coordinates()
    x, y = grid.k_fundamental * coords[0], grid.k_fundamental * coords[1]
    comps = [amplitude * np.sin(x) * np.cos(y), -amplitude * np.cos(x) * np.sin(y)]
    if grid.d == 3:
        comps.append(np.zeros_like(x))
    return SpectralField.from_physical(grid, np.stack(comps), kind="taylor_green")
