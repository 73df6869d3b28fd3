import logging
from collections.abc import Callable

import numpy as np

from src.flow.heat import TimeGrid, Trajectory, heat_multiplier
from src.noise.model import NoiseModel, noise_family
from src.noise.wiener import WienerPath
from src.spectral.grid import GridSpec

logger = logging.getLogger(__name__)


def integrand_at(model: NoiseModel, u_traj: Trajectory) -> Callable[[int], np.ndarray]:
    """m -> P f_k(t_m, u(t_m)) stacked over k, shape (K, d, n, ..., n)."""
    if model.structure == "additive":
        constant = noise_family(model, 0.0, u_traj.field(0))
        return lambda m: constant
    return lambda m: noise_family(model, float(u_traj.times[m]), u_traj.field(m))


def convolve_integrand(
    family_at: Callable[[int], np.ndarray],
    path: WienerPath,
    tg: TimeGrid,
    grid: GridSpec,
    components: int,
    weights: np.ndarray | None = None,
    semigroup: bool = True,
) -> Trajectory:
    """Exponential Euler for dF - Laplace F dt = G dW, F(0) = 0, G taken at the left node."""
    path.check_matches(tg)
    decay = heat_multiplier(grid, tg.dt) if semigroup else 1.0
    out = np.zeros((tg.n_steps + 1, components) + grid.shape, dtype=np.complex128)
    for m in range(tg.n_steps):
        w = 1.0 if weights is None else float(weights[m])
        if w == 0.0:
            out[m + 1] = decay * out[m]
            continue
        kick = np.tensordot(path.increments[m], family_at(m), axes=1)
        out[m + 1] = decay * (out[m] + w * kick)
    return Trajectory(grid, tg.times(), out)


def stochastic_convolution(
    model: NoiseModel,
    u_traj: Trajectory,
    path: WienerPath,
    tg: TimeGrid,
    weights: np.ndarray | None = None,
    semigroup: bool = True,
) -> Trajectory:
    """F(t) = int_0^t e^{(t-s) Laplace} P f(s, u(s)) dW(s) on the nodes of tg.

    weights, when given, multiply the integrand node by node (the cut-off product
    chi1 chi2 of the truncated system). semigroup=False freezes the heat factor
    to 1, leaving the bare Ito sum.
    """
    if len(u_traj) != tg.n_steps + 1:
        raise ValueError("time grid mismatch: trajectory and time grid differ")
    if path.K != model.K:
        raise ValueError(f"Wiener path has {path.K} modes, noise model {model.K}")
    components = u_traj.coeffs.shape[1]
    if model.is_silent:
        path.check_matches(tg)
        return Trajectory.zeros(u_traj.grid, tg, components)
    return convolve_integrand(
        integrand_at(model, u_traj), path, tg, u_traj.grid, components, weights, semigroup
    )
