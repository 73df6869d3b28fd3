"""
Fixed-point formulation of the truncated system on one Wiener path.

    K(u) = e^{t Laplace} u0 - B(chi1 u, u) + F_{chi1 chi2 f}(u)

The cut-offs are computed from the iterate's own norms, so K is a self-map that
includes its truncation. Distances between iterates use the path-wise S-norm
(sup-in-time critical norm together with the L^r-in-time norm at s + 2/r).
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.flow.heat import Trajectory, bilinear_B, check_same_time_grid, heat_trajectory
from src.noise.convolution import stochastic_convolution
from src.noise.model import NoiseModel
from src.noise.wiener import WienerPath
from src.solver.config import SolverConfig
from src.solver.cutoffs import CutoffTrace, cutoff_series
from src.spectral.grid import SpectralField
from src.spectral.norms import besov_series, chemin_lerner_from_blocks, trajectory_block_norms
from src.spectral.partition import DyadicPartition

logger = logging.getLogger(__name__)

NO_CONTRACTION_RUN = 3


def trajectory_cutoffs(u_traj: Trajectory, config: SolverConfig, P: DyadicPartition) -> CutoffTrace:
    _, blocks = trajectory_block_norms(u_traj, config.besov.p, P)
    r = config.besov.r
    inst = besov_series(blocks, config.besov.s, r, P)
    rate = besov_series(blocks, config.besov.s + 2.0 / r, r, P)
    return cutoff_series(rate, inst, config.tg.dt, config.effective_R, config.N_cutoff, r)


def s_norm(traj: Trajectory, config: SolverConfig, P: DyadicPartition) -> float:
    """(||u||_{L~^inf B^s}^r + ||u||_{L~^r B^{s+2/r}}^r)^(1/r)."""
    if not np.any(traj.coeffs):
        return 0.0
    times, blocks = trajectory_block_norms(traj, config.besov.p, P)
    r = config.besov.r
    sup_part = chemin_lerner_from_blocks(times, blocks, config.besov.shifted(0.0, q=math.inf), P)
    rate_part = chemin_lerner_from_blocks(times, blocks, config.rate_params.shifted(0.0, q=r), P)
    return (sup_part**r + rate_part**r) ** (1.0 / r)


def fixed_point_map_K(
    u_traj: Trajectory,
    u0: SpectralField,
    model: NoiseModel,
    path: WienerPath,
    config: SolverConfig,
    P: DyadicPartition,
) -> tuple[Trajectory, CutoffTrace]:
    tg = config.tg
    if u0.grid != u_traj.grid or P.grid != u0.grid:
        raise ValueError("grid mismatch between initial data, trajectory and partition")
    heat = heat_trajectory(u0, tg)
    check_same_time_grid(u_traj, heat, tg)
    model.require_audit(u0.grid, config.besov)
    config.check_noise(model)

    trace = trajectory_cutoffs(u_traj, config, P)
    nonlinear = bilinear_B(u_traj.scaled(trace.chi1), u_traj, tg)
    noise = stochastic_convolution(model, u_traj, path, tg, weights=trace.weights)
    return heat - nonlinear + noise, trace


@dataclass
class ContractionReport:
    status: str = "max-iter"
    iterations: int = 0
    distances: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    @property
    def contracted(self) -> bool:
        return all(r < 1.0 for r in self.ratios)


def picard_solve(
    u0: SpectralField,
    model: NoiseModel,
    path: WienerPath,
    config: SolverConfig,
    P: DyadicPartition,
) -> tuple[Trajectory, ContractionReport]:
    """Iterate K from the heat trajectory of u0 on a fixed Wiener path."""
    u = heat_trajectory(u0, config.tg)
    report = ContractionReport()

    for n in range(1, config.picard_max_iter + 1):
        u_next, _ = fixed_point_map_K(u, u0, model, path, config, P)
        dist = s_norm(u_next - u, config, P)
        if report.distances and report.distances[-1] > 0:
            report.ratios.append(dist / report.distances[-1])
        report.distances.append(dist)
        report.iterations = n
        u = u_next
        logger.debug(f"Picard iterate {n}: distance {dist:.3e}")

        if not np.isfinite(dist):
            report.status = "numerical-blowup"
            break
        if dist < config.picard_tol:
            report.status = "converged"
            break
        recent = report.ratios[-NO_CONTRACTION_RUN:]
        if len(recent) == NO_CONTRACTION_RUN and all(r >= 1.0 for r in recent):
            report.status = "no-contraction"
            logger.warning(f"Picard iteration stopped contracting after {n} iterates: ratios {recent}")
            break

    return u, report
