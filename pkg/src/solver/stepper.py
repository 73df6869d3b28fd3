"""
Sequential discretization of the truncated system along one Wiener path.

Diffusion is integrated exactly, the nonlinearity with an exponential
predictor-corrector (the same weights the Duhamel quadrature uses), and the
noise at the left node. The cut-offs at step m only look at nodes 0..m.
When a stopping threshold is hit the path keeps going; the record marks the hit.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from src.flow.heat import ExponentialWeights, Trajectory, exponential_weights
from src.noise.model import NoiseModel, noise_family
from src.noise.wiener import WienerPath
from src.solver.config import SolverConfig
from src.solver.cutoffs import CutoffTrace, first_crossing, theta1, theta2
from src.spectral.fields import nonlinear_term
from src.spectral.grid import SpectralField, inverse
from src.spectral.norms import besov_series, block_lp_norms, lp_norm, trajectory_block_norms
from src.spectral.partition import DyadicPartition

logger = logging.getLogger(__name__)

PathStatus = Literal["survived_horizon", "stopped_sigma", "stopped_rho", "numerical_blowup", "failed"]


@dataclass
class StoppingRecord:
    sigma_hit: float | None = None
    rho_N_hit: float | None = None
    tau_N: float | None = None
    status: PathStatus = "survived_horizon"
    blowup_step: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def stopping_record(times: np.ndarray, sigma_idx: int | None, rho_idx: int | None) -> StoppingRecord:
    sigma = None if sigma_idx is None else float(times[sigma_idx])
    rho = None if rho_idx is None else float(times[rho_idx])
    hits = [t for t in (sigma, rho) if t is not None]
    if not hits:
        return StoppingRecord()
    tau = min(hits)
    # sigma wins ties: it is the gate the global estimate is stated for
    status = "stopped_sigma" if sigma is not None and sigma <= tau else "stopped_rho"
    return StoppingRecord(sigma_hit=sigma, rho_N_hit=rho, tau_N=tau, status=status)


@dataclass
class PathTrajectory:
    trajectory: Trajectory
    trace: CutoffTrace
    inst_norms: np.ndarray   # ||u(t_m)|| at the critical index
    rate_norms: np.ndarray   # ||u(t_m)|| at the critical index + 2/r
    record: StoppingRecord

    def final_norms(self) -> dict:
        final = self.trajectory.final()
        return {
            "critical": float(self.inst_norms[-1]),
            "l2": lp_norm(final.values, 2.0, final.grid),
            "linf": lp_norm(final.values, math.inf, final.grid),
        }


def _corrected_step(
    coeffs: np.ndarray, grid, w: ExponentialWeights, chi1: float, nonlinear: bool
) -> np.ndarray:
    deterministic = w.decay * coeffs
    if not nonlinear or chi1 == 0.0 or not np.any(coeffs):
        return deterministic
    n_left = nonlinear_term(SpectralField(grid, coeffs), SpectralField(grid, coeffs)).coeffs
    predictor = SpectralField(grid, deterministic - chi1 * w.euler * n_left)
    n_right = nonlinear_term(predictor, predictor).coeffs
    return deterministic - chi1 * (w.left * n_left + w.right * n_right)


def time_step_path(
    u0: SpectralField,
    model: NoiseModel,
    path: WienerPath,
    config: SolverConfig,
    P: DyadicPartition,
    nonlinear: bool = True,
) -> PathTrajectory:
    """Simulate one path of the truncated system on config.tg.

    nonlinear=False switches off the transport term, leaving the stochastic heat
    equation with cut-offs.
    """
    tg = config.tg
    grid = u0.grid
    if P.grid != grid:
        raise ValueError("grid mismatch between initial data and partition")
    path.check_matches(tg)
    if path.K != model.K:
        raise ValueError(f"Wiener path has {path.K} modes, noise model {model.K}")
    model.require_audit(grid, config.besov)
    config.check_noise(model)

    params = config.besov
    r, R, N = params.r, config.effective_R, config.N_cutoff
    w = exponential_weights(grid, tg.dt)
    times = tg.times()

    out = np.zeros((tg.n_steps + 1,) + u0.coeffs.shape, dtype=np.complex128)
    out[0] = u0.coeffs
    acc = np.zeros(tg.n_steps + 1)
    inst = np.zeros(tg.n_steps + 1)
    rate = np.zeros(tg.n_steps + 1)
    chi1 = np.zeros(tg.n_steps + 1)
    chi2 = np.zeros(tg.n_steps + 1)
    blowup_step = None
    last = tg.n_steps

    for m in range(tg.n_steps + 1):
        blocks = block_lp_norms(out[m], params.p, P)[np.newaxis, :]
        inst[m] = besov_series(blocks, params.s, r, P)[0]
        rate[m] = besov_series(blocks, params.s + 2.0 / r, r, P)[0]
        chi1[m] = theta1(acc[m] ** (1.0 / r), R)
        chi2[m] = theta2(float(inst[m]), N)
        if m == tg.n_steps:
            break
        acc[m + 1] = acc[m] + tg.dt * rate[m] ** r

        nxt = _corrected_step(out[m], grid, w, float(chi1[m]), nonlinear)
        weight = chi1[m] * chi2[m]
        if weight > 0.0 and not model.is_silent:
            u_m = SpectralField(grid, out[m])
            kick = np.tensordot(path.increments[m], noise_family(model, float(times[m]), u_m), axes=1)
            nxt = nxt + w.decay * (weight * kick)
        nxt[(slice(None),) + (0,) * grid.d] = 0.0

        if not np.all(np.isfinite(nxt)):
            blowup_step = m + 1
            last = m
            logger.warning(f"Numerical blowup at step {blowup_step} (t={times[m + 1]:.4g})")
            break
        out[m + 1] = nxt

    keep = slice(0, last + 1)
    trace = CutoffTrace(accumulator=acc[keep], chi1=chi1[keep], chi2=chi2[keep])
    record = stopping_record(times, first_crossing(acc[keep], R**r), first_crossing(inst[keep], N))
    if blowup_step is not None:
        record.status = "numerical_blowup"
        record.blowup_step = blowup_step
    trajectory = Trajectory(grid, times[keep], out[keep])
    return PathTrajectory(trajectory, trace, inst[keep], rate[keep], record)


def recompute_sigma_hit(traj: Trajectory, config: SolverConfig, P: DyadicPartition) -> float | None:
    """First node where the left-rectangle integral of ||u||^r at s + 2/r reaches R^r, from stored data."""
    r = config.besov.r
    times, blocks = trajectory_block_norms(traj, config.besov.p, P)
    rate = besov_series(blocks, config.rate_params.s, r, P)
    threshold = config.effective_R**r
    total = 0.0
    for m in range(len(times)):
        if total >= threshold:
            return float(times[m])
        if m + 1 < len(times):
            total += (times[m + 1] - times[m]) * rate[m] ** r
    return None


@dataclass
class LadderReport:
    N_values: list[float]
    records: list[StoppingRecord]
    ordered: bool
    max_deviation: float  # L^2 gap between trajectories before the smallest tau_N

    def as_dict(self) -> dict:
        return {
            "N_values": self.N_values,
            "records": [rec.to_dict() for rec in self.records],
            "ordered": self.ordered,
            "max_deviation": self.max_deviation,
        }


def _tau_key(rec: StoppingRecord) -> float:
    return math.inf if rec.tau_N is None else rec.tau_N


def stopping_ladder(
    u0: SpectralField,
    model: NoiseModel,
    path: WienerPath,
    config: SolverConfig,
    P: DyadicPartition,
    N_values: list[float],
) -> LadderReport:
    """Same path simulated for increasing N: tau_N must be ordered, and the paths must agree before tau_N."""
    if not N_values:
        raise ValueError("stopping ladder needs at least one N")
    levels = sorted(N_values)
    runs = [time_step_path(u0, model, path, config.model_copy(update={"N_cutoff": N}), P) for N in levels]
    taus = [_tau_key(run.record) for run in runs]
    ordered = all(a <= b for a, b in zip(taus, taus[1:]))
    if not ordered:
        logger.error(f"Stopping times out of order for N={levels}: {taus}")

    horizon = min(taus)
    base = runs[0].trajectory
    deviation = 0.0
    for run in runs[1:]:
        n = min(len(base), len(run.trajectory))
        for m in range(n):
            if base.times[m] >= horizon:
                break
            diff = inverse(base.coeffs[m] - run.trajectory.coeffs[m], u0.grid)
            deviation = max(deviation, lp_norm(diff, 2.0, u0.grid))
    return LadderReport(levels, [run.record for run in runs], ordered, deviation)
