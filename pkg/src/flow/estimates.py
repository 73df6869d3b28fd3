"""
Empirical checks of the heat-flow estimates the solver constants rest on.

Each check runs a seeded random ensemble and reports the ratio of the two sides
of an inequality. The maxima over the ensemble are the measured constants that
calibration feeds into R, M and T-hat.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.flow.heat import TimeGrid, Trajectory, bilinear_B, duhamel_solve, heat_semigroup, heat_trajectory
from src.spectral.fields import nonlinear_term
from src.spectral.grid import GridSpec, SpectralField, forward, wavenumbers
from src.spectral.initial_data import InitialDataSpec, gaussian_divfree
from src.spectral.norms import (
    BesovParams,
    besov_norm,
    besov_series,
    chemin_lerner_norm,
    field_lp_norm,
    trajectory_block_norms,
)
from src.spectral.partition import DyadicPartition
from src.utils.concurrency import map_ordered
from src.utils.seeding import STREAM_ENSEMBLE, derive_seed, stream_rng

logger = logging.getLogger(__name__)

DECAY_WINDOW = (0.01, 1.0)
DECAY_POINTS = 20


@dataclass
class DecayFit:
    shell: int
    C: float
    c: float
    p_exp: float
    n_samples: int
    seed: int
    c_oracle: float | None = None
    min_rate: float = 0.0

    def as_row(self) -> dict:
        return {
            "shell": self.shell,
            "C": self.C,
            "c": self.c,
            "c_oracle": self.c_oracle,
            "p": self.p_exp,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


@dataclass
class EstimateReport:
    name: str
    ratios: list[float] = field(default_factory=list)
    seed: int = 0
    dt: float | None = None

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    @property
    def n_members(self) -> int:
        return len(self.ratios)


def _fit_decay(taus: np.ndarray, ratios: np.ndarray) -> tuple[float, float]:
    """Least-squares c for log(ratio) ~ log(C0) - c tau, then the envelope C >= 1."""
    x = np.tile(taus, ratios.shape[0])
    y = np.log(np.clip(ratios, 1e-300, None)).ravel()
    slope, _ = np.polyfit(x, y, 1)
    c = -float(slope)
    envelope = ratios * np.exp(c * taus)[np.newaxis, :]
    return max(1.0, float(envelope.max())), c


def annulus_decay_check(j: int, P: DyadicPartition, p_exp: float, samples: int, seed: int = 0) -> DecayFit:
    """Fit ||e^{t Laplace} Delta_j u||_{L^p} <= C exp(-c t 2^{2j}) ||Delta_j u||_{L^p}."""
    grid = P.grid
    shell = P.filter(j)
    if not np.any(shell):
        raise ValueError(f"shell {j} is empty on n={grid.n}")

    taus = np.concatenate([[0.0], np.geomspace(*DECAY_WINDOW, DECAY_POINTS)])
    k2 = wavenumbers(grid).k2
    ratios = np.empty((samples, len(taus)))
    oracle = np.empty_like(ratios)
    for i in range(samples):
        rng = stream_rng(seed, STREAM_ENSEMBLE, j, i)
        u = SpectralField(grid, forward(rng.standard_normal(grid.shape)[np.newaxis], grid) * shell)
        base = field_lp_norm(u, p_exp)
        energy = np.abs(u.coeffs[0]) ** 2
        for m, tau in enumerate(taus):
            t = tau * 2.0 ** (-2 * j)
            ratios[i, m] = field_lp_norm(heat_semigroup(u, t), p_exp) / base
            oracle[i, m] = math.sqrt(np.sum(energy * np.exp(-2.0 * t * k2)) / np.sum(energy))

    C, c = _fit_decay(taus[1:], ratios[:, 1:])
    C = max(C, float(np.max(ratios[:, 0])))
    _, c_oracle = _fit_decay(taus[1:], oracle[:, 1:])
    min_rate = float(k2[shell > 0].min()) * 2.0 ** (-2 * j)
    logger.debug(f"Shell {j}, p={p_exp}: C={C:.4f} c={c:.4f} (oracle {c_oracle:.4f})")
    return DecayFit(
        shell=j, C=C, c=c, p_exp=p_exp, n_samples=samples, seed=seed,
        c_oracle=c_oracle if p_exp == 2 else None, min_rate=min_rate,
    )


def ensemble_field(grid: GridSpec, seed: int, index: int, amplitude: float = 1.0,
                   band: tuple[float, float] = (1.0, 4.0)) -> SpectralField:
    spec = InitialDataSpec(seed=derive_seed(seed, STREAM_ENSEMBLE, index), amplitude=amplitude, band=band)
    return gaussian_divfree(spec, grid)


def duhamel_smoothing_ratio(
    u0: SpectralField, g: SpectralField, tg: TimeGrid, params: BesovParams, P: DyadicPartition,
    q: float, q1: float,
) -> float:
    """||u||_{L~^{q1} B^{s+2/q1}} / (||u0||_{B^s} + ||f||_{L~^q B^{s-2+2/q}}) with f(t) = e^{t Laplace} g."""

    def forcing(t: float) -> SpectralField:
        return heat_semigroup(g, t)

    u = duhamel_solve(u0, forcing, tg)
    f_traj = heat_trajectory(g, tg)
    lhs = chemin_lerner_norm(u, params.shifted(2.0 / q1, q=q1), P)
    rhs = besov_norm(u0, params, P) + chemin_lerner_norm(f_traj, params.shifted(-2.0 + 2.0 / q, q=q), P)
    return lhs / rhs if rhs > 0 else 0.0


def bilinear_ratio(u: Trajectory, v: Trajectory, tg: TimeGrid, params: BesovParams, P: DyadicPartition,
                   q: float) -> float:
    """||B(u, v)|| / (||u|| ||v||), all in L~^q B^{s + 2/q}."""
    norm = params.shifted(2.0 / q, q=q)
    denom = chemin_lerner_norm(u, norm, P) * chemin_lerner_norm(v, norm, P)
    if denom == 0:
        return 0.0
    return chemin_lerner_norm(bilinear_B(u, v, tg), norm, P) / denom


def product_estimate_ratio(u: Trajectory, v: Trajectory, params: BesovParams, P: DyadicPartition,
                           q: float) -> float:
    """||P div(u (x) v)||_{L~^{q/2} B^{s-2+4/q}} / (||u|| ||v||) with factors in L~^q B^{s+2/q}."""
    if q < 2:
        raise ValueError(f"product estimate needs q >= 2, got {q}")
    norm = params.shifted(2.0 / q, q=q)
    denom = chemin_lerner_norm(u, norm, P) * chemin_lerner_norm(v, norm, P)
    if denom == 0:
        return 0.0
    products = [(t, nonlinear_term(a, b)) for (t, a), (_, b) in zip(u, v)]
    return chemin_lerner_norm(products, params.shifted(-2.0 + 4.0 / q, q=q / 2.0), P) / denom


def continuity_proxy(traj: Trajectory, params: BesovParams, P: DyadicPartition) -> float:
    """Largest jump of ||u(t)||_{B^s} between consecutive samples."""
    _, blocks = trajectory_block_norms(traj, params.p, P)
    series = besov_series(blocks, params.s, params.r, P)
    if len(series) < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(series))))


def smoothing_ensemble(grid: GridSpec, tg: TimeGrid, params: BesovParams, P: DyadicPartition,
                       members: int, seed: int, workers: int | None = None) -> EstimateReport:
    def member(i: int) -> float:
        scale = 0.5 + stream_rng(seed, STREAM_ENSEMBLE, 1000 + i).random()
        u0 = ensemble_field(grid, seed, 2 * i)
        g = ensemble_field(grid, seed, 2 * i + 1, amplitude=scale)
        return max(
            duhamel_smoothing_ratio(u0, g, tg, params, P, q=params.r, q1=math.inf),
            duhamel_smoothing_ratio(u0, g, tg, params, P, q=params.r, q1=params.r),
        )

    ratios = map_ordered(member, list(range(members)), workers)
    return EstimateReport("heat", [float(x) for x in ratios], seed, tg.dt)


def bilinear_ensemble(grid: GridSpec, tg: TimeGrid, params: BesovParams, P: DyadicPartition,
                      members: int, seed: int, workers: int | None = None) -> EstimateReport:
    def member(i: int) -> float:
        u = heat_trajectory(ensemble_field(grid, seed, 2 * i), tg)
        v = heat_trajectory(ensemble_field(grid, seed, 2 * i + 1), tg)
        return bilinear_ratio(u, v, tg, params, P, q=params.r)

    ratios = map_ordered(member, list(range(members)), workers)
    return EstimateReport("bilinear", [float(x) for x in ratios], seed, tg.dt)


def product_ensemble(grid: GridSpec, tg: TimeGrid, params: BesovParams, P: DyadicPartition,
                     members: int, seed: int, workers: int | None = None) -> EstimateReport:
    def member(i: int) -> float:
        u = heat_trajectory(ensemble_field(grid, seed, 2 * i), tg)
        v = heat_trajectory(ensemble_field(grid, seed, 2 * i + 1), tg)
        return product_estimate_ratio(u, v, params, P, q=params.r)

    ratios = map_ordered(member, list(range(members)), workers)
    return EstimateReport("product", [float(x) for x in ratios], seed, tg.dt)
