"""
Truncated cylindrical Wiener process: K independent scalar Brownian motions.

Mode k of a path draws from its own Philox stream keyed by (seed, k), so adding
modes or steps never reshuffles the draws of the others.
"""
from dataclasses import dataclass

import numpy as np

from src.flow.heat import TimeGrid
from src.utils.seeding import STREAM_WIENER, derive_seed, stream_rng


@dataclass(frozen=True, eq=False)
class WienerPath:
    seed: int
    dt: float
    increments: np.ndarray  # (n_steps, K), each entry N(0, dt)

    def __post_init__(self):
        self.increments.flags.writeable = False

    @property
    def n_steps(self) -> int:
        return self.increments.shape[0]

    @property
    def K(self) -> int:
        return self.increments.shape[1]

    def values(self) -> np.ndarray:
        """W(t_m) for m = 0..n_steps, W(0) = 0."""
        out = np.zeros((self.n_steps + 1, self.K))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out

    def final(self) -> np.ndarray:
        return self.increments.sum(axis=0)

    def coarsened(self, factor: int) -> "WienerPath":
        """Same Brownian path observed on a grid `factor` times coarser."""
        if factor < 1 or self.n_steps % factor:
            raise ValueError(f"cannot coarsen {self.n_steps} steps by {factor}")
        summed = self.increments.reshape(self.n_steps // factor, factor, self.K).sum(axis=1)
        return WienerPath(self.seed, self.dt * factor, summed)

    def check_matches(self, tg: TimeGrid) -> None:
        if self.n_steps != tg.n_steps or not np.isclose(self.dt, tg.dt, rtol=1e-12, atol=0):
            raise ValueError(
                f"time grid mismatch: path has {self.n_steps} steps of {self.dt}, grid {tg.n_steps} of {tg.dt}"
            )


def sample_wiener(seed: int, tg: TimeGrid, K: int) -> WienerPath:
    if K < 1:
        raise ValueError(f"mode count K must be >= 1, got {K}")
    scale = np.sqrt(tg.dt)
    increments = np.empty((tg.n_steps, K))
    for k in range(K):
        increments[:, k] = stream_rng(seed, STREAM_WIENER, k).standard_normal(tg.n_steps) * scale
    return WienerPath(seed=int(seed), dt=tg.dt, increments=increments)


def path_seed(master_seed: int, path_index: int) -> int:
    return derive_seed(master_seed, path_index)
