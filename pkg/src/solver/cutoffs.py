from dataclasses import dataclass

import numpy as np


def theta1(x: float, R: float) -> float:
    """1 on [0, R), 2 - x/R on [R, 2R], 0 beyond."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if x < 0:
        raise ValueError(f"cut-off argument must be >= 0, got {x}")
    if x < R:
        return 1.0
    if x <= 2.0 * R:
        return 2.0 - x / R
    return 0.0


def theta2(x: float, N: float) -> float:
    """1 on [0, N), N + 1 - x on [N, N + 1], 0 beyond."""
    if N <= 0:
        raise ValueError(f"N must be positive, got {N}")
    if x < 0:
        raise ValueError(f"cut-off argument must be >= 0, got {x}")
    if x < N:
        return 1.0
    if x <= N + 1.0:
        return N + 1.0 - x
    return 0.0


@dataclass
class CutoffState:
    chi1: float
    chi2: float
    running_lr_norm_pow_r: float


@dataclass
class CutoffTrace:
    """Cut-off values along one trajectory, one entry per time node."""

    accumulator: np.ndarray  # left-rectangle integral of ||u||^r at regularity s + 2/r
    chi1: np.ndarray
    chi2: np.ndarray

    def state(self, m: int) -> CutoffState:
        return CutoffState(float(self.chi1[m]), float(self.chi2[m]), float(self.accumulator[m]))

    @property
    def weights(self) -> np.ndarray:
        return self.chi1 * self.chi2


def running_accumulator(rate_norms: np.ndarray, dt: float, r: float) -> np.ndarray:
    """A_0 = 0, A_{m+1} = A_m + dt ||u(t_m)||^r; A_m only sees nodes before t_m."""
    acc = np.zeros(len(rate_norms))
    if len(rate_norms) > 1:
        acc[1:] = np.cumsum(dt * np.asarray(rate_norms[:-1]) ** r)
    return acc


def cutoff_series(rate_norms: np.ndarray, inst_norms: np.ndarray, dt: float, R: float, N: float,
                  r: float) -> CutoffTrace:
    acc = running_accumulator(rate_norms, dt, r)
    chi1 = np.array([theta1(a ** (1.0 / r), R) for a in acc])
    chi2 = np.array([theta2(float(x), N) for x in inst_norms])
    return CutoffTrace(accumulator=acc, chi1=chi1, chi2=chi2)


def first_crossing(values: np.ndarray, threshold: float) -> int | None:
    hits = np.nonzero(np.asarray(values) >= threshold)[0]
    return int(hits[0]) if hits.size else None
