"""
Monte Carlo and quadrature checks of the stochastic estimates.

Every report carries enough to be written as a row (path_count, estimate,
standard_error, seed) and a boolean verdict against its tolerance band.
"""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.special import gamma

from src.flow.heat import TimeGrid, Trajectory
from src.noise.convolution import convolve_integrand, stochastic_convolution
from src.noise.model import NoiseModel, noise_family
from src.noise.wiener import WienerPath, path_seed, sample_wiener
from src.spectral.grid import GridSpec, SpectralField, inverse, wavenumbers
from src.spectral.norms import BesovParams, chemin_lerner_norm, hilbert_besov_norm, lp_norm
from src.spectral.partition import DyadicPartition

logger = logging.getLogger(__name__)

MC_BAND = 3.0  # standard errors


@dataclass
class FactorizationReport:
    alpha: float
    numeric: float
    numeric_shifted: float
    analytic: float
    abs_error: float
    shift_error: float


def factorization_identity_check(alpha: float, tau: float = 0.3, t: float = 1.7) -> FactorizationReport:
    """int_tau^t (t-s)^(alpha-1) (s-tau)^(-alpha) ds against Gamma(alpha) Gamma(1-alpha)."""
    if not (0.0 < alpha < 0.5):
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    if not t > tau:
        raise ValueError(f"need t > tau, got tau={tau}, t={t}")

    # substituted form on [0, 1]: sigma^(-alpha) (1 - sigma)^(alpha - 1)
    numeric, _ = quad(lambda s: 1.0, 0.0, 1.0, weight="alg", wvar=(-alpha, alpha - 1.0))
    shifted, _ = quad(lambda s: 1.0, tau, t, weight="alg", wvar=(-alpha, alpha - 1.0))
    analytic = math.pi / math.sin(math.pi * alpha)
    reflection = float(gamma(alpha) * gamma(1.0 - alpha))
    if abs(reflection - analytic) > 1e-9 * analytic:
        logger.warning(f"Gamma reflection mismatch at alpha={alpha}: {reflection} vs {analytic}")
    return FactorizationReport(
        alpha=alpha,
        numeric=numeric,
        numeric_shifted=shifted,
        analytic=analytic,
        abs_error=abs(numeric - analytic),
        shift_error=abs(numeric - shifted),
    )


@dataclass
class MonteCarloRow:
    path_count: int
    estimate: float
    standard_error: float
    seed: int


@dataclass
class WienerMomentReport:
    paths: int
    t_end: float
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    covariance: float
    covariance_se: float
    seed: int

    @property
    def passed(self) -> bool:
        ok_mean = abs(self.mean) <= MC_BAND * self.mean_se
        ok_var = abs(self.variance - self.t_end) <= MC_BAND * self.variance_se
        ok_cov = abs(self.covariance) <= MC_BAND * self.covariance_se
        return ok_mean and ok_var and ok_cov

    def rows(self) -> list[MonteCarloRow]:
        return [
            MonteCarloRow(self.paths, self.mean, self.mean_se, self.seed),
            MonteCarloRow(self.paths, self.variance, self.variance_se, self.seed),
            MonteCarloRow(self.paths, self.covariance, self.covariance_se, self.seed),
        ]


def wiener_moment_check(paths: int, tg: TimeGrid, K: int = 2, seed: int = 0) -> WienerMomentReport:
    if K < 2:
        raise ValueError("covariance check needs K >= 2")
    finals = np.stack([sample_wiener(path_seed(seed, i), tg, K).final() for i in range(paths)])
    w0, w1 = finals[:, 0], finals[:, 1]
    sq = w0**2
    cross = w0 * w1
    return WienerMomentReport(
        paths=paths,
        t_end=tg.t_end,
        mean=float(w0.mean()),
        mean_se=float(w0.std(ddof=1) / math.sqrt(paths)),
        variance=float(sq.mean()),
        variance_se=float(sq.std(ddof=1) / math.sqrt(paths)),
        covariance=float(cross.mean()),
        covariance_se=float(cross.std(ddof=1) / math.sqrt(paths)),
        seed=seed,
    )


def gaussian_abs_moment(k: float) -> float:
    """E|Z|^k for a standard normal Z."""
    return float(2.0 ** (k / 2.0) * gamma((k + 1.0) / 2.0) / math.sqrt(math.pi))


@dataclass
class ItoMomentReport:
    p_exp: float
    q_exp: float
    paths: int
    lhs: float
    lhs_se: float
    rhs: float
    ratio: float
    constant: float
    seed: int

    @property
    def normalized(self) -> float:
        return self.ratio / self.constant

    @property
    def band(self) -> float:
        if self.rhs == 0:
            return 0.0
        return MC_BAND * self.lhs_se / (self.rhs * self.constant)

    @property
    def passed(self) -> bool:
        return self.normalized <= 1.0 + self.band

    def row(self) -> MonteCarloRow:
        return MonteCarloRow(self.paths, self.lhs, self.lhs_se, self.seed)


def reference_integrand(model: NoiseModel, u_ref: SpectralField) -> np.ndarray:
    """Deterministic G = P f(0, u_ref), shape (K, d, n, ..., n)."""
    return noise_family(model, 0.0, u_ref)


def ito_moment_check(
    model: NoiseModel,
    paths: int,
    tg: TimeGrid,
    p_exp: float,
    r_exp: float,
    u_ref: SpectralField,
    seed: int = 0,
    batch: int = 256,
) -> ItoMomentReport:
    """E||int_0^T G dW||_{L^q}^p against (int_0^T ||G||_{L^q(H)}^2 dt)^{p/2}, q = r_exp.

    The inequality holds up to the Gaussian moment constant m_k^{p/k}, k = max(p, q);
    for p = q = 2 that constant is 1 and the two sides agree (isometry).
    """
    grid = u_ref.grid
    G = reference_integrand(model, u_ref)
    G_phys = np.stack([inverse(g, grid) for g in G])  # (K, d, n, ...)
    q = r_exp

    rhs_inner = lp_norm(G_phys.reshape((-1,) + grid.shape), q, grid)
    rhs = (tg.t_end * rhs_inner**2) ** (p_exp / 2.0)
    constant = gaussian_abs_moment(max(p_exp, q)) ** (p_exp / max(p_exp, q))

    finals = np.stack([sample_wiener(path_seed(seed, i), tg, model.K).final() for i in range(paths)])
    samples = np.empty(paths)
    flat = G_phys.reshape(model.K, -1)
    for start in range(0, paths, batch):
        chunk = finals[start:start + batch] @ flat  # (b, d * n^d)
        chunk = chunk.reshape((-1, G_phys.shape[1]) + grid.shape)
        for i, values in enumerate(chunk):
            samples[start + i] = lp_norm(values, q, grid) ** p_exp

    lhs = float(samples.mean())
    lhs_se = float(samples.std(ddof=1) / math.sqrt(paths)) if paths > 1 else 0.0
    ratio = lhs / rhs if rhs > 0 else 0.0
    logger.debug(f"Ito check p={p_exp} q={q}: lhs={lhs:.4e} rhs={rhs:.4e} ratio={ratio:.4f}")
    return ItoMomentReport(p_exp, q, paths, lhs, lhs_se, rhs, ratio, constant, seed)


@dataclass
class ConvolutionRatioReport:
    dt: float
    paths: int
    r1: float
    lhs: float
    lhs_se: float
    rhs: float
    seed: int

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0


def convolution_regularity_ratio(
    model: NoiseModel,
    u_traj: Trajectory,
    tg: TimeGrid,
    params: BesovParams,
    P: DyadicPartition,
    paths: int,
    seed: int = 0,
    r1: float = math.inf,
) -> ConvolutionRatioReport:
    """E||F||^r in L~^{r1} B^{s + 2/r1 - 2/r} over ||G||^r in L^r B^{s-1}, s = critical + 2/r.

    G = P f(t, u(t)) along a fixed trajectory, so the right side is deterministic.
    """
    r = params.r
    if r1 < r:
        raise ValueError(f"time exponent r1 must be >= r = {r}, got {r1}")
    s = params.s + 2.0 / r
    lhs_params = BesovParams(s=s + (0.0 if math.isinf(r1) else 2.0 / r1) - 2.0 / r, p=params.p, r=r, q=r1)
    g_params = BesovParams(s=s - 1.0, p=params.p, r=r)

    family = [noise_family(model, float(t), u) for t, u in u_traj]
    g_norms = np.array([hilbert_besov_norm(f, g_params, P) ** r for f in family])
    rhs = float(trapezoid(g_norms, u_traj.times))

    components = u_traj.coeffs.shape[1]
    values = np.empty(paths)
    for i in range(paths):
        path = sample_wiener(path_seed(seed, i), tg, model.K)
        F = convolve_integrand(lambda m: family[m], path, tg, u_traj.grid, components)
        values[i] = chemin_lerner_norm(F, lhs_params, P) ** r
    lhs = float(values.mean())
    lhs_se = float(values.std(ddof=1) / math.sqrt(paths)) if paths > 1 else 0.0
    return ConvolutionRatioReport(tg.dt, paths, r1, lhs, lhs_se, rhs, seed)


@dataclass
class WeakOrderReport:
    dts: list[float]
    errors: list[float]
    orders: list[float] = field(default_factory=list)

    @property
    def min_order(self) -> float:
        return min(self.orders) if self.orders else math.nan

    def as_dict(self) -> dict:
        return asdict(self) | {"min_order": self.min_order}


def _l2_squared(coeffs: np.ndarray, grid: GridSpec) -> float:
    """||f||_{L^2}^2 from unnormalized FFT coefficients (Parseval)."""
    return float(np.sum(np.abs(coeffs) ** 2) * grid.cell_volume / math.prod(grid.shape))


def scheme_second_moment(model: NoiseModel, grid: GridSpec, tg: TimeGrid) -> float:
    """E||F(T)||_{L^2}^2 of the exponential Euler output for an additive model.

    F is linear in the increments, so its second moment is dt times the sum of the
    squared responses to unit increments, each run through stochastic_convolution.
    """
    u_traj = Trajectory.zeros(grid, tg)
    total = 0.0
    for m in range(tg.n_steps):
        for k in range(model.K):
            unit = np.zeros((tg.n_steps, model.K))
            unit[m, k] = 1.0
            F = stochastic_convolution(model, u_traj, WienerPath(seed=0, dt=tg.dt, increments=unit), tg)
            total += tg.dt * _l2_squared(F.coeffs[-1], grid)
    return total


def exact_second_moment(model: NoiseModel, grid: GridSpec, t_end: float) -> float:
    """sum_k sum_xi |G_k(xi)|^2 (1 - exp(-2 |xi|^2 T)) / (2 |xi|^2), mapped to L^2."""
    G = noise_family(model, 0.0, SpectralField.zeros(grid))
    k2 = wavenumbers(grid).k2
    gain = np.where(k2 > 0, -np.expm1(-2.0 * k2 * t_end) / (2.0 * np.where(k2 > 0, k2, 1.0)), 0.0)
    return _l2_squared(np.abs(G) * np.sqrt(gain), grid)


def weak_order_check(model: NoiseModel, grid: GridSpec, t_end: float, dts: list[float]) -> WeakOrderReport:
    """Weak error of E||F(T)||^2 for an additive model against its closed form."""
    if model.structure != "additive":
        raise ValueError("weak-order check needs an additive noise model")
    exact = exact_second_moment(model, grid, t_end)
    grids = [TimeGrid.from_dt(t_end, dt) for dt in dts]
    # realised steps, since from_dt rounds the step count
    dts = [tg.dt for tg in grids]
    errors = [abs(scheme_second_moment(model, grid, tg) - exact) for tg in grids]
    orders = [
        math.log(errors[i] / errors[i + 1]) / math.log(dts[i] / dts[i + 1]) for i in range(len(errors) - 1)
    ]
    logger.debug(f"Weak errors {errors} against exact moment {exact:.4e}")
    return WeakOrderReport(list(dts), errors, orders)


def convolution_scaling_defect(
    model: NoiseModel, u_traj: Trajectory, tg: TimeGrid, paths: int, seed: int = 0, factor: float = 2.0,
) -> float:
    """max over paths of ||F[factor sigma] - factor F[sigma]|| / ||factor F[sigma]||, on one Wiener path each."""
    scaled = model.scaled(factor)
    worst = 0.0
    for i in range(paths):
        path = sample_wiener(path_seed(seed, i), tg, model.K)
        base = stochastic_convolution(model, u_traj, path, tg).coeffs * factor
        diff = stochastic_convolution(scaled, u_traj, path, tg).coeffs - base
        size = float(np.linalg.norm(base))
        if size > 0:
            worst = max(worst, float(np.linalg.norm(diff)) / size)
        elif np.any(diff):
            return math.inf
    return worst
