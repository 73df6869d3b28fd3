"""
The headline experiments: local survival, survival versus data size, and
oscillating large data. Every run writes its manifest, per-path records, the
curve and a report into the output directory.
"""
import logging
import math
import time
from dataclasses import asdict, dataclass

from scipy.stats import norm

from config.settings import settings
from src.experiment.calibration import CalibrationManifest, ensure_manifest, path_initial_data
from src.experiment.config import ExperimentConfig
from src.experiment.pipeline import PathJob, run_paths
from src.experiment.writer import CURVE_COLUMNS, write_csv, write_json, write_jsonl, write_timing
from src.flow.heat import TimeGrid
from src.noise.model import AuditError
from src.noise.wiener import path_seed
from src.spectral.fields import divergence
from src.spectral.initial_data import UnresolvableOscillation, make_initial_data
from src.spectral.norms import besov_norm, field_lp_norm
from src.spectral.partition import DyadicPartition, build_partition

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95
MONOTONE_BAND = 2.0  # binomial standard errors


@dataclass
class SurvivalEstimate:
    survival: float
    ci_low: float
    ci_high: float
    n_paths: int
    survivors: int

    @property
    def standard_error(self) -> float:
        p = self.survival
        return math.sqrt(p * (1.0 - p) / self.n_paths)


def wilson_interval(successes: int, n: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("Wilson interval needs at least one trial")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = successes / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z**2 / (4.0 * n**2)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def survival_estimate(flags: list[bool]) -> SurvivalEstimate:
    n = len(flags)
    k = sum(flags)
    lo, hi = wilson_interval(k, n)
    return SurvivalEstimate(survival=k / n, ci_low=lo, ci_high=hi, n_paths=n, survivors=k)


def _usable(record: dict) -> bool:
    return record["status"] not in ("failed", "numerical_blowup")


def survived_until(record: dict, t0: float) -> bool:
    return _usable(record) and (record["tau_N"] is None or record["tau_N"] > t0)


def survived_sigma(record: dict) -> bool:
    return _usable(record) and record["sigma_hit"] is None


def rho_before_sigma(record: dict) -> bool:
    rho, sigma = record["rho_N_hit"], record["sigma_hit"]
    return rho is not None and (sigma is None or rho < sigma)


def delta_for_epsilon(epsilon: float, C_star: float, R: float, r: float) -> float:
    """Data size that keeps the failure probability below epsilon: eps R^r / (2 C*)."""
    return epsilon * R**r / (2.0 * C_star)


def survival_lower_bound(delta: float, C_star: float, R: float, r: float) -> float:
    return 1.0 - 2.0 * C_star * delta / R**r


def _write_run(config: ExperimentConfig, manifest: CalibrationManifest, records: list[dict],
               curve: list[dict], report: dict, started: float,
               curve_columns=CURVE_COLUMNS) -> dict:
    out = config.output_path
    report = report | {"manifest_hash": manifest.hash, "master_seed": config.master_seed,
                       "experiment": config.experiment}
    write_json(out / "manifest.json", manifest.model_dump(mode="json") | {"hash": manifest.hash})
    write_jsonl(out / "paths.jsonl", records)
    write_csv(out / "curve.csv", curve, curve_columns)
    write_json(out / "report.json", report)
    write_timing(out / "timing.txt", {config.experiment: time.perf_counter() - started})
    return report


def _setup(config: ExperimentConfig, P: DyadicPartition | None):
    P = P or build_partition(config.grid)
    manifest = ensure_manifest(config, P)
    solver = config.solver.with_constants(manifest.C_star)
    workers = config.workers or settings.default_workers
    return P, manifest, solver, workers


def run_local(config: ExperimentConfig, P: DyadicPartition | None = None) -> dict:
    """Fraction of paths with no stopping-time hit before t0, for a ladder of t0."""
    started = time.perf_counter()
    P, manifest, solver, workers = _setup(config, P)
    horizons = sorted(config.local_horizons, reverse=True)
    solver = solver.model_copy(update={"tg": TimeGrid.from_dt(horizons[0], config.solver.tg.dt)})

    jobs = [PathJob(i, path_seed(config.master_seed, i), path_initial_data(config, i))
            for i in range(config.n_paths)]
    records = run_paths(jobs, manifest.noise_model, solver, P, workers, config.picard_check)

    estimates = [survival_estimate([survived_until(rec, t0) for rec in records]) for t0 in horizons]
    curve = [{"t0": t0, **asdict(est)} for t0, est in zip(horizons, estimates)]
    for row in curve:
        logger.info(f"t0={row['t0']:.4g}: survival {row['survival']:.3f} "
                    f"[{row['ci_low']:.3f}, {row['ci_high']:.3f}]")
    report = {
        "curve": curve,
        "increasing_as_t0_shrinks": monotone_within_band(estimates),
        "statuses": _status_counts(records),
    }
    return _write_run(config, manifest, records, curve, report, started,
                      ("t0", "survival", "ci_low", "ci_high", "n_paths"))


def monotone_within_band(estimates: list[SurvivalEstimate]) -> bool:
    """Estimates ordered by shrinking window (or shrinking data) must not drop beyond the band."""
    for prev, cur in zip(estimates, estimates[1:]):
        band = MONOTONE_BAND * max(prev.standard_error, cur.standard_error)
        if cur.survival < prev.survival - band:
            return False
    return True


def _status_counts(records: list[dict]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for rec in records:
        counts[rec["status"]] = counts.get(rec["status"], 0) + 1
    return dict(sorted(counts.items()))


def check_global_hypothesis(manifest: CalibrationManifest, horizon: float) -> None:
    model = manifest.noise_model
    if model.is_silent:
        return
    if not model.has_eta_structure(manifest.r) or model.eta_bound is None:
        raise AuditError(
            "global sweep needs an audited noise model with beta1(x) = eta x^r and gamma = 0 "
            "(the small-data global existence hypothesis)"
        )
    product = manifest.C_star * model.eta_bound * horizon
    if product >= 1.0:
        raise AuditError(
            f"noise too strong for the global sweep: C* eta T = {product:.4f} >= 1 over horizon {horizon}"
        )


def run_global_sweep(config: ExperimentConfig, P: DyadicPartition | None = None) -> dict:
    """Survival over the horizon (no sigma hit) against the data size E||u0||^r = delta."""
    started = time.perf_counter()
    P, manifest, solver, workers = _setup(config, P)
    check_global_hypothesis(manifest, config.horizon)
    solver = solver.model_copy(update={"tg": TimeGrid.from_dt(config.horizon, config.solver.tg.dt)})
    r, R, C_star = manifest.r, manifest.R, manifest.C_star
    params = config.solver.besov

    # Common random numbers: every delta sees the same base data and Wiener paths
    base = [path_initial_data(config, i) for i in range(config.n_paths)]
    mean_pow = sum(besov_norm(u, params, P) ** r for u in base) / len(base)
    deltas = [d * R**r if config.delta_units == "R_pow_r" else d for d in config.delta_values]

    all_records, curve, estimates, extras = [], [], [], []
    for delta in deltas:
        scale = 0.0 if delta == 0.0 or mean_pow == 0.0 else (delta / mean_pow) ** (1.0 / r)
        jobs = [PathJob(i, path_seed(config.master_seed, i), u * scale) for i, u in enumerate(base)]
        records = run_paths(jobs, manifest.noise_model, solver, P, workers, config.picard_check)
        est = survival_estimate([survived_sigma(rec) for rec in records])
        estimates.append(est)
        curve.append({"delta": delta, **asdict(est)})
        extras.append({
            "delta": delta,
            "scale": scale,
            "lower_bound": survival_lower_bound(delta, C_star, R, r),
            "rho_before_sigma": sum(rho_before_sigma(rec) for rec in records) / len(records),
        })
        all_records.extend({"delta": delta, **rec} for rec in records)
        logger.info(f"delta={delta:.4g}: survival {est.survival:.3f} [{est.ci_low:.3f}, {est.ci_high:.3f}]")

    report = {
        "curve": curve,
        "per_delta": extras,
        "nondecreasing_as_delta_shrinks": monotone_within_band(estimates),
        "delta_for_epsilon": {str(eps): delta_for_epsilon(eps, C_star, R, r) for eps in (0.01, 0.05, 0.1)},
        "horizon": config.horizon,
    }
    return _write_run(config, manifest, all_records, curve, report, started)


def run_oscillating_sweep(config: ExperimentConfig, P: DyadicPartition | None = None) -> dict:
    """Critical norm against pointwise size of oscillating data, with survival over the horizon."""
    started = time.perf_counter()
    if config.grid.d != 3:
        raise ValueError("oscillating sweep needs a 3-dimensional grid")
    P, manifest, solver, workers = _setup(config, P)
    solver = solver.model_copy(update={"tg": TimeGrid.from_dt(config.horizon, config.solver.tg.dt)})
    params = config.solver.besov

    rows, all_records = [], []
    for eps in config.epsilon_values:
        spec = config.initial.model_copy(update={"kind": "oscillating", "epsilon": eps})
        try:
            u0 = make_initial_data(spec, config.grid)
        except UnresolvableOscillation as e:
            logger.warning(f"Skipping epsilon={eps}: {e}")
            rows.append({"epsilon": eps, "skipped": str(e)})
            continue
        jobs = [PathJob(i, path_seed(config.master_seed, i), u0) for i in range(config.n_paths)]
        records = run_paths(jobs, manifest.noise_model, solver, P, workers, config.picard_check)
        est = survival_estimate([survived_until(rec, config.horizon) for rec in records])
        rows.append({
            "epsilon": eps,
            "epsilon_effective": u0.metadata.get("epsilon_effective", eps),
            "critical_norm": besov_norm(u0, params, P),
            "linf": field_lp_norm(u0, math.inf),
            "l2": field_lp_norm(u0, 2.0),
            "max_divergence": float(abs(divergence(u0).values).max()),
            "skipped": None,
            **asdict(est),
        })
        all_records.extend({"epsilon": eps, **rec} for rec in records)

    resolved = [row for row in rows if row["skipped"] is None]
    norms = [row["critical_norm"] for row in resolved]
    report = {
        "rows": rows,
        "critical_norm_spread": max(norms) / min(norms) if norms and min(norms) > 0 else None,
        "linf_ratios": [b["linf"] / a["linf"] for a, b in zip(resolved, resolved[1:]) if a["linf"] > 0],
    }
    columns = ("epsilon", "epsilon_effective", "critical_norm", "linf", "l2", "survival", "ci_low",
               "ci_high", "n_paths", "skipped")
    return _write_run(config, manifest, all_records, rows, report, started, columns)
