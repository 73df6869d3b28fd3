import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from src.noise.model import NoiseModel
from src.noise.wiener import sample_wiener
from src.solver.config import SolverConfig
from src.solver.picard import picard_solve
from src.solver.stepper import time_step_path
from src.spectral.grid import SpectralField
from src.spectral.partition import DyadicPartition

logger = logging.getLogger(__name__)


@dataclass
class PathJob:
    index: int
    seed: int
    u0: SpectralField


def failed_record(job: PathJob, reason: str) -> dict:
    return {
        "path_id": job.index,
        "seed": job.seed,
        "status": "failed",
        "sigma_hit": None,
        "rho_N_hit": None,
        "tau_N": None,
        "blowup_step": None,
        "final_norms": None,
        "picard_iters": None,
        "max_ratio": None,
        "error": reason,
    }


def simulate_path(job: PathJob, model: NoiseModel, config: SolverConfig, P: DyadicPartition,
                  picard_check: bool = False) -> dict:
    path = sample_wiener(job.seed, config.tg, model.K)
    result = time_step_path(job.u0, model, path, config, P)
    record = {"path_id": job.index, "seed": job.seed, **result.record.to_dict()}
    record["final_norms"] = result.final_norms()
    record["picard_iters"] = None
    record["max_ratio"] = None
    if picard_check:
        _, report = picard_solve(job.u0, model, path, config, P)
        record["picard_iters"] = report.iterations
        record["max_ratio"] = report.max_ratio
        record["picard_status"] = report.status
    return record


# Solver inputs shared by every job of one batch, set once per worker process
_batch: dict = {}


def _init_worker(model: NoiseModel, config: SolverConfig, P: DyadicPartition, picard_check: bool) -> None:
    _batch.update(model=model, config=config, P=P, picard_check=picard_check)


def _simulate_in_worker(job: PathJob) -> dict:
    return simulate_path(job, **_batch)


async def simulate_one(job: PathJob, semaphore: asyncio.Semaphore, executor: ProcessPoolExecutor) -> dict:
    async with semaphore:
        loop = asyncio.get_running_loop()
        try:
            record = await loop.run_in_executor(executor, _simulate_in_worker, job)
            logger.debug(f"Path {job.index}: {record['status']} tau_N={record['tau_N']}")
            return record
        except Exception as e:
            logger.error(f"Failed: path {job.index}: {e}")
            return failed_record(job, str(e))


async def simulate_all(jobs: list[PathJob], model: NoiseModel, config: SolverConfig,
                       P: DyadicPartition, workers: int, picard_check: bool = False) -> list[dict]:
    semaphore = asyncio.Semaphore(workers)
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(model, config, P, picard_check)) as executor:
        tasks = [simulate_one(job, semaphore, executor) for job in jobs]
        records = await asyncio.gather(*tasks)
    return sorted(records, key=lambda rec: rec["path_id"])


def simulate_serial(jobs: list[PathJob], model: NoiseModel, config: SolverConfig, P: DyadicPartition,
                    picard_check: bool = False) -> list[dict]:
    records = []
    for job in jobs:
        try:
            records.append(simulate_path(job, model, config, P, picard_check))
        except Exception as e:
            logger.error(f"Failed: path {job.index}: {e}")
            records.append(failed_record(job, str(e)))
    return records


def run_paths(jobs: list[PathJob], model: NoiseModel, config: SolverConfig, P: DyadicPartition,
              workers: int, picard_check: bool = False) -> list[dict]:
    """Simulate every job; paths run in worker processes when workers > 1, records sorted by path_id."""
    if workers <= 1 or len(jobs) <= 1:
        records = simulate_serial(jobs, model, config, P, picard_check)
    else:
        records = asyncio.run(simulate_all(jobs, model, config, P, min(workers, len(jobs)), picard_check))
    failed = sum(1 for rec in records if rec["status"] == "failed")
    blowups = sum(1 for rec in records if rec["status"] == "numerical_blowup")
    if blowups:
        logger.warning(f"{blowups} of {len(records)} paths hit a numerical blowup")
    logger.info(f"Simulated {len(records)} paths: {failed} failed")
    return records
