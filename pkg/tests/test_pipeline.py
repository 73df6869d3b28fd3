import pytest

from src.experiment.pipeline import PathJob, run_paths
from src.noise.wiener import path_seed
from src.solver.config import SolverConfig
from src.spectral.initial_data import InitialDataSpec, gaussian_divfree


@pytest.fixture
def solver(critical2, short_tg):
    return SolverConfig(besov=critical2, tg=short_tg)


def _jobs(grid, count):
    return [
        PathJob(i, path_seed(5, i), gaussian_divfree(InitialDataSpec(seed=i, amplitude=0.05), grid))
        for i in range(count)
    ]


def test_process_pool_matches_serial_run(partition16, audited_linear_model, solver):
    jobs = _jobs(partition16.grid, 4)
    serial = run_paths(jobs, audited_linear_model, solver, partition16, workers=1)
    pooled = run_paths(jobs, audited_linear_model, solver, partition16, workers=3)
    assert pooled == serial
    assert [rec["path_id"] for rec in pooled] == [0, 1, 2, 3]


@pytest.mark.parametrize("workers", [1, 2])
def test_failing_path_is_recorded(partition16, grid32, audited_linear_model, solver, workers):
    jobs = _jobs(partition16.grid, 2)
    jobs.append(PathJob(2, path_seed(5, 2), gaussian_divfree(InitialDataSpec(seed=2), grid32)))
    records = run_paths(jobs, audited_linear_model, solver, partition16, workers=workers)
    assert [rec["status"] == "failed" for rec in records] == [False, False, True]
    assert "grid mismatch" in records[2]["error"]
