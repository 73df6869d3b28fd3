import numpy as np
import pytest

from src.flow.heat import heat_trajectory
from src.noise.model import AuditError
from src.noise.wiener import sample_wiener
from src.solver.config import SolverConfig
from src.solver.stepper import (
    StoppingRecord,
    recompute_sigma_hit,
    stopping_ladder,
    stopping_record,
    time_step_path,
)
from src.spectral.fields import taylor_green


@pytest.fixture
def config(critical2, short_tg):
    return SolverConfig(besov=critical2, tg=short_tg)


def test_linear_silent_path_is_the_heat_flow(partition16, config, small_data, linear_model):
    silent = linear_model.scaled(0.0)
    path = sample_wiener(0, config.tg, silent.K)
    run = time_step_path(small_data, silent, path, config, partition16, nonlinear=False)
    np.testing.assert_allclose(run.trajectory.coeffs, heat_trajectory(small_data, config.tg).coeffs,
                               rtol=1e-12, atol=1e-14)
    assert run.record.status == "survived_horizon"
    assert run.record.tau_N is None


def test_taylor_green_decays_like_heat(partition16, config, linear_model):
    u0 = taylor_green(partition16.grid, amplitude=0.1)
    silent = linear_model.scaled(0.0)
    run = time_step_path(u0, silent, sample_wiener(0, config.tg, silent.K), config, partition16)
    np.testing.assert_allclose(run.trajectory.coeffs, heat_trajectory(u0, config.tg).coeffs, atol=1e-10)


def test_noisy_path(partition16, config, small_data, audited_linear_model):
    path = sample_wiener(2, config.tg, audited_linear_model.K)
    run = time_step_path(small_data, audited_linear_model, path, config, partition16)
    assert len(run.trajectory) == config.tg.n_steps + 1
    assert run.trajectory.is_finite()
    assert np.all(np.diff(run.trace.chi1) <= 0.0)
    assert np.all(np.diff(run.trace.accumulator) >= 0.0)
    norms = run.final_norms()
    assert norms["critical"] > 0.0 and norms["l2"] > 0.0 and norms["linf"] > 0.0
    # same path, same result
    again = time_step_path(small_data, audited_linear_model, path, config, partition16)
    np.testing.assert_array_equal(run.trajectory.coeffs, again.trajectory.coeffs)


def test_sigma_hit_is_recomputed_from_stored_data(partition16, critical2, short_tg, linear_model):
    config = SolverConfig(besov=critical2, tg=short_tg, R=1e-3, auto_R=False)
    u0 = taylor_green(partition16.grid)
    silent = linear_model.scaled(0.0)
    run = time_step_path(u0, silent, sample_wiener(0, short_tg, silent.K), config, partition16)
    assert run.record.sigma_hit is not None
    assert run.record.status == "stopped_sigma"
    # the path keeps going after the hit
    assert len(run.trajectory) == short_tg.n_steps + 1
    assert recompute_sigma_hit(run.trajectory, config, partition16) == pytest.approx(run.record.sigma_hit)


def test_rho_hit(partition16, critical2, short_tg, linear_model):
    config = SolverConfig(besov=critical2, tg=short_tg, N_cutoff=1e-6)
    silent = linear_model.scaled(0.0)
    u0 = taylor_green(partition16.grid)
    run = time_step_path(u0, silent, sample_wiener(0, short_tg, silent.K), config, partition16)
    assert run.record.rho_N_hit == 0.0
    assert run.record.tau_N == 0.0
    assert run.record.status == "stopped_rho"
    assert run.trace.chi2[0] == 0.0


def test_stopping_record():
    times = np.linspace(0.0, 1.0, 11)
    assert stopping_record(times, None, None) == StoppingRecord()
    rec = stopping_record(times, 4, 2)
    assert rec.tau_N == pytest.approx(0.2)
    assert rec.status == "stopped_rho"
    tie = stopping_record(times, 3, 3)
    assert tie.status == "stopped_sigma"
    assert tie.to_dict()["sigma_hit"] == pytest.approx(0.3)


def test_unaudited_noise_is_refused(partition16, config, small_data, linear_model):
    with pytest.raises(AuditError):
        time_step_path(small_data, linear_model, sample_wiener(0, config.tg, linear_model.K), config, partition16)


def test_path_must_match(partition16, config, small_data, audited_linear_model):
    with pytest.raises(ValueError, match="modes"):
        time_step_path(small_data, audited_linear_model, sample_wiener(0, config.tg, 2), config, partition16)


def test_stopping_ladder(partition16, config, audited_linear_model):
    u0 = taylor_green(partition16.grid)
    path = sample_wiener(9, config.tg, audited_linear_model.K)
    report = stopping_ladder(u0, audited_linear_model, path, config, partition16, [10.0, 0.5, 2.0])
    assert report.N_values == [0.5, 2.0, 10.0]
    assert report.ordered
    assert report.max_deviation == 0.0
    assert len(report.as_dict()["records"]) == 3


def test_ladder_needs_levels(partition16, config, small_data, audited_linear_model):
    path = sample_wiener(0, config.tg, audited_linear_model.K)
    with pytest.raises(ValueError, match="at least one N"):
        stopping_ladder(small_data, audited_linear_model, path, config, partition16, [])
