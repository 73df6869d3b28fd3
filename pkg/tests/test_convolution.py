import numpy as np
import pytest

from src.flow.heat import TimeGrid, Trajectory, heat_multiplier, heat_trajectory
from src.noise.convolution import stochastic_convolution
from src.noise.model import default_additive_model, noise_family
from src.noise.wiener import sample_wiener
from src.spectral.fields import taylor_green
from src.spectral.grid import SpectralField
from src.spectral.norms import field_lp_norm


@pytest.fixture
def tg():
    return TimeGrid(t_end=0.1, n_steps=10)


def test_additive_convolution_matches_explicit_sum(grid16, tg):
    model = default_additive_model(2)
    path = sample_wiener(11, tg, model.K)
    F = stochastic_convolution(model, Trajectory.zeros(grid16, tg), path, tg)

    G = noise_family(model, 0.0, SpectralField.zeros(grid16))
    expected = np.zeros_like(G[0])
    for m in range(tg.n_steps):
        kick = np.tensordot(path.increments[m], G, axes=1)
        expected += heat_multiplier(grid16, (tg.n_steps - m) * tg.dt) * kick
    np.testing.assert_allclose(F.final().coeffs, expected, rtol=1e-10, atol=1e-14)
    np.testing.assert_array_equal(F.coeffs[0], 0.0)


def test_bare_ito_sum_without_semigroup(grid16, tg):
    model = default_additive_model(2)
    path = sample_wiener(3, tg, model.K)
    F = stochastic_convolution(model, Trajectory.zeros(grid16, tg), path, tg, semigroup=False)
    G = noise_family(model, 0.0, SpectralField.zeros(grid16))
    np.testing.assert_allclose(F.final().coeffs, np.tensordot(path.final(), G, axes=1), atol=1e-12)


def test_linear_noise_on_zero_state_is_zero(grid16, tg, linear_model):
    path = sample_wiener(1, tg, linear_model.K)
    F = stochastic_convolution(linear_model, Trajectory.zeros(grid16, tg), path, tg)
    assert not np.any(F.coeffs)


def test_zero_weights_switch_the_noise_off(grid16, tg, linear_model):
    u = heat_trajectory(taylor_green(grid16), tg)
    path = sample_wiener(1, tg, linear_model.K)
    F = stochastic_convolution(linear_model, u, path, tg, weights=np.zeros(tg.n_steps + 1))
    assert not np.any(F.coeffs)
    assert np.any(stochastic_convolution(linear_model, u, path, tg).coeffs)


def test_silent_model(grid16, tg, linear_model):
    u = heat_trajectory(taylor_green(grid16), tg)
    path = sample_wiener(1, tg, linear_model.K)
    assert not np.any(stochastic_convolution(linear_model.scaled(0.0), u, path, tg).coeffs)


def test_mode_count_mismatch(grid16, tg, linear_model):
    path = sample_wiener(1, tg, 2)
    with pytest.raises(ValueError, match="modes"):
        stochastic_convolution(linear_model, Trajectory.zeros(grid16, tg), path, tg)


def test_time_grid_mismatch(grid16, tg, linear_model):
    path = sample_wiener(1, tg, linear_model.K)
    u = Trajectory.zeros(grid16, TimeGrid(t_end=0.1, n_steps=5))
    with pytest.raises(ValueError, match="time grid mismatch"):
        stochastic_convolution(linear_model, u, path, tg)


def test_doubling_the_couplings_doubles_each_path(grid16, tg, linear_model):
    u = heat_trajectory(taylor_green(grid16), tg)
    for seed in range(3):
        path = sample_wiener(seed, tg, linear_model.K)
        F = stochastic_convolution(linear_model, u, path, tg).coeffs
        F2 = stochastic_convolution(linear_model.scaled(2.0), u, path, tg).coeffs
        np.testing.assert_allclose(F2, 2.0 * F, rtol=0, atol=1e-12 * np.abs(F).max())


def test_frozen_heat_variance_of_additive_noise(grid16, tg):
    # without the semigroup F(T) = sum_k G_k W_k(T), so E||F(T)||^2 = T sum_k ||G_k||^2
    model = default_additive_model(2)
    G = noise_family(model, 0.0, SpectralField.zeros(grid16))
    expected = tg.t_end * sum(field_lp_norm(SpectralField(grid16, g), 2.0) ** 2 for g in G)

    paths = 10_000
    zero = Trajectory.zeros(grid16, tg)
    samples = np.array([
        field_lp_norm(stochastic_convolution(model, zero, sample_wiener(seed, tg, model.K), tg,
                                             semigroup=False).final(), 2.0) ** 2
        for seed in range(paths)
    ])
    se = samples.std(ddof=1) / np.sqrt(paths)
    assert abs(samples.mean() - expected) <= 4.0 * se
