import numpy as np
import pytest

from src.spectral.field_io import save_field
from src.spectral.fields import divergence
from src.spectral.grid import GridSpec
from src.spectral.initial_data import (
    InitialDataSpec,
    UnresolvableOscillation,
    make_initial_data,
    snap_epsilon,
    wave_packet,
)
from src.spectral.norms import field_lp_norm

GRID3 = GridSpec(d=3, n=16)


def _rms(u):
    return float(np.sqrt(np.mean(np.sum(u.values**2, axis=0))))


def test_gaussian_data_is_divergence_free_with_requested_rms(grid32):
    u = make_initial_data(InitialDataSpec(amplitude=0.3, seed=5), grid32)
    assert _rms(u) == pytest.approx(0.3, rel=1e-12)
    assert field_lp_norm(divergence(u), 2.0) <= 1e-10 * field_lp_norm(u, 2.0)
    assert u.metadata["seed"] == 5


def test_gaussian_data_is_seeded(grid32):
    a = make_initial_data(InitialDataSpec(seed=1), grid32)
    b = make_initial_data(InitialDataSpec(seed=1), grid32)
    c = make_initial_data(InitialDataSpec(seed=2), grid32)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)
    assert not np.allclose(a.coeffs, c.coeffs)


def test_empty_band_rejected(grid16):
    with pytest.raises(ValueError, match="no resolvable modes"):
        make_initial_data(InitialDataSpec(band=(100.0, 200.0)), grid16)


@pytest.mark.parametrize(
    "fields, message",
    [
        ({"kind": "oscillating"}, "needs epsilon"),
        ({"kind": "oscillating", "epsilon": 1.5}, "epsilon"),
        ({"kind": "file"}, "needs a path"),
        ({"band": (4.0, 1.0)}, "increasing"),
        ({"colour": "red"}, "colour"),
    ],
)
def test_spec_validation(fields, message):
    with pytest.raises(ValueError, match=message):
        InitialDataSpec(**fields)


def test_snap_epsilon():
    assert snap_epsilon(0.25, GRID3) == (4, 0.25)
    m, eps = snap_epsilon(0.3, GRID3)
    assert m == 3
    assert eps == pytest.approx(1.0 / 3.0)


def test_oscillating_data_is_divergence_free():
    u = make_initial_data(InitialDataSpec(kind="oscillating", epsilon=0.25), GRID3)
    assert u.metadata["epsilon_effective"] == pytest.approx(0.25)
    assert u.metadata["frequency_index"] == 4
    assert np.abs(divergence(u).values).max() <= 1e-8 * np.abs(u.values).max()


def test_oscillating_data_needs_three_dimensions(grid16):
    with pytest.raises(ValueError, match="d = 3"):
        make_initial_data(InitialDataSpec(kind="oscillating", epsilon=0.25), grid16)


def test_unresolvable_oscillation():
    with pytest.raises(UnresolvableOscillation, match="oscillation unresolvable"):
        make_initial_data(InitialDataSpec(kind="oscillating", epsilon=0.125), GRID3)


def test_file_data(tmp_path, grid16, grid32):
    u = make_initial_data(InitialDataSpec(seed=4), grid16)
    path = save_field(u, tmp_path / "u0")
    loaded = make_initial_data(InitialDataSpec(kind="file", path=str(path)), grid16)
    np.testing.assert_array_equal(loaded.coeffs, u.coeffs)
    with pytest.raises(ValueError, match="expected"):
        make_initial_data(InitialDataSpec(kind="file", path=str(path)), grid32)


def test_oscillating_sup_norm_grows_like_inverse_sqrt_epsilon():
    grid = GridSpec(d=3, n=64)
    coarse, fine = (make_initial_data(InitialDataSpec(kind="oscillating", epsilon=eps), grid) for eps in (0.25, 0.125))
    for u in (coarse, fine):
        assert np.abs(divergence(u).values).max() <= 1e-8 * np.abs(u.values).max()
    ratio = field_lp_norm(fine, np.inf) / field_lp_norm(coarse, np.inf)
    assert ratio == pytest.approx(np.sqrt(2.0), rel=0.1)


def test_wave_packet_is_centred_and_scaled(grid64):
    u = wave_packet(grid64, k0=4.0, width=0.5, scale=2.0)
    assert u.coeffs.shape[0] == 1
    assert u.values.max() == pytest.approx(2.0, rel=1e-12)
    assert u.metadata["kind"] == "wave_packet"
