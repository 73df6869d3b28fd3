import numpy as np
import pytest

from src.flow.estimates import ensemble_field
from src.spectral.fields import taylor_green
from src.spectral.partition import (
    dyadic_block,
    low_freq_sum,
    orthogonality_defect,
    partition_residual,
    partition_summary,
    radial_bump,
)


def test_shell_range_on_64(partition64):
    assert (partition64.j_min, partition64.j_max) == (-1, 5)
    assert partition64.band == (1.0, 16.0)


def test_partition_of_unity(partition64):
    assert partition_residual(partition64) <= 1e-10


def test_smallest_grid_holds_enough_shells(partition16):
    assert len(partition16.indices) >= 3
    assert partition_residual(partition16) <= 1e-10


def test_non_adjacent_shells_are_disjoint(partition64):
    assert orthogonality_defect(partition64) == 0.0


def test_bump_profile():
    x = np.array([0.5, 0.75, 1.0, 1.5, 2.0, 8.0 / 3.0, 3.0])
    values = radial_bump(x)
    assert values[0] == 0.0
    assert values[-1] == 0.0
    np.testing.assert_allclose(values[2:5], 1.0)


def test_diagonal_mode_lives_in_one_shell(partition64):
    # |xi| = sqrt(2) only meets the j = 0 annulus
    assert partition64.filter(0)[1, 1] == pytest.approx(1.0)
    assert partition64.filter(-1)[1, 1] == 0.0
    assert partition64.filter(1)[1, 1] == 0.0


def test_filter_outside_range(partition64):
    with pytest.raises(ValueError, match="outside"):
        partition64.filter(6)


def test_blocks_reassemble_band_limited_field(partition64):
    u = ensemble_field(partition64.grid, seed=3, index=0, band=(1.0, 4.0))
    total = sum((dyadic_block(u, j, partition64) for j in partition64.indices[1:]),
                start=dyadic_block(u, partition64.j_min, partition64))
    np.testing.assert_allclose(total.coeffs, u.coeffs, atol=1e-10 * np.abs(u.coeffs).max())


def test_low_frequency_sum(partition64):
    u = taylor_green(partition64.grid)
    assert low_freq_sum(u, partition64.j_min, partition64).is_zero()
    np.testing.assert_allclose(low_freq_sum(u, 1, partition64).coeffs, u.coeffs, atol=1e-12)


def test_summary_reports_shells(partition64):
    summary = partition_summary(partition64)
    assert [s["j"] for s in summary["shells"]] == list(range(-1, 6))
    assert all(s["modes"] > 0 for s in summary["shells"])
    assert summary["residual_max"] <= 1e-10
