import pytest
from pydantic import ValidationError

from src.noise.model import Envelope, default_linear_model
from src.solver.config import GAMMA_GATE, SolverConfig, radius_from_cstar, solver_constants
from src.spectral.norms import BesovParams


def test_radius_from_cstar():
    assert radius_from_cstar(1.0, 2.0) == pytest.approx(0.5)
    assert radius_from_cstar(0.1, 2.0) == 1.0
    assert radius_from_cstar(4.0, 4.0) == pytest.approx(0.5)


def test_effective_radius():
    assert SolverConfig(C_star=1.0).effective_R == pytest.approx(0.5)
    assert SolverConfig(C_star=1.0, R=0.3, auto_R=False).effective_R == pytest.approx(0.3)


def test_rate_params_shift_regularity(critical2):
    config = SolverConfig(besov=critical2)
    assert config.rate_params.s == pytest.approx(critical2.s + 1.0)
    assert config.r == 2.0


def test_solver_constants():
    model = default_linear_model(2).model_copy(
        update={"beta1": Envelope(coefficient=1.0, exponent=2.0), "beta2": Envelope(offset=1.0)}
    )
    config = SolverConfig(C_star=1.0, N_cutoff=1.0)
    constants = solver_constants(config, 2.0, model)
    assert constants.R == pytest.approx(0.5)
    assert constants.M == pytest.approx(7.0)
    # 3 ((1/R^2 + 1) beta1(2) + beta2(4)) = 3 (5 * 4 + 1)
    assert constants.T_hat == pytest.approx(1.0 / 63.0)


def test_solver_constants_need_envelopes():
    with pytest.raises(ValueError, match="envelope"):
        solver_constants(SolverConfig(), 1.0, default_linear_model(2))


def test_zero_envelopes_leave_T_hat_unbounded():
    model = default_linear_model(2).model_copy(update={"beta1": Envelope(), "beta2": Envelope()})
    with pytest.raises(ValueError, match="zero denominator"):
        solver_constants(SolverConfig(), 1.0, model)


def test_gamma_gate():
    model = default_linear_model(2).model_copy(update={"gamma_bound": GAMMA_GATE})
    with pytest.raises(ValueError, match="smallness gate"):
        SolverConfig(C_star=1.0).check_noise(model)
    SolverConfig(C_star=0.5).check_noise(model)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"R": 1.5},
        {"R": 0.0},
        {"N_cutoff": 0.0},
        {"picard_max_iter": 0},
        {"auto_R": False},
        {"besov": BesovParams(s=0.0, p=2.0, r=2.0)},
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(ValidationError):
        SolverConfig(**kwargs)


def test_with_constants_keeps_the_rest():
    config = SolverConfig(N_cutoff=5.0).with_constants(2.0)
    assert config.C_star == 2.0
    assert config.N_cutoff == 5.0
