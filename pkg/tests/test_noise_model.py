import numpy as np
import pytest

from src.noise.model import (
    AuditError,
    Envelope,
    NoiseMode,
    NoiseModel,
    audit_noise_model,
    certify,
    default_additive_model,
    default_linear_model,
    fit_envelopes,
    load_noise_model,
    noise_family,
    noise_params,
    save_noise_model,
)
from src.spectral.fields import divergence, taylor_green
from src.spectral.grid import SpectralField
from src.spectral.norms import field_lp_norm


def test_default_models():
    linear = default_linear_model(2)
    assert linear.K == 3
    assert not linear.is_silent
    assert linear.scaled(0.0).is_silent
    additive = default_additive_model(3)
    assert additive.K == 2
    assert additive.structure == "additive"


def test_additive_modes_need_a_wavevector():
    with pytest.raises(ValueError, match="nonzero wavevector"):
        NoiseModel(structure="additive", modes=[NoiseMode(wavevector=(0, 0), coupling=0.1)])


def test_modes_share_a_dimension():
    with pytest.raises(ValueError, match="same dimension"):
        NoiseModel(modes=[NoiseMode(wavevector=(1, 0)), NoiseMode(wavevector=(1, 0, 0))])


def test_needs_a_mode():
    with pytest.raises(ValueError, match="K >= 1"):
        NoiseModel(modes=[])


def test_envelope():
    env = Envelope(offset=1.0, coefficient=2.0, exponent=2.0)
    assert env(3.0) == pytest.approx(19.0)
    with pytest.raises(ValueError, match="nonnegative"):
        Envelope(coefficient=-1.0)


def test_noise_family_is_projected(grid16, linear_model):
    u = taylor_green(grid16)
    family = noise_family(linear_model, 0.0, u)
    assert family.shape == (3, 2, 16, 16)
    for k in range(3):
        mode = SpectralField(grid16, family[k])
        assert field_lp_norm(divergence(mode), 2.0) <= 1e-10
    # the constant mode multiplies by its coupling and leaves a divergence-free field alone
    np.testing.assert_allclose(family[0], 0.1 * u.coeffs, atol=1e-10)


def test_linear_noise_vanishes_at_zero(grid16, linear_model):
    assert not np.any(noise_family(linear_model, 0.0, SpectralField.zeros(grid16)))


def test_additive_noise_ignores_the_state(grid16):
    model = default_additive_model(2)
    a = noise_family(model, 0.0, SpectralField.zeros(grid16))
    b = noise_family(model, 0.0, taylor_green(grid16))
    np.testing.assert_array_equal(a, b)
    assert np.any(a)


def test_noise_params(critical2):
    assert noise_params(critical2).s == pytest.approx(critical2.s)


def test_fitted_linear_model_has_eta_structure(partition16, critical2, linear_model):
    fitted = fit_envelopes(linear_model, partition16, critical2, samples=10, seed=0, margin=1.5)
    assert fitted.eta_bound > 0.0
    assert fitted.beta1.exponent == critical2.r
    assert fitted.has_eta_structure(critical2.r)
    assert fitted.audit is None


def test_audit_attaches_summary(partition16, critical2, linear_model):
    fitted = fit_envelopes(linear_model, partition16, critical2, samples=20, seed=0, margin=1.5)
    audited = audit_noise_model(fitted, partition16, critical2, samples=20, seed=1)
    assert audited.audit.passed
    assert audited.audited_for(partition16.grid, critical2)
    audited.require_audit(partition16.grid, critical2)
    assert certify(audited, partition16, critical2) is audited


def test_audit_fails_for_too_small_envelopes(partition16, critical2, linear_model):
    fitted = fit_envelopes(linear_model, partition16, critical2, samples=5, seed=0, margin=1.5)
    shrunk = fitted.model_copy(update={"beta1": Envelope(coefficient=1e-9, exponent=2.0)})
    audited = audit_noise_model(shrunk, partition16, critical2, samples=5)
    assert not audited.audit.passed
    with pytest.raises(AuditError):
        audited.require_audit(partition16.grid, critical2)


def test_unaudited_model_is_refused(grid16, critical2, linear_model):
    with pytest.raises(AuditError, match="audit"):
        linear_model.require_audit(grid16, critical2)
    linear_model.scaled(0.0).require_audit(grid16, critical2)


def test_audit_needs_envelopes(partition16, critical2, linear_model):
    with pytest.raises(AuditError, match="no envelopes"):
        audit_noise_model(linear_model, partition16, critical2, samples=2)


def test_additive_model_certifies(partition16, critical2):
    model = certify(default_additive_model(2), partition16, critical2, fit_samples=10, audit_samples=10)
    assert model.audit.passed
    assert model.beta2(5.0) == 0.0
    assert not model.has_eta_structure(critical2.r)


def test_json_round_trip(tmp_path, partition16, critical2, linear_model):
    fitted = fit_envelopes(linear_model, partition16, critical2, samples=10, seed=0, margin=1.5)
    audited = audit_noise_model(fitted, partition16, critical2, samples=10)
    path = save_noise_model(audited, tmp_path / "noise.json")
    loaded = load_noise_model(path)
    assert loaded == audited
    assert loaded.audited_for(partition16.grid, critical2) == audited.audited_for(partition16.grid, critical2)
