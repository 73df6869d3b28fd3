import dataclasses
import json

import pytest

from src.experiment import verify
from src.experiment.verify import SuiteResult, run_verify
from src.noise.model import AuditError
from src.spectral.fields import leray_project
from src.spectral.partition import build_partition

CHEAP_SUITES = [
    "partition_of_unity",
    "leray_projector",
    "factorization_identity",
    "cutoff_formulas",
    "solver_constants",
]


def test_cheap_suites_pass(make_config):
    config = make_config(experiment="verify")
    verdict = run_verify(config, suites=CHEAP_SUITES)
    assert verdict["passed"], verdict
    assert [s["name"] for s in verdict["suites"]] == CHEAP_SUITES
    assert all(s["module"] for s in verdict["suites"])
    report = json.loads((config.output_path / "report.json").read_text())
    assert report["passed"]
    assert (config.output_path / "timing.txt").exists()


def test_stochastic_suites_pass(make_config):
    config = make_config(
        experiment="verify",
        verify={
            "wiener_paths": 2000,
            "ito_paths": 500,
            "ladder_paths": 2,
            "weak_order_dts": [0.01, 0.005, 0.0025],
        },
    )
    verdict = run_verify(config, suites=["wiener_moments", "ito_moments", "weak_order", "stopping_times"])
    assert verdict["passed"], verdict
    rows = (config.output_path / "monte_carlo.csv").read_text().splitlines()
    assert rows[0] == "check,path_count,estimate,standard_error,seed"
    # three Wiener rows and two Ito rows
    assert len(rows) == 6


def test_broken_partition_is_caught(make_config):
    config = make_config(experiment="verify")
    P = build_partition(config.grid)
    broken = dataclasses.replace(P, filter_values=P.filter_values * 0.9)
    verdict = run_verify(config, P=broken, suites=["partition_of_unity"], write=False)
    assert not verdict["passed"]
    assert verdict["suites"][0]["details"]["residual_max"] > 0.05


def test_raising_suite_is_recorded(make_config, monkeypatch):
    def boom(ctx):
        raise RuntimeError("kaboom")

    monkeypatch.setitem(verify.SUITES, "boom", boom)
    verdict = run_verify(make_config(experiment="verify"), suites=["cutoff_formulas", "boom"], write=False)
    assert not verdict["passed"]
    assert verdict["suites"][0]["passed"]
    assert verdict["suites"][1]["details"] == {"error": "kaboom"}


def test_unknown_suite(make_config):
    with pytest.raises(ValueError, match="unknown suites"):
        run_verify(make_config(experiment="verify"), suites=["nope"])


def test_report_is_valid_json(make_config, monkeypatch):
    def infinite(ctx):
        return SuiteResult("infinite", "", "", True, {"spread": float("inf")})

    monkeypatch.setitem(verify.SUITES, "infinite", infinite)
    config = make_config(experiment="verify")
    run_verify(config, suites=["infinite"])
    report = json.loads((config.output_path / "report.json").read_text())
    assert report["suites"][0]["details"]["spread"] is None


def test_refinement_and_solver_suites_pass(make_config):
    config = make_config(
        experiment="verify",
        verify={
            "convolution_paths": 100,
            "convolution_dts": [0.01, 0.005, 0.0025],
            "contraction_paths": 4,
            "cross_refinements": 1,
        },
    )
    names = ["bilinear_estimates", "convolution_regularity", "picard_contraction", "cross_validation"]
    verdict = run_verify(config, suites=names, write=False)
    assert verdict["passed"], verdict
    details = {s["name"]: s["details"] for s in verdict["suites"]}
    assert details["picard_contraction"]["contracted_share"] == 1.0
    assert len(details["cross_validation"]["gaps"]) == 2
    assert len(details["convolution_regularity"]["ratios"]) == 3


def test_property_suites_pass(make_config):
    config = make_config(experiment="verify", verify={"property_fields": 3, "linearity_paths": 2})
    names = ["norm_properties", "field_energy", "heat_flow_properties", "convolution_linearity"]
    verdict = run_verify(config, suites=names, write=False)
    assert verdict["passed"], verdict
    details = {s["name"]: s["details"] for s in verdict["suites"]}
    assert abs(details["norm_properties"]["scale_ratio"] - 1.0) <= 0.02
    assert details["norm_properties"]["scaling_p"] == 4.0
    assert details["field_energy"]["orthogonality"] <= 1e-8
    assert details["convolution_linearity"]["defect"] <= 1e-10


def test_broken_transport_is_caught(make_config, monkeypatch):
    # u -> P u in place of P div(u (x) v) keeps linearity but is not energy orthogonal
    monkeypatch.setattr(verify, "nonlinear_term", lambda u, v: leray_project(u))
    config = make_config(experiment="verify", verify={"property_fields": 2})
    verdict = run_verify(config, suites=["field_energy"], write=False)
    assert not verdict["passed"]
    assert verdict["suites"][0]["details"]["orthogonality"] > 0.5


def test_heat_decay_suite_passes(make_config):
    config = make_config(experiment="verify", grid={"d": 2, "n": 32})
    verdict = run_verify(config, suites=["heat_decay"])
    assert verdict["passed"], verdict
    details = verdict["suites"][0]["details"]
    assert len(details["p=2"]["shells"]) >= 2
    assert details["p=2"]["spread"] <= 1.2
    assert (config.output_path / "decay_fits.csv").exists()


def test_heat_decay_needs_populated_shells(make_config, monkeypatch):
    monkeypatch.setattr(verify, "DECAY_MIN_MODES", 10**6)
    config = make_config(experiment="verify")
    verdict = run_verify(config, suites=["heat_decay"], write=False)
    assert not verdict["passed"]
    assert "well-populated shells" in verdict["suites"][0]["details"]["error"]


def test_global_sweep_suite_is_reproducible(make_config):
    config = make_config(experiment="verify", verify={"sweep_paths": 3})
    verdict = run_verify(config, suites=["global_sweep"], write=False)
    assert verdict["passed"], verdict
    details = verdict["suites"][0]["details"]
    assert details["mismatched"] == []
    assert details["workers"] == [1, 2]
    base = config.output_path / "global_sweep"
    assert (base / "manifest.json").exists()
    lines = (base / "workers2" / "paths.jsonl").read_text().splitlines()
    assert len(lines) == 3 * len(config.delta_values)


def test_global_sweep_suite_skips_without_hypothesis(make_config, monkeypatch):
    def refuse(manifest, horizon):
        raise AuditError("noise too strong for the global sweep")

    monkeypatch.setattr(verify, "check_global_hypothesis", refuse)
    verdict = run_verify(make_config(experiment="verify"), suites=["global_sweep"], write=False)
    assert verdict["passed"]
    assert "too strong" in verdict["suites"][0]["details"]["skipped"]
