"""HTTP API: payload parity with the library and error-status mapping."""

import math

import pytest
from fastapi.testclient import TestClient

from mzprobe import __version__
from mzprobe.ops import cmd_design
from mzprobe.service import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as client:
        yield client


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "version": __version__}


def test_design_matches_local_run(client):
    response = client.post("/design", json={"config": "worked_example"})
    assert response.status_code == 200
    remote = response.json()
    local = cmd_design(__import__("mzprobe").load_config("worked_example"))
    assert remote["report"]["snr_max"] == pytest.approx(local["report"]["snr_max"],
                                                        rel=1e-12)
    assert remote["table"] == local["table"]
    assert remote["config"] == local["config"]


def test_design_accepts_inline_config_and_overrides(client):
    body = {"config": {"design": {"target_optical_depth": 0.012}}, "seed": 7}
    response = client.post("/design", json=body)
    assert response.status_code == 200
    payload = response.json()
    assert payload["config"]["seed"] == 7
    assert payload["config"]["design"]["target_optical_depth"] == 0.012
    assert payload["design_point"]["detuning"] < 170.0


def test_simulate_returns_trace_and_summary(client):
    response = client.post("/simulate", json={"seed": 3})
    assert response.status_code == 200
    payload = response.json()
    summary = payload["summary"]
    assert summary["noiseless_mean_a"] == pytest.approx(summary["predicted_mean_a"],
                                                        rel=1e-5)
    assert len(payload["trace"]["time_s"]) == len(payload["trace"]["inphase_a"])
    again = client.post("/simulate", json={"seed": 3}).json()
    assert again["summary"] == summary


def test_experiment_runs_by_name(client, small_config):
    body = {"config": small_config.model_dump(mode="json"), "name": "fringe_scan"}
    response = client.post("/experiment", json=body)
    assert response.status_code == 200
    payload = response.json()
    assert payload["name"] == "fringe_scan"
    fit = payload["result"]["fit"]
    assert fit["parameters"]["amplitude"] == pytest.approx(
        payload["result"]["extras"]["predicted_amplitude_a"], rel=1e-3)


def test_unknown_experiment_is_400(client):
    response = client.post("/experiment", json={"name": "banana"})
    assert response.status_code == 400
    assert "valid names" in response.json()["detail"]


def test_bad_config_is_400(client):
    response = client.post("/design", json={"config": {"cloud": {"atom_count": "x"}}})
    assert response.status_code == 400
    assert "invalid configuration" in response.json()["detail"]
    missing = client.post("/design", json={"config": "nonexistent_preset"})
    assert missing.status_code == 400


def test_infeasible_design_is_422(client):
    body = {"config": {"design": {"target_optical_depth": 0.5,
                                  "modulation_penalty": 1.17}}}
    response = client.post("/design", json=body)
    assert response.status_code == 422
    assert "exceeds" in response.json()["detail"]


def test_request_schema_is_strict(client):
    response = client.post("/design", json={"config": None, "out_dir": "/tmp/x"})
    assert response.status_code == 422


def test_non_finite_values_become_null(client):
    # a 3-point sweep has no degrees of freedom for the fit covariance
    config = {"experiment": {"lo_powers_w": [1e-4, 3e-4, 1e-3], "noise_seeds": 2,
                             "trace_duration_s": 0.05}}
    response = client.post("/experiment", json={"config": config,
                                                "name": "noise_vs_power"})
    assert response.status_code == 200
    uncertainties = response.json()["result"]["fit"]["uncertainties"]
    assert uncertainties["slope"] is None or math.isfinite(uncertainties["slope"])
