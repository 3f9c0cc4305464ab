"""End-to-end payloads: the simulated chain against the closed-form budget."""

import math

import pytest

from mzprobe.config import load_config
from mzprobe.ops import cmd_design, cmd_experiment, cmd_simulate, resolve_config


@pytest.fixture(scope="module", params=["worked_example", "bench_imperfect"])
def simulate_payload(request):
    return request.param, cmd_simulate(load_config(request.param))


def test_simulated_mean_matches_closed_form(simulate_payload):
    # noiseless chain and analytic signal current are independent routes
    _, payload = simulate_payload
    summary = payload["summary"]
    assert summary["noiseless_mean_a"] == pytest.approx(summary["predicted_mean_a"],
                                                        rel=1e-5)
    assert abs(summary["z_score"]) < 4.0
    assert summary["demodulated_noise_a"] > 0
    assert summary["mean_standard_error_a"] > 0


def test_simulate_summary_reflects_the_cloud(simulate_payload):
    name, payload = simulate_payload
    summary = payload["summary"]
    config = load_config(name)
    assert summary["phase_shift_rad"] == pytest.approx(0.852436416309417, rel=1e-9)
    assert summary["transmission"] == pytest.approx(math.exp(-0.01), rel=1e-9)
    assert summary["theta_rad"] == pytest.approx(
        summary["phase_shift_rad"] - config.interferometer.operating_phase_rad,
        rel=1e-12)
    expected_arm = (config.probe.power_w * config.interferometer.probe_attenuation
                    * summary["transmission"] * config.interferometer.probe_arm_loss)
    assert summary["probe_arm_power_w"] == pytest.approx(expected_arm, rel=1e-12)


def test_simulate_trace_is_consistent(simulate_payload):
    _, payload = simulate_payload
    trace = payload["trace"]
    n = len(trace["time_s"])
    assert len(trace["inphase_a"]) == n
    assert len(trace["quadrature_a"]) == n
    assert len(trace["settled"]) == n
    settle = payload["summary"]["settle_time_s"]
    rate = payload["summary"]["demod_sample_rate_hz"]
    assert sum(trace["settled"]) == n - math.ceil(settle * rate)
    assert trace["time_s"][1] == pytest.approx(1.0 / rate, rel=1e-12)


def test_simulate_is_deterministic():
    config = load_config("worked_example")
    a = cmd_simulate(config)
    b = cmd_simulate(config)
    assert a["summary"] == b["summary"]
    assert a["trace"]["inphase_a"] == b["trace"]["inphase_a"]
    different_seed = cmd_simulate(resolve_config("worked_example", seed=99))
    assert different_seed["summary"]["measured_mean_a"] != \
        a["summary"]["measured_mean_a"]
    assert different_seed["summary"]["noiseless_mean_a"] == pytest.approx(
        a["summary"]["noiseless_mean_a"], rel=1e-12)


def test_locking_at_the_cloud_phase_nulls_the_output():
    config = load_config({"interferometer": {"operating_phase_rad": 0.852436416309417}})
    summary = cmd_simulate(config)["summary"]
    assert abs(summary["theta_rad"]) < 1e-9
    assert abs(summary["predicted_mean_a"]) < 1e-16
    assert abs(summary["measured_mean_a"]) < 5.0 * summary["mean_standard_error_a"]


def test_operating_phase_sign_propagates():
    config = load_config({"interferometer": {"operating_phase_rad": 0.5 * math.pi}})
    summary = cmd_simulate(config)["summary"]
    assert summary["theta_rad"] < 0
    assert summary["predicted_mean_a"] < 0
    assert summary["measured_mean_a"] < 0


def test_design_payload_carries_both_reports():
    config = load_config("worked_example")
    payload = cmd_design(config)
    assert payload["command"] == "design"
    assert "out_dir" not in payload["config"]
    assert payload["design_point"]["detuning"] == pytest.approx(170.4872832618834,
                                                                rel=1e-12)
    report = payload["report"]
    scaled = payload["loss_scaled_report"]
    factor = config.design.loss_factor
    assert scaled["snr_detected"] == pytest.approx(report["snr_detected"] * factor,
                                                   rel=1e-12)
    assert scaled["shot_noise_current_a"] == report["shot_noise_current_a"]
    assert "snr (quantum-limited)" in payload["table"]


def test_experiment_payload_round_trips_the_result(small_config):
    experiment = small_config.experiment.model_copy(update={"scan_points": 9})
    config = small_config.model_copy(update={"experiment": experiment})
    payload = cmd_experiment("fringe_scan", config)
    assert payload["command"] == "experiment"
    assert payload["name"] == "fringe_scan"
    result = payload["result"]
    assert result["sweep_name"] == "operating_phase_rad"
    assert len(result["sweep_values"]) == 9
    assert len(result["measured"]) == 9
    assert result["fit"]["model"] == "fixed_period_sine"
    assert set(result["fit"]["parameters"]) == set(result["fit"]["uncertainties"])
    assert isinstance(result["extras"]["predicted_amplitude_a"], float)
