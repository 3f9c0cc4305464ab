"""Command implementations shared by the CLI and the HTTP service.

Each cmd_* function maps a resolved RunConfig to a plain-dict payload;
nothing here touches the filesystem until write_outputs is called, so a
failed run leaves no partial files and local and remote execution produce
the same bytes. Every payload embeds the resolved config (seed included),
which is all that is needed to reproduce the run exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import harness
from .atoms import cloud_response
from .config import RunConfig, load_config
from .designer import (design_report, imperfection_scaling, report_table,
                       signal_and_noise_currents)
from .lockin import demodulate

_SIMULATE_SEED_INDEX = 5


def resolve_config(source=None, seed=None, out_dir=None, threads=None) -> RunConfig:
    """Load a config and apply command-line style overrides."""
    config = load_config(source)
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if out_dir is not None:
        updates["out_dir"] = str(out_dir)
    if threads is not None:
        updates["threads"] = threads
    return config.model_copy(update=updates) if updates else config


def cmd_design(config: RunConfig) -> dict:
    """Solve the operating point and evaluate every design figure."""
    cloud = config.to_cloud()
    point = config.design_point()
    report = design_report(
        point, cloud, config.to_detector_a(),
        locking_floor_rad_per_rthz=config.servo.residual_floor_rad_per_rthz)
    scaled = imperfection_scaling(report, config.design.loss_factor)
    return {
        "command": "design",
        "config": config.resolved(),
        "design_point": asdict(point),
        "report": asdict(report),
        "loss_scaled_report": asdict(scaled),
        "table": report_table(report, point),
    }


def cmd_simulate(config: RunConfig) -> dict:
    """Run the designed measurement once and demodulate the output.

    The probe goes through the cloud at the design detuning, both ports
    are detected with the configured noise, and the balanced output is
    demodulated. The summary compares the settled mean against the
    noiseless chain and against the closed-form signal current.
    """
    itf = config.interferometer
    probe = config.to_probe()
    response = cloud_response(config.to_cloud(), probe)
    arm_power = (probe.input_power_w * itf.probe_attenuation
                 * response.transmission * itf.probe_arm_loss)
    theta = response.phase_shift_rad - itf.operating_phase_rad
    lock = config.to_lockin()
    n = int(round(config.simulate.duration_s * config.sample_rate_hz))

    def demod_once(silent: bool):
        a, b = harness._port_traces(config, arm_power, theta, n,
                                    _SIMULATE_SEED_INDEX, 0, 0, silent=silent)
        return demodulate(harness._balanced(config, a, b), lock)

    result = demod_once(silent=False)
    measured = float(np.mean(result.settled_inphase))
    noiseless = float(np.mean(demod_once(silent=True).settled_inphase))

    point = replace(config.design_point(),
                    transmitted_probe_power_w=arm_power,
                    lo_power_w=itf.lo_power_w * itf.lo_arm_loss)
    i_sig, i_shot = signal_and_noise_currents(point, config.to_detector_a(), theta)
    predicted = 2.0 * itf.mode_matching_visibility * i_sig

    settled_s = config.simulate.duration_s - result.settle_time_s
    floor = float(np.std(result.settled_inphase, ddof=1))
    mean_se = floor / math.sqrt(max(1.0, 2.0 * lock.bandwidth_hz * settled_s))
    z = (measured - predicted) / mean_se if mean_se > 0 else 0.0

    times = np.arange(len(result.inphase)) / result.sample_rate_hz
    settled_mask = times >= result.settle_time_s
    return {
        "command": "simulate",
        "config": config.resolved(),
        "summary": {
            "measured_mean_a": measured,
            "noiseless_mean_a": noiseless,
            "predicted_mean_a": predicted,
            "mean_standard_error_a": mean_se,
            "z_score": z,
            "demodulated_noise_a": floor,
            "shot_noise_current_a": i_shot,
            "phase_shift_rad": response.phase_shift_rad,
            "transmission": response.transmission,
            "theta_rad": theta,
            "probe_arm_power_w": arm_power,
            "settle_time_s": result.settle_time_s,
            "demod_sample_rate_hz": result.sample_rate_hz,
        },
        "trace": {
            "time_s": times.tolist(),
            "inphase_a": result.inphase.tolist(),
            "quadrature_a": result.quadrature.tolist(),
            "settled": settled_mask.tolist(),
        },
    }


def cmd_experiment(name: str, config: RunConfig) -> dict:
    """Run one named scripted experiment end to end."""
    result = harness.run_experiment(name, config, threads=config.threads)
    return {
        "command": "experiment",
        "name": result.name,
        "config": config.resolved(),
        "result": {
            "sweep_name": result.sweep_name,
            "sweep_values": list(result.sweep_values),
            "measured": list(result.measured),
            "standard_errors": list(result.standard_errors),
            "fit": {
                "model": result.fit.model,
                "parameters": dict(result.fit.parameters),
                "uncertainties": dict(result.fit.uncertainties),
            },
            "seeds": list(result.seeds),
            "extras": {k: (list(v) if isinstance(v, (tuple, list)) else v)
                       for k, v in result.extras.items()},
        },
    }


def _provenance(payload: dict) -> list:
    compact = json.dumps(payload["config"], sort_keys=True, separators=(",", ":"))
    return [f"command: {payload['command']}",
            f"seed: {payload['config']['seed']}",
            f"config: {compact}"]


def write_outputs(payload: dict, out_dir) -> list:
    """Write the files for one command payload; returns the paths written."""
    from .io_utils import write_csv, write_json

    out = Path(out_dir)
    command = payload["command"]
    written = []
    if command == "design":
        written.append(write_json(out / "design_report.json", payload))
        table_path = out / "design_report.txt"
        table_path.parent.mkdir(parents=True, exist_ok=True)
        header = "".join(f"# {line}\n" for line in _provenance(payload))
        table_path.write_text(header + payload["table"] + "\n", encoding="utf-8")
        written.append(table_path)
    elif command == "simulate":
        summary = {k: v for k, v in payload.items() if k != "trace"}
        written.append(write_json(out / "simulate_summary.json", summary))
        trace = payload["trace"]
        rows = zip(trace["time_s"], trace["inphase_a"], trace["quadrature_a"],
                   trace["settled"])
        written.append(write_csv(out / "simulate_trace.csv",
                                 ["time_s", "inphase_a", "quadrature_a", "settled"],
                                 rows, comments=_provenance(payload)))
    elif command == "experiment":
        name = payload["name"]
        written.append(write_json(out / f"{name}_result.json", payload))
        result = payload["result"]
        n = len(result["sweep_values"])
        header = [result["sweep_name"], "measured", "standard_error"]
        columns = [result["sweep_values"], result["measured"], result["standard_errors"]]
        for key, value in sorted(result["extras"].items()):
            if isinstance(value, list) and len(value) == n:
                header.append(key)
                columns.append(value)
        written.append(write_csv(out / f"{name}_sweep.csv", header,
                                 zip(*columns), comments=_provenance(payload)))
    else:
        raise ValueError(f"unknown payload command {command!r}")
    return [str(p) for p in written]
