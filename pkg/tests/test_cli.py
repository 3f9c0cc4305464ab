"""Command-line interface: files, exit codes, summaries, and the remote path."""

import csv
import json
import threading
import time

import pytest

from mzprobe import __version__
from mzprobe.cli import main
from mzprobe.errors import LockFailureError

SMALL_SIM = {"simulate": {"duration_s": 0.02}}
SMALL_NOISE = {"experiment": {"lo_powers_w": [1e-4, 3e-4, 1e-3, 3e-3],
                              "noise_seeds": 2, "trace_duration_s": 0.05}}


def _config_file(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def _read_csv(path):
    comments, rows = [], []
    with open(path, encoding="utf-8", newline="") as handle:
        for line in handle:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
            else:
                rows.append(next(csv.reader([line])))
    return comments, rows


def test_design_writes_report_files(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["design", "--seed", "5", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "snr (quantum-limited)" in stdout
    assert f"wrote {out / 'design_report.json'}" in stdout

    payload = json.loads((out / "design_report.json").read_text(encoding="utf-8"))
    assert payload["config"]["seed"] == 5
    assert "out_dir" not in payload["config"]
    assert payload["report"]["snr_max"] == pytest.approx(85.24510800335945,
                                                         rel=1e-12)
    table = (out / "design_report.txt").read_text(encoding="utf-8")
    assert table.startswith("# command: design\n# seed: 5\n# config: ")
    assert "pi-swing snr ceiling" in table


def test_design_output_is_byte_deterministic(tmp_path):
    for name in ("first", "second"):
        assert main(["design", "--out", str(tmp_path / name)]) == 0
    first = (tmp_path / "first" / "design_report.json").read_bytes()
    second = (tmp_path / "second" / "design_report.json").read_bytes()
    assert first == second


def test_simulate_trace_round_trips(tmp_path, capsys):
    out = tmp_path / "out"
    config = _config_file(tmp_path, SMALL_SIM)
    assert main(["simulate", "--config", config, "--out", str(out)]) == 0
    assert "z-score" in capsys.readouterr().out

    summary = json.loads((out / "simulate_summary.json").read_text(encoding="utf-8"))
    assert "trace" not in summary
    comments, rows = _read_csv(out / "simulate_trace.csv")
    assert comments[0] == "# command: simulate"
    assert comments[1] == "# seed: 12345"
    assert comments[2].startswith("# config: {")
    assert rows[0] == ["time_s", "inphase_a", "quadrature_a", "settled"]
    body = rows[1:]
    assert len(body) >= 100
    means = [float(r[1]) for r in body if r[3] == "true"]
    measured = sum(means) / len(means)
    assert measured == pytest.approx(summary["summary"]["measured_mean_a"], rel=1e-6)
    # embedded config reproduces the run exactly
    assert json.loads(comments[2][len("# config: "):])["simulate"]["duration_s"] == 0.02


def test_experiment_sweep_columns(tmp_path, capsys):
    out = tmp_path / "out"
    config = _config_file(tmp_path, SMALL_NOISE)
    code = main(["experiment", "noise_vs_power", "--config", config,
                 "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "fit model power_law" in stdout
    assert "slope" in stdout

    payload = json.loads((out / "noise_vs_power_result.json").read_text("utf-8"))
    assert payload["name"] == "noise_vs_power"
    comments, rows = _read_csv(out / "noise_vs_power_sweep.csv")
    assert comments[0] == "# command: experiment"
    assert rows[0] == ["lo_power_w", "measured", "standard_error", "flagged",
                       "relative_deviation", "shot_noise_overlay_a"]
    assert len(rows) == 1 + 4
    for row, power, measured in zip(rows[1:], SMALL_NOISE["experiment"]["lo_powers_w"],
                                    payload["result"]["measured"]):
        assert float(row[0]) == pytest.approx(power, rel=1e-8)
        assert float(row[1]) == pytest.approx(measured, rel=1e-8)
        assert row[3] == "false"


def test_exit_codes(tmp_path, capsys, monkeypatch):
    assert main(["design", "--config", str(tmp_path / "absent.json")]) == 2
    assert "error:" in capsys.readouterr().err

    infeasible = _config_file(tmp_path, {"design": {"modulation_penalty": 1.17}})
    assert main(["design", "--config", infeasible]) == 3
    assert "infeasible design" in capsys.readouterr().err

    assert main(["experiment", "banana"]) == 2
    assert "valid names" in capsys.readouterr().err

    from mzprobe import ops
    def boom(config):
        raise LockFailureError("loop out of range")
    monkeypatch.setattr(ops, "cmd_simulate", boom)
    assert main(["simulate"]) == 4
    assert "lock failure" in capsys.readouterr().err


def test_version_and_argparse_errors(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["--version"])
    assert exit_info.value.code == 0
    assert __version__ in capsys.readouterr().out
    with pytest.raises(SystemExit):
        main([])


@pytest.fixture(scope="module")
def server_url():
    import uvicorn

    from mzprobe.service import create_app

    config = uvicorn.Config(create_app(), host="127.0.0.1", port=0,
                            log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("service did not start")
        time.sleep(0.05)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5.0)


def test_remote_design_matches_local_bytes(tmp_path, server_url):
    assert main(["design", "--out", str(tmp_path / "local")]) == 0
    assert main(["design", "--out", str(tmp_path / "remote"),
                 "--server", server_url]) == 0
    local = (tmp_path / "local" / "design_report.json").read_bytes()
    remote = (tmp_path / "remote" / "design_report.json").read_bytes()
    assert local == remote


def test_remote_errors_map_to_exit_codes(tmp_path, server_url, capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["experiment", "banana", "--server", server_url])
    assert exit_info.value.code == 2
    assert "valid names" in capsys.readouterr().err

    infeasible = _config_file(tmp_path, {"design": {"modulation_penalty": 1.17}})
    with pytest.raises(SystemExit) as exit_info:
        main(["design", "--config", infeasible, "--server", server_url])
    assert exit_info.value.code == 3
