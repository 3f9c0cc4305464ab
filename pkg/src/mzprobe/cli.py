"""Command-line front end.

Runs commands in process by default; with --server URL it becomes a thin
client that posts the resolved config to a running service and writes the
returned payload to local files, so both paths produce identical output.

Exit codes: 0 success, 2 configuration or input error, 3 infeasible
design, 4 lock failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, ops
from .config import shipped_config_names
from .errors import (ConfigError, InfeasibleDesignError, InvalidInputError,
                     LockFailureError, MzprobeError)
from .harness import EXPERIMENT_IDS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_LOCK = 4

_HTTP_EXIT = {400: EXIT_CONFIG, 422: EXIT_INFEASIBLE, 409: EXIT_LOCK}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzprobe",
        description="Design and simulate a shot-noise-limited two-color "
                    "interferometric probe of a cold-atom cloud.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None, metavar="PATH",
                       help="JSON config file, or a shipped name: "
                            + ", ".join(shipped_config_names()))
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="override the root seed")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="directory for result files")
        p.add_argument("--threads", type=int, default=None, metavar="N",
                       help="worker threads for sweep points")
        p.add_argument("--server", default=None, metavar="URL",
                       help="run on a remote service instead of in process")

    add_common(sub.add_parser("design", help="solve and report the operating point"))
    add_common(sub.add_parser("simulate", help="run the designed measurement once"))
    p_exp = sub.add_parser("experiment", help="run a scripted experiment")
    p_exp.add_argument("name", help="one of: " + ", ".join(sorted(EXPERIMENT_IDS)))
    add_common(p_exp)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def _run_remote(args, config) -> dict:
    import httpx

    body = {"config": config.resolved()}
    endpoint = args.command
    if args.command == "experiment":
        body["name"] = args.name
    url = args.server.rstrip("/") + "/" + endpoint
    response = httpx.post(url, json=body, timeout=600.0)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(_HTTP_EXIT.get(response.status_code, EXIT_CONFIG))
    return response.json()


def _print_summary(payload: dict) -> None:
    command = payload["command"]
    if command == "design":
        print(payload["table"])
    elif command == "simulate":
        s = payload["summary"]
        print(f"measured demod mean   {s['measured_mean_a']:+.6e} A")
        print(f"noiseless chain mean  {s['noiseless_mean_a']:+.6e} A")
        print(f"predicted signal      {s['predicted_mean_a']:+.6e} A")
        print(f"demodulated noise     {s['demodulated_noise_a']:.6e} A rms")
        print(f"z-score vs prediction {s['z_score']:+.2f}")
    else:
        result = payload["result"]
        fit = result["fit"]
        print(f"experiment {payload['name']}: {len(result['sweep_values'])} points, "
              f"fit model {fit['model']}")
        for key in sorted(fit["parameters"]):
            value, err = fit["parameters"][key], fit["uncertainties"][key]
            print(f"  {key} = {value:.6g} +- {err:.2g}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK
    try:
        config = ops.resolve_config(args.config, seed=args.seed,
                                    out_dir=args.out, threads=args.threads)
        if args.server:
            payload = _run_remote(args, config)
        elif args.command == "design":
            payload = ops.cmd_design(config)
        elif args.command == "simulate":
            payload = ops.cmd_simulate(config)
        else:
            payload = ops.cmd_experiment(args.name, config)
        if config.out_dir:
            for path in ops.write_outputs(payload, config.out_dir):
                print(f"wrote {path}")
        _print_summary(payload)
        return EXIT_OK
    except (ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleDesignError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except LockFailureError as exc:
        print(f"lock failure: {exc}", file=sys.stderr)
        return EXIT_LOCK
    except MzprobeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
