"""FastAPI application exposing design, simulate and experiment runs."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, ops
from ..errors import (ConfigError, InfeasibleDesignError, InvalidInputError,
                      LockFailureError)
from ..io_utils import scrub
from .models import (CommandRequest, CommandResponse, DesignResponse,
                     ExperimentRequest, ExperimentResponse, HealthResponse,
                     SimulateResponse)

_STATUS = {
    ConfigError: 400,
    InvalidInputError: 400,
    InfeasibleDesignError: 422,
    LockFailureError: 409,
}


def _resolve(request: CommandRequest):
    return ops.resolve_config(request.config, seed=request.seed,
                              threads=request.threads)


def create_app() -> FastAPI:
    app = FastAPI(title="mzprobe", version=__version__,
                  description="Two-color interferometric probe: design, "
                              "simulation and scripted experiments.")

    for exc_type, status in _STATUS.items():
        def handler(request: Request, exc, status=status):
            return JSONResponse(status_code=status, content={"detail": str(exc)})
        app.add_exception_handler(exc_type, handler)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/design", response_model=DesignResponse)
    def design(request: CommandRequest):
        return scrub(ops.cmd_design(_resolve(request)))

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(request: CommandRequest):
        return scrub(ops.cmd_simulate(_resolve(request)))

    @app.post("/experiment", response_model=ExperimentResponse)
    def experiment(request: ExperimentRequest):
        return scrub(ops.cmd_experiment(request.name, _resolve(request)))

    return app


__all__ = ["create_app", "CommandRequest", "CommandResponse"]
