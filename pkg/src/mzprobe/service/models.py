"""Request and response schemas for the JSON API.

A request carries either a shipped config name or a (partial) config
object, plus optional seed/threads overrides; file output never happens
server side, clients write their own files from the returned payload.
"""

from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel, ConfigDict


class CommandRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: Union[str, dict, None] = None
    seed: Optional[int] = None
    threads: Optional[int] = None


class ExperimentRequest(CommandRequest):
    name: str


class CommandResponse(BaseModel):
    model_config = ConfigDict(extra="allow")

    command: str
    config: dict


class DesignResponse(CommandResponse):
    design_point: dict
    report: dict
    loss_scaled_report: dict
    table: str


class SimulateResponse(CommandResponse):
    summary: dict
    trace: dict


class ExperimentResponse(CommandResponse):
    name: str
    result: dict


class HealthResponse(BaseModel):
    status: str
    version: str
