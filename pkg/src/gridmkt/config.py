"""System configuration schema and loading.

The config document is JSON with top-level keys ``time``, ``batteries``,
``renewables``, ``controllables``, ``market``. Units at the file boundary:
energies in Wh, powers in W, prices in currency/MWh. Internally everything
runs on W / Wh / hours / currency-per-Wh; the MWh-to-Wh price conversion
(factor 1e-6) happens once, in :func:`gridmkt.system.validate`, so that
``load_config`` / ``serialize_config`` round-trip the document exactly.

Any bound marked "per step" accepts either a scalar (broadcast over the
horizon) or a length-T list.
"""

from __future__ import annotations

import json

import pydantic
from pydantic import BaseModel, ConfigDict, Field


class ConfigError(Exception):
    """Base class for config loading failures."""


class ParseError(ConfigError):
    """The document is not well-formed JSON."""


class SchemaError(ConfigError):
    """The document does not match the config schema."""

    def __init__(self, message: str, errors: list[dict] | None = None):
        super().__init__(message)
        self.errors = errors or []


class TimeGrid(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    horizon_steps: int = Field(ge=1)
    step_duration: float = Field(gt=0, description="hours per step")


class BatterySpec(BaseModel):
    """Storage device. SOC bounds in Wh, rate bounds in W.

    ``cost_per_throughput`` is a degradation proxy in currency/MWh (file
    boundary), charged per Wh of charge-plus-discharge throughput internally.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    soc_min: float | list[float] = 0.0
    soc_max: float | list[float]
    charge_min: float | list[float] = 0.0
    charge_max: float | list[float]
    discharge_min: float | list[float] = 0.0
    discharge_max: float | list[float]
    eta_charge: float = Field(default=1.0, gt=0, le=1)
    eta_discharge: float = Field(default=1.0, gt=0, le=1)
    initial_soc: float
    terminal_soc: float | None = None
    cost_per_throughput: float = Field(default=0.0, ge=0, description="currency/MWh")


class RenewableSpec(BaseModel):
    """Non-dispatchable generator; setpoint bounded by available power.

    ``curtail_penalty_a`` is the quadratic penalty coefficient in
    currency/(W^2 h); zero disables the penalty. Non-curtailable units are
    pinned to their available power every step.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    nameplate: float = Field(gt=0)
    curtailable: bool = True
    curtail_penalty_a: float = Field(default=0.0, ge=0)


class ControllableSpec(BaseModel):
    """Dispatchable load or generator: signed injection, W (positive = generation)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    inject_min: float | list[float]
    inject_max: float | list[float]


class MarketSpec(BaseModel):
    """Long-term and real-time market terms.

    ``lt_price`` is the forward price (currency/MWh at the file boundary) and
    ``lt_cap`` the committed quantity ceiling per step (Wh). Under-delivery is
    settled by ``lt_shortfall_mode``:

    * ``none`` — plain ``price * delivered``.
    * ``linear_penalty`` — ``price * delivered - lt_penalty_rate * shortfall``.
    * ``stepwise`` — delivery paid in quarter-cap tranches.

    ``allow_rt_purchase`` decides whether the real-time residual may go
    negative (buy from the grid) or is constrained to be a sale.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    lt_price: float | list[float] = 0.0
    lt_cap: float | list[float] = 0.0
    lt_shortfall_mode: str = Field(default="none", pattern="^(linear_penalty|stepwise|none)$")
    lt_penalty_rate: float = Field(default=0.0, ge=0, description="currency/MWh")
    allow_rt_purchase: bool = False


class SystemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    time: TimeGrid
    batteries: list[BatterySpec] = Field(default_factory=list)
    renewables: list[RenewableSpec] = Field(default_factory=list)
    controllables: list[ControllableSpec] = Field(default_factory=list)
    market: MarketSpec = Field(default_factory=MarketSpec)


def load_config(document: str | dict) -> SystemConfig:
    """Parse a JSON config document into a SystemConfig.

    Unknown keys, missing required keys and out-of-range scalar fields are
    rejected with a SchemaError listing every offending location.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed config document: {exc}") from exc
    else:
        data = document
    try:
        return SystemConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        details = [
            {"path": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        lines = "; ".join(f"{d['path']}: {d['message']}" for d in details)
        raise SchemaError(f"config schema violation: {lines}", details) from exc


def serialize_config(config: SystemConfig) -> str:
    """Emit the JSON document form of a config; inverse of load_config."""
    return json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True)
