"""Experiment configuration: a closed JSON schema.

Unknown keys anywhere are rejected. All physical quantities are in recoil
units (omega_R for energies and rates, 1/omega_R for times).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "ring-trajectory",
    "ring-ensemble",
    "linearized-ensemble",
    "linearized-steady",
    "gaussian-evolve",
    "gaussian-steady",
    "gaussian-sweep",
    "toy-trajectory",
    "herald",
)
STOCHASTIC = {"ring-trajectory", "ring-ensemble", "linearized-ensemble", "toy-trajectory"}
RING_EXPERIMENTS = {"ring-trajectory", "ring-ensemble"}

Experiment = Literal[
    "ring-trajectory", "ring-ensemble", "linearized-ensemble", "linearized-steady", "gaussian-evolve",
    "gaussian-steady", "gaussian-sweep", "toy-trajectory", "herald",
]


class _Closed(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, strict=True)


class RingModel(_Closed):
    kind: Literal["ring"]
    alpha_c: float
    U0: float
    delta_c: float
    kappa: float
    allow_unstable: bool = False


class OscillatorModel(_Closed):
    kind: Literal["oscillator"]
    omega: float
    g: float
    delta_c: float
    kappa: float
    k_xi0: Optional[float] = None


class Sweep(_Closed):
    parameter: Literal["delta_c", "omega", "kappa", "g"]
    values: List[float] = Field(min_length=1)


class Numerics(_Closed):
    momentum_cutoff: int = Field(12, ge=1)
    fock_cutoff: int = Field(6, ge=2)
    particle_cutoff: int = Field(4, ge=2)
    field_cutoff: int = Field(4, ge=2)
    toy_cutoff: int = Field(4, ge=2)
    well_offset: int = 1
    t_start: float = 0.0
    t_end: float = 1.0
    n_steps: int = Field(100, ge=1)
    method: Literal["rk", "spectral", "exact", "implicit"] = "rk"
    rtol: float = Field(1e-8, gt=0)
    atol: float = Field(1e-10, gt=0)
    n_traj: int = Field(1, ge=1)
    base_seed: Optional[int] = Field(None, ge=0, lt=2**63)
    workers: int = Field(1, ge=1)
    leakage_threshold: float = Field(1e-3, gt=0)
    compare_master_equation: bool = False
    sweep: Optional[Sweep] = None

    @model_validator(mode="after")
    def _grid(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        return self


class Outputs(_Closed):
    directory: str = "out"
    observables: List[str] = Field(default_factory=list)
    snapshot_times: List[float] = Field(default_factory=list)


class ExperimentConfig(_Closed):
    schema_version: Literal[1] = SCHEMA_VERSION
    experiment: Experiment
    model: Union[RingModel, OscillatorModel] = Field(discriminator="kind")
    numerics: Numerics = Numerics()
    outputs: Outputs = Outputs()

    @model_validator(mode="after")
    def _consistency(self):
        ring = self.experiment in RING_EXPERIMENTS
        if ring != (self.model.kind == "ring"):
            want = "ring" if ring else "oscillator"
            raise ValueError(f"experiment {self.experiment!r} needs a model of kind {want!r}")
        if self.experiment in STOCHASTIC and self.numerics.base_seed is None:
            raise ValueError(f"experiment {self.experiment!r} is stochastic and needs numerics.base_seed")
        if self.experiment == "gaussian-sweep" and self.numerics.sweep is None:
            raise ValueError("gaussian-sweep needs numerics.sweep")
        return self

    def to_dict(self) -> dict:
        """Fully resolved configuration, defaults included."""
        return self.model_dump(mode="json")

    def with_overrides(self, seed: Optional[int] = None, out: Optional[str] = None,
                       n_traj: Optional[int] = None) -> "ExperimentConfig":
        d = self.to_dict()
        if seed is not None:
            d["numerics"]["base_seed"] = seed
        if n_traj is not None:
            d["numerics"]["n_traj"] = n_traj
        if out is not None:
            d["outputs"]["directory"] = out
        return parse_config(d)


def _format_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        # JSON-mode strict validation: no silent string-to-number coercion
        return ExperimentConfig.model_validate_json(json.dumps(data))
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {_format_error(exc)}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    return parse_config(data)
