"""Run configuration: a strict JSON schema with defaults for every field.

Precedence, lowest first: built-in defaults, the JSON config file,
``RINGDAT_*`` environment variables, command-line flags.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .ensemble import EnsembleConfig
from .integrate import IntegratorConfig
from .lattice import RingTopology

ENV_PREFIX = "RINGDAT_"


class ConfigError(ValueError):
    pass


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _unit_grid(n: int = 11) -> list[float]:
    return [i / (n - 1) for i in range(n)]


class TopologyBlock(_Block):
    kind: Literal["isotropic", "dimerized", "both"] = "both"
    n_sites: int = Field(32, ge=3)
    J: Optional[float] = Field(None, gt=0, description="isotropic coupling, cm^-1; defaults to (J1 + J2) / 2")
    J1: float = Field(600.0, gt=0, description="intra-dimer coupling, cm^-1")
    J2: float = Field(377.0, gt=0, description="inter-dimer coupling, cm^-1")

    @model_validator(mode="after")
    def _even_for_dimers(self):
        if self.kind != "isotropic" and self.n_sites % 2:
            raise ValueError("dimerized rings need an even n_sites")
        return self

    def topologies(self) -> dict[str, RingTopology]:
        out = {}
        if self.kind in ("isotropic", "both"):
            J = self.J if self.J is not None else 0.5 * (self.J1 + self.J2)
            out["isotropic"] = RingTopology.isotropic(self.n_sites, J)
        if self.kind in ("dimerized", "both"):
            out["dimerized"] = RingTopology.dimerized(self.n_sites, self.J1, self.J2)
        return out


class NoiseBlock(_Block):
    gamma_over_J: float = Field(0.0, ge=0)
    Gamma_over_J: float = Field(2.0, gt=0)
    sink_source: Optional[int] = Field(None, ge=1, description="1-based source site; defaults to N/2 + 1")


class DisorderBlock(_Block):
    sigma_over_J: float = Field(0.0, ge=0)
    M: int = Field(50, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)


class TimeBlock(_Block):
    t_max: Optional[float] = Field(None, gt=0, description="end of sampled curves in Jt; per-command default when unset")
    n_samples: int = Field(501, ge=2)


class IntegratorBlock(_Block):
    method: Literal["dopri5", "rk4"] = "dopri5"
    rtol: float = Field(1e-8, gt=0)
    atol: float = Field(1e-11, gt=0)
    dt: float = Field(0.01, gt=0)
    max_step: Optional[float] = Field(None, gt=0)

    def build(self) -> IntegratorConfig:
        return IntegratorConfig(
            method=self.method,
            rtol=self.rtol,
            atol=self.atol,
            dt=self.dt,
            max_step=float("inf") if self.max_step is None else self.max_step,
        )


class SweepBlock(_Block):
    t_eval: float = Field(100.0, gt=0)
    n_samples: int = Field(11, ge=2, description="time samples of each ensemble run over [0, t_eval]")
    sigma_grid: list[float] = Field(default_factory=_unit_grid, min_length=1)
    gamma_grid: list[float] = Field(default_factory=_unit_grid, min_length=1)
    Gamma_grid: list[float] = Field(default_factory=lambda: [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0], min_length=1)
    Gamma_t_eval: float = Field(50.0, gt=0)
    comparison_sigma_over_J: float = Field(0.5, ge=0)
    comparison_gamma_over_J: float = Field(0.1, ge=0)
    comparison_t_max: float = Field(300.0, gt=0)

    @model_validator(mode="after")
    def _grids(self):
        if any(x < 0 for x in self.sigma_grid + self.gamma_grid):
            raise ValueError("sigma_grid and gamma_grid must be >= 0")
        if any(x <= 0 for x in self.Gamma_grid):
            raise ValueError("Gamma_grid must be > 0")
        return self


class OutputBlock(_Block):
    directory: str = "out"
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv"], min_length=1)


class RunConfig(_Block):
    topology: TopologyBlock = Field(default_factory=TopologyBlock)
    noise: NoiseBlock = Field(default_factory=NoiseBlock)
    disorder: DisorderBlock = Field(default_factory=DisorderBlock)
    time: TimeBlock = Field(default_factory=TimeBlock)
    integrator: IntegratorBlock = Field(default_factory=IntegratorBlock)
    sweep: SweepBlock = Field(default_factory=SweepBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @model_validator(mode="after")
    def _sink_on_ring(self):
        s = self.noise.sink_source
        if s is not None and s > self.topology.n_sites:
            raise ValueError(f"sink_source {s} is not a site of a {self.topology.n_sites}-site ring")
        return self

    def ensemble_template(self, topology: RingTopology) -> EnsembleConfig:
        return EnsembleConfig(
            topology=topology,
            M=self.disorder.M,
            sigma_over_J=self.disorder.sigma_over_J,
            gamma_over_J=self.noise.gamma_over_J,
            Gamma_over_J=self.noise.Gamma_over_J,
            t_eval=self.sweep.t_eval,
            n_samples=self.sweep.n_samples,
            seed=self.disorder.seed,
            sink_source=self.noise.sink_source,
            integrator=self.integrator.build(),
        )

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def validate(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out: dict = {}
    if f"{ENV_PREFIX}OUT" in environ:
        out.setdefault("output", {})["directory"] = environ[f"{ENV_PREFIX}OUT"]
    if f"{ENV_PREFIX}SEED" in environ:
        out.setdefault("disorder", {})["seed"] = int(environ[f"{ENV_PREFIX}SEED"])
    if f"{ENV_PREFIX}TOPOLOGY" in environ:
        out.setdefault("topology", {})["kind"] = environ[f"{ENV_PREFIX}TOPOLOGY"]
    return out


def load(path=None, overrides: Optional[dict] = None, environ=None) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must contain a JSON object")
    data = _merge(data, env_overrides(environ))
    data = _merge(data, overrides or {})
    return validate(data)
