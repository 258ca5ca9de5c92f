"""Scenario configurations and the builtin catalog."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .grid import GridSpec
from .messages import MessageKind, MessageScript, RunSchedule
from .simulate import SimParams, make_params
from .velocity import (
    VelocityField, cross_currents, ring_flow, scale_to_vmax, solid_rotation, uniform_right,
)

FIELDS = ("none", "uniform_right", "ring", "rotation", "cross")

# Pure diffusion runs below C=1: at C=1 the explicit update gives every point
# zero self-weight and leaves the grid-scale checkerboard mode undamped.
DIFFUSION_COURANT = 0.8


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one experiment.

    ``samples_per_run=None`` sizes runs so that at least 5000 samples are
    recorded in total. ``out`` is where the CLI writes the bundle; it is not
    part of the serialized config, so bundles do not depend on their location.
    """

    name: str
    nx: int = 10
    ny: int = 10
    extent: float = 100.0
    field: str = "none"
    field_params: dict = dataclasses.field(default_factory=dict)
    vmax: float = 1.0
    kappa_x: float = 1.0
    kappa_y: float = 1.0
    courant: float = 1.0
    advection: bool = True
    M: int = 1
    message: str = MessageKind.IC_PEAK.value
    peak_amplitude: float = 500.0
    forcing_sigma: float = 1.0
    background_sigma: float = 0.0
    seed: int = 0
    S: int = 20
    D: int = 1
    alpha: float = 0.05
    allow_concurrent: bool = True
    samples_per_run: Optional[int] = None
    max_order: int = 25
    singular_separates: bool = True
    discard_earliest: int = 2
    weak_quantile: float = 0.25
    max_lag_for_velocity: Optional[int] = None
    display_dt: float = 5.0
    out: Optional[str] = dataclasses.field(default=None, compare=False)

    def __post_init__(self) -> None:
        self.validate()

    # -- validation -----------------------------------------------------
    def validate(self) -> None:
        def need(cond: bool, msg: str) -> None:
            if not cond:
                raise ConfigError(f"{self.name}: {msg}")

        need(bool(self.name), "name must be non-empty")
        need(self.nx >= 2 and self.ny >= 2, f"grid must be at least 2x2, got {self.nx}x{self.ny}")
        need(self.extent > 0, "extent must be positive")
        need(self.field in FIELDS, f"unknown field {self.field!r}; expected one of {FIELDS}")
        need(self.vmax > 0, "vmax must be positive")
        need(self.kappa_x >= 0 and self.kappa_y >= 0, "diffusion coefficients must be non-negative")
        need(0 < self.courant <= 1, f"Courant number must lie in (0, 1], got {self.courant}")
        need(self.M >= 1, "M must be at least 1")
        need(self.message in {k.value for k in MessageKind}, f"unknown message kind {self.message!r}")
        need(min(self.peak_amplitude, self.forcing_sigma, self.background_sigma) >= 0,
             "message amplitudes must be non-negative")
        need(self.S >= 2 and self.D >= 1, "need S >= 2 tiers and D >= 1")
        need(0 < self.alpha < 1, f"alpha must lie in (0, 1), got {self.alpha}")
        need(self.samples_per_run is None or self.samples_per_run >= 1, "samples_per_run must be positive")
        need(self.max_order >= 0, "max_order must be non-negative")
        need(0 <= self.discard_earliest < self.S, "discard_earliest must lie in [0, S)")
        need(0 <= self.weak_quantile <= 1, "weak_quantile must lie in [0, 1]")
        need(self.max_lag_for_velocity is None or self.max_lag_for_velocity >= 1,
             "max_lag_for_velocity must be at least 1")
        need(self.display_dt > 0, "display_dt must be positive")
        moving = self.advection and self.field != "none"
        need(moving or self.kappa_x > 0 or self.kappa_y > 0,
             "no dynamics: advection is off and both diffusion coefficients are zero")
        has_signal = self.background_sigma > 0 or (
            self.peak_amplitude > 0 if self.message == MessageKind.IC_PEAK.value else self.forcing_sigma > 0
        )
        need(has_signal, "message script injects no signal")
        try:
            self.build_field()
        except ValueError as exc:
            raise ConfigError(f"{self.name}: velocity field: {exc}") from exc

    # -- builders ---------------------------------------------------------
    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.nx, self.ny, self.extent / self.nx, self.extent / self.ny)

    def build_field(self) -> Optional[VelocityField]:
        g = self.grid
        p = dict(self.field_params)
        if self.field == "none":
            return None
        if self.field == "uniform_right":
            return uniform_right(g, self.vmax)
        if self.field == "ring":
            fld = ring_flow(g, **p)
        elif self.field == "rotation":
            fld = solid_rotation(g, **p)
        else:
            fld = cross_currents(g, **p)
        return scale_to_vmax(fld, self.vmax)

    def sim_params(self, fld: Optional[VelocityField]) -> SimParams:
        return make_params(
            self.grid, fld, self.kappa_x, self.kappa_y, self.courant,
            advection_enabled=self.advection and fld is not None,
        )

    def message_script(self) -> MessageScript:
        return MessageScript(
            MessageKind(self.message), self.peak_amplitude, self.forcing_sigma,
            self.background_sigma, self.seed,
        )

    def schedule(self) -> RunSchedule:
        g = self.grid
        if self.samples_per_run is None:
            return RunSchedule.default(g, tiers=self.S, subsample=self.M)
        return RunSchedule(g, self.samples_per_run, self.S, self.M)

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d.pop("out")
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScenarioConfig":
        # a provenance record nests the config under "config"
        if "config" in d and isinstance(d["config"], dict):
            d = d["config"]
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _diffusion(name: str, n: int, ky: float, M: int) -> ScenarioConfig:
    return ScenarioConfig(
        name, nx=n, ny=n, field="none", kappa_x=1.0, kappa_y=ky,
        courant=DIFFUSION_COURANT, advection=False, M=M,
    )


def _advection(M: int) -> ScenarioConfig:
    return ScenarioConfig(
        f"pure-advection-M{M}", field="uniform_right", kappa_x=0.0, kappa_y=0.0,
        courant=1.0, M=M, background_sigma=0.1,
    )


def _complex(name: str, fld: str, n: int = 20, **kw) -> ScenarioConfig:
    return ScenarioConfig(name, nx=n, ny=n, field=fld, kappa_x=1.0, kappa_y=1.0, courant=0.5, **kw)


def builtin_scenarios() -> dict[str, ScenarioConfig]:
    cfgs = [
        *(_diffusion(f"pure-diffusion-M{M}", 10, 1.0, M) for M in (1, 2, 4)),
        _diffusion("pure-diffusion-ky0-M1", 10, 0.0, 1),
        _diffusion("pure-diffusion-20x20-M1", 20, 1.0, 1),
        _diffusion("pure-diffusion-20x20-ky0-M1", 20, 0.0, 1),
        *(_advection(M) for M in (1, 2, 4)),
        ScenarioConfig("mixed", field="uniform_right", kappa_x=1.0, kappa_y=1.0, courant=0.7),
        _complex("complex-1-ring", "ring"),
        _complex("complex-2-rotation", "rotation"),
        _complex("complex-3-cross", "cross"),
        _complex("complex-1-ring-noconc", "ring", allow_concurrent=False),
        _complex("complex-2-rotation-noconc", "rotation", allow_concurrent=False),
        _complex("complex-3-cross-noconc", "cross", allow_concurrent=False),
        _complex("complex-1-ring-M4", "ring", M=4),
        _complex("complex-1-ring-M10", "ring", M=10),
        _complex("complex-1-ring-12x12", "ring", n=12),
        _complex("complex-1-ring-12x12-M10", "ring", n=12, M=10),
    ]
    return {c.name: c for c in cfgs}


def get_scenario(name: str) -> ScenarioConfig:
    cat = builtin_scenarios()
    if name not in cat:
        raise ConfigError(f"unknown scenario {name!r}; available: {', '.join(sorted(cat))}")
    return cat[name]
