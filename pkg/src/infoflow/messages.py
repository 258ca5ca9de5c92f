"""Message injection protocols and the one-run-per-grid-point dataset schedule.

Randomness: every run draws from its own PCG64 stream seeded by
``numpy.random.SeedSequence(seed, spawn_key=(run_index,))``. Within a step
the background noise (all points) is drawn before the message forcing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import Dataset
from .grid import GridSpec
from .simulate import SimParams, Stencil, _advance, equilibrium
from .velocity import VelocityField


class MessageKind(str, enum.Enum):
    IC_PEAK = "ic_peak"
    SINGLE_POINT_NOISE = "single_point_noise"
    ALL_POINT_NOISE = "all_point_noise"


@dataclass(frozen=True)
class MessageScript:
    kind: MessageKind = MessageKind.IC_PEAK
    peak_amplitude: float = 500.0
    forcing_sigma: float = 1.0
    background_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", MessageKind(self.kind))
        if min(self.peak_amplitude, self.forcing_sigma, self.background_sigma) < 0:
            raise ValueError("amplitudes and noise levels must be non-negative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "peak_amplitude": self.peak_amplitude,
            "forcing_sigma": self.forcing_sigma,
            "background_sigma": self.background_sigma,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class RunSchedule:
    grid: GridSpec
    samples_per_run: int
    tiers: int = 20
    subsample: int = 1

    def __post_init__(self) -> None:
        if self.samples_per_run < 1 or self.tiers < 1 or self.subsample < 1:
            raise ValueError("samples_per_run, tiers and subsample must be at least 1")

    @classmethod
    def default(cls, grid: GridSpec, tiers: int = 20, subsample: int = 1, min_total: int = 5000):
        """Size runs so that ``samples_per_run * n_points >= min_total``."""
        return cls(grid, math.ceil(min_total / grid.n_points), tiers, subsample)

    @property
    def recorded_per_run(self) -> int:
        return self.samples_per_run + self.tiers - 1

    @property
    def steps_per_run(self) -> int:
        return self.subsample * self.recorded_per_run


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run_index,))))


def simulate_run(
    stencil: Stencil,
    script: MessageScript,
    sched: RunSchedule,
    point: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One run injecting the message at flat ``point``; returns recorded rows.

    The message enters as forcing on the first simulator step; the state after
    every ``subsample``-th step is recorded.
    """
    grid = sched.grid
    shape = (grid.ny, grid.nx)
    k, j = divmod(point, grid.nx)
    state = equilibrium(grid)
    out = np.empty((sched.recorded_per_run, grid.n_points))
    row = 0
    for i in range(sched.steps_per_run):
        forcing = np.zeros(shape)
        if script.background_sigma > 0:
            forcing += rng.normal(0.0, script.background_sigma, size=shape)
        if script.kind is MessageKind.IC_PEAK:
            if i == 0:
                forcing[k, j] += script.peak_amplitude
        elif script.kind is MessageKind.SINGLE_POINT_NOISE:
            forcing[k, j] += rng.normal(0.0, script.forcing_sigma)
        else:
            forcing += rng.normal(0.0, script.forcing_sigma, size=shape)
        state = _advance(stencil, state, forcing)
        if (i + 1) % sched.subsample == 0:
            out[row] = state.f.ravel()
            row += 1
    return out


def _has_signal(script: MessageScript) -> bool:
    if script.background_sigma > 0:
        return True
    if script.kind is MessageKind.IC_PEAK:
        return script.peak_amplitude > 0
    return script.forcing_sigma > 0


def generate_dataset(
    field: Optional[VelocityField],
    params: SimParams,
    script: MessageScript,
    sched: RunSchedule,
    metadata: Optional[dict] = None,
) -> Dataset:
    """Run one simulation per grid point (row-major order) and concatenate them."""
    if not _has_signal(script):
        raise ValueError("message script injects no signal (all amplitudes are zero)")
    grid = sched.grid
    stencil = Stencil(grid, field, params)
    runs = [
        simulate_run(stencil, script, sched, g, run_rng(script.seed, g))
        for g in range(grid.n_points)
    ]
    meta = {
        "scenario": field.scenario if field is not None else "none",
        "message": script.to_dict(),
        "sim": params.to_dict(),
        "M": sched.subsample,
        "S": sched.tiers,
        "samples_per_run": sched.samples_per_run,
        "injection": "forcing on first simulator step; states recorded after every M-th step",
        "rng": "PCG64, SeedSequence(seed, spawn_key=(run_index,))",
    }
    if metadata:
        meta.update(metadata)
    return Dataset(
        grid,
        np.concatenate(runs, axis=0),
        run_len=sched.recorded_per_run,
        n_runs=grid.n_points,
        dt_data=sched.subsample * params.dt,
        metadata=meta,
    )


def add_posterior_noise(ds: Dataset, sigma: float, seed: int) -> Dataset:
    """Copy of ``ds`` with i.i.d. N(0, sigma^2) added after the fact (does not propagate)."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    values = ds.values.copy()
    if sigma > 0:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        values += rng.normal(0.0, sigma, size=values.shape)
    meta = dict(ds.metadata)
    meta["posterior_noise"] = {"sigma": sigma, "seed": seed}
    return Dataset(ds.grid, values, ds.run_len, ds.n_runs, ds.dt_data, meta)
