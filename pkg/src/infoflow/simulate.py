"""Explicit first-order upwind advection-diffusion on a periodic grid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import GridSpec
from .velocity import VelocityField


class StabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimParams:
    kappa_x: float
    kappa_y: float
    courant: float
    advection_enabled: bool
    dt: float

    def __post_init__(self) -> None:
        if self.kappa_x < 0 or self.kappa_y < 0:
            raise ValueError("diffusion coefficients must be non-negative")
        if not 0 < self.courant <= 1:
            raise ValueError(f"Courant number must lie in (0, 1], got {self.courant}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")

    def to_dict(self) -> dict:
        return {
            "kappa_x": self.kappa_x,
            "kappa_y": self.kappa_y,
            "courant": self.courant,
            "advection_enabled": self.advection_enabled,
            "dt": self.dt,
        }


@dataclass(frozen=True)
class FieldState:
    grid: GridSpec
    f: np.ndarray
    t: float = 0.0
    step_index: int = 0


def stable_dt(
    grid: GridSpec,
    field: Optional[VelocityField],
    kappa_x: float,
    kappa_y: float,
    courant: float,
    advection_enabled: bool = True,
) -> float:
    """Largest stable time step scaled by the Courant number.

    Advection uses the per-axis bound ``C * min(dx/max|vx|, dy/max|vy|)``;
    diffusion uses ``C / (2 (kx/dx^2 + ky/dy^2))``. The smaller one wins.

    With diagonal flow, or flow plus diffusion, the two separate bounds can
    still leave a negative self-weight in the stencil, which breaks the
    maximum principle and lets the update grow without bound. In that case
    the step is capped at ``1 / max(|vx|/dx + |vy|/dy + 2 kx/dx^2 + 2 ky/dy^2)``,
    the largest step keeping every weight non-negative. The cap never
    engages for axis-aligned pure advection or pure diffusion.
    """
    if not 0 < courant <= 1:
        raise ValueError(f"Courant number must lie in (0, 1], got {courant}")
    dt_adv = math.inf
    if advection_enabled and field is not None and field.vmax > 0:
        bounds = []
        mvx = float(np.max(np.abs(field.vx)))
        mvy = float(np.max(np.abs(field.vy)))
        if mvx > 0:
            bounds.append(grid.dx / mvx)
        if mvy > 0:
            bounds.append(grid.dy / mvy)
        dt_adv = courant * min(bounds)
    rate = kappa_x / grid.dx**2 + kappa_y / grid.dy**2
    dt_diff = courant / (2 * rate) if rate > 0 else math.inf
    dt = min(dt_adv, dt_diff)
    if math.isinf(dt):
        raise ValueError("no dynamics: advection inactive and both diffusion coefficients zero")
    pos_rate = 2 * rate
    if advection_enabled and field is not None:
        pos_rate += float(np.max(np.abs(field.vx) / grid.dx + np.abs(field.vy) / grid.dy))
    dt_pos = 1.0 / pos_rate
    if dt_pos < dt * (1 - 1e-9):
        dt = dt_pos
    return dt


def make_params(
    grid: GridSpec,
    field: Optional[VelocityField],
    kappa_x: float,
    kappa_y: float,
    courant: float,
    advection_enabled: bool = True,
) -> SimParams:
    dt = stable_dt(grid, field, kappa_x, kappa_y, courant, advection_enabled)
    return SimParams(kappa_x, kappa_y, courant, advection_enabled, dt)


class Stencil:
    """Per-point weights of the five-point update, precomputed once per run.

    The upwind update is rearranged as a weighted sum of the point and its
    four periodic neighbors, so a Courant number of exactly one moves values
    without rounding.
    """

    def __init__(self, grid: GridSpec, field: Optional[VelocityField], params: SimParams) -> None:
        if field is not None and field.grid != grid:
            raise ValueError("velocity field and state are on different grids")
        shape = (grid.ny, grid.nx)
        ax = params.kappa_x * params.dt / grid.dx**2
        ay = params.kappa_y * params.dt / grid.dy**2
        west = np.full(shape, ax)
        east = np.full(shape, ax)
        south = np.full(shape, ay)
        north = np.full(shape, ay)
        center = np.full(shape, 1.0 - 2 * ax - 2 * ay)
        if params.advection_enabled:
            if field is None:
                raise ValueError("advection enabled but no velocity field given")
            cx = field.vx * params.dt / grid.dx
            cy = field.vy * params.dt / grid.dy
            pos_x = field.vx >= 0
            pos_y = field.vy >= 0
            # vx >= 0 pulls from j-1 (west), otherwise from j+1 (east)
            west = west + np.where(pos_x, cx, 0.0)
            east = east + np.where(pos_x, 0.0, -cx)
            south = south + np.where(pos_y, cy, 0.0)
            north = north + np.where(pos_y, 0.0, -cy)
            center = center - np.abs(cx) - np.abs(cy)
        self.grid = grid
        self.dt = params.dt
        self.center, self.west, self.east, self.south, self.north = center, west, east, south, north

    def apply(self, f: np.ndarray) -> np.ndarray:
        out = self.center * f
        out += self.west * np.roll(f, 1, axis=1)
        out += self.east * np.roll(f, -1, axis=1)
        out += self.south * np.roll(f, 1, axis=0)
        out += self.north * np.roll(f, -1, axis=0)
        return out


def _advance(stencil: Stencil, state: FieldState, forcing: Optional[np.ndarray]) -> FieldState:
    # overflow is reported below as a StabilityError, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        f = stencil.apply(state.f)
        if forcing is not None:
            f += forcing
    if not np.all(np.isfinite(f)):
        bad = np.argwhere(~np.isfinite(f))[0]
        raise StabilityError(
            f"non-finite value at point (j={bad[1]}, k={bad[0]}) on step {state.step_index + 1}"
        )
    return FieldState(state.grid, f, state.t + stencil.dt, state.step_index + 1)


def step(
    state: FieldState,
    field: Optional[VelocityField],
    params: SimParams,
    forcing: Optional[np.ndarray] = None,
) -> FieldState:
    """One transport update followed by the additive forcing."""
    if forcing is not None and np.shape(forcing) != state.f.shape:
        raise ValueError("forcing shape does not match the grid")
    return _advance(Stencil(state.grid, field, params), state, forcing)


ForcingScript = Callable[[int], Optional[np.ndarray]]


def run(
    initial: FieldState,
    field: Optional[VelocityField],
    params: SimParams,
    n_steps: int,
    forcing_script: Optional[ForcingScript] = None,
) -> list[FieldState]:
    """Apply ``n_steps`` updates and return every state, ``initial`` included.

    ``forcing_script(i)`` is called for step ``i`` (0-based) and may return
    ``None`` for no forcing.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    stencil = Stencil(initial.grid, field, params)
    states = [initial]
    state = initial
    for i in range(n_steps):
        forcing = forcing_script(i) if forcing_script is not None else None
        state = _advance(stencil, state, forcing)
        states.append(state)
    return states


def equilibrium(grid: GridSpec) -> FieldState:
    return FieldState(grid, np.zeros((grid.ny, grid.nx)))
