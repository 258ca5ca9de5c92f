"""Advection velocity fields for the simulation scenarios."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import GridSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VelocityField:
    """Per-point advection vectors on a grid.

    ``vx`` and ``vy`` have shape ``(ny, nx)`` and are indexed ``[k, j]``.
    ``vmax`` is derived from the components and never stored independently.
    """

    grid: GridSpec
    vx: np.ndarray
    vy: np.ndarray
    scenario: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        shape = (self.grid.ny, self.grid.nx)
        vx = np.array(self.vx, dtype=np.float64).reshape(shape)
        vy = np.array(self.vy, dtype=np.float64).reshape(shape)
        if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
            raise ValueError("velocity components must be finite")
        vx.setflags(write=False)
        vy.setflags(write=False)
        object.__setattr__(self, "vx", vx)
        object.__setattr__(self, "vy", vy)

    @property
    def vmax(self) -> float:
        return float(np.max(np.hypot(self.vx, self.vy)))

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)

    def with_components(self, vx: np.ndarray, vy: np.ndarray) -> "VelocityField":
        return VelocityField(self.grid, vx, vy, self.scenario, dict(self.params))


def _coords(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(grid.nx) * grid.dx
    y = np.arange(grid.ny) * grid.dy
    return np.meshgrid(x, y)  # each (ny, nx)


def _domain_center(grid: GridSpec) -> tuple[float, float]:
    return grid.lx / 2, grid.ly / 2


def uniform_right(grid: GridSpec, speed: float = 1.0) -> VelocityField:
    if speed < 0:
        raise ValueError("speed must be non-negative")
    shape = (grid.ny, grid.nx)
    return VelocityField(
        grid, np.full(shape, float(speed)), np.zeros(shape), "uniform_right", {"speed": speed}
    )


def ring_flow(
    grid: GridSpec,
    center: tuple[float, float] | None = None,
    r_inner: float | None = None,
    r_outer: float | None = None,
    ccw: bool = True,
) -> VelocityField:
    """Constant-speed tangential flow inside an annulus, exactly zero elsewhere.

    Defaults: centered on the domain, ``r_inner = 0.25*Lx``, ``r_outer = 0.45*Lx``.
    """
    cx, cy = center if center is not None else _domain_center(grid)
    r_inner = 0.25 * grid.lx if r_inner is None else r_inner
    r_outer = 0.45 * grid.lx if r_outer is None else r_outer
    if not 0 < r_inner < r_outer:
        raise ValueError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    x, y = _coords(grid)
    rx, ry = x - cx, y - cy
    r = np.hypot(rx, ry)
    inside = (r >= r_inner) & (r <= r_outer)
    sign = 1.0 if ccw else -1.0
    vx = np.zeros_like(r)
    vy = np.zeros_like(r)
    vx[inside] = -sign * ry[inside] / r[inside]
    vy[inside] = sign * rx[inside] / r[inside]
    if not inside.any():
        log.warning("ring annulus [%g, %g] contains no grid points; field is all zero", r_inner, r_outer)
    params = {"center": [cx, cy], "r_inner": r_inner, "r_outer": r_outer, "ccw": ccw}
    return VelocityField(grid, vx, vy, "ring", params)


def solid_rotation(
    grid: GridSpec, center: tuple[float, float] | None = None, ccw: bool = False
) -> VelocityField:
    """Rigid-body rotation with unit angular rate; speed grows linearly with radius.

    Clockwise by default, so the top boundary flows right and the bottom
    boundary flows left, producing counter-currents across the periodic seam.
    """
    cx, cy = center if center is not None else _domain_center(grid)
    x, y = _coords(grid)
    sign = 1.0 if ccw else -1.0
    vx = -sign * (y - cy)
    vy = sign * (x - cx)
    return VelocityField(grid, vx, vy, "rotation", {"center": [cx, cy], "ccw": ccw})


def cross_currents(grid: GridSpec, profile_width: float | None = None) -> VelocityField:
    """A rightward current along the horizontal midline plus an upward one along the vertical midline.

    Both profiles decay as ``exp(-distance / profile_width)`` away from their
    axis (default width ``0.15*Lx``), so every component is strictly positive.
    """
    profile_width = 0.15 * grid.lx if profile_width is None else profile_width
    if profile_width <= 0:
        raise ValueError("profile_width must be positive")
    cx, cy = _domain_center(grid)
    x, y = _coords(grid)
    vx = np.exp(-np.abs(y - cy) / profile_width)
    vy = np.exp(-np.abs(x - cx) / profile_width)
    return VelocityField(grid, vx, vy, "cross", {"profile_width": profile_width})


def scale_to_vmax(fld: VelocityField, vmax_target: float = 1.0) -> VelocityField:
    vmax = fld.vmax
    if vmax == 0:
        raise ValueError("cannot scale zero field")
    factor = vmax_target / vmax
    out = fld.with_components(fld.vx * factor, fld.vy * factor)
    out.params["vmax_target"] = vmax_target
    return out


def write_field(fld: VelocityField, path: str | Path) -> None:
    """Write ``<path>`` as ``j,k,vx,vy`` CSV and ``<path>.json`` sidecar (same stem)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "k", "vx", "vy"])
        for k in range(fld.grid.ny):
            for j in range(fld.grid.nx):
                w.writerow([j, k, repr(float(fld.vx[k, j])), repr(float(fld.vy[k, j]))])
    meta = {
        **fld.grid.to_dict(),
        "scenario": fld.scenario,
        "params": fld.params,
        "vmax": fld.vmax,
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_field(path: str | Path) -> VelocityField:
    path = Path(path)
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise FileNotFoundError(f"missing velocity sidecar {sidecar}")
    meta = json.loads(sidecar.read_text())
    grid = GridSpec(meta["nx"], meta["ny"], meta["dx"], meta["dy"])
    vx = np.zeros((grid.ny, grid.nx))
    vy = np.zeros((grid.ny, grid.nx))
    seen = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["j", "k", "vx", "vy"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            j, k = int(row[0]), int(row[1])
            vx[k, j] = float(row[2])
            vy[k, j] = float(row[3])
            seen += 1
    if seen != grid.n_points:
        raise ValueError(f"{path}: expected {grid.n_points} rows, found {seen}")
    return VelocityField(grid, vx, vy, meta["scenario"], meta["params"])
