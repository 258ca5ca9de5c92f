"""Periodic rectangular grid geometry."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


class PointIndex(NamedTuple):
    j: int
    k: int


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid of ``nx * ny`` points spaced ``dx``, ``dy`` meters apart.

    Point ``(j, k)`` sits at ``(j*dx, k*dy)``; the domain wraps around with
    periods ``Lx = nx*dx`` and ``Ly = ny*dy``. Flat indices are row-major
    over ``(k, j)``, i.e. ``flat = k*nx + j``.
    """

    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs at least 2 points per axis, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError(f"grid spacings must be positive, got dx={self.dx}, dy={self.dy}")

    @classmethod
    def square(cls, n: int, extent: float = 100.0) -> "GridSpec":
        """``n x n`` grid covering ``[0, extent)`` on both axes."""
        return cls(n, n, extent / n, extent / n)

    @property
    def lx(self) -> float:
        return self.nx * self.dx

    @property
    def ly(self) -> float:
        return self.ny * self.dy

    @property
    def n_points(self) -> int:
        return self.nx * self.ny

    def flat(self, p: PointIndex) -> int:
        return p.k * self.nx + p.j

    def unflat(self, idx: int) -> PointIndex:
        return PointIndex(idx % self.nx, idx // self.nx)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "dx": self.dx, "dy": self.dy}


def wrap(spec: GridSpec, j: int, k: int) -> PointIndex:
    return PointIndex(j % spec.nx, k % spec.ny)


def _min_image_cells(delta: int, n: int) -> int:
    # reduce into (-n/2, n/2]
    d = delta % n
    if 2 * d > n:
        d -= n
    return d


def min_image_displacement(spec: GridSpec, src: PointIndex, dst: PointIndex) -> tuple[float, float]:
    """Shortest periodic displacement ``dst - src`` in meters.

    Each component lies in ``(-L/2, L/2]``; an exact half-period tie resolves
    to ``+L/2`` regardless of orientation.
    """
    cj = _min_image_cells(dst.j - src.j, spec.nx)
    ck = _min_image_cells(dst.k - src.k, spec.ny)
    return cj * spec.dx, ck * spec.dy


def point_coords(spec: GridSpec, p: PointIndex) -> tuple[float, float]:
    return p.j * spec.dx, p.k * spec.dy
