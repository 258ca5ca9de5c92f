"""Location-level summary graphs and the velocity estimates derived from them.

A temporal graph edge ``(p, s_src) -> (q, s_dst)`` collapses to the summary
edge ``p -> q`` at lag ``T = s_src - s_dst``. Edges repeated over several
tier pairs merge into one summary edge carrying their mean strength.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .discovery import TemporalGraph
from .grid import GridSpec, PointIndex, min_image_displacement

INTRA = "intra"
CONCURRENT = "concurrent"
NONCONCURRENT = "nonconcurrent"

ECHO_ANGLE_DEG = 15.0
ECHO_SPEED_RTOL = 0.25


class SummaryEdge(NamedTuple):
    src: PointIndex
    dst: PointIndex
    lag: int
    directed: bool
    strength: float
    weak: bool
    multiplicity: int
    cls: str


@dataclass
class SummaryGraph:
    """Merged edges over flat point indices.

    Concurrent (lag 0) edges are undirected and stored with ``src < dst``.
    """

    grid: GridSpec
    src: np.ndarray
    dst: np.ndarray
    lag: np.ndarray
    strength: np.ndarray
    multiplicity: np.ndarray
    weak: np.ndarray

    def __len__(self) -> int:
        return len(self.src)

    @property
    def directed(self) -> np.ndarray:
        return self.lag > 0

    @property
    def cls(self) -> np.ndarray:
        out = np.full(len(self), NONCONCURRENT, dtype=object)
        out[self.lag == 0] = CONCURRENT
        out[self.src == self.dst] = INTRA
        return out

    def mask(self, cls: Optional[str] = None, lag: Optional[int] = None) -> np.ndarray:
        m = np.ones(len(self), dtype=bool)
        if cls is not None:
            m &= self.cls == cls
        if lag is not None:
            m &= self.lag == lag
        return m

    def edges(self) -> Iterator[SummaryEdge]:
        g = self.grid
        for i, c in enumerate(self.cls):
            yield SummaryEdge(
                g.unflat(int(self.src[i])), g.unflat(int(self.dst[i])), int(self.lag[i]),
                bool(self.lag[i] > 0), float(self.strength[i]), bool(self.weak[i]),
                int(self.multiplicity[i]), str(c),
            )

    def intra_points(self, lag: int) -> np.ndarray:
        """Flat indices of points carrying an intra edge at ``lag``."""
        return np.unique(self.src[self.mask(INTRA, lag)])

    def lags(self) -> list[int]:
        return sorted({int(t) for t in self.lag})


def weak_flags(strength: np.ndarray, quantile: float = 0.25) -> np.ndarray:
    """Edges strictly below the given quantile of all strengths are weak."""
    strength = np.asarray(strength, dtype=np.float64)
    if strength.size == 0:
        return np.zeros(0, dtype=bool)
    return strength < np.quantile(strength, quantile)


def summarize(
    graph: TemporalGraph,
    grid: GridSpec,
    discard_earliest: int = 2,
    weak_quantile: float = 0.25,
) -> SummaryGraph:
    """Collapse a temporal graph onto grid locations.

    Parameters
    ----------
    graph : TemporalGraph
        Oriented skeleton; tier 0 is the most recent slice.
    grid : GridSpec
        Grid the point indices refer to.
    discard_earliest : int
        Edges touching any of the ``discard_earliest`` oldest tiers are dropped.
    weak_quantile : float
        Strength quantile below which a summary edge is flagged weak.
    """
    if not 0 <= discard_earliest < graph.S:
        raise ValueError(f"discard_earliest must lie in [0, {graph.S}), got {discard_earliest}")
    if graph.n_points != grid.n_points:
        raise ValueError("graph and grid disagree on the number of points")
    ts, td = graph.tier(graph.src), graph.tier(graph.dst)
    keep = (ts < graph.S - discard_earliest) & (td < graph.S - discard_earliest)
    p = graph.point(graph.src)[keep].astype(np.int64)
    q = graph.point(graph.dst)[keep].astype(np.int64)
    T = (ts - td)[keep].astype(np.int64)
    w = graph.strength[keep]
    same = T == 0
    p, q = np.where(same, np.minimum(p, q), p), np.where(same, np.maximum(p, q), q)

    n = grid.n_points
    key = (T * n + p) * n + q
    uniq, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
    sums = np.bincount(inv, weights=w, minlength=len(uniq))
    lag_u, rest = np.divmod(uniq, n * n)
    src_u, dst_u = np.divmod(rest, n)
    strength = sums / np.maximum(counts, 1)
    return SummaryGraph(
        grid, src_u, dst_u, lag_u, strength, counts.astype(np.int64),
        weak_flags(strength, weak_quantile),
    )


@dataclass
class VelocityEstimate:
    """Per-point velocity vectors (m/s), arrays shaped ``(ny, nx)``."""

    grid: GridSpec
    vx: np.ndarray
    vy: np.ndarray
    weak: np.ndarray
    weight: np.ndarray

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)


def _displacements(sg: SummaryGraph, sel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g = sg.grid
    dx = np.empty(int(sel.sum()))
    dy = np.empty_like(dx)
    for i, (s, d) in enumerate(zip(sg.src[sel], sg.dst[sel])):
        dx[i], dy[i] = min_image_displacement(g, g.unflat(int(s)), g.unflat(int(d)))
    return dx, dy


def _velocity(sg: SummaryGraph, dt_data: float, with_intra: bool,
              max_lag: Optional[int]) -> VelocityEstimate:
    if not dt_data > 0:
        raise ValueError(f"dt_data must be positive, got {dt_data}")
    g = sg.grid
    inter = sg.mask(NONCONCURRENT)
    if max_lag is not None:
        inter &= sg.lag <= max_lag
    dx, dy = _displacements(sg, inter)
    rate = 1.0 / (sg.lag[inter] * dt_data)
    dst = sg.dst[inter]
    w = sg.strength[inter]
    weak = sg.weak[inter]
    ex, ey = dx * rate, dy * rate
    if with_intra:
        intra = sg.mask(INTRA)
        if max_lag is not None:
            intra &= sg.lag <= max_lag
        dst = np.concatenate([dst, sg.dst[intra]])
        w = np.concatenate([w, sg.strength[intra]])
        weak = np.concatenate([weak, sg.weak[intra]])
        ex = np.concatenate([ex, np.zeros(int(intra.sum()))])
        ey = np.concatenate([ey, np.zeros(int(intra.sum()))])
    n = g.n_points
    wsum = np.bincount(dst, weights=w, minlength=n)
    sx = np.bincount(dst, weights=w * ex, minlength=n)
    sy = np.bincount(dst, weights=w * ey, minlength=n)
    n_in = np.bincount(dst, minlength=n)
    n_strong = np.bincount(dst, weights=(~weak).astype(np.float64), minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        vx = np.where(wsum > 0, sx / wsum, 0.0)
        vy = np.where(wsum > 0, sy / wsum, 0.0)
    shape = (g.ny, g.nx)
    return VelocityEstimate(
        g, vx.reshape(shape), vy.reshape(shape),
        ((n_in > 0) & (n_strong == 0)).reshape(shape), wsum.reshape(shape),
    )


def velocity_type1(sg: SummaryGraph, dt_data: float, max_lag: Optional[int] = None) -> VelocityEstimate:
    """Strength-weighted mean displacement rate of incoming nonconcurrent edges.

    ``max_lag`` restricts the estimate to edges with ``T <= max_lag``; the
    default uses every lag.
    """
    return _velocity(sg, dt_data, False, max_lag)


def velocity_type2(sg: SummaryGraph, dt_data: float, max_lag: Optional[int] = None) -> VelocityEstimate:
    """As :func:`velocity_type1`, with intra edges voting for zero displacement."""
    return _velocity(sg, dt_data, True, max_lag)


def _angle_deg(ax, ay, bx, by) -> np.ndarray:
    dot = ax * bx + ay * by
    cross = ax * by - ay * bx
    return np.degrees(np.abs(np.arctan2(cross, dot)))


def echo_flags(sg: SummaryGraph, angle_deg: float = ECHO_ANGLE_DEG,
               speed_rtol: float = ECHO_SPEED_RTOL) -> np.ndarray:
    """Tag nonconcurrent edges with ``T > 1`` that repeat a lag-1 edge.

    An edge is an echo when a lag-1 nonconcurrent edge sharing one of its
    endpoints points the same way (within ``angle_deg``) at a similar speed
    (relative difference within ``speed_rtol``), where speed is displacement
    per lag.
    """
    out = np.zeros(len(sg), dtype=bool)
    inter = sg.mask(NONCONCURRENT)
    idx = np.flatnonzero(inter)
    if idx.size == 0:
        return out
    dx, dy = _displacements(sg, inter)
    lag = sg.lag[idx]
    vx, vy = dx / lag, dy / lag
    one = lag == 1
    if not one.any():
        return out
    by_point: dict[int, list[int]] = {}
    for i in np.flatnonzero(one):
        by_point.setdefault(int(sg.src[idx[i]]), []).append(i)
        by_point.setdefault(int(sg.dst[idx[i]]), []).append(i)
    for i in np.flatnonzero(lag > 1):
        cands = set(by_point.get(int(sg.src[idx[i]]), ())) | set(by_point.get(int(sg.dst[idx[i]]), ()))
        if not cands:
            continue
        c = np.fromiter(sorted(cands), dtype=np.int64)
        sp = math.hypot(vx[i], vy[i])
        sp1 = np.hypot(vx[c], vy[c])
        ok = (_angle_deg(vx[i], vy[i], vx[c], vy[c]) <= angle_deg) & (
            np.abs(sp - sp1) <= speed_rtol * sp1
        )
        out[idx[i]] = bool(ok.any())
    return out


NONE, DIFFUSION_LIKE, ADVECTION_LIKE, OTHER = "none", "diffusion-like", "advection-like", "other"


def classify_concurrent_signature(sg: SummaryGraph) -> np.ndarray:
    """Label each point by the shape of its concurrent edges.

    ``diffusion-like`` when all concurrent neighbours are among the four
    nearest and include an opposite pair; ``advection-like`` when they all
    lie on one line through the point, within 45 degrees of the point's
    Type-1 direction; ``other`` otherwise; ``none`` without concurrent edges.
    Returns an object array of length ``n_points``.
    """
    g = sg.grid
    conc = sg.mask(CONCURRENT)
    dx, dy = _displacements(sg, conc)
    # unit is irrelevant for direction, so any positive dt will do
    v1 = velocity_type1(sg, 1.0)
    vx, vy = v1.vx.ravel(), v1.vy.ravel()
    nbrs: dict[int, list[tuple[float, float]]] = {}
    for s, d, ex, ey in zip(sg.src[conc], sg.dst[conc], dx, dy):
        nbrs.setdefault(int(s), []).append((ex, ey))
        nbrs.setdefault(int(d), []).append((-ex, -ey))
    out = np.full(g.n_points, NONE, dtype=object)
    four = {(g.dx, 0.0), (-g.dx, 0.0), (0.0, g.dy), (0.0, -g.dy)}
    for pt, disp in nbrs.items():
        ds = {(float(a), float(b)) for a, b in disp}
        if ds <= four and (
            {(g.dx, 0.0), (-g.dx, 0.0)} <= ds or {(0.0, g.dy), (0.0, -g.dy)} <= ds
        ):
            out[pt] = DIFFUSION_LIKE
            continue
        angles = {round(math.degrees(math.atan2(b, a)) % 180.0, 9) % 180.0 for a, b in ds}
        if len(angles) == 1 and (vx[pt] != 0 or vy[pt] != 0):
            a, b = next(iter(ds))
            # undirected: compare the line, not the arrow
            ang = _angle_deg(a, b, vx[pt], vy[pt])
            if min(ang, 180.0 - ang) <= 45.0:
                out[pt] = ADVECTION_LIKE
                continue
        out[pt] = OTHER
    return out


CSV_COLUMNS = ["src_j", "src_k", "dst_j", "dst_k", "lag", "directed", "strength", "weak", "multiplicity", "class"]


def write_summary_csv(sg: SummaryGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for e in sg.edges():
            w.writerow([e.src.j, e.src.k, e.dst.j, e.dst.k, e.lag, int(e.directed),
                        repr(e.strength), int(e.weak), e.multiplicity, e.cls])


def read_summary_csv(path, grid: GridSpec) -> SummaryGraph:
    cols: dict[str, list] = {c: [] for c in CSV_COLUMNS}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            for c in CSV_COLUMNS:
                cols[c].append(row[c])
    to_i = lambda c: np.array([int(v) for v in cols[c]], dtype=np.int64)
    src = np.array([grid.flat(PointIndex(j, k)) for j, k in zip(to_i("src_j"), to_i("src_k"))], dtype=np.int64)
    dst = np.array([grid.flat(PointIndex(j, k)) for j, k in zip(to_i("dst_j"), to_i("dst_k"))], dtype=np.int64)
    return SummaryGraph(
        grid, src, dst, to_i("lag"), np.array([float(v) for v in cols["strength"]]),
        to_i("multiplicity"), to_i("weak").astype(bool),
    )
