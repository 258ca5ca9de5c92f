"""SVG panels for summary graphs and velocity fields, plus the cost table.

Every number written into a document is formatted with a fixed precision,
so identical inputs give byte-identical output.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from .discovery import DiscoveryStats
from .edges import CONCURRENT, INTRA, NONCONCURRENT, SummaryGraph, VelocityEstimate
from .grid import GridSpec, min_image_displacement, point_coords

BLUE = "#1f5fbf"
GREY = "#9a9a9a"
INK = "#222222"


@dataclass(frozen=True)
class PlotStyle:
    """Rendering options.

    ``display_dt`` converts velocities (m/s) into arrow lengths (m).
    """

    display_dt: float = 5.0
    size_px: int = 420
    margin_px: int = 30
    strong_color: str = BLUE
    weak_color: str = GREY
    weak_dash: str = "4,3"

    def __post_init__(self) -> None:
        if not self.display_dt > 0:
            raise ValueError(f"display_dt must be positive, got {self.display_dt}")


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


class _Canvas:
    """Maps domain meters to pixels; y grows upward in the domain."""

    def __init__(self, grid: GridSpec, style: PlotStyle, title: str):
        self.grid = grid
        self.style = style
        self.title = title
        # cell-centred box: the periodic seam runs half a cell outside the outer points
        self.x0, self.x1 = -grid.dx / 2, grid.lx - grid.dx / 2
        self.y0, self.y1 = -grid.dy / 2, grid.ly - grid.dy / 2
        span = max(grid.lx, grid.ly)
        self.scale = (style.size_px - 2 * style.margin_px) / span
        self.body: list[str] = []

    def px(self, x: float, y: float) -> tuple[str, str]:
        m = self.style.margin_px
        return _f(m + (x - self.x0) * self.scale), _f(m + (self.y1 - y) * self.scale)

    def circle(self, x, y, r_px, fill, stroke=INK):
        cx, cy = self.px(x, y)
        self.body.append(f'<circle cx="{cx}" cy="{cy}" r="{_f(r_px)}" fill="{fill}" stroke="{stroke}" stroke-width="1"/>')

    def line(self, a, b, color, arrow=False, dash=None, width=1.5):
        x1, y1 = self.px(*a)
        x2, y2 = self.px(*b)
        extra = ""
        if dash:
            extra += f' stroke-dasharray="{dash}"'
        if arrow:
            extra += f' marker-end="url(#head-{"weak" if color == self.style.weak_color else "strong"})"'
        self.body.append(
            f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}" stroke-width="{_f(width)}"{extra}/>'
        )

    def clip(self, a, b) -> Optional[tuple[tuple[float, float], tuple[float, float]]]:
        """Liang-Barsky clip of segment ``a -> b`` to the domain box."""
        (xa, ya), (xb, yb) = a, b
        dx, dy = xb - xa, yb - ya
        t0, t1 = 0.0, 1.0
        for p, q in ((-dx, xa - self.x0), (dx, self.x1 - xa), (-dy, ya - self.y0), (dy, self.y1 - ya)):
            if p == 0:
                if q < 0:
                    return None
                continue
            t = q / p
            if p < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
        if t0 > t1:
            return None
        return (xa + t0 * dx, ya + t0 * dy), (xa + t1 * dx, ya + t1 * dy)

    def inside(self, x, y) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def periodic_segment(self, a, d, color, arrow, dash=None):
        """Draw ``a -> a + d``; across the seam, as an exit stub and an entry stub."""
        b = (a[0] + d[0], a[1] + d[1])
        if self.inside(*b):
            self.line(a, b, color, arrow, dash)
            return
        g = self.grid
        wrapped = ((b[0] - self.x0) % g.lx + self.x0, (b[1] - self.y0) % g.ly + self.y0)
        exit_ = self.clip(a, b)
        entry = self.clip((wrapped[0] - d[0], wrapped[1] - d[1]), wrapped)
        # the head belongs to the stub that reaches the destination
        if exit_ is not None:
            self.line(exit_[0], exit_[1], color, False, dash)
        if entry is not None:
            self.line(entry[0], entry[1], color, arrow, dash)

    def render(self) -> str:
        s = self.style
        head = "".join(
            f'<marker id="head-{name}" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" '
            f'markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="{col}"/></marker>'
            for name, col in (("strong", s.strong_color), ("weak", s.weak_color))
        )
        bx, by = self.px(self.x0, self.y1)
        w = _f((self.x1 - self.x0) * self.scale)
        h = _f((self.y1 - self.y0) * self.scale)
        lines = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{s.size_px}" '
            f'height="{s.size_px}" viewBox="0 0 {s.size_px} {s.size_px}">',
            f"<title>{escape(self.title)}</title>",
            f"<defs>{head}</defs>",
            f'<rect x="{bx}" y="{by}" width="{w}" height="{h}" fill="none" stroke="{INK}" stroke-width="1"/>',
            f'<text x="{_f(s.size_px / 2)}" y="{_f(s.margin_px * 0.6)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{escape(self.title)}</text>',
            *self.body,
            "</svg>",
        ]
        return "\n".join(lines) + "\n"


def _dot_radius(c: _Canvas) -> float:
    return max(1.5, 0.18 * min(c.grid.dx, c.grid.dy) * c.scale)


def _grid_dots(c: _Canvas) -> None:
    g = c.grid
    r = max(1.0, 0.06 * min(g.dx, g.dy) * c.scale)
    for k in range(g.ny):
        for j in range(g.nx):
            c.circle(j * g.dx, k * g.dy, r, INK, stroke="none")


def render_intra_plot(sg: SummaryGraph, T: int, style: PlotStyle = PlotStyle()) -> str:
    """One circle per point: empty, grey (weak intra edge) or blue (intra edge) at lag ``T``."""
    if T < 1:
        raise ValueError("intra edges exist only for T >= 1")
    g = sg.grid
    c = _Canvas(g, style, f"intra edges, T={T}")
    sel = sg.mask(INTRA, T)
    fill = {int(p): (style.weak_color if w else style.strong_color) for p, w in zip(sg.src[sel], sg.weak[sel])}
    r = _dot_radius(c)
    for idx in range(g.n_points):
        p = g.unflat(idx)
        c.circle(*point_coords(g, p), r, fill.get(idx, "none"))
    return c.render()


def render_inter_plot(sg: SummaryGraph, T: int, style: PlotStyle = PlotStyle()) -> str:
    """Inter edges at lag ``T``: undirected segments for T=0, arrows otherwise."""
    if T < 0:
        raise ValueError("T must be non-negative")
    g = sg.grid
    kind = "concurrent" if T == 0 else "nonconcurrent"
    c = _Canvas(g, style, f"{kind} inter edges, T={T}")
    _grid_dots(c)
    sel = sg.mask(CONCURRENT if T == 0 else NONCONCURRENT, T)
    # strong edges on top
    order = sorted(np.flatnonzero(sel), key=lambda i: (not sg.weak[i], int(sg.src[i]), int(sg.dst[i])))
    for i in order:
        s, d = g.unflat(int(sg.src[i])), g.unflat(int(sg.dst[i]))
        col = style.weak_color if sg.weak[i] else style.strong_color
        c.periodic_segment(point_coords(g, s), min_image_displacement(g, s, d), col, arrow=T > 0)
    return c.render()


def render_velocity_plot(v: VelocityEstimate, style: PlotStyle = PlotStyle(), title: str = "velocity") -> str:
    """Quiver plot; arrows show displacement over ``style.display_dt`` seconds."""
    g = v.grid
    c = _Canvas(g, style, f"{title} (displacement over {style.display_dt:g} s)")
    _grid_dots(c)
    for k in range(g.ny):
        for j in range(g.nx):
            ux, uy = float(v.vx[k, j]), float(v.vy[k, j])
            if ux == 0 and uy == 0:
                continue
            weak = bool(v.weak[k, j])
            col = style.weak_color if weak else style.strong_color
            d = (ux * style.display_dt, uy * style.display_dt)
            c.periodic_segment((j * g.dx, k * g.dy), d, col, arrow=True,
                               dash=style.weak_dash if weak else None)
    return c.render()


_HEADER = ["order", "tests", "edges_remaining"]
_SUMMARY = ["max_order", "final_edges", "wall_seconds"]


def _stats_rows(stats: DiscoveryStats, orders: int, with_time: bool):
    rows = [[str(o.order), str(o.tests), str(o.edges_remaining)] for o in stats.orders if o.order < orders]
    if not stats.orders:
        return rows, None
    t = f"{stats.wall_seconds:.3f}" if with_time else "NA"
    return rows, [str(stats.max_order), str(stats.final_edges), t]


def render_stats_table(stats: DiscoveryStats, fmt: str = "csv", orders: int = 4, with_time: bool = True) -> str:
    """Per-order test counts for orders ``0..orders-1`` and a summary row.

    ``with_time=False`` writes ``NA`` for the wall time, which keeps the
    table byte-stable across runs.
    """
    rows, summary = _stats_rows(stats, orders, with_time)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_HEADER)
        w.writerows(rows)
        if summary:
            w.writerow(_SUMMARY)
            w.writerow(summary)
        return buf.getvalue()
    if fmt == "markdown":
        out = ["| Order | # CI tests | # edges left |", "|---:|---:|---:|"]
        out += [f"| {o} | {int(t):,} | {int(e):,} |" for o, t, e in rows]
        if summary:
            time_cell = f"{summary[2]} s" if with_time else "NA"
            out.append(f"| max order {summary[0]} | final edges {int(summary[1]):,} | {time_cell} |")
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown table format {fmt!r}; use 'csv' or 'markdown'")
