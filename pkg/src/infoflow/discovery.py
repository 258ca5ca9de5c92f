"""Temporal PC-stable skeleton search over lagged grid variables.

Nodes are indexed canonically as ``tier * n_points + point``; adjacency
lists and conditioning-set enumeration follow that order whatever the
column order of the input table, which keeps test counts reproducible.

The per-order test loops run in the compiled ``_pckernel`` extension when it
is importable and in ``_pcfallback`` (NumPy) otherwise. Set
``INFOFLOW_BACKEND=numpy`` to force the fallback.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _pcfallback
from .ci import SINGULAR_TOL, correlation_matrix, r_thresholds
from .dataset import Dataset, LaggedTable, lag

log = logging.getLogger(__name__)

try:
    from . import _pckernel
except ImportError:  # extension not built
    _pckernel = None

BACKENDS = {"numpy": _pcfallback}
if _pckernel is not None:
    BACKENDS["compiled"] = _pckernel

DEFAULT_BACKEND = os.environ.get("INFOFLOW_BACKEND") or ("compiled" if _pckernel is not None else "numpy")
if DEFAULT_BACKEND not in BACKENDS:
    raise ImportError(f"INFOFLOW_BACKEND={DEFAULT_BACKEND!r} is not available; have {sorted(BACKENDS)}")

MAX_ORDER_DEFAULT = 25


@dataclass(frozen=True)
class TemporalPrior:
    """Edge (a, b) is admissible across tiers always, within a tier only if ``allow_concurrent``."""

    allow_concurrent: bool = True

    def admissible(self, tier_a: int, tier_b: int) -> bool:
        return tier_a != tier_b or self.allow_concurrent


@dataclass
class OrderStats:
    order: int
    tests: int
    edges_remaining: int


@dataclass
class DiscoveryStats:
    orders: list[OrderStats] = field(default_factory=list)
    max_order: int = 0
    wall_seconds: float = 0.0
    singular_tests: int = 0
    backend: str = ""

    @property
    def final_edges(self) -> int:
        return self.orders[-1].edges_remaining if self.orders else 0

    def tests_at(self, order: int) -> int:
        for o in self.orders:
            if o.order == order:
                return o.tests
        return 0

    def to_csv(self) -> str:
        """Per-order rows followed by a summary row."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["order", "tests", "edges_remaining"])
        for o in self.orders:
            w.writerow([o.order, o.tests, o.edges_remaining])
        w.writerow(["max_order", "final_edges", "wall_seconds"])
        w.writerow([self.max_order, self.final_edges, f"{self.wall_seconds:.3f}"])
        return buf.getvalue()


@dataclass
class Skeleton:
    """Undirected skeleton over canonical node indices.

    ``edges`` rows are ``(u, v)`` with ``u < v``, sorted. ``removed`` maps an
    order ``l >= 1`` to ``(pairs, sepsets)`` for the edges removed at that
    order; pairs removed at order 0, or never admissible, separate on the
    empty set.
    """

    n_points: int
    S: int
    edges: np.ndarray
    strength: np.ndarray
    removed: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.n_points * self.S

    def point(self, node):
        return np.asarray(node) % self.n_points

    def tier(self, node):
        return np.asarray(node) // self.n_points

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def sepset(self, a: int, b: int) -> Optional[tuple[int, ...]]:
        """Separating set recorded for a non-adjacent pair, ``None`` if adjacent."""
        u, v = min(a, b), max(a, b)
        if (u, v) in self.edge_set():
            return None
        for order, (pairs, seps) in self.removed.items():
            hit = np.flatnonzero((pairs[:, 0] == u) & (pairs[:, 1] == v))
            if hit.size:
                return tuple(int(c) for c in seps[hit[0]])
        return ()


@dataclass
class TemporalGraph:
    """Oriented skeleton: cross-tier edges point from the older tier to the newer one.

    ``src``/``dst`` are canonical node indices; for undirected (same-tier)
    edges the pair is stored with ``src < dst``.
    """

    n_points: int
    S: int
    src: np.ndarray
    dst: np.ndarray
    directed: np.ndarray
    strength: np.ndarray

    def __len__(self) -> int:
        return len(self.src)

    def tier(self, node):
        return np.asarray(node) // self.n_points

    def point(self, node):
        return np.asarray(node) % self.n_points


def _canonical(table: LaggedTable) -> np.ndarray:
    canon = table.tiers.astype(np.int64) * table.n_points + table.points
    order = np.argsort(canon, kind="stable")
    if not np.array_equal(canon[order], np.arange(table.n_points * table.S)):
        raise ValueError("lagged table columns do not cover every (point, tier) exactly once")
    return order


def _csr(adj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.nonzero(adj)
    ptr = np.zeros(adj.shape[0] + 1, dtype=np.int32)
    np.cumsum(np.bincount(rows, minlength=adj.shape[0]), out=ptr[1:])
    return ptr, cols.astype(np.int32)


def pc_stable_skeleton(
    table: LaggedTable,
    prior: TemporalPrior = TemporalPrior(),
    alpha: float = 0.05,
    max_order: int = MAX_ORDER_DEFAULT,
    workers: int = 1,
    backend: Optional[str] = None,
    singular_separates: bool = True,
) -> tuple[Skeleton, DiscoveryStats]:
    """Order-independent skeleton search with Fisher-Z tests.

    Each order works on a frozen copy of the adjacency; edges found
    independent are removed only once the whole order has been tested.
    """
    kern = BACKENDS[backend or DEFAULT_BACKEND]
    t0 = time.perf_counter()
    order = _canonical(table)
    data = table.data[:, order]
    n = data.shape[0]
    P = data.shape[1]
    tiers = (np.arange(P) // table.n_points).astype(np.int32)
    R, constant = correlation_matrix(data)
    del data
    if constant.any():
        log.info("%d constant columns; every test touching them reports independence", int(constant.sum()))

    stats = DiscoveryStats(backend=backend or DEFAULT_BACKEND)
    thr = r_thresholds(n, 0, alpha)
    n_tests, edges, strength = kern.level0(R, tiers, prior.allow_concurrent, *thr)
    stats.orders.append(OrderStats(0, int(n_tests), len(edges)))
    removed: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    adj = np.zeros((P, P), dtype=np.uint8)
    adj[edges[:, 0], edges[:, 1]] = 1
    adj[edges[:, 1], edges[:, 0]] = 1
    level = 0
    while level < max_order and len(edges):
        deg = adj.sum(axis=1, dtype=np.int64)
        nxt = level + 1
        if not np.any((deg[edges[:, 0]] - 1 >= nxt) | (deg[edges[:, 1]] - 1 >= nxt)):
            break
        if n - nxt - 3 < 1:
            log.warning("stopping at order %d: %d samples are too few for larger conditioning sets", level, n)
            break
        level = nxt
        ptr, idx = _csr(adj)
        rem = np.zeros(len(edges), dtype=np.uint8)
        seps = np.full((len(edges), level), -1, dtype=np.int32)
        n_tests, n_sing = kern.level_k(
            R, adj, ptr, idx, edges, level, *r_thresholds(n, level, alpha), SINGULAR_TOL,
            strength, rem, seps, max(1, int(workers)), singular_separates,
        )
        gone = rem.astype(bool)
        if gone.any():
            removed[level] = (edges[gone].copy(), seps[gone].copy())
            adj[edges[gone, 0], edges[gone, 1]] = 0
            adj[edges[gone, 1], edges[gone, 0]] = 0
            edges = np.ascontiguousarray(edges[~gone])
            strength = np.ascontiguousarray(strength[~gone])
        stats.singular_tests += int(n_sing)
        stats.orders.append(OrderStats(level, int(n_tests), len(edges)))
        log.debug("order %d: %d tests, %d edges left", level, n_tests, len(edges))
    stats.max_order = level
    stats.wall_seconds = time.perf_counter() - t0
    skel = Skeleton(table.n_points, table.S, edges.astype(np.int64), strength, removed)
    return skel, stats


def orient(skel: Skeleton) -> TemporalGraph:
    u, v = skel.edges[:, 0], skel.edges[:, 1]
    tu, tv = skel.tier(u), skel.tier(v)
    directed = tu != tv
    # larger tier index = older slice = cause
    src = np.where(tu > tv, u, np.where(tu < tv, v, u))
    dst = np.where(tu > tv, v, np.where(tu < tv, u, v))
    return TemporalGraph(skel.n_points, skel.S, src, dst, directed, skel.strength.copy())


def run_discovery(
    ds: Dataset,
    S: int = 20,
    D: int = 1,
    prior: TemporalPrior = TemporalPrior(),
    alpha: float = 0.05,
    max_order: int = MAX_ORDER_DEFAULT,
    workers: int = 1,
    backend: Optional[str] = None,
    singular_separates: bool = True,
) -> tuple[TemporalGraph, DiscoveryStats]:
    t0 = time.perf_counter()
    table = lag(ds, S, D)
    skel, stats = pc_stable_skeleton(
        table, prior, alpha, max_order, workers, backend, singular_separates
    )
    graph = orient(skel)
    stats.wall_seconds = time.perf_counter() - t0
    return graph, stats


def write_graph_csv(graph: TemporalGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src_point", "src_tier", "dst_point", "dst_tier", "directed", "strength"])
        for s, d, di, st in zip(graph.src, graph.dst, graph.directed, graph.strength):
            w.writerow([int(graph.point(s)), int(graph.tier(s)), int(graph.point(d)), int(graph.tier(d)),
                        int(bool(di)), repr(float(st))])


def read_graph_csv(path, n_points: int, S: int) -> TemporalGraph:
    src, dst, directed, strength = [], [], [], []
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        for row in r:
            src.append(int(row["src_tier"]) * n_points + int(row["src_point"]))
            dst.append(int(row["dst_tier"]) * n_points + int(row["dst_point"]))
            directed.append(bool(int(row["directed"])))
            strength.append(float(row["strength"]))
    return TemporalGraph(
        n_points, S, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
        np.array(directed, dtype=bool), np.array(strength, dtype=np.float64),
    )
