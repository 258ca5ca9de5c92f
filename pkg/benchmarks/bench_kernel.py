"""Compare the compiled skeleton kernel with the NumPy fallback.

Runs the full skeleton search on builtin scenarios with each backend,
checks that both produce the same skeleton and test counts, and prints
wall times.

    python3 benchmarks/bench_kernel.py --scenario pure-advection-M1 --scenario mixed --grid 6

The NumPy fallback needs tens of minutes for the 10x10 mixed or diffusion
scenarios (hundreds of millions of order-1 tests); ``--grid`` shrinks the
grid to keep a comparison quick.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from infoflow.dataset import lag
from infoflow.discovery import BACKENDS, TemporalPrior, pc_stable_skeleton
from infoflow.messages import generate_dataset
from infoflow.scenarios import get_scenario


def bench(name: str, repeats: int, workers: int, max_order: int | None,
          grid: int | None = None) -> list[tuple[str, float]]:
    cfg = get_scenario(name)
    if grid is not None:
        cfg = cfg.replace(nx=grid, ny=grid, name=f"{name}-{grid}x{grid}")
    fld = cfg.build_field()
    ds = generate_dataset(fld, cfg.sim_params(fld), cfg.message_script(), cfg.schedule())
    table = lag(ds, cfg.S, cfg.D)
    prior = TemporalPrior(cfg.allow_concurrent)
    order = cfg.max_order if max_order is None else max_order
    rows, ref = [], None
    for backend in sorted(BACKENDS):
        for w in sorted({1, workers}) if backend == "compiled" else [1]:
            best = np.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                skel, stats = pc_stable_skeleton(table, prior, cfg.alpha, order, w, backend)
                best = min(best, time.perf_counter() - t0)
            sig = (skel.edges.tobytes(), tuple(o.tests for o in stats.orders))
            if ref is None:
                ref = sig
            elif sig != ref:
                raise SystemExit(f"{name}: backend {backend} (workers={w}) disagrees with the reference")
            rows.append((f"{backend}/w{w}", best))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", action="append", help="builtin scenario (repeatable)")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--max-order", type=int, default=None, help="cap the conditioning-set order")
    ap.add_argument("--grid", type=int, default=None, help="override the grid to N x N points")
    args = ap.parse_args()
    names = args.scenario or ["pure-advection-M1", "mixed"]
    if args.scenario is None and args.grid is None:
        args.grid = 6
    if "compiled" not in BACKENDS:
        print("compiled kernel not available; timing the NumPy fallback only")
    print(f"{'scenario':24s} {'backend':14s} {'seconds':>9s} {'speedup':>8s}")
    for name in names:
        rows = bench(name, args.repeats, args.workers, args.max_order, args.grid)
        base = dict(rows).get("numpy/w1", rows[0][1])
        for label, sec in rows:
            shown = name if args.grid is None else f"{name} ({args.grid}x{args.grid})"
            print(f"{shown:24s} {label:14s} {sec:9.3f} {base / sec:7.1f}x")


if __name__ == "__main__":
    main()
