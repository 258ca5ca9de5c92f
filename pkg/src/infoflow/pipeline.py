"""End-to-end driver: simulate, discover, analyze, report.

Each stage reads what the previous one left in the bundle directory, so the
stages can run one at a time (CLI subcommands) or back to back
(:func:`run_pipeline`) with identical results. Wall times and worker counts
go to ``timing.json``; every other file is a deterministic function of the
config.
"""

from __future__ import annotations

import csv
import json
import logging
import platform
import time
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy

from . import __version__
from .dataset import dataset_filename, read_dataset, write_dataset
from .discovery import TemporalPrior, read_graph_csv, run_discovery, write_graph_csv
from .edges import (
    SummaryGraph, VelocityEstimate, classify_concurrent_signature, echo_flags, read_summary_csv,
    summarize, velocity_type1, velocity_type2, write_summary_csv,
)
from .messages import generate_dataset
from .report import PlotStyle, render_inter_plot, render_intra_plot, render_stats_table, render_velocity_plot
from .scenarios import ScenarioConfig
from .velocity import VelocityField, write_field

log = logging.getLogger(__name__)

STAGES = ("simulate", "discover", "analyze", "report")
INTRA_LAGS = (1, 2, 3, 4)
INTER_LAGS = (0, 1, 2, 3)

PROVENANCE = "provenance.json"
TIMING = "timing.json"
FIELD = "velocity_field.csv"
GRAPH = "temporal_graph.csv"
SUMMARY = "summary_graph.csv"


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load(path: Path) -> dict:
    return json.loads(path.read_text()) if path.exists() else {}


def dataset_path(cfg: ScenarioConfig, out: Path) -> Path:
    return out / (dataset_filename(cfg.name, cfg.message, cfg.M, cfg.seed) + ".csv")


def provenance(cfg: ScenarioConfig, stages: list[str]) -> dict:
    return {
        "config": cfg.to_dict(),
        "versions": {
            "infoflow": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "seeds": {
            "message_seed": cfg.seed,
            "rng": "PCG64 per run, SeedSequence(seed, spawn_key=(run_index,))",
        },
        "stages": [s for s in STAGES if s in stages],
    }


def _record(cfg: ScenarioConfig, out: Path, stage: str, seconds: float, extra: Optional[dict] = None) -> None:
    prov = _load(out / PROVENANCE)
    if prov.get("config") not in (None, cfg.to_dict()):
        raise PipelineError(stage, f"{out} holds a bundle for a different config")
    done = set(prov.get("stages", [])) | {stage}
    _dump(out / PROVENANCE, provenance(cfg, sorted(done)))
    timing = _load(out / TIMING)
    timing[stage] = {"wall_seconds": round(seconds, 3), **(extra or {})}
    _dump(out / TIMING, timing)


def _fail(cfg: ScenarioConfig, out: Path, stage: str, exc: BaseException) -> PipelineError:
    prov = _load(out / PROVENANCE) if (out / PROVENANCE).exists() else provenance(cfg, [])
    prov["failed_stage"] = stage
    prov["error"] = f"{type(exc).__name__}: {exc}"
    try:
        _dump(out / PROVENANCE, prov)
    except OSError:
        pass
    return PipelineError(stage, str(exc))


def _staged(stage: str):
    def deco(fn: Callable):
        def wrapper(cfg: ScenarioConfig, out, *args, **kwargs):
            out = Path(out)
            out.mkdir(parents=True, exist_ok=True)
            t0 = time.perf_counter()
            try:
                extra = fn(cfg, out, *args, **kwargs)
            except PipelineError:
                raise
            except Exception as exc:
                raise _fail(cfg, out, stage, exc) from exc
            _record(cfg, out, stage, time.perf_counter() - t0, extra)
        wrapper.__name__ = fn.__name__
        wrapper.__doc__ = fn.__doc__
        return wrapper
    return deco


def _field_or_zero(cfg: ScenarioConfig) -> VelocityField:
    fld = cfg.build_field()
    if fld is not None:
        return fld
    shape = (cfg.ny, cfg.nx)
    return VelocityField(cfg.grid, np.zeros(shape), np.zeros(shape), "none", {})


@_staged("simulate")
def simulate(cfg: ScenarioConfig, out: Path) -> dict:
    """Write the velocity field and the benchmark dataset."""
    fld = cfg.build_field()
    write_field(_field_or_zero(cfg), out / FIELD)
    params = cfg.sim_params(fld)
    ds = generate_dataset(fld, params, cfg.message_script(), cfg.schedule(), {"scenario": cfg.name})
    write_dataset(ds, dataset_path(cfg, out))
    return {}


@_staged("discover")
def discover(cfg: ScenarioConfig, out: Path, workers: int = 1, backend: Optional[str] = None) -> dict:
    """Skeleton search on the bundle's dataset; writes the temporal graph and cost tables."""
    path = dataset_path(cfg, out)
    if not path.exists():
        raise FileNotFoundError(f"dataset {path.name} not found; run the simulate stage first")
    ds = read_dataset(path)
    graph, stats = run_discovery(
        ds, cfg.S, cfg.D, TemporalPrior(cfg.allow_concurrent), cfg.alpha, cfg.max_order,
        workers, backend, cfg.singular_separates,
    )
    write_graph_csv(graph, out / GRAPH)
    (out / "stats.csv").write_text(render_stats_table(stats, "csv", with_time=False))
    (out / "stats.md").write_text(render_stats_table(stats, "markdown", with_time=False))
    return {"workers": workers, "backend": stats.backend, "singular_tests": stats.singular_tests,
            "discovery_wall_seconds": round(stats.wall_seconds, 3)}


def _write_velocity(v: VelocityEstimate, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "k", "vx", "vy", "weak", "weight"])
        for k in range(v.grid.ny):
            for j in range(v.grid.nx):
                w.writerow([j, k, repr(float(v.vx[k, j])), repr(float(v.vy[k, j])),
                            int(v.weak[k, j]), repr(float(v.weight[k, j]))])


def read_velocity(path: Path, grid) -> VelocityEstimate:
    shape = (grid.ny, grid.nx)
    vx, vy, wt = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    weak = np.zeros(shape, dtype=bool)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            j, k = int(row["j"]), int(row["k"])
            vx[k, j], vy[k, j] = float(row["vx"]), float(row["vy"])
            weak[k, j], wt[k, j] = bool(int(row["weak"])), float(row["weight"])
    return VelocityEstimate(grid, vx, vy, weak, wt)


@_staged("analyze")
def analyze(cfg: ScenarioConfig, out: Path) -> dict:
    """Summary graph, Type-1/Type-2 velocities and per-point diagnostics."""
    if not (out / GRAPH).exists():
        raise FileNotFoundError(f"{GRAPH} not found; run the discover stage first")
    g = cfg.grid
    graph = read_graph_csv(out / GRAPH, g.n_points, cfg.S)
    sg = summarize(graph, g, cfg.discard_earliest, cfg.weak_quantile)
    write_summary_csv(sg, out / SUMMARY)
    dt_data = read_dataset_meta(cfg, out)["dt_data"]
    _write_velocity(velocity_type1(sg, dt_data, cfg.max_lag_for_velocity), out / "velocity_type1.csv")
    _write_velocity(velocity_type2(sg, dt_data, cfg.max_lag_for_velocity), out / "velocity_type2.csv")
    labels = classify_concurrent_signature(sg)
    echo = echo_flags(sg)
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "k", "concurrent_signature", "echo_edges_in"])
        n_echo = np.bincount(sg.dst[echo], minlength=g.n_points) if echo.any() else np.zeros(g.n_points, int)
        for idx in range(g.n_points):
            p = g.unflat(idx)
            w.writerow([p.j, p.k, labels[idx], int(n_echo[idx])])
    return {}


def read_dataset_meta(cfg: ScenarioConfig, out: Path) -> dict:
    return json.loads(dataset_path(cfg, out).with_suffix(".json").read_text())


@_staged("report")
def report(cfg: ScenarioConfig, out: Path) -> dict:
    """SVG panels for the analyzed bundle."""
    if not (out / SUMMARY).exists():
        raise FileNotFoundError(f"{SUMMARY} not found; run the analyze stage first")
    g = cfg.grid
    sg: SummaryGraph = read_summary_csv(out / SUMMARY, g)
    style = PlotStyle(display_dt=cfg.display_dt)
    for T in INTRA_LAGS:
        (out / f"intra_T{T}.svg").write_text(render_intra_plot(sg, T, style))
    for T in INTER_LAGS:
        (out / f"inter_T{T}.svg").write_text(render_inter_plot(sg, T, style))
    for kind in ("type1", "type2"):
        v = read_velocity(out / f"velocity_{kind}.csv", g)
        (out / f"velocity_{kind}.svg").write_text(
            render_velocity_plot(v, style, f"{kind.replace('type', 'Type-')} velocity estimate")
        )
    return {}


def run_pipeline(cfg: ScenarioConfig, out, workers: int = 1, backend: Optional[str] = None) -> Path:
    out = Path(out)
    simulate(cfg, out)
    discover(cfg, out, workers, backend)
    analyze(cfg, out)
    report(cfg, out)
    return out
