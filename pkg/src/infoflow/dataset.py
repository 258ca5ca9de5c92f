"""Benchmark dataset container, CSV persistence and lagged-variable tables."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import GridSpec


class DatasetFormatError(ValueError):
    pass


@dataclass
class Dataset:
    """Concatenated time series for every grid point.

    ``values[r, p]`` is grid point ``p`` (flat row-major index) at recorded
    sample ``r``; runs of ``run_len`` consecutive rows are independent
    simulations.
    """

    grid: GridSpec
    values: np.ndarray
    run_len: int
    n_runs: int
    dt_data: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.n_points:
            raise DatasetFormatError(
                f"values must have shape (rows, {self.grid.n_points}), got {self.values.shape}"
            )
        if self.values.shape[0] != self.n_runs * self.run_len:
            raise DatasetFormatError(
                f"row count {self.values.shape[0]} != n_runs*run_len = {self.n_runs}*{self.run_len}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DatasetFormatError("dataset contains non-finite values")

    def run(self, i: int) -> np.ndarray:
        return self.values[i * self.run_len : (i + 1) * self.run_len]


def dataset_filename(scenario: str, message: str, m: int, seed: int) -> str:
    return f"{scenario}_{message}_M{m}_seed{seed}"


def write_dataset(ds: Dataset, path: str | Path) -> None:
    """Write ``path`` (CSV body) and ``path`` with a ``.json`` suffix (sidecar)."""
    path = Path(path)
    n_pts = ds.grid.n_points
    with open(path, "w") as fh:
        fh.write(",".join(f"p{i}" for i in range(n_pts)) + "\n")
        for row in ds.values.tolist():
            fh.write(",".join(map(repr, row)) + "\n")
    meta = {
        "grid": ds.grid.to_dict(),
        "run_len": ds.run_len,
        "n_runs": ds.n_runs,
        "n_rows": int(ds.values.shape[0]),
        "dt_data": ds.dt_data,
        "metadata": ds.metadata,
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise FileNotFoundError(f"dataset sidecar not found: expected {sidecar}")
    try:
        meta = json.loads(sidecar.read_text())
        g = meta["grid"]
        grid = GridSpec(g["nx"], g["ny"], g["dx"], g["dy"])
        run_len, n_runs = int(meta["run_len"]), int(meta["n_runs"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"{sidecar}: malformed metadata ({exc})") from exc
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header != [f"p{i}" for i in range(grid.n_points)]:
            raise DatasetFormatError(f"{path}: header does not match a {grid.nx}x{grid.ny} grid")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != grid.n_points:
                raise DatasetFormatError(f"{path}:{lineno}: expected {grid.n_points} fields")
            rows.append([float(v) for v in parts])
    values = np.array(rows, dtype=np.float64).reshape(len(rows), grid.n_points)
    if values.shape[0] != n_runs * run_len:
        raise DatasetFormatError(
            f"{path}: {values.shape[0]} rows but sidecar declares n_runs*run_len = {n_runs * run_len}"
        )
    return Dataset(grid, values, run_len, n_runs, float(meta["dt_data"]), meta.get("metadata", {}))


@dataclass
class LaggedTable:
    """Lagged variables: column ``c`` holds point ``points[c]`` lagged ``tiers[c]`` slices.

    ``lag`` lays columns out tier-major (``c = s * n_points + p``) but callers
    may hand over any column permutation; the labels travel with the data.
    """

    data: np.ndarray
    points: np.ndarray
    tiers: np.ndarray
    S: int
    D: int
    n_points: int
    rows_per_run: int

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    def permuted(self, perm: np.ndarray) -> "LaggedTable":
        perm = np.asarray(perm)
        return LaggedTable(
            self.data[:, perm], self.points[perm], self.tiers[perm],
            self.S, self.D, self.n_points, self.rows_per_run,
        )


def lag(ds: Dataset, S: int = 20, D: int = 1) -> LaggedTable:
    """Slide an ``S``-slice window (slices ``D`` rows apart) over each run.

    Tier ``s`` of lagged row ``r`` reads data row ``r + (S-1-s)*D`` of the
    same run, so tier 0 is the most recent slice. Windows never straddle runs.
    """
    if S < 1 or D < 1:
        raise ValueError("S and D must be at least 1")
    span = (S - 1) * D
    if ds.run_len <= span:
        raise ValueError(
            f"run length {ds.run_len} too short for S={S}, D={D}: need at least {span + 1} samples"
        )
    per_run = ds.run_len - span
    n_pts = ds.grid.n_points
    out = np.empty((ds.n_runs * per_run, S * n_pts))
    for i in range(ds.n_runs):
        block = ds.run(i)
        dst = out[i * per_run : (i + 1) * per_run]
        for s in range(S):
            off = (S - 1 - s) * D
            dst[:, s * n_pts : (s + 1) * n_pts] = block[off : off + per_run]
    points = np.tile(np.arange(n_pts), S)
    tiers = np.repeat(np.arange(S), n_pts)
    return LaggedTable(out, points, tiers, S, D, n_pts, per_run)
