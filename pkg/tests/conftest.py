from __future__ import annotations

import functools
import os
import time
from dataclasses import dataclass

import numpy as np
import pytest

from infoflow.dataset import Dataset
from infoflow.discovery import DiscoveryStats, TemporalGraph, TemporalPrior, run_discovery
from infoflow.edges import SummaryGraph, summarize
from infoflow.messages import generate_dataset
from infoflow.scenarios import ScenarioConfig, get_scenario

ACCEPTANCE_LINES: list[str] = []


@dataclass
class ScenarioResult:
    cfg: ScenarioConfig
    ds: Dataset
    graph: TemporalGraph
    stats: DiscoveryStats
    summary: SummaryGraph
    seconds: float  # simulate + discover + summarize, first build


@functools.lru_cache(maxsize=None)
def scenario_result(name: str, **overrides) -> ScenarioResult:
    """Simulate and discover a builtin scenario once per session."""
    t0 = time.perf_counter()
    cfg = get_scenario(name)
    if overrides:
        cfg = cfg.replace(**overrides)
    fld = cfg.build_field()
    ds = generate_dataset(fld, cfg.sim_params(fld), cfg.message_script(), cfg.schedule())
    graph, stats = run_discovery(
        ds, cfg.S, cfg.D, TemporalPrior(cfg.allow_concurrent), cfg.alpha, cfg.max_order,
        singular_separates=cfg.singular_separates,
    )
    summary = summarize(graph, cfg.grid, cfg.discard_earliest)
    return ScenarioResult(cfg, ds, graph, stats, summary, time.perf_counter() - t0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the full-size tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow") or os.environ.get("INFOFLOW_SLOW"):
        return
    skip = pytest.mark.skip(reason="slow; enable with --runslow or INFOFLOW_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
