import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infoflow import discovery
from infoflow.ci import CollinearError, fisher_z_test, partial_correlation
from infoflow.dataset import Dataset, LaggedTable, lag
from infoflow.discovery import (
    BACKENDS, TemporalPrior, orient, pc_stable_skeleton, read_graph_csv, run_discovery, write_graph_csv,
)
from infoflow.grid import GridSpec
from infoflow.messages import MessageScript, RunSchedule, generate_dataset
from infoflow.simulate import make_params
from infoflow.velocity import uniform_right

G3 = GridSpec.square(3)
G4 = GridSpec.square(4)
HAVE_COMPILED = "compiled" in BACKENDS
needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")


def _noise_table(grid, S, n_rows, seed=0) -> LaggedTable:
    ds = Dataset(grid, np.random.default_rng(seed).normal(size=(n_rows + S - 1, grid.n_points)),
                 n_rows + S - 1, 1, 1.0)
    return lag(ds, S, 1)


def _advection_dataset(seed=0):
    fld = uniform_right(G4)
    p = make_params(G4, fld, 0.0, 0.0, 1.0)
    return generate_dataset(fld, p, MessageScript(background_sigma=0.1, seed=seed), RunSchedule(G4, 40, tiers=4))


@pytest.fixture(scope="module")
def adv_table():
    return lag(_advection_dataset(), 4, 1)


def test_order0_count_full_size():
    t = _noise_table(GridSpec.square(10), 20, 40)
    _, stats = pc_stable_skeleton(t, max_order=0)
    assert stats.tests_at(0) == 1_999_000
    _, stats = pc_stable_skeleton(t, TemporalPrior(allow_concurrent=False), max_order=0)
    # the 20 tiers each lose C(100, 2) same-tier pairs
    assert stats.tests_at(0) == 1_900_000


def test_no_concurrent_edges_when_forbidden(adv_table):
    skel, _ = pc_stable_skeleton(adv_table, TemporalPrior(allow_concurrent=False))
    assert len(skel.edges)
    assert np.all(skel.tier(skel.edges[:, 0]) != skel.tier(skel.edges[:, 1]))


def test_advection_recovers_left_neighbour(adv_table):
    skel, stats = pc_stable_skeleton(adv_table)
    g = orient(skel)
    lag1 = g.directed & (g.tier(g.src) - g.tier(g.dst) == 1)
    found = {(int(g.point(s)), int(g.point(d))) for s, d in zip(g.src[lag1], g.dst[lag1])}
    for p in range(16):
        j, k = p % 4, p // 4
        assert (k * 4 + (j - 1) % 4, p) in found
    assert stats.final_edges == len(skel.edges)


@pytest.mark.parametrize("seed", range(5))
def test_permutation_invariance(adv_table, seed):
    base, bstats = pc_stable_skeleton(adv_table)
    perm = np.random.default_rng(seed).permutation(adv_table.n_cols)
    skel, stats = pc_stable_skeleton(adv_table.permuted(perm))
    assert np.array_equal(skel.edges, base.edges)
    assert np.array_equal(skel.strength, base.strength)
    assert [(o.order, o.tests, o.edges_remaining) for o in stats.orders] == \
        [(o.order, o.tests, o.edges_remaining) for o in bstats.orders]


@needs_compiled
@pytest.mark.parametrize("workers", [1, 4])
def test_backends_and_workers_agree(adv_table, workers):
    ref, rstats = pc_stable_skeleton(adv_table, backend="numpy")
    skel, stats = pc_stable_skeleton(adv_table, backend="compiled", workers=workers)
    assert np.array_equal(skel.edges, ref.edges)
    np.testing.assert_allclose(skel.strength, ref.strength, rtol=0, atol=1e-12)
    assert [o.tests for o in stats.orders] == [o.tests for o in rstats.orders]
    assert stats.singular_tests == rstats.singular_tests
    for order, (pairs, seps) in ref.removed.items():
        assert np.array_equal(skel.removed[order][0], pairs)
        assert np.array_equal(skel.removed[order][1], seps)


@needs_compiled
@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**31 - 1), st.booleans())
def test_backends_agree_on_noise(seed, conc):
    t = _noise_table(G3, 3, 60, seed)
    prior = TemporalPrior(conc)
    a, sa = pc_stable_skeleton(t, prior, backend="numpy")
    b, sb = pc_stable_skeleton(t, prior, backend="compiled", workers=3)
    assert np.array_equal(a.edges, b.edges)
    assert [o.tests for o in sa.orders] == [o.tests for o in sb.orders]


def test_sepsets_certify_independence(adv_table):
    skel, _ = pc_stable_skeleton(adv_table, alpha=0.05)
    data = adv_table.data  # tier-major columns already match node numbering
    n = data.shape[0]
    checked = 0
    for order, (pairs, seps) in skel.removed.items():
        for (u, v), sep in zip(pairs, seps):
            assert skel.sepset(u, v) == tuple(int(c) for c in sep)
            assert u not in sep and v not in sep
            try:
                r = partial_correlation(data, int(u), int(v), sep.tolist())
            except CollinearError:
                continue
            assert fisher_z_test(r, n, order, 0.05).independent
            checked += 1
    assert checked > 0
    u, v = skel.edges[0]
    assert skel.sepset(int(u), int(v)) is None


def test_strength_is_min_over_tests(adv_table):
    skel, _ = pc_stable_skeleton(adv_table, max_order=0)
    data = adv_table.data
    for (u, v), s in zip(skel.edges[:20], skel.strength[:20]):
        assert s == pytest.approx(abs(np.corrcoef(data[:, u], data[:, v])[0, 1]), abs=1e-12)
    deeper, _ = pc_stable_skeleton(adv_table)
    first = {tuple(e): s for e, s in zip(skel.edges.tolist(), skel.strength)}
    for e, s in zip(deeper.edges.tolist(), deeper.strength):
        assert s <= first[tuple(e)] + 1e-15


def test_white_noise_few_edges():
    t = _noise_table(G3, 4, 3000, seed=11)
    skel, stats = pc_stable_skeleton(t)
    pairs = t.n_cols * (t.n_cols - 1) // 2
    assert stats.tests_at(0) == pairs
    # about alpha of the pairs survive order 0 by chance; later orders only remove
    assert stats.final_edges <= 0.1 * pairs


def test_max_order_zero_stops(adv_table):
    _, stats = pc_stable_skeleton(adv_table, max_order=0)
    assert [o.order for o in stats.orders] == [0] and stats.max_order == 0


def test_constant_columns_separate():
    t = _noise_table(G3, 2, 200)
    t.data[:, 4] = 1.5
    skel, _ = pc_stable_skeleton(t)
    assert not np.any(skel.edges == 4)


def test_bad_columns_rejected(adv_table):
    dup = LaggedTable(adv_table.data, adv_table.points.copy(), adv_table.tiers.copy(), adv_table.S,
                      adv_table.D, adv_table.n_points, adv_table.rows_per_run)
    dup.points[1] = dup.points[0]
    with pytest.raises(ValueError, match="exactly once"):
        pc_stable_skeleton(dup)


def test_orientation_older_to_newer(adv_table):
    skel, _ = pc_stable_skeleton(adv_table)
    g = orient(skel)
    ts, td = g.tier(g.src), g.tier(g.dst)
    assert np.all(ts[g.directed] > td[g.directed])
    assert np.all(ts[~g.directed] == td[~g.directed])
    assert np.all(g.src[~g.directed] < g.dst[~g.directed])


def test_run_discovery_and_csv_roundtrip(tmp_path):
    graph, stats = run_discovery(_advection_dataset(1), S=4)
    assert stats.wall_seconds > 0 and stats.backend == discovery.DEFAULT_BACKEND
    write_graph_csv(graph, tmp_path / "g.csv")
    back = read_graph_csv(tmp_path / "g.csv", graph.n_points, graph.S)
    for name in ("src", "dst", "directed", "strength"):
        assert np.array_equal(getattr(back, name), getattr(graph, name))
    lines = stats.to_csv().splitlines()
    assert lines[0] == "order,tests,edges_remaining" and lines[-2] == "max_order,final_edges,wall_seconds"
