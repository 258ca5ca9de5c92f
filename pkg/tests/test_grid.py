import pytest
from hypothesis import given, strategies as st

from infoflow.grid import GridSpec, PointIndex, min_image_displacement, point_coords, wrap

G10 = GridSpec.square(10)


def test_square_spacing():
    assert (G10.dx, G10.dy) == (10.0, 10.0)
    assert GridSpec.square(20).dx == 5.0
    assert (G10.lx, G10.ly, G10.n_points) == (100.0, 100.0, 100)


@pytest.mark.parametrize("bad", [(1, 5, 1.0, 1.0), (5, 5, 0.0, 1.0), (5, 5, 1.0, -2.0)])
def test_invalid_grid(bad):
    with pytest.raises(ValueError):
        GridSpec(*bad)


@pytest.mark.parametrize(
    "jk, expected", [((10, 0), (0, 0)), ((-1, 3), (9, 3)), ((4, 4), (4, 4)), ((-21, 37), (9, 7))]
)
def test_wrap(jk, expected):
    assert wrap(G10, *jk) == PointIndex(*expected)


@pytest.mark.parametrize(
    "src, dst, expected",
    [((9, 0), (0, 0), (10.0, 0.0)), ((3, 3), (3, 3), (0.0, 0.0)), ((2, 3), (5, 3), (30.0, 0.0)),
     ((0, 0), (5, 0), (50.0, 0.0)), ((5, 0), (0, 0), (50.0, 0.0)), ((0, 9), (0, 0), (0.0, 10.0))],
)
def test_min_image(src, dst, expected):
    assert min_image_displacement(G10, PointIndex(*src), PointIndex(*dst)) == expected


@pytest.mark.parametrize(
    "grid, p, xy",
    [(G10, (0, 0), (0.0, 0.0)), (G10, (3, 7), (30.0, 70.0)), (GridSpec.square(20), (19, 19), (95.0, 95.0))],
)
def test_point_coords(grid, p, xy):
    assert point_coords(grid, PointIndex(*p)) == xy


def test_flat_roundtrip():
    g = GridSpec(7, 4, 1.0, 2.0)
    for idx in range(g.n_points):
        assert g.flat(g.unflat(idx)) == idx
    assert g.flat(PointIndex(3, 2)) == 17


grids = st.builds(GridSpec, st.integers(2, 12), st.integers(2, 12),
                  st.sampled_from([1.0, 2.5, 10.0]), st.sampled_from([1.0, 5.0]))


@given(grids, st.integers(-100, 100), st.integers(-100, 100))
def test_wrap_idempotent(g, j, k):
    p = wrap(g, j, k)
    assert wrap(g, *p) == p
    assert 0 <= p.j < g.nx and 0 <= p.k < g.ny


@given(grids, st.data())
def test_min_image_properties(g, data):
    idx = st.integers(0, g.n_points - 1)
    a, b = g.unflat(data.draw(idx)), g.unflat(data.draw(idx))
    dx, dy = min_image_displacement(g, a, b)
    assert -g.lx / 2 < dx <= g.lx / 2 and -g.ly / 2 < dy <= g.ly / 2
    rx, ry = min_image_displacement(g, b, a)
    if dx != g.lx / 2:
        assert rx == -dx
    if dy != g.ly / 2:
        assert ry == -dy
    # the displacement really does lead from a to b on the torus
    assert wrap(g, a.j + round(dx / g.dx), a.k + round(dy / g.dy)) == b
