import numpy as np
import pytest
from hypothesis import given, strategies as st

from infoflow.grid import GridSpec
from infoflow.velocity import (
    VelocityField, cross_currents, read_field, ring_flow, scale_to_vmax, solid_rotation,
    uniform_right, write_field,
)

G10 = GridSpec.square(10)
G20 = GridSpec.square(20)


def test_uniform_right():
    f = uniform_right(G10, 1.0)
    assert np.all(f.vx == 1.0) and np.all(f.vy == 0.0) and f.vmax == 1.0
    assert uniform_right(G10, 0.0).vmax == 0.0
    g = scale_to_vmax(uniform_right(G10, 2.0), 1.0)
    assert np.all(g.vx == 1.0)


def test_fields_are_read_only():
    f = uniform_right(G10)
    with pytest.raises(ValueError):
        f.vx[0, 0] = 3.0


def test_non_finite_rejected():
    vx = np.zeros((10, 10))
    vx[2, 2] = np.nan
    with pytest.raises(ValueError):
        VelocityField(G10, vx, np.zeros((10, 10)))


def test_ring_support_is_annulus():
    f = ring_flow(G20)
    x, y = np.meshgrid(np.arange(20) * 5.0, np.arange(20) * 5.0)
    r = np.hypot(x - 50, y - 50)
    inside = (r >= 25) & (r <= 45)
    assert np.all(f.vx[~inside] == 0.0) and np.all(f.vy[~inside] == 0.0)
    np.testing.assert_allclose(f.speed[inside], 1.0, rtol=0, atol=1e-15)


def test_ring_tangent_and_symmetry():
    f = ring_flow(G20, ccw=True)
    # (85, 50): 35 m right of the centre, ccw flow points up
    assert f.vx[10, 17] == pytest.approx(0.0, abs=1e-15)
    assert f.vy[10, 17] == pytest.approx(1.0)
    # (15, 50) sits opposite across the centre
    assert f.vx[10, 3] == pytest.approx(-f.vx[10, 17], abs=1e-15)
    assert f.vy[10, 3] == pytest.approx(-f.vy[10, 17])


def test_ring_empty_annulus_warns(caplog):
    f = ring_flow(G10, r_inner=1.0, r_outer=2.0, center=(55.0, 55.0))
    assert f.vmax == 0.0
    assert "no grid points" in caplog.text


def test_ring_bad_radii():
    with pytest.raises(ValueError):
        ring_flow(G10, r_inner=30.0, r_outer=20.0)


def test_rotation():
    f = solid_rotation(G10)
    assert (f.vx[5, 5], f.vy[5, 5]) == (0.0, 0.0)
    # top boundary (k=9) centre flows right, bottom (k=0) flows left
    assert f.vx[9, 5] > 0 and f.vy[9, 5] == 0
    assert f.vx[0, 5] < 0 and f.vy[0, 5] == 0
    # speed proportional to radius: (5,7) at r=20, (5,6) at r=10
    assert f.speed[7, 5] == pytest.approx(2 * f.speed[6, 5])
    far = np.unravel_index(np.argmax(f.speed), f.speed.shape)
    assert far == (0, 0)


def test_rotation_divergence_free_formula():
    # v = (-(y-cy), x-cx) * sign: d vx/dx + d vy/dy = 0 identically; check with exact finite differences
    f = solid_rotation(G10, ccw=True)
    dvx_dx = (f.vx[:, 2:] - f.vx[:, :-2])
    dvy_dy = (f.vy[2:, :] - f.vy[:-2, :])
    assert np.all(dvx_dx == 0) and np.all(dvy_dy == 0)


def test_cross_currents():
    f = cross_currents(G20)
    assert np.all(f.vx > 0) and np.all(f.vy > 0)
    assert np.unravel_index(np.argmax(f.speed), f.speed.shape) == (10, 10)
    assert f.speed[0, 0] < f.speed[10, 10]
    with pytest.raises(ValueError):
        cross_currents(G20, profile_width=0.0)


def test_scale_to_vmax():
    f = solid_rotation(G20)
    g = scale_to_vmax(f, 1.0)
    assert g.vmax == pytest.approx(1.0, rel=4e-16)
    assert np.argmax(g.speed) == np.argmax(f.speed)
    nz = f.speed > 0
    np.testing.assert_allclose(g.vx[nz] / g.speed[nz], f.vx[nz] / f.speed[nz], rtol=0, atol=1e-15)
    with pytest.raises(ValueError, match="cannot scale zero field"):
        scale_to_vmax(uniform_right(G10, 0.0))


@given(st.floats(0.1, 50.0), st.floats(0.1, 10.0))
def test_scale_any_target(speed, target):
    g = scale_to_vmax(uniform_right(G10, speed), target)
    assert g.vmax == pytest.approx(target, rel=1e-15)


@pytest.mark.parametrize("ctor", [uniform_right, ring_flow, solid_rotation, cross_currents])
def test_field_roundtrip(tmp_path, ctor):
    f = ctor(G20)
    write_field(f, tmp_path / "f.csv")
    g = read_field(tmp_path / "f.csv")
    assert np.array_equal(f.vx, g.vx) and np.array_equal(f.vy, g.vy)
    assert g.scenario == f.scenario and g.grid == f.grid
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "j,k,vx,vy"


def test_read_field_missing_sidecar(tmp_path):
    write_field(uniform_right(G10), tmp_path / "f.csv")
    (tmp_path / "f.json").unlink()
    with pytest.raises(FileNotFoundError):
        read_field(tmp_path / "f.csv")
