import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infoflow.grid import GridSpec
from infoflow.simulate import (
    FieldState, SimParams, StabilityError, Stencil, equilibrium, make_params, run, stable_dt, step,
)
from infoflow.velocity import VelocityField, cross_currents, ring_flow, solid_rotation, uniform_right

G10 = GridSpec.square(10)


def upwind_reference(f, vx, vy, p: SimParams, g: GridSpec):
    """Derivative form of the scheme: one-sided upwind first derivatives, central second ones."""
    fw, fe = np.roll(f, 1, axis=1), np.roll(f, -1, axis=1)
    fs, fn = np.roll(f, 1, axis=0), np.roll(f, -1, axis=0)
    dfdx = np.where(vx >= 0, (f - fw) / g.dx, (fe - f) / g.dx)
    dfdy = np.where(vy >= 0, (f - fs) / g.dy, (fn - f) / g.dy)
    out = f + p.kappa_x * p.dt * (fe - 2 * f + fw) / g.dx**2 + p.kappa_y * p.dt * (fn - 2 * f + fs) / g.dy**2
    if p.advection_enabled:
        out = out - vx * p.dt * dfdx - vy * p.dt * dfdy
    return out


def test_stable_dt_examples():
    assert stable_dt(G10, uniform_right(G10), 0, 0, 1.0) == 10.0
    assert stable_dt(G10, None, 1, 1, 1.0, advection_enabled=False) == 25.0
    f = uniform_right(G10)
    assert stable_dt(G10, f, 0, 0, 0.5) == 0.5 * stable_dt(G10, f, 0, 0, 1.0)
    assert stable_dt(G10, f, 1, 1, 0.5) == 5.0


def test_stable_dt_errors():
    with pytest.raises(ValueError, match="no dynamics"):
        stable_dt(G10, uniform_right(G10, 0.0), 0, 0, 1.0)
    with pytest.raises(ValueError, match="no dynamics"):
        stable_dt(G10, uniform_right(G10), 0, 0, 1.0, advection_enabled=False)
    with pytest.raises(ValueError):
        stable_dt(G10, uniform_right(G10), 0, 0, 1.5)


def test_stable_dt_takes_tighter_bound():
    # diffusion bound 1/(2*(0.04+0.04)) = 6.25 s beats advection's 10 s
    assert stable_dt(G10, None, 4, 4, 1.0, advection_enabled=False) == 6.25
    assert stable_dt(G10, uniform_right(G10), 0.5, 0.5, 0.7) == 7.0


@pytest.mark.parametrize("ctor", [ring_flow, solid_rotation, cross_currents])
@pytest.mark.parametrize("kappa", [0.0, 1.0])
def test_positivity_cap(ctor, kappa):
    g = GridSpec.square(20)
    fld = ctor(g)
    p = make_params(g, fld, kappa, kappa, 1.0)
    st = Stencil(g, fld, p)
    assert st.center.min() >= -1e-12
    # the cap binds: some point sits exactly on the positivity limit
    assert st.center.min() <= 1e-12
    # the separate per-axis bound alone would allow a longer step
    sep = min(5.0 / np.max(np.abs(fld.vx)), 5.0 / np.max(np.abs(fld.vy)))
    assert p.dt < sep


def test_params_validation():
    with pytest.raises(ValueError):
        SimParams(-1, 0, 1.0, True, 1.0)
    with pytest.raises(ValueError):
        SimParams(0, 0, 0.0, True, 1.0)
    with pytest.raises(ValueError):
        SimParams(0, 0, 1.0, True, 0.0)


def test_constant_state_is_fixed():
    fld = ring_flow(G10)
    p = make_params(G10, fld, 1, 1, 0.7)
    s = FieldState(G10, np.full((10, 10), 3.25))
    np.testing.assert_allclose(step(s, fld, p).f, 3.25, rtol=0, atol=1e-13)


def test_exact_shift_one_step():
    rng = np.random.default_rng(0)
    f0 = rng.normal(size=(10, 10))
    p = make_params(G10, uniform_right(G10), 0, 0, 1.0)
    out = step(FieldState(G10, f0), uniform_right(G10), p)
    assert np.array_equal(out.f, np.roll(f0, 1, axis=1))
    assert out.t == 10.0 and out.step_index == 1


def test_single_diffusion_step_by_hand():
    f0 = np.zeros((10, 10))
    f0[4, 4] = 500.0
    p = SimParams(1.0, 1.0, 1.0, False, 25.0)
    f1 = step(FieldState(G10, f0), None, p).f
    expected = np.zeros((10, 10))
    expected[4, 3] = expected[4, 5] = expected[3, 4] = expected[5, 4] = 125.0
    assert np.array_equal(f1, expected)


@pytest.mark.parametrize("ctor", [uniform_right, ring_flow, solid_rotation, cross_currents])
@pytest.mark.parametrize("C", [0.3, 0.7, 1.0])
def test_matches_derivative_form(ctor, C):
    g = GridSpec.square(12)
    fld = ctor(g)
    p = make_params(g, fld, 0.8, 0.3, C)
    f = np.random.default_rng(1).normal(size=(12, 12))
    got = step(FieldState(g, f), fld, p).f
    np.testing.assert_allclose(got, upwind_reference(f, fld.vx, fld.vy, p, g), rtol=0, atol=1e-12)


def test_negative_velocities_pull_from_east_and_north():
    g = GridSpec(6, 5, 1.0, 1.0)
    fld = VelocityField(g, np.full((5, 6), -1.0), np.full((5, 6), -1.0))
    p = SimParams(0.0, 0.0, 0.5, True, 0.5)
    f = np.random.default_rng(2).normal(size=(5, 6))
    got = step(FieldState(g, f), fld, p).f
    np.testing.assert_allclose(got, upwind_reference(f, fld.vx, fld.vy, p, g), rtol=0, atol=1e-14)


def test_forcing_added_after_transport():
    p = make_params(G10, uniform_right(G10), 0, 0, 1.0)
    f0 = np.zeros((10, 10))
    f0[0, 0] = 1.0
    forcing = np.zeros((10, 10))
    forcing[0, 0] = 7.0
    out = step(FieldState(G10, f0), uniform_right(G10), p, forcing).f
    assert out[0, 0] == 7.0 and out[0, 1] == 1.0


def test_advection_disabled_ignores_field():
    p = SimParams(1.0, 1.0, 1.0, False, 10.0)
    f = np.random.default_rng(3).normal(size=(10, 10))
    a = step(FieldState(G10, f), uniform_right(G10), p).f
    b = step(FieldState(G10, f), None, p).f
    assert np.array_equal(a, b)


def test_run_lengths_and_shift_composition():
    p = make_params(G10, uniform_right(G10), 0, 0, 1.0)
    f0 = np.random.default_rng(4).normal(size=(10, 10))
    assert len(run(FieldState(G10, f0), uniform_right(G10), p, 0)) == 1
    states = run(FieldState(G10, f0), uniform_right(G10), p, 50)
    assert len(states) == 51
    err = max(np.max(np.abs(s.f - np.roll(f0, i, axis=1))) for i, s in enumerate(states))
    assert err <= 1e-12


def test_diffusion_conserves_mass():
    p = SimParams(1.0, 0.5, 0.9, False, stable_dt(G10, None, 1.0, 0.5, 0.9, False))
    f0 = np.random.default_rng(5).uniform(0, 10, size=(10, 10))
    states = run(FieldState(G10, f0), None, p, 1000)
    total = f0.sum()
    assert max(abs(s.f.sum() - total) for s in states) <= 1e-9 * abs(total)


def test_advection_conserves_mass():
    g = GridSpec.square(16)
    fld = cross_currents(g)
    p = make_params(g, fld, 0, 0, 0.8)
    f0 = np.random.default_rng(6).uniform(0, 1, size=(16, 16))
    last = run(FieldState(g, f0), fld, p, 200)[-1]
    assert last.f.sum() == pytest.approx(f0.sum(), rel=1e-12)


def test_forcing_script_called_per_step():
    calls = []

    def script(i):
        calls.append(i)
        return None

    p = SimParams(1.0, 1.0, 1.0, False, 25.0)
    run(equilibrium(G10), None, p, 5, script)
    assert calls == [0, 1, 2, 3, 4]


def test_instability_reported():
    # dt far beyond the diffusive bound blows up
    p = SimParams(1.0, 1.0, 1.0, False, 400.0)
    f0 = np.zeros((10, 10))
    f0[2, 3] = 1.0
    with pytest.raises(StabilityError, match=r"point \(j=\d+, k=\d+\) on step \d+"):
        run(FieldState(G10, f0), None, p, 2000)


def test_numerical_diffusion_grows_as_courant_drops():
    fld = uniform_right(G10)
    peaks = []
    for C in (1.0, 0.8, 0.5, 0.25):
        p = make_params(G10, fld, 0, 0, C)
        f0 = np.zeros((10, 10))
        f0[5, 0] = 1.0
        n = round(100.0 / p.dt)  # same physical time
        peaks.append(run(FieldState(G10, f0), fld, p, n)[-1].f.max())
    assert all(a >= b for a, b in zip(peaks, peaks[1:]))
    assert peaks[0] == 1.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_lower_courant_stays_stable(C, kx, ky):
    fld = ring_flow(G10)
    f0 = np.random.default_rng(7).normal(size=(10, 10))
    for c in (C, C / 2):
        p = make_params(G10, fld, kx, ky, c)
        last = run(FieldState(G10, f0), fld, p, 60)[-1]
        assert np.max(np.abs(last.f)) <= np.max(np.abs(f0)) + 1e-12
