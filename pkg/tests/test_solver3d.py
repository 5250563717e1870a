import math

import numpy as np
import pytest

from slabmhd import spectral as sp
from slabmhd.core import ElsasserState, GridSpec, gaussian_packet
from slabmhd.solver3d import (
    CFLViolation,
    MonitorAbort,
    Solver3D,
    energy_drift,
    from_rescaled,
    pressure_from_state,
    relative_l2_difference,
    rescaled_solver,
    rhs,
    to_rescaled,
)


def _fields(g, zp, zm):
    return ElsasserState.from_physical(np.array(zp), np.array(zm), g)


def test_zero_state(box):
    st_ = ElsasserState.zeros(box)
    assert not pressure_from_state(st_).any()
    dzp, dzm, p = rhs(st_)
    assert not dzp.any() and not dzm.any() and not p.any()
    out = Solver3D(box).step_rk4(st_, 0.1)
    assert not out.zp_hat.any() and not out.zm_hat.any()


def test_shear_pair_has_no_pressure(box):
    x1, _, _ = np.broadcast_arrays(*box.mesh())
    zero = np.zeros(box.shape)
    st_ = _fields(box, [zero, np.sin(x1), zero], [zero, np.cos(x1), zero])
    assert np.abs(pressure_from_state(st_)).max() < 1e-15


@pytest.mark.parametrize("delta", [1.0, 0.25])
def test_manufactured_pressure(delta):
    g = GridSpec(16, 16, 8, delta, lh=2 * math.pi)
    x1, x2, _ = np.broadcast_arrays(*g.mesh())
    zero = np.zeros(g.shape)
    st_ = _fields(g, [np.sin(x2), zero, zero], [zero, np.sin(x1), zero])
    np.testing.assert_allclose(pressure_from_state(st_), 0.5 * np.cos(x1) * np.cos(x2), atol=1e-10)


def test_linear_rhs_is_transport(packet):
    dzp, dzm, _ = rhs(packet, nonlinear=False)
    g = packet.grid
    d1p = np.array([sp.partial(packet.zp_hat[c], g, 0, p)[0] for c, p in enumerate(("cos", "cos", "sin"))])
    d1m = np.array([sp.partial(packet.zm_hat[c], g, 0, p)[0] for c, p in enumerate(("cos", "cos", "sin"))])
    np.testing.assert_allclose(dzp, d1p * g.mask, atol=1e-17)
    np.testing.assert_allclose(dzm, -d1m * g.mask, atol=1e-17)


@pytest.mark.parametrize("delta", [1.0, 0.25])
def test_rhs_is_solenoidal(delta):
    g = GridSpec(32, 32, 8, delta)
    st_ = gaussian_packet(g, 0.05, widths=(5.0, 5.0), seed=8)
    dzp, dzm, _ = rhs(st_)
    for d in (dzp, dzm):
        assert sp.l2_norm(sp.divergence(d, g), g, "cos") < 1e-12 * max(sp.vector_l2(d, g), 1e-300)


def _mode_error(box, scheme, dt, T=1.0):
    x1, _, _ = np.broadcast_arrays(*box.mesh())
    zero = np.zeros(box.shape)
    st_ = _fields(box, [zero, np.cos(x1) + 0.5 * np.sin(2 * x1), zero], [zero] * 3)
    s = Solver3D(box, nonlinear=False, scheme=scheme, boundary_tol=np.inf)
    out = s.run(st_, T, dt=dt).state
    exact = np.cos(x1 + T) + 0.5 * np.sin(2 * (x1 + T))
    return np.abs(out.zp[1] - exact).max()


def test_linear_mode_transport_exact_with_integrating_factor(box):
    assert _mode_error(box, "ifrk4", 0.05) < 1e-13


def test_linear_mode_transport_rk4_is_fourth_order(box):
    e1, e2 = _mode_error(box, "rk4", 0.1), _mode_error(box, "rk4", 0.05)
    assert 14 < e1 / e2 < 18


def test_step_reversibility(packet):
    s = Solver3D(packet.grid)
    dt = 0.5 * s.cfl_dt(packet)
    back = s.step_rk4(s.step_rk4(packet, dt), -dt)
    assert relative_l2_difference(back, packet) < 1e-10


def test_cfl_violation(packet):
    s = Solver3D(packet.grid)
    with pytest.raises(CFLViolation) as err:
        s.step_rk4(packet, 10 * s.cfl_dt(packet))
    assert err.value.suggested == pytest.approx(s.cfl_dt(packet))


def test_cfl_rule(packet):
    s = Solver3D(packet.grid, cfl=0.4)
    g = packet.grid
    mz = sp.max_magnitude(packet.zp_hat, g) + sp.max_magnitude(packet.zm_hat, g)
    assert s.cfl_dt(packet) == pytest.approx(0.4 * min(g.dx1, g.dx2, g.dx3) / (1 + mz))


def test_run_identity_and_callbacks(packet):
    seen = []
    res = Solver3D(packet.grid).run(packet, packet.t, [lambda s, info: seen.append(info["t"])])
    assert seen == [packet.t]
    np.testing.assert_array_equal(res.state.zp_hat, packet.zp_hat)
    assert res.report.steps == 0


def test_run_conserves_and_reverses(packet):
    s = Solver3D(packet.grid)
    fwd = s.run(packet, 2.0)
    # rk4 at the CFL step conserves to its truncation error
    assert energy_drift(fwd) < 1e-9
    assert fwd.report.max_divergence < 1e-10 and fwd.report.max_wall == 0.0
    assert fwd.report.bootstrap_ok
    back = s.run(fwd.state, 0.0)
    assert relative_l2_difference(back.state, packet) < 1e-8


def test_rescaled_solver_is_the_slab_solver_at_unit_thickness(packet):
    a = Solver3D(packet.grid).run(packet, 1.0, dt=0.1).state
    b = rescaled_solver(1.0, packet.grid).run(to_rescaled(packet), 1.0, dt=0.1).state
    assert np.abs(a.zp_hat - b.zp_hat).max() <= 1e-12 * np.abs(a.zp_hat).max()


@pytest.mark.parametrize("delta", [0.5, 0.25])
def test_rescaled_system_matches_the_slab(delta):
    g = GridSpec(32, 32, 8, delta)
    st_ = gaussian_packet(g, 0.05, widths=(5.0, 5.0), seed=9)
    slab = Solver3D(g).run(st_, 0.5, dt=0.02).state
    unit = rescaled_solver(delta, g.with_delta(1.0)).run(to_rescaled(st_), 0.5, dt=0.02).state
    assert relative_l2_difference(from_rescaled(unit, delta), slab) < 1e-12


def test_rescaled_run_reports_slab_energy():
    g = GridSpec(32, 32, 8, 0.25)
    st_ = gaussian_packet(g, 0.05, widths=(5.0, 5.0), seed=9)
    res = rescaled_solver(0.25, g.with_delta(1.0)).run(to_rescaled(st_), 1.0)
    assert res.report.energy0[0] == pytest.approx(st_.energy(1), rel=1e-13)
    assert energy_drift(res) < 1e-10


def test_boundary_monitor_aborts(box):
    x1, _, _ = np.broadcast_arrays(*box.mesh())
    zero = np.zeros(box.shape)
    st_ = _fields(box, [zero, 0.01 * np.cos(x1), zero], [zero] * 3)
    with pytest.raises(MonitorAbort) as err:
        Solver3D(box).run(st_, 1.0)
    assert err.value.report.max_boundary_fraction > 1e-6


@pytest.mark.parametrize("scheme", ["euler", ""])
def test_unknown_scheme(box, scheme):
    with pytest.raises(ValueError):
        Solver3D(box, scheme=scheme)


def test_rescaled_solver_needs_unit_slab():
    with pytest.raises(ValueError):
        rescaled_solver(0.5, GridSpec(16, 16, 8, 0.5))
