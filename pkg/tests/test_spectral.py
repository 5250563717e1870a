import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slabmhd import spectral as sp
from slabmhd.core import COS, SIN, VECTOR_PARITY, GridSpec, gaussian_packet
from slabmhd.solver3d import Solver3D

from conftest import random_smooth


def grid_for(delta):
    return GridSpec(16, 16, 8, delta, lh=2 * math.pi)


@pytest.mark.parametrize("delta", [1.0, 0.25])
def test_constant_is_single_coefficient(delta):
    g = grid_for(delta)
    fh = sp.to_spectral(np.full(g.shape, 3.0), g, COS)
    assert fh[0, 0, 0] == pytest.approx(3.0)
    rest = fh.copy()
    rest[0, 0, 0] = 0
    assert np.abs(rest).max() < 1e-14


@pytest.mark.parametrize("delta", [1.0, 0.5])
def test_basis_function_is_single_coefficient(delta):
    g = grid_for(delta)
    x1, _, x3 = g.mesh()
    f = np.cos(x1) * np.cos(np.pi * (x3 + delta) / (2 * delta)) + 0 * g.mesh()[1]
    fh = sp.to_spectral(f, g, COS)
    support = np.argwhere(np.abs(fh) > 1e-12)
    assert [tuple(s) for s in support] == [(1, 0, 1)]


@pytest.mark.parametrize("parity", [COS, SIN])
@pytest.mark.parametrize("seed", range(3))
def test_round_trip(parity, seed):
    g = grid_for(0.3)
    f = random_smooth(g, np.random.default_rng(seed), parity)
    back = sp.to_physical(sp.to_spectral(f, g, parity), g, parity)
    assert np.abs(back - f).max() < 1e-13 * max(1.0, np.abs(f).max())


def test_x1_derivative(box):
    x1 = np.broadcast_to(box.mesh()[0], box.shape)
    d, parity = sp.derivative(sp.to_spectral(np.cos(x1), box, COS), box, 1, COS)
    assert parity == COS
    np.testing.assert_allclose(sp.to_physical(d, box, COS), -np.sin(x1), atol=1e-13)


@pytest.mark.parametrize("delta", [1.0, 0.25])
def test_x3_derivative(delta):
    g = grid_for(delta)
    x3 = np.broadcast_to(g.mesh()[2], g.shape)
    m1 = np.pi / (2 * delta)
    d, parity = sp.derivative(sp.to_spectral(np.sin(m1 * (x3 + delta)), g, SIN), g, 3, SIN)
    assert parity == COS
    np.testing.assert_allclose(sp.to_physical(d, g, COS), m1 * np.cos(m1 * (x3 + delta)), atol=1e-12 * m1)


def test_divergence_identity_on_packets():
    g = GridSpec(32, 32, 8, 0.5)
    st_ = gaussian_packet(g, 0.01, widths=(5.0, 5.0), seed=4)
    zh = st_.zp_hat
    d3, _ = sp.derivative(zh[2], g, 3, SIN)
    div_h = sp.derivative(zh[0], g, 1, COS)[0] + sp.derivative(zh[1], g, 2, COS)[0]
    scale = np.abs(div_h).max()
    assert np.abs(d3 + div_h).max() < 1e-12 * max(scale, 1e-300) + 1e-18


@pytest.mark.parametrize("delta", [1.0, 0.3])
def test_poisson_zero_and_manufactured(delta):
    g = grid_for(delta)
    assert not sp.poisson_neumann(np.zeros(g.spectral_shape, complex), g).any()
    x1, x2, _ = np.broadcast_arrays(*g.mesh())
    p = sp.to_physical(sp.poisson_neumann(sp.to_spectral(np.cos(x1) * np.cos(x2), g, COS), g), g, COS)
    np.testing.assert_allclose(p, 0.5 * np.cos(x1) * np.cos(x2), atol=1e-14)


def test_shear_source_vanishes(box):
    x1, _, _ = np.broadcast_arrays(*box.mesh())
    zero = np.zeros(box.shape)
    zp = sp.vector_to_spectral(np.array([zero, np.sin(x1) + 0.3 * np.cos(2 * x1), zero]), box)
    zm = sp.vector_to_spectral(np.array([zero, np.cos(3 * x1), zero]), box)
    source = Solver3D(box).nonlinear_terms(zp, zm)[2]
    assert np.abs(source).max() < 1e-15


def _random_vector(g, seed):
    rng = np.random.default_rng(seed)
    return np.array([random_smooth(g, rng, p) for p in VECTOR_PARITY])


@pytest.mark.parametrize("metric", [1.0, 16.0])
def test_leray_properties(metric):
    g = grid_for(1.0)
    vh = sp.vector_to_spectral(_random_vector(g, 1), g)
    p = sp.leray_project(vh, g, metric)
    # the rescaled projector still removes the plain divergence
    assert sp.l2_norm(sp.divergence(p, g), g, COS) < 1e-12 * sp.vector_l2(vh, g)
    np.testing.assert_allclose(sp.leray_project(p, g, metric), p, atol=1e-14 * np.abs(p).max())


def test_leray_keeps_solenoidal_and_kills_gradients():
    g = GridSpec(32, 32, 8, 1.0)
    st_ = gaussian_packet(g, 0.01, widths=(5.0, 5.0), seed=5)
    np.testing.assert_allclose(sp.leray_project(st_.zp_hat, g), st_.zp_hat, atol=1e-14 * np.abs(st_.zp_hat).max())
    phi = sp.to_spectral(random_smooth(g, np.random.default_rng(2), COS), g, COS) * g.mask
    grad = sp.gradient(phi, g)
    assert np.abs(sp.leray_project(grad, g)).max() < 1e-13 * np.abs(grad).max()


def test_vector_identity(box):
    vh = sp.vector_to_spectral(_random_vector(box, 3), box)
    lap = np.zeros_like(vh)
    for c, p in enumerate(VECTOR_PARITY):
        for axis in range(3):
            d, q = sp.partial(vh[c], box, axis, p)
            lap[c] += sp.partial(d, box, axis, q)[0]
    grad_div = sp.gradient(sp.divergence(vh, box), box)
    cc = sp.curl(sp.curl(vh, box, VECTOR_PARITY), box, (SIN, SIN, COS))
    resid = np.abs(-lap - (-grad_div + cc)).max()
    assert resid < 1e-12 * np.abs(lap).max()


def test_parseval(box):
    f = random_smooth(box, np.random.default_rng(4), COS)
    assert sp.l2_norm(sp.to_spectral(f, box, COS), box, COS) == pytest.approx(sp.nodal_l2(f, box), rel=1e-12)
    f = random_smooth(box, np.random.default_rng(5), SIN)
    assert sp.l2_norm(sp.to_spectral(f, box, SIN), box, SIN) == pytest.approx(sp.nodal_l2(f, box), rel=1e-12)


def test_products_are_dealiased():
    g = GridSpec(32, 32, 8, 1.0)
    st_ = gaussian_packet(g, 0.5, widths=(5.0, 5.0), seed=6)
    out = Solver3D(g).nonlinear_terms(st_.zp_hat, st_.zm_hat)
    for term in out[:3]:
        assert not (term * ~g.mask).any()


def test_shift_identity_and_quarter_period(box):
    x1 = np.broadcast_to(box.mesh()[0], box.shape)
    fh = sp.to_spectral(np.cos(x1), box, COS)
    np.testing.assert_array_equal(sp.shift_x1(fh, box, 0.0), fh)
    np.testing.assert_allclose(sp.to_physical(sp.shift_x1(fh, box, math.pi / 2), box, COS), np.sin(x1), atol=1e-13)


@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(0, 1000))
def test_shift_group(s1, s2, seed):
    g = grid_for(1.0)
    fh = sp.to_spectral(random_smooth(g, np.random.default_rng(seed)), g, COS)
    a = sp.shift_x1(sp.shift_x1(fh, g, s1), g, s2)
    b = sp.shift_x1(fh, g, s1 + s2)
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(sp.shift_x1(sp.shift_x1(fh, g, s1), g, -s1), fh, atol=1e-13)


@given(st.integers(0, 2**31), st.floats(0.05, 2.0))
def test_round_trip_property(seed, delta):
    g = grid_for(delta)
    v = _random_vector(g, seed)
    back = sp.vector_to_physical(sp.vector_to_spectral(v, g), g)
    assert np.abs(back - v).max() < 1e-13 * max(1.0, np.abs(v).max())


@given(st.integers(0, 2**31))
def test_leray_idempotent_property(seed):
    g = grid_for(0.5)
    vh = sp.vector_to_spectral(_random_vector(g, seed), g)
    p = sp.leray_project(vh, g)
    np.testing.assert_allclose(sp.leray_project(p, g), p, atol=1e-13 * max(np.abs(p).max(), 1.0))
