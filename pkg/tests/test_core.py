import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slabmhd.core import (
    ElsasserState,
    GridSpec,
    WeightContext,
    elsasser_from_physical,
    gaussian_packet,
    physical_from_elsasser,
    weight,
)


@pytest.mark.parametrize("kw", [dict(mv=1), dict(delta=0.0), dict(delta=-1.0), dict(n1=12), dict(n2=2)])
def test_gridspec_rejects_bad_parameters(kw):
    with pytest.raises(ValueError):
        GridSpec(**kw)


def test_elsasser_constant_fields():
    v = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])
    zp, zm = elsasser_from_physical(v, b)
    np.testing.assert_array_equal(zp, [1, 1, 0])
    np.testing.assert_array_equal(zm, [1, -1, 0])
    zp, zm = elsasser_from_physical(0 * v, 0 * b)
    assert not zp.any() and not zm.any()


@given(st.integers(0, 2**32 - 1))
def test_elsasser_round_trip(seed):
    rng = np.random.default_rng(seed)
    v, b = rng.normal(size=(2, 3, 4, 5))
    v2, b2 = physical_from_elsasser(*elsasser_from_physical(v, b))
    np.testing.assert_allclose(v2, v, atol=1e-14)
    np.testing.assert_allclose(b2, b, atol=1e-14)


@pytest.mark.parametrize("x1, expected", [(0.0, 1.0), (1.0, math.sqrt(2.0))])
def test_weight_values(x1, expected):
    assert weight(WeightContext(), 1, 0.0, x1) == pytest.approx(expected, abs=1e-15)


def test_product_example():
    ctx = WeightContext()
    prod = ctx.weight(1, 5.0, 0.0) * ctx.weight(-1, 5.0, 0.0)
    assert prod == pytest.approx(26.0)
    assert prod >= 1 + 5.0


@given(
    st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.sampled_from([1, -1]),
    st.floats(0.01, 0.33),
)
def test_weight_at_least_one(t, x1, a, sign, sigma):
    ctx = WeightContext(sigma, a)
    assert ctx.weight(sign, t, x1) >= 1.0
    assert ctx.energy_weight(sign, t, x1) >= 1.0


@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0, 50))
def test_weight_centre_moves_with_the_wave(t, x1, a):
    # <u_+> is centred at x1 = t + a, <u_-> at x1 = -(t + a)
    ctx = WeightContext(a=a)
    assert ctx.weight(1, t, t + a) == 1.0
    assert ctx.weight(-1, t, -(t + a)) == 1.0
    assert ctx.weight(1, t, x1) == pytest.approx(ctx.weight(-1, t, -x1))


def test_recentred_weights_match_forward_weights():
    x = np.linspace(-50, 50, 101)
    fwd = WeightContext(a=0.0)
    back = WeightContext(a=20.0, t_origin=20.0)
    for t in (0.0, 7.0, 20.0):
        for s in (1, -1):
            np.testing.assert_array_equal(back.weight(s, t, x), fwd.weight(s, t, x))


def test_zero_amplitude_packet(packet_grid):
    st_ = gaussian_packet(packet_grid, 0.0)
    assert not st_.zp_hat.any() and not st_.zm_hat.any()


@pytest.mark.parametrize("seed", [0, 1, 7])
@pytest.mark.parametrize("delta", [1.0, 0.25])
def test_packet_invariants(seed, delta):
    g = GridSpec(32, 32, 8, delta)
    st_ = gaussian_packet(g, 0.01, widths=(5.0, 5.0), seed=seed)
    assert st_.divergence_residual() < 1e-10
    assert st_.wall_residual() == 0.0
    st_.check()
    # max |Z| = amplitude on the unit-slab profile; z^3 = delta Z^3 only shrinks it
    for z in (st_.zp, st_.zm):
        mag = np.sqrt((z**2).sum(axis=0)).max()
        if delta == 1.0:
            assert mag == pytest.approx(0.01, rel=1e-12)
        else:
            assert mag <= 0.01 * (1 + 1e-12)
    assert np.isfinite(st_.zp).all()


def test_packet_family_is_a_rescaling():
    a = gaussian_packet(GridSpec(32, 32, 8, 1.0), 0.01, widths=(5.0, 5.0), seed=2)
    b = gaussian_packet(GridSpec(32, 32, 8, 0.25), 0.01, widths=(5.0, 5.0), seed=2)
    np.testing.assert_allclose(b.zp[:2], a.zp[:2], atol=1e-15)
    np.testing.assert_allclose(b.zp[2], 0.25 * a.zp[2], atol=1e-15)


def test_packet_must_be_localized():
    with pytest.raises(ValueError, match="localized"):
        gaussian_packet(GridSpec(32, 32, 8, 1.0, lh=4 * math.pi), 0.01, widths=(6.0, 6.0))


def test_state_shape_checked(box):
    with pytest.raises(ValueError):
        ElsasserState(np.zeros((3, 2, 2, 2), complex), np.zeros((3, 2, 2, 2), complex), box)
