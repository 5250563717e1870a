import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slabmhd import spectral as sp
from slabmhd.core import COS, ElsasserState, GridSpec, gaussian_packet
from slabmhd.greens import (
    FOUR_PI,
    ImageKernelQuery,
    SingularityError,
    absolute_tail_bound,
    free_space_grad,
    grad_p_direct,
    greens_grad,
    image_sum,
    kernel_bound_probe,
    pair_tail_bound,
    prism_integrals,
    pressure_source,
    refine_cosine,
    spectral_grad_p,
    terms_for_tolerance,
)

unit = st.floats(-0.95, 0.95)


@st.composite
def queries(draw):
    delta = draw(st.sampled_from([1.0, 0.5, 0.25]))
    rho = delta * 10 ** draw(st.floats(-1, 1))
    th = draw(st.floats(0, 2 * math.pi))
    x = (0.0, 0.0, draw(unit) * delta)
    y = (rho * math.cos(th), rho * math.sin(th), draw(unit) * delta)
    return ImageKernelQuery(x, y, delta)


def test_leading_term_is_free_space():
    x, y = np.array([0.3, -0.2, 0.1]), np.array([-0.4, 0.5, -0.3])
    r = x - y
    np.testing.assert_allclose(image_sum(*r[:2], x[2], y[2], 1.0, 0) / FOUR_PI, free_space_grad(x, y), rtol=1e-14)


def test_close_points_see_free_space():
    delta = 1.0
    x, y = (0.0, 0.0, 0.0), (1e-3, 0.0, 0.0)
    v = greens_grad(ImageKernelQuery(x, y, delta)).value
    ref = free_space_grad(x, y)
    assert np.abs(v - ref).max() < 1e-5 * np.abs(ref).max()


@given(queries(), st.integers(2, 30))
def test_pair_tail_bound_is_certified(q, K):
    a = greens_grad(q, K)
    b = greens_grad(q, 8 * K)
    assert np.abs(a.value - b.value).max() <= a.tail_bound


@given(queries())
def test_reflection_symmetry(q):
    flip = lambda p: (p[0], p[1], -p[2])
    a = greens_grad(q, 40).value
    b = greens_grad(ImageKernelQuery(flip(q.x), flip(q.y), q.delta), 40).value
    np.testing.assert_allclose(b, a * [1, 1, -1], atol=1e-14 * np.abs(a).max())


@pytest.mark.parametrize("delta", [1.0, 0.25])
@pytest.mark.parametrize("wall", [1.0, -1.0])
def test_neumann_condition_at_walls(delta, wall):
    for rho in (0.3, 1.0, 3.0):
        v = image_sum(rho, 0.0, wall * delta, 0.2 * delta, delta, 200, accelerate=True)
        assert abs(v[2]) < 1e-6 * np.abs(v[0])


@pytest.mark.parametrize("delta", [1.0, 0.25])
def test_kernel_is_harmonic_away_from_the_source(delta):
    K, h = 400, 1e-4
    x = np.array([0.7, -0.4, 0.3 * delta])
    y3 = -0.5 * delta

    def g(p):
        return image_sum(p[0], p[1], p[2], y3, delta, K, accelerate=True)

    div = sum((g(x + h * e)[i] - g(x - h * e)[i]) / (2 * h) for i, e in enumerate(np.eye(3)))
    assert abs(div) < 1e-5 * np.abs(g(x)).max() / h


def test_terms_for_tolerance_is_minimal():
    for rho, delta, tol in [(1.0, 1.0, 1e-6), (0.2, 0.25, 1e-8), (5.0, 0.5, 1e-4)]:
        K = terms_for_tolerance(rho, delta, tol)
        assert pair_tail_bound(rho, delta, K) <= tol
        assert K == 1 or pair_tail_bound(rho, delta, K - 1) > tol


def test_pair_bound_decays_faster_than_absolute_bound():
    rho, delta = 1.0, 0.25
    ratio = [pair_tail_bound(rho, delta, K) / absolute_tail_bound(rho, delta, K) for K in (10, 100, 1000)]
    assert ratio[0] > ratio[1] > ratio[2]


def test_invalid_queries():
    with pytest.raises(ValueError):
        ImageKernelQuery((0, 0, 1.0), (1, 0, 0), 1.0)
    with pytest.raises(SingularityError):
        ImageKernelQuery((0, 0, 0.1), (0, 0, 0.1), 1.0)
    with pytest.raises(SingularityError):
        greens_grad(ImageKernelQuery((0, 0, 0.1), (0, 0, 0.2), 1.0))


def test_prism_integrals_match_quadrature():
    e1, e2, e3 = np.array([0.5, 1.0]), np.array([-0.3, 0.2]), np.array([0.1, 0.4])
    exact = prism_integrals(e1, e2, e3)[:, 0, 0, 0]
    n = 80
    mid = lambda e: e[0] + (np.arange(n) + 0.5) * (e[1] - e[0]) / n
    U3, U2, U1 = np.meshgrid(mid(e3), mid(e2), mid(e1), indexing="ij")
    r3 = (U1**2 + U2**2 + U3**2) ** 1.5
    vol = np.prod([e[1] - e[0] for e in (e1, e2, e3)]) / n**3
    quad = np.array([(U / r3).sum() * vol for U in (U1, U2, U3)])
    np.testing.assert_allclose(exact, quad, rtol=1e-4)


def test_prism_integrals_vanish_on_symmetric_box():
    e = np.array([-0.5, 0.5])
    assert np.abs(prism_integrals(e, 0.5 * e, 2 * e)).max() < 1e-14


@pytest.mark.parametrize("r", [1, 3])
def test_refine_cosine_interpolates(box, r):
    rng = np.random.default_rng(0)
    from conftest import random_smooth

    f = random_smooth(box, rng, COS, 3)
    fine, fg = refine_cosine(sp.to_spectral(f, box, COS), box, r)
    np.testing.assert_allclose(fine[::r, ::r, ::r], f, atol=1e-12)
    assert fg.trapezoid.sum() == pytest.approx(2 * box.delta)


def test_direct_pressure_gradient_manufactured():
    g = GridSpec(32, 32, 8, 1.0, lh=2 * math.pi)
    x1, x2, _ = np.broadcast_arrays(*g.mesh())
    zero = np.zeros(g.shape)
    state = ElsasserState.from_physical(np.array([np.sin(x2), zero, zero]), np.array([zero, np.sin(x1), zero]), g)
    pts = [(4, 5, 7), (2, 16, 16)]
    direct = grad_p_direct(pressure_source(state), g, pts)
    spec = spectral_grad_p(state)
    for n, (j3, j2, j1) in enumerate(pts):
        exact = [-0.5 * np.sin(g.x1[j1]) * np.cos(g.x2[j2]), -0.5 * np.cos(g.x1[j1]) * np.sin(g.x2[j2]), 0.0]
        np.testing.assert_allclose(spec[:, j3, j2, j1], exact, atol=1e-10)
        assert np.abs(direct[n] - exact).max() < 1e-2 * 0.5


def test_direct_pressure_gradient_zero_source(box):
    assert not grad_p_direct(np.zeros(box.shape), box, [(3, 4, 5)]).any()


def test_even_fine_factor_rejected(box):
    with pytest.raises(ValueError):
        grad_p_direct(np.ones(box.shape), box, [(3, 4, 5)], fine_factor=2)


def test_direct_options_on_a_thin_packet():
    g = GridSpec(32, 32, 8, 0.25)
    state = gaussian_packet(g, 0.01, widths=(5.0, 5.0), seed=3)
    spec = spectral_grad_p(state)
    src = pressure_source(state)
    pts = [(1, 16, 16), (4, 14, 17), (6, 17, 15)]
    ref = np.array([spec[:, j3, j2, j1] for j3, j2, j1 in pts])
    scale = np.abs(ref).max()
    base = grad_p_direct(src, g, pts)
    single = grad_p_direct(src, g, pts, extrapolate=False)
    all_exact = grad_p_direct(src, g, pts, exact_cells=1e9)
    assert np.abs(base - ref).max() < 5e-3 * scale
    # the cellwise-constant source error dominates without extrapolation
    assert np.abs(single - ref).max() > 5 * np.abs(base - ref).max()
    # far images by the midpoint rule cost little accuracy
    assert np.abs(all_exact - base).max() < 1e-3 * scale


def test_kernel_bound_probe_matches_single_queries():
    delta = 0.5
    probe = kernel_bound_probe(delta, n=20, seed=4, rho_range=(1.0, 10.0))
    rng = np.random.default_rng(4)
    rho = delta * np.exp(rng.uniform(0.0, np.log(10.0), 20))
    th = rng.uniform(0, 2 * math.pi, 20)
    x3, y3 = rng.uniform(-0.99, 0.99, (2, 20)) * delta
    c = [
        delta * r * np.linalg.norm(greens_grad(ImageKernelQuery((0, 0, a), (r * np.cos(t), r * np.sin(t), b), delta, 1e-6 / (FOUR_PI * delta * r))).value)
        for r, t, a, b in zip(rho, th, x3, y3)
    ]
    assert probe["tail_ok"]
    assert probe["constant"] == pytest.approx(max(c), rel=1e-5)


@pytest.mark.parametrize("delta", [1.0, 0.25])
def test_kernel_bound_far_field_constant(delta):
    # far from the source the slab kernel is the 2D one, 1 / (2 pi * 2 delta * rho)
    probe = kernel_bound_probe(delta, n=200, seed=1, rho_range=(50.0, 100.0))
    assert probe["median"] == pytest.approx(1 / FOUR_PI, rel=1e-3)
