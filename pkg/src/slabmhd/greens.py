"""Gradient of the slab Neumann Green's function by the method of images.

For ``Omega_delta = R^2 x (-delta, delta)`` the Neumann Green's function of
``-Delta`` has gradient::

    grad_x G(x, y) = (1/4pi) sum_k grad_x |x_k - y|^-1,
    x_{pm,k} = (x_h, (-1)^k (x3 -+ 2 k delta)),

which converges only conditionally in absolute terms but absolutely once the
``+k`` and ``-k`` images are paired: a pair decays like ``k^-3``.  The
truncation bound reported here is the pair bound::

    |P_k| <= (2 rho + 8 delta) / (rho^2 + (2 (k - 1) delta)^2)^(3/2),

summed in closed form by comparison with an integral.  The cruder
absolute-value bound ``sum_{k>K} 2 / (rho^2 + ((2k-1) delta)^2)`` decays
only like ``1 / (delta^2 K)`` and is available as :func:`absolute_tail_bound`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .core import COS, ElsasserState, GridSpec

FOUR_PI = 4.0 * math.pi


class SingularityError(ValueError):
    pass


@dataclass(frozen=True)
class ImageKernelQuery:
    x: tuple[float, float, float]
    y: tuple[float, float, float]
    delta: float
    tol: float = 1e-8

    def __post_init__(self):
        for p in (self.x, self.y):
            if not -self.delta < p[2] < self.delta:
                raise ValueError("vertical coordinates must lie strictly inside the slab")
        if np.allclose(self.x, self.y, rtol=0, atol=0):
            raise SingularityError("coincident points")


@dataclass(frozen=True)
class KernelValue:
    value: np.ndarray
    tail_bound: float
    terms: int


def pair_tail_bound(rho, delta: float, K: int):
    """Certified bound on ``|sum_{k>K} P_k| / 4pi`` for the paired image series."""
    rho = np.asarray(rho, dtype=float)
    u0 = 2.0 * max(K - 1, 0) * delta
    R = np.sqrt(rho**2 + u0**2)
    with np.errstate(divide="ignore"):
        out = (rho + 4 * delta) / delta / (R * (R + u0)) / FOUR_PI
    return out


def absolute_tail_bound(rho, delta: float, K: int):
    """Bound on ``sum_{k>K}`` of the absolute image terms, ``2 / (rho^2 + ((2k-1) delta)^2)``.

    Summed by integral comparison; this bound is valid but decays only like
    ``1 / K`` and is kept for reference.
    """
    rho = np.asarray(rho, dtype=float)
    # f(k) decreasing, so sum_{k>K} f(k) <= int_K^inf f(k) dk
    v0 = (2 * K - 1) * delta
    with np.errstate(divide="ignore"):
        integral = (np.pi / 2 - np.arctan(v0 / rho)) / (rho * 2 * delta)
    return 2 * integral / FOUR_PI


def terms_for_tolerance(rho: float, delta: float, tol: float, k_max: int = 1 << 22) -> int:
    """Smallest ``K`` whose pair tail bound is below ``tol``."""
    if pair_tail_bound(rho, delta, 1) <= tol:
        return 1
    lo, hi = 1, 2
    while pair_tail_bound(rho, delta, hi) > tol:
        lo, hi = hi, hi * 2
        if hi > k_max:
            raise ValueError(f"tolerance {tol:g} needs more than {k_max} image pairs")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pair_tail_bound(rho, delta, mid) > tol:
            lo = mid
        else:
            hi = mid
    return hi


def image_sum(r1, r2, x3, y3, delta: float, K: int, accelerate: bool = False) -> np.ndarray:
    """``4 pi`` times the truncated gradient series, vectorized over broadcastable inputs.

    ``r1, r2`` are the horizontal components of ``x_h - y_h``.  Returns an
    array with a leading axis of length 3.  With ``accelerate`` the leading
    term of the remaining tail (an integral in ``k``) is added.
    """
    r1, r2, x3, y3 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r1, r2, x3, y3)))
    rho2 = r1**2 + r2**2
    h = np.zeros(r1.shape)
    v = np.zeros(r1.shape)
    d = x3 - y3
    f = (rho2 + d**2) ** -1.5
    h += f
    v += d * f
    for k in range(1, K + 1):
        s = -1.0 if k % 2 else 1.0
        for sgn in (1.0, -1.0):
            d = s * (x3 - sgn * 2 * k * delta) - y3
            f = (rho2 + d**2) ** -1.5
            h += f
            # chain rule: d/dx3 of the reflected coordinate is (-1)^k
            v += s * d * f
    if accelerate:
        u = (2 * K + 1) * delta
        R = np.sqrt(rho2 + u**2)
        h += 1.0 / (delta * R * (R + u))
        v -= (x3 / delta) * u / R**3
    return -np.array([r1 * h, r2 * h, v])


def greens_grad(q: ImageKernelQuery, K: int | None = None) -> KernelValue:
    """Truncated image series for ``grad_x G_delta(x, y)`` with its certified tail."""
    x = np.asarray(q.x, float)
    y = np.asarray(q.y, float)
    rho = float(np.hypot(*(x[:2] - y[:2])))
    if K is None:
        if rho == 0.0:
            raise SingularityError("tail certification needs x_h != y_h")
        K = terms_for_tolerance(rho, q.delta, q.tol)
    val = image_sum(x[0] - y[0], x[1] - y[1], x[2], y[2], q.delta, K) / FOUR_PI
    bound = float(pair_tail_bound(rho, q.delta, K)) if rho > 0 else math.inf
    return KernelValue(val, bound, K)


def free_space_grad(x, y) -> np.ndarray:
    """``(1/4pi) grad_x |x - y|^-1``."""
    r = np.asarray(x, float) - np.asarray(y, float)
    return -r / (FOUR_PI * np.linalg.norm(r) ** 3)


def kernel_bound_probe(delta: float, n: int = 1000, seed: int = 0, rho_range=(1.0, 100.0), rtol: float = 1e-6) -> dict:
    """Fitted constant of ``|grad G_delta(x, y)| <= C / (delta |x_h - y_h|)``.

    Pairs have ``|x_h - y_h| / delta`` log-uniform in ``rho_range`` and
    vertical positions uniform inside the slab.  Each kernel value is
    certified to ``rtol`` relative to ``1 / (4 pi delta rho)``, its far-field size.

    Returns ``constant`` (max of ``delta rho |grad G|``), ``median`` and
    ``tail_ok`` (every certified tail below the requested tolerance).
    """
    rng = np.random.default_rng(seed)
    rho = delta * np.exp(rng.uniform(np.log(rho_range[0]), np.log(rho_range[1]), n))
    th = rng.uniform(0, 2 * math.pi, n)
    x3, y3 = rng.uniform(-0.99, 0.99, (2, n)) * delta
    tol = rtol / (FOUR_PI * delta * rho)
    # one series length for all pairs, set by the hardest one
    K = max(terms_for_tolerance(r, delta, t) for r, t in zip(rho, tol))
    val = image_sum(-rho * np.cos(th), -rho * np.sin(th), x3, y3, delta, K) / FOUR_PI
    tail_ok = bool(np.all(pair_tail_bound(rho, delta, K) <= tol))
    vals = delta * rho * np.linalg.norm(val, axis=0)
    return {"constant": float(vals.max()), "median": float(np.median(vals)), "tail_ok": tail_ok}


# --- direct pressure gradient -------------------------------------------------


def _wrap(r, length):
    return (r + length / 2) % length - length / 2


@dataclass(frozen=True)
class _FineGrid:
    n1: int
    n2: int
    mv: int
    dx1: float
    dx2: float
    dx3: float
    x3: np.ndarray
    trapezoid: np.ndarray


def refine_cosine(fh: np.ndarray, grid: GridSpec, r: int) -> tuple[np.ndarray, _FineGrid]:
    """Values of a band-limited cosine field on a grid refined ``r`` times per axis.

    Horizontal zero padding and extra vertical modes reproduce the same
    trigonometric polynomial, so the fine values are exact interpolants.
    The Nyquist modes of ``fh`` are assumed to vanish.
    """
    n2, n1, mv = grid.n2, grid.n1, grid.mv
    N1, N2, MV = n1 * r, n2 * r, mv * r
    pad = np.zeros((MV + 1, N2, N1 // 2 + 1), dtype=complex)
    half = n2 // 2
    pad[: mv + 1, :half, : n1 // 2] = fh[:, :half, : n1 // 2]
    pad[: mv + 1, N2 - half + 1 :, : n1 // 2] = fh[:, half + 1 :, : n1 // 2]
    values = sp.v_inverse(sp.h_inverse(pad, N1), COS, MV)
    dx3 = 2 * grid.delta / MV
    x3 = -grid.delta + dx3 * np.arange(MV + 1)
    trap = np.full(MV + 1, dx3)
    trap[[0, -1]] *= 0.5
    return values, _FineGrid(N1, N2, MV, grid.dx1 / r, grid.dx2 / r, dx3, x3, trap)


def _prism_primitive(x, y, z):
    """Antiderivative whose alternating corner sum is ``int x / |u|^3`` over a box.

    Symmetric in ``(y, z)``; the branch-free ``asinh`` form avoids the
    cancellation of the textbook ``log(y + r)`` expression.
    """
    r = np.sqrt(x * x + y * y + z * z)
    rxz = np.sqrt(x * x + z * z)
    rxy = np.sqrt(x * x + y * y)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(rxz > 0, z * np.arcsinh(y / rxz), 0.0)
        t2 = np.where(rxy > 0, y * np.arcsinh(z / rxy), 0.0)
        t3 = np.where(x != 0, x * np.arctan(y * z / (x * r)), 0.0)
    return t3 - t1 - t2


def prism_integrals(e1: np.ndarray, e2: np.ndarray, e3: np.ndarray) -> np.ndarray:
    """Exact ``int u / |u|^3 du`` over every cell of a tensor-product box lattice.

    ``e1, e2, e3`` are the face coordinates of ``u = y - x`` along each axis.
    Returns shape ``(3, len(e3) - 1, len(e2) - 1, len(e1) - 1)``; this is the
    free-space kernel ``grad_x |x - y|^-1`` integrated over each cell.
    """
    U3, U2, U1 = np.meshgrid(e3, e2, e1, indexing="ij")
    out = []
    for F in (_prism_primitive(U1, U2, U3), _prism_primitive(U2, U1, U3), _prism_primitive(U3, U1, U2)):
        out.append(np.diff(np.diff(np.diff(F, axis=0), axis=1), axis=2))
    return np.array(out)


def _grad_p_direct_once(
    source: np.ndarray,
    grid: GridSpec,
    points,
    K: int = 24,
    fine_factor: int = 3,
    fine_radius: int = 6,
    box_images: int = 1,
    support_tol: float = 0.0,
    exact_cells: float = 4.0,
) -> np.ndarray:
    """Single-resolution quadrature behind :func:`grad_p_direct`."""
    if fine_factor < 1 or fine_factor % 2 == 0:
        raise ValueError("fine_factor must be odd so fine cells tile the coarse ones")
    source = np.asarray(source, dtype=float)
    g = grid
    delta = g.delta
    out = np.zeros((len(points), 3))
    smax = np.abs(source).max()
    if smax == 0:
        return out
    r = fine_factor
    fs, fg = refine_cosine(sp.to_spectral(source, g, COS), g, r)
    keep = np.abs(source) > support_tol * smax
    i3s, i2s, i1s = np.nonzero(keep)
    sval = source[i3s, i2s, i1s] * g.trapezoid[i3s] * (g.dx1 * g.dx2)
    shifts = range(-box_images, box_images + 1)
    w = fine_radius * r + (r - 1) // 2
    off = np.arange(-w, w + 1)
    e1 = (np.arange(-w, w + 2) - 0.5) * fg.dx1
    e2 = (np.arange(-w, w + 2) - 0.5) * fg.dx2
    faces3 = np.concatenate([[-delta], 0.5 * (fg.x3[1:] + fg.x3[:-1]), [delta]])
    height = np.diff(faces3)
    # tail correction of the image series at the column centres
    c1 = off[None, :] * fg.dx1
    c2 = off[:, None] * fg.dx2
    u_tail = (2 * K + 1) * delta
    R_tail = np.sqrt(c1**2 + c2**2 + u_tail**2)
    h_tail = 1.0 / (delta * R_tail * (R_tail + u_tail))
    near = exact_cells * max(fg.dx1, fg.dx2)
    for n, (j3, j2, j1) in enumerate(points):
        if j3 in (0, g.mv):
            warnings.warn("evaluation point on a wall node", RuntimeWarning, stacklevel=2)
        px = (g.x1[j1], g.x2[j2], g.x3[j3])
        r1 = _wrap(px[0] - g.x1[i1s], g.l1)
        r2 = _wrap(px[1] - g.x2[i2s], g.l2)
        d1 = np.abs(((j1 - i1s) + g.n1 // 2) % g.n1 - g.n1 // 2)
        d2 = np.abs(((j2 - i2s) + g.n2 // 2) % g.n2 - g.n2 // 2)
        in_window = (d1 <= fine_radius) & (d2 <= fine_radius)
        acc = np.zeros(3)
        for a in shifts:
            for b in shifts:
                m = ~in_window if (a, b) == (0, 0) else slice(None)
                ker = image_sum(r1[m] + a * g.l1, r2[m] + b * g.l2, px[2], g.x3[i3s[m]], delta, K, True)
                acc += ker @ sval[m]
        f1 = (j1 * r + off) % fg.n1
        f2 = (j2 * r + off) % fg.n2
        vals = fs[:, f2][:, :, f1]
        images = [(px[2], 1.0)]
        for k in range(1, K + 1):
            sk = -1.0 if k % 2 else 1.0
            images += [(sk * (px[2] - 2 * k * delta), sk), (sk * (px[2] + 2 * k * delta), sk)]
        wvals = vals * height[:, None, None] * (fg.dx1 * fg.dx2)
        for x3_img, sk in images:
            if abs(x3_img) - delta < near:
                cell = prism_integrals(e1, e2, faces3 - x3_img)
                acc[:2] += np.einsum("ckji,kji->c", cell[:2], vals)
                acc[2] += sk * np.einsum("kji,kji->", cell[2], vals)
            else:
                # the image lies well outside the slab: the kernel is smooth on every fine cell
                u3 = fg.x3[:, None, None] - x3_img
                inv = (c1**2 + c2**2 + u3**2) ** -1.5 * wvals
                acc[0] += np.sum(c1 * inv)
                acc[1] += np.sum(c2 * inv)
                acc[2] += sk * np.sum(u3 * inv)
        tail_w = np.einsum("k,kji->ji", height, vals) * (fg.dx1 * fg.dx2)
        acc[0] -= np.sum(-c1 * h_tail * tail_w)
        acc[1] -= np.sum(-c2 * h_tail * tail_w)
        acc[2] += np.sum((px[2] / delta) * u_tail / R_tail**3 * tail_w)
        out[n] = acc / FOUR_PI
    return out


def grad_p_direct(
    source: np.ndarray,
    grid: GridSpec,
    points,
    K: int = 24,
    fine_factor: int = 3,
    fine_radius: int = 6,
    box_images: int = 1,
    support_tol: float = 0.0,
    exact_cells: float = 4.0,
    extrapolate: bool = True,
) -> np.ndarray:
    """Direct quadrature of ``grad p(x) = int grad_x G(x, y) s(y) dy``.

    The box is partitioned into the grid's cells.  Columns farther than
    ``fine_radius`` cells from ``x`` use the midpoint rule on the grid
    (the kernel is smooth there).  Nearer columns are split into
    ``fine_factor``-times finer cells carrying exact spectral interpolants
    of the source; on those cells every image near the slab is integrated
    exactly (closed-form field of a uniform box), so the singular and
    near-singular cells need no special treatment.  Images farther out
    see a smooth kernel and use the midpoint rule on the fine cells.  The
    main approximation is the cellwise-constant source.

    Args:
        source: nodal Poisson source ``s`` on the grid (band-limited).
        points: evaluation nodes as integer index triples ``(i3, i2, i1)``.
        K: image pairs (with the closed-form tail correction).
        box_images: periodic box copies on each side of the window
            centred on ``x`` (1 gives the 3 x 3 arrangement).
        support_tol: coarse cells with ``|s| <= support_tol * max|s|`` are skipped.
        exact_cells: images farther than this many fine horizontal cells
            outside the slab use the midpoint rule on the fine cells.
        extrapolate: repeat with ``fine_factor + 2`` and combine the two
            results by Richardson extrapolation; the cellwise-constant
            source error is second order in the fine spacing.

    Returns:
        Array of shape ``(len(points), 3)``.
    """
    kw = dict(K=K, fine_radius=fine_radius, box_images=box_images, support_tol=support_tol, exact_cells=exact_cells)
    coarse = _grad_p_direct_once(source, grid, points, fine_factor=fine_factor, **kw)
    if not extrapolate:
        return coarse
    r1, r2 = fine_factor, fine_factor + 2
    fine = _grad_p_direct_once(source, grid, points, fine_factor=r2, **kw)
    return (r2**2 * fine - r1**2 * coarse) / (r2**2 - r1**2)


def spectral_grad_p(state: ElsasserState, metric: float = 1.0) -> np.ndarray:
    """Nodal ``grad p`` from the spectral Poisson solve, shape ``(3, *grid.shape)``."""
    from .solver3d import Solver3D

    s = Solver3D(state.grid, metric).nonlinear_terms(state.zp_hat, state.zm_hat)[2]
    ph = sp.poisson(s, state.grid, metric)
    return sp.vector_to_physical(sp.gradient(ph, state.grid, metric), state.grid)


def pressure_source(state: ElsasserState) -> np.ndarray:
    """Nodal Poisson source ``d_i z+^j d_j z-^i``."""
    from .solver3d import Solver3D

    s = Solver3D(state.grid).nonlinear_terms(state.zp_hat, state.zm_hat)[2]
    return sp.to_physical(s, state.grid, COS)
