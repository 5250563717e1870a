"""Spectral transforms and operators on the periodic slab.

Horizontal directions use real FFTs (``norm="forward"``, so coefficients
are box averages).  The vertical direction uses the trapezoid-orthogonal
cosine basis ``cos(m_k (x3 + delta))`` (DCT-I on all ``mv + 1`` nodes) and
the sine basis ``sin(m_k (x3 + delta))`` (DST-I on interior nodes), with
``m_k = k pi / (2 delta)``.  Cosine fields satisfy the Neumann condition
and sine fields vanish on the walls.

Spectral arrays always have shape ``(..., mv + 1, n2, n1 // 2 + 1)``; the
sine rows ``k = 0`` and ``k = mv`` are identically zero.
"""

from __future__ import annotations

import functools
import math
import warnings

import numpy as np
import scipy.fft as sfft

from .core import COS, SIN, VECTOR_PARITY, Grid2D, GridSpec

_WORKERS = 1


def set_workers(n: int) -> None:
    """Number of threads used by the FFT backend."""
    global _WORKERS
    if n < 1:
        raise ValueError("thread count must be positive")
    _WORKERS = int(n)


def get_workers() -> int:
    return _WORKERS


def flip(parity: str) -> str:
    return SIN if parity == COS else COS


# --- horizontal -----------------------------------------------------------


def h_forward(f: np.ndarray) -> np.ndarray:
    return sfft.rfft2(f, axes=(-2, -1), norm="forward", workers=_WORKERS)


def h_inverse(fh: np.ndarray, n1: int) -> np.ndarray:
    return sfft.irfft2(fh, s=(fh.shape[-2], n1), axes=(-2, -1), norm="forward", workers=_WORKERS)


def h_weights(n1: int) -> np.ndarray:
    """Multiplicity of each rfft column in a full-plane sum."""
    w = np.full(n1 // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


# --- vertical -------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def vertical_matrices(mv: int) -> dict[tuple[str, str], np.ndarray]:
    """Dense forward/inverse vertical transform matrices built from the DCT-I/DST-I.

    At desk-scale mode counts a small matrix product is several times faster
    than a strided fast transform along the slowest axis.
    """
    n = mv + 1
    eye = np.eye(n)
    cf = sfft.dct(eye, type=1, axis=0) / mv
    cf[[0, mv]] *= 0.5
    ci = eye.copy()
    ci[1:mv, 1:mv] *= 0.5
    ci = sfft.dct(ci, type=1, axis=0)
    sf = np.zeros((n, n))
    sf[1:mv, 1:mv] = sfft.dst(np.eye(mv - 1), type=1, axis=0) / mv
    si = np.zeros((n, n))
    si[1:mv, 1:mv] = 0.5 * sfft.dst(np.eye(mv - 1), type=1, axis=0)
    return {(COS, "f"): cf, (COS, "i"): ci, (SIN, "f"): sf, (SIN, "i"): si}


def _vapply(mat: np.ndarray, f: np.ndarray) -> np.ndarray:
    shape = f.shape
    flat = f.reshape(shape[:-3] + (shape[-3], shape[-2] * shape[-1]))
    return (mat @ flat).reshape(shape)


def v_forward(f: np.ndarray, parity: str, mv: int) -> np.ndarray:
    """Nodal values along axis ``-3`` to vertical coefficients."""
    if f.shape[-3] != mv + 1:
        raise ValueError(f"expected {mv + 1} vertical nodes, got {f.shape[-3]}")
    if parity not in (COS, SIN):
        raise ValueError(f"unknown parity {parity!r}")
    return _vapply(vertical_matrices(mv)[parity, "f"], f)


def v_inverse(a: np.ndarray, parity: str, mv: int) -> np.ndarray:
    if parity not in (COS, SIN):
        raise ValueError(f"unknown parity {parity!r}")
    return _vapply(vertical_matrices(mv)[parity, "i"], a)


def to_spectral(f: np.ndarray, grid: GridSpec, parity: str) -> np.ndarray:
    return h_forward(v_forward(np.asarray(f, dtype=float), parity, grid.mv))


def to_physical(fh: np.ndarray, grid: GridSpec, parity: str) -> np.ndarray:
    return v_inverse(h_inverse(fh, grid.n1), parity, grid.mv)


def vector_to_spectral(v: np.ndarray, grid: GridSpec, parities=VECTOR_PARITY) -> np.ndarray:
    return np.array([to_spectral(v[c], grid, p) for c, p in enumerate(parities)])


def vector_to_physical(vh: np.ndarray, grid: GridSpec, parities=VECTOR_PARITY) -> np.ndarray:
    # one horizontal inverse for all components, then one vertical product per parity
    f = h_inverse(vh, grid.n1)
    sin_rows = np.array([p == SIN for p in parities])
    out = v_inverse(f, COS, grid.mv)
    if sin_rows.any():
        out[sin_rows] = v_inverse(f[sin_rows], SIN, grid.mv)
    return out


# --- norms ----------------------------------------------------------------


def mode_energy(fh: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Per-vertical-mode horizontal sums ``l1 l2 sum |f_k|^2`` (Parseval)."""
    w = h_weights(grid.n1)
    return grid.l1 * grid.l2 * np.einsum("...kij,j->...k", np.abs(fh) ** 2, w)


def l2_norm(fh: np.ndarray, grid: GridSpec, parity: str) -> float:
    """Discrete L2 norm over the slab (trapezoid in x3, exact in x_h)."""
    c = grid.mode_norm
    if parity == SIN:
        c = np.full_like(c, grid.delta)
    return float(math.sqrt(max(0.0, float((mode_energy(fh, grid) * c).sum()))))


def vector_l2(vh: np.ndarray, grid: GridSpec, parities=VECTOR_PARITY) -> float:
    return math.sqrt(sum(l2_norm(vh[c], grid, p) ** 2 for c, p in enumerate(parities)))


def nodal_l2(f: np.ndarray, grid: GridSpec) -> float:
    """Same norm evaluated directly from nodal values."""
    f = np.asarray(f, dtype=float)
    e = (f**2).sum(axis=(-1, -2)) * grid.dx1 * grid.dx2
    e = e.reshape(-1, grid.mv + 1) @ grid.trapezoid
    return float(math.sqrt(e.sum()))


def max_magnitude(vh: np.ndarray, grid: GridSpec) -> float:
    """``max |v|`` over the nodes for a vector field in spectral form."""
    v = vector_to_physical(vh, grid)
    return float(np.sqrt((v**2).sum(axis=0)).max())


# --- derivatives ----------------------------------------------------------


def partial(fh: np.ndarray, grid: GridSpec, axis: int, parity: str) -> tuple[np.ndarray, str]:
    """Derivative along ``axis`` (0 = x1, 1 = x2, 2 = x3); returns the new parity."""
    h = grid.horizontal
    if axis == 0:
        return 1j * h.kappa1_d * fh, parity
    if axis == 1:
        return 1j * h.kappa2_d * fh, parity
    if axis != 2:
        raise ValueError("axis must be 0, 1 or 2")
    return d3(fh, grid, parity)


def d3(fh: np.ndarray, grid: GridSpec, parity: str) -> tuple[np.ndarray, str]:
    """Vertical derivative: ``cos_k -> -m_k sin_k`` and ``sin_k -> m_k cos_k``."""
    out = grid.m * fh
    if parity == COS:
        out = -out
        out[..., 0, :, :] = 0.0
        out[..., grid.mv, :, :] = 0.0
        return out, SIN
    return out, COS


def partial_multi(fh: np.ndarray, grid: GridSpec, alpha: tuple[int, int], l: int, parity: str):
    """``d1^alpha1 d2^alpha2 d3^l`` of a scalar field."""
    h = grid.horizontal
    out = fh * (1j * h.kappa1_d) ** alpha[0] * (1j * h.kappa2_d) ** alpha[1]
    for _ in range(l):
        out, parity = d3(out, grid, parity)
    return out, parity


def divergence(vh: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Divergence of a vector with parities ``(cos, cos, sin)``; a cosine field."""
    h = grid.horizontal
    return 1j * h.kappa1_d * vh[0] + 1j * h.kappa2_d * vh[1] + d3(vh[2], grid, SIN)[0]


def gradient(ph: np.ndarray, grid: GridSpec, metric: float = 1.0) -> np.ndarray:
    """Gradient of a cosine scalar; ``metric`` multiplies the vertical component."""
    h = grid.horizontal
    return np.array([1j * h.kappa1_d * ph, 1j * h.kappa2_d * ph, metric * d3(ph, grid, COS)[0]])


def curl(ah: np.ndarray, grid: GridSpec, parities=(SIN, SIN, COS)) -> np.ndarray:
    """Curl of a vector field; the result has parities ``(cos, cos, sin)``
    when the input has ``(sin, sin, cos)``."""
    d = lambda c, j: partial(ah[c], grid, j, parities[c])[0]  # noqa: E731
    return np.array([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])


def laplacian_symbol(grid: GridSpec, metric: float = 1.0) -> np.ndarray:
    """``kappa^2 + metric m^2`` on the spectral grid."""
    return grid.horizontal.kappa_sq[None] + metric * grid.m**2


def poisson(sh: np.ndarray, grid: GridSpec, metric: float = 1.0, warn: bool = True) -> np.ndarray:
    """Solve ``-Delta p = s`` with Neumann walls and zero mean.

    The source must have zero mean; a nonzero mean is dropped with a warning.
    """
    if warn:
        scale = np.abs(sh).max()
        if scale > 0 and abs(sh[0, 0, 0]) > 1e-12 * scale:
            warnings.warn("Poisson source has nonzero mean; mean dropped", RuntimeWarning, stacklevel=2)
    sym = laplacian_symbol(grid, metric)
    out = np.zeros_like(sh)
    nz = sym > 0
    out[nz] = sh[nz] / sym[nz]
    return out


def leray(vh: np.ndarray, grid: GridSpec, metric: float = 1.0) -> np.ndarray:
    """Project onto divergence-free fields with zero normal velocity on the walls.

    Subtracts ``grad_g q`` with ``(kappa^2 + g m^2) q = div v``, which removes
    the divergence exactly.  In the top cosine row the vertical component
    carries no mode, so only the horizontal part is projected there.
    """
    h = grid.horizontal
    d = divergence(vh, grid)
    sym = laplacian_symbol(grid, metric)
    mv = grid.mv
    sym[mv] = h.kappa_sq
    q = np.zeros_like(d)
    nz = sym > 0
    q[nz] = d[nz] / sym[nz]
    out = vh.copy()
    out[0] += 1j * h.kappa1_d * q
    out[1] += 1j * h.kappa2_d * q
    out[2] -= metric * grid.m * q
    out[2][[0, mv]] = 0.0
    return out


def dealias(fh: np.ndarray, grid: GridSpec) -> np.ndarray:
    return fh * grid.mask


def shift_x1(fh: np.ndarray, grid, s: float) -> np.ndarray:
    """Spectral translation along x1: returns the coefficients of ``f(x1 - s)``."""
    h = grid.horizontal if isinstance(grid, GridSpec) else grid
    return fh * np.exp(-1j * h.kappa1_d * s)


# --- 2D helpers -------------------------------------------------------------


def to_spectral_2d(f: np.ndarray) -> np.ndarray:
    return h_forward(np.asarray(f, dtype=float))


def to_physical_2d(fh: np.ndarray, grid: Grid2D) -> np.ndarray:
    return h_inverse(fh, grid.n1)


def l2_norm_2d(fh: np.ndarray, grid: Grid2D) -> float:
    w = h_weights(grid.n1)
    e = grid.l1 * grid.l2 * np.einsum("...ij,j->...", np.abs(fh) ** 2, w)
    return float(math.sqrt(float(np.sum(e))))


# --- names used by the public contract -------------------------------------


def derivative(fh: np.ndarray, grid: GridSpec, axis: int, parity: str = COS) -> tuple[np.ndarray, str]:
    """Derivative along ``axis`` in ``{1, 2, 3}``; returns ``(coefficients, parity)``."""
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    return partial(fh, grid, axis - 1, parity)


def poisson_neumann(sh: np.ndarray, grid: GridSpec, metric: float = 1.0) -> np.ndarray:
    return poisson(sh, grid, metric)


def leray_project(vh: np.ndarray, grid: GridSpec, metric: float = 1.0) -> np.ndarray:
    return leray(vh, grid, metric)
