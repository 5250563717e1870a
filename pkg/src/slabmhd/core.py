"""Domain types for the thin-slab Elsässer system.

The slab is ``R^2 x (-delta, delta)``; the horizontal plane is replaced by a
periodic box (optionally elongated along the background field ``B0 = e1``)
and the vertical direction is resolved by cosine/sine series on uniform
nodes ``x3 = delta * s``, ``s_j = -1 + 2 j / mv``.

Fields are stored as real arrays in row-major ``[x3][x2][x1]`` order; vector
fields carry a leading component axis.  The constant background ``B0`` is
never stored in the fields; the solver applies it as an exact multiplier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

B0 = np.array([1.0, 0.0, 0.0])

COS = "cos"
SIN = "sin"
VECTOR_PARITY = (COS, COS, SIN)

DIV_TOL = 1e-10
BC_TOL = 1e-12


@dataclass(frozen=True)
class PhysParams:
    """Half-thickness, weight exponent and position parameter."""

    delta: float = 1.0
    sigma: float = 0.25
    a: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not 0.0 < self.sigma < 1.0 / 3.0:
            raise ValueError(f"sigma must lie in (0, 1/3), got {self.sigma}")
        if not math.isfinite(self.a):
            raise ValueError("position parameter must be finite")

    @property
    def b0(self) -> np.ndarray:
        return B0.copy()

    def weights(self) -> "WeightContext":
        return WeightContext(self.sigma, self.a)


@dataclass(frozen=True)
class Grid2D:
    """Periodic horizontal box with side lengths ``l1`` (along B0) and ``l2``."""

    n1: int = 64
    n2: int = 64
    l1: float = 16 * math.pi
    l2: float = 16 * math.pi

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if n < 4 or n & (n - 1):
                raise ValueError(f"horizontal sizes must be powers of two >= 4, got {n}")
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("box lengths must be positive")

    @property
    def dx1(self) -> float:
        return self.l1 / self.n1

    @property
    def dx2(self) -> float:
        return self.l2 / self.n2

    @cached_property
    def x1(self) -> np.ndarray:
        return -self.l1 / 2 + self.dx1 * np.arange(self.n1)

    @cached_property
    def x2(self) -> np.ndarray:
        return -self.l2 / 2 + self.dx2 * np.arange(self.n2)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n2, self.n1)

    @property
    def spectral_shape(self) -> tuple[int, int]:
        return (self.n2, self.n1 // 2 + 1)

    @cached_property
    def index1(self) -> np.ndarray:
        return np.arange(self.n1 // 2 + 1)

    @cached_property
    def index2(self) -> np.ndarray:
        return np.fft.fftfreq(self.n2, 1.0 / self.n2).astype(int)

    @cached_property
    def kappa1(self) -> np.ndarray:
        """x1 wavenumbers (rfft layout), broadcastable to ``(n2, n1//2+1)``."""
        return (2 * math.pi / self.l1) * self.index1[None, :].astype(float)

    @cached_property
    def kappa2(self) -> np.ndarray:
        return (2 * math.pi / self.l2) * self.index2[:, None].astype(float)

    @cached_property
    def kappa1_d(self) -> np.ndarray:
        """Wavenumbers for differentiation, with the Nyquist column zeroed."""
        k = self.kappa1.copy()
        k[:, -1] = 0.0
        return k

    @cached_property
    def kappa2_d(self) -> np.ndarray:
        k = self.kappa2.copy()
        k[self.n2 // 2, :] = 0.0
        return k

    @cached_property
    def kappa_sq(self) -> np.ndarray:
        return self.kappa1_d**2 + self.kappa2_d**2

    @cached_property
    def hmask(self) -> np.ndarray:
        """Two-thirds truncation mask on the horizontal indices."""
        keep1 = 3 * self.index1 < self.n1
        keep2 = 3 * np.abs(self.index2) < self.n2
        return keep2[:, None] & keep1[None, :]

    @property
    def cell_area(self) -> float:
        return self.dx1 * self.dx2


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the slab: periodic box times ``mv + 1`` vertical nodes.

    ``lh`` is the box side; ``lh1`` optionally overrides the side along x1
    so that counter-propagating packets can separate without meeting across
    the periodic seam.
    """

    n1: int = 64
    n2: int = 64
    mv: int = 8
    delta: float = 1.0
    lh: float = 16 * math.pi
    lh1: float | None = None

    def __post_init__(self):
        if self.mv < 2:
            raise ValueError("mv must be at least 2")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        _ = self.horizontal

    @cached_property
    def horizontal(self) -> Grid2D:
        l1 = self.lh if self.lh1 is None else self.lh1
        return Grid2D(self.n1, self.n2, l1, self.lh)

    def with_delta(self, delta: float) -> "GridSpec":
        return GridSpec(self.n1, self.n2, self.mv, delta, self.lh, self.lh1)

    @property
    def l1(self) -> float:
        return self.horizontal.l1

    @property
    def l2(self) -> float:
        return self.horizontal.l2

    @property
    def dx1(self) -> float:
        return self.horizontal.dx1

    @property
    def dx2(self) -> float:
        return self.horizontal.dx2

    @property
    def ds(self) -> float:
        return 2.0 / self.mv

    @property
    def dx3(self) -> float:
        return self.delta * self.ds

    @cached_property
    def s(self) -> np.ndarray:
        return -1.0 + self.ds * np.arange(self.mv + 1)

    @cached_property
    def x3(self) -> np.ndarray:
        return self.delta * self.s

    @property
    def x1(self) -> np.ndarray:
        return self.horizontal.x1

    @property
    def x2(self) -> np.ndarray:
        return self.horizontal.x2

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.mv + 1, self.n2, self.n1)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.mv + 1, self.n2, self.n1 // 2 + 1)

    @cached_property
    def m(self) -> np.ndarray:
        """Vertical wavenumbers ``m_k = k pi / (2 delta)``, shaped ``(mv+1, 1, 1)``."""
        return (np.arange(self.mv + 1) * math.pi / (2 * self.delta))[:, None, None]

    @cached_property
    def vmask(self) -> np.ndarray:
        return (3 * np.arange(self.mv + 1) < 2 * self.mv)[:, None, None]

    @cached_property
    def mask(self) -> np.ndarray:
        return self.vmask & self.horizontal.hmask[None, :, :]

    @cached_property
    def trapezoid(self) -> np.ndarray:
        """Vertical quadrature weights in x3 (half weights on the walls)."""
        w = np.full(self.mv + 1, self.dx3)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @cached_property
    def mode_norm(self) -> np.ndarray:
        """Integral over (-delta, delta) of the squared vertical basis function, per mode.

        Cosine modes 0 and mv integrate to ``2 delta`` on the nodes, the rest
        (and every sine mode) to ``delta``; these are the discrete
        orthogonality constants of the trapezoid rule.
        """
        c = np.full(self.mv + 1, self.delta)
        c[0] = c[-1] = 2 * self.delta
        return c

    @property
    def volume(self) -> float:
        return self.l1 * self.l2 * 2 * self.delta

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays ``(x1, x2, x3)``."""
        return (self.x1[None, None, :], self.x2[None, :, None], self.x3[:, None, None])


@dataclass(frozen=True)
class WeightContext:
    """Weights ``<u_pm> = (1 + |x1 -+ (t + a)|^2)^(1/2)``.

    ``t_origin`` shifts the clock; a backward run re-centred at time ``T``
    uses ``a = T`` with ``t_origin = T`` so that weights follow the packets
    as time decreases.
    """

    sigma: float = 0.25
    a: float = 0.0
    t_origin: float = 0.0

    def center(self, sign: int, t: float) -> float:
        """Position where ``<u_sign>`` equals one."""
        return sign * (t - self.t_origin + self.a)

    def weight(self, sign: int, t: float, x1) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        return np.sqrt(1.0 + (x1 - self.center(sign, t)) ** 2)

    def energy_weight(self, sign: int, t: float, x1) -> np.ndarray:
        """``<u_-+>^(2(1+sigma))``, the squared energy weight for ``z_sign``."""
        return self.weight(-sign, t, x1) ** (2 * (1 + self.sigma))

    def flux_weight(self, sign: int, t: float, x1) -> np.ndarray:
        """``<u_-+>^(2(1+sigma)) / <u_pm>^(1+sigma)``, the flux density weight."""
        g = 1 + self.sigma
        return self.weight(-sign, t, x1) ** (2 * g) / self.weight(sign, t, x1) ** g

    def monitor_weight(self, sign: int, t: float, x1) -> np.ndarray:
        """Squared weight ``<u_-+>^(2(1+sigma)) <u_pm>^(1+sigma)`` of the nonlinear bounds."""
        g = 1 + self.sigma
        return self.weight(-sign, t, x1) ** (2 * g) * self.weight(sign, t, x1) ** g


def weight(ctx: WeightContext, sign: int, t: float, x1) -> np.ndarray:
    return ctx.weight(sign, t, x1)


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return sign


@dataclass(frozen=True, eq=False)
class ElsasserState:
    """The pair ``(z_+, z_-)`` at time ``t``, held as spectral coefficients.

    Coefficients have shape ``(3, mv+1, n2, n1//2+1)`` with component
    parities ``(cos, cos, sin)``.  Physical values are computed on demand.
    """

    zp_hat: np.ndarray
    zm_hat: np.ndarray
    grid: GridSpec
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (3,) + self.grid.spectral_shape
        for z in (self.zp_hat, self.zm_hat):
            if z.shape != shape:
                raise ValueError(f"coefficient shape {z.shape} does not match grid {shape}")

    @classmethod
    def from_physical(cls, zp, zm, grid: GridSpec, t: float = 0.0) -> "ElsasserState":
        from .spectral import vector_to_spectral

        zp = np.asarray(zp, dtype=float)
        zm = np.asarray(zm, dtype=float)
        if zp.shape != (3,) + grid.shape or zm.shape != zp.shape:
            raise ValueError("field shape does not match grid")
        return cls(vector_to_spectral(zp, grid), vector_to_spectral(zm, grid), grid, t)

    @classmethod
    def zeros(cls, grid: GridSpec, t: float = 0.0) -> "ElsasserState":
        shape = (3,) + grid.spectral_shape
        return cls(np.zeros(shape, complex), np.zeros(shape, complex), grid, t)

    @cached_property
    def zp(self) -> np.ndarray:
        from .spectral import vector_to_physical

        return vector_to_physical(self.zp_hat, self.grid)

    @cached_property
    def zm(self) -> np.ndarray:
        from .spectral import vector_to_physical

        return vector_to_physical(self.zm_hat, self.grid)

    def field(self, sign: int) -> np.ndarray:
        return self.zp if _check_sign(sign) > 0 else self.zm

    def field_hat(self, sign: int) -> np.ndarray:
        return self.zp_hat if _check_sign(sign) > 0 else self.zm_hat

    def replace(self, **kw) -> "ElsasserState":
        args = dict(zp_hat=self.zp_hat, zm_hat=self.zm_hat, grid=self.grid, t=self.t, meta=self.meta)
        args.update(kw)
        return ElsasserState(**args)

    def divergence_residual(self) -> float:
        """Largest relative divergence of ``z_+`` and ``z_-`` (spectral, in L2)."""
        from .spectral import divergence, l2_norm

        out = 0.0
        for zh in (self.zp_hat, self.zm_hat):
            scale = max(_gradient_scale(zh, self.grid), np.finfo(float).tiny)
            out = max(out, l2_norm(divergence(zh, self.grid), self.grid, COS) / scale)
        return out

    def wall_residual(self) -> float:
        return float(max(np.abs(z[2][[0, -1]]).max() for z in (self.zp, self.zm)))

    def energy(self, sign: int) -> float:
        """Unweighted ``||z_sign||^2`` over the box."""
        from .spectral import l2_norm

        zh = self.field_hat(sign)
        return float(sum(l2_norm(zh[c], self.grid, p) ** 2 for c, p in enumerate(VECTOR_PARITY)))

    def check(self, div_tol: float = DIV_TOL, bc_tol: float = BC_TOL) -> None:
        div = self.divergence_residual()
        if div > div_tol:
            raise ValueError(f"divergence residual {div:.3e} exceeds {div_tol:.1e}")
        wall = self.wall_residual()
        if wall > bc_tol:
            raise ValueError(f"wall residual {wall:.3e} exceeds {bc_tol:.1e}")


def _gradient_scale(zh: np.ndarray, grid: GridSpec) -> float:
    """Norm of the velocity gradient, the natural scale for a divergence."""
    from .spectral import l2_norm

    h = grid.horizontal
    k2 = h.kappa_sq[None] + grid.m**2
    total = 0.0
    for c, p in enumerate(VECTOR_PARITY):
        total += l2_norm(zh[c] * np.sqrt(k2), grid, p) ** 2
    return math.sqrt(total)


def elsasser_from_physical(v: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``z_+ = v + b`` and ``z_- = v - b`` (fluctuations only)."""
    v = np.asarray(v, dtype=float)
    b = np.asarray(b, dtype=float)
    if v.shape != b.shape:
        raise ValueError(f"shape mismatch: {v.shape} vs {b.shape}")
    return v + b, v - b


def physical_from_elsasser(zp: np.ndarray, zm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    zp = np.asarray(zp, dtype=float)
    zm = np.asarray(zm, dtype=float)
    if zp.shape != zm.shape:
        raise ValueError(f"shape mismatch: {zp.shape} vs {zm.shape}")
    return 0.5 * (zp + zm), 0.5 * (zp - zm)


def boundary_fraction(values: np.ndarray, grid, margin: float = 0.05) -> float:
    """Fraction of ``sum |values|^2`` lying within ``margin * l`` of the box edges.

    ``values`` may be any array whose two trailing axes are ``(x2, x1)``.
    With the default margin the outer 10% of each side is monitored.
    """
    h = grid.horizontal if isinstance(grid, GridSpec) else grid
    e = np.asarray(values) ** 2
    e = e.reshape(-1, h.n2, h.n1).sum(axis=0)
    total = e.sum()
    if total == 0:
        return 0.0
    out1 = np.abs(h.x1) >= (0.5 - margin) * h.l1
    out2 = np.abs(h.x2) >= (0.5 - margin) * h.l2
    outer = out2[:, None] | out1[None, :]
    return float(e[outer].sum() / total)


def gaussian_packet(
    grid: GridSpec,
    amplitude: float,
    center: tuple[float, float] = (0.0, 0.0),
    widths: tuple[float, float] = (4.0, 4.0),
    seed: int = 0,
    vertical_modes: int = 2,
    localization_tol: float = 1e-8,
) -> ElsasserState:
    """Divergence-free, wall-compatible Gaussian packets for ``z_+`` and ``z_-``.

    Each field is the curl of a Gaussian vector potential whose vertical
    structure uses random coefficients on the first ``vertical_modes`` modes.
    The potential is built on the unit slab and the vertical component is
    scaled by ``delta`` afterwards, so the family is the rescaling of one
    profile (``z^h(x_h, delta s) = Z^h(x_h, s)``, ``z^3 = delta Z^3``).
    The ``k = 0`` vertical mode is a pure 2D stream function.

    The profile is normalized so that ``max |Z| = amplitude`` for each field.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    if amplitude == 0:
        return ElsasserState.zeros(grid)
    unit = grid.with_delta(1.0)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        z = _curl_packet(unit, center, widths, rng, vertical_modes)
        zphys = _to_phys(z, unit)
        z *= amplitude / np.sqrt((zphys**2).sum(axis=0)).max()
        out.append(z)
    zp, zm = out
    for z in (zp, zm):
        z[2] *= grid.delta
    state = ElsasserState(zp, zm, grid, 0.0)
    for z in (state.zp, state.zm):
        frac = boundary_fraction(z, grid)
        if frac > localization_tol:
            raise ValueError(
                f"packet not localized: {frac:.2e} of its energy lies near the box edge; "
                "reduce the widths or enlarge the box"
            )
    return state


def _to_phys(zh, grid):
    from .spectral import vector_to_physical

    return vector_to_physical(zh, grid)


def _curl_packet(unit: GridSpec, center, widths, rng, nv: int) -> np.ndarray:
    from .spectral import curl, to_spectral

    x1, x2, _ = unit.mesh()
    env = np.exp(-(((x1 - center[0]) / widths[0]) ** 2) - ((x2 - center[1]) / widths[1]) ** 2)
    env = np.broadcast_to(env, unit.shape)
    kv = min(nv, int(np.flatnonzero(unit.vmask[:, 0, 0]).max()))
    phase = np.pi * (unit.s[:, None, None] + 1) / 2
    a_hat = []
    # potential parities (sin, sin, cos) make the curl land in (cos, cos, sin)
    for parity in (SIN, SIN, COS):
        basis = np.cos if parity == COS else np.sin
        coef = rng.standard_normal(kv + 1)
        if parity == SIN:
            coef[0] = 0.0
        prof = sum(coef[k] * basis(k * phase) for k in range(kv + 1))
        a_hat.append(to_spectral(env * prof, unit, parity))
    z = curl(np.array(a_hat), unit, (SIN, SIN, COS))
    return z * unit.mask
