"""Time integration of the slab Elsässer system.

The system, with ``B0 = e1`` carried as an exact multiplier, is::

    d_t z+ = + d_1 z+ - z- . grad z+ - grad p
    d_t z- = - d_1 z- - z+ . grad z- - grad p
    -Delta p = d_i d_j (z+^i z-^j)

Time stepping is classical RK4 on the full right-hand side.  The optional
integrating-factor variant (``scheme="ifrk4"``) applies the transport
``+-d_1`` exactly as a phase, so the linear system is reproduced to rounding.

Nonlinear terms are assembled in divergence form from the nine products
``M_ij = z+^i z-^j`` so that one set of transforms serves both equations
and the pressure source.  With the 2/3 truncation applied to the data and
to every right-hand side, the semi-discrete system is an exact Galerkin
truncation and conserves both Elsässer energies.

The same code integrates the rescaled system on the unit slab: pass a grid
with ``delta = 1`` and ``metric = delta**-2``, which replaces the pressure
gradient by ``(d_1, d_2, delta^-2 d_3)`` and the Poisson symbol accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import spectral as sp
from .core import BC_TOL, COS, DIV_TOL, SIN, VECTOR_PARITY, ElsasserState, GridSpec, boundary_fraction

Callback = Callable[[ElsasserState, dict], None]

BOUNDARY_TOL = 1e-6


class MonitorAbort(RuntimeError):
    """A runtime monitor failed; ``report`` holds the run report so far."""

    def __init__(self, message: str, report: "RunReport"):
        super().__init__(message)
        self.report = report


class CFLViolation(ValueError):
    def __init__(self, dt: float, limit: float):
        super().__init__(f"|dt| = {abs(dt):.4g} exceeds the CFL limit; use dt <= {limit:.4g}")
        self.suggested = limit


def _product_parity(i: int, j: int) -> str:
    # horizontal-horizontal and vertical-vertical products are even in x3
    return COS if (i == 2) == (j == 2) else SIN


_SIN_PAIRS = np.array([[_product_parity(i, j) == SIN for j in range(3)] for i in range(3)])


@dataclass
class RunReport:
    t0: float
    t_end: float
    steps: int = 0
    energy0: tuple[float, float] = (0.0, 0.0)
    energy1: tuple[float, float] = (0.0, 0.0)
    max_boundary_fraction: float = 0.0
    max_divergence: float = 0.0
    max_wall: float = 0.0
    max_z1: float = 0.0
    max_shift: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def drift(self) -> tuple[float, float]:
        """Relative change of ``||z+||^2`` and ``||z-||^2``."""
        return tuple(
            abs(e1 - e0) / e0 if e0 > 0 else abs(e1 - e0) for e0, e1 in zip(self.energy0, self.energy1)
        )

    @property
    def bootstrap_ok(self) -> bool:
        return self.max_z1 <= 0.5

    def as_dict(self) -> dict:
        return {
            "t0": self.t0,
            "t_end": self.t_end,
            "steps": self.steps,
            "energy0": list(self.energy0),
            "energy1": list(self.energy1),
            "drift": list(self.drift),
            "max_boundary_fraction": self.max_boundary_fraction,
            "max_divergence": self.max_divergence,
            "max_wall": self.max_wall,
            "max_z1": self.max_z1,
            "bootstrap_ok": self.bootstrap_ok,
            "max_shift": self.max_shift,
            "warnings": list(self.warnings),
        }


@dataclass
class RunResult:
    state: ElsasserState
    report: RunReport


class Integrator:
    """Shared RK4 stepping and run loop for the slab and planar solvers.

    Subclasses provide ``grid``, ``scheme``, ``cfl``, ``monitor_every``,
    ``_ik1``, ``_mask``, ``_rhs``, ``min_spacing``, ``_make_state``,
    ``_max_z1`` and ``_monitor``.
    """

    def _energy(self, state, sign: int) -> float:
        return state.energy(sign)

    def step_rk4(self, state: ElsasserState, dt: float, check_cfl: bool = True) -> ElsasserState:
        if check_cfl:
            limit = self.cfl_dt(state)
            if abs(dt) > limit * (1 + 1e-12):
                raise CFLViolation(dt, limit)
        zp, zm, _ = self._step(state.zp_hat, state.zm_hat, dt)
        return state.replace(zp_hat=zp, zm_hat=zm, t=state.t + dt)

    def _step(self, zp, zm, dt, k1=None):
        if self.scheme == "rk4":
            return self._step_rk4(zp, zm, dt, k1)
        return self._step_if(zp, zm, dt, k1)

    def _step_rk4(self, zp, zm, dt, k1=None):
        """One classical RK4 step on the full right-hand side."""
        if k1 is None:
            k1 = self._rhs(zp, zm)
        lin = self._ik1
        a1, b1, aux = k1
        a1, b1 = a1 + lin * zp, b1 - lin * zm
        y, w = zp + 0.5 * dt * a1, zm + 0.5 * dt * b1
        a2, b2, _ = self._rhs(y, w)
        a2, b2 = a2 + lin * y, b2 - lin * w
        y, w = zp + 0.5 * dt * a2, zm + 0.5 * dt * b2
        a3, b3, _ = self._rhs(y, w)
        a3, b3 = a3 + lin * y, b3 - lin * w
        y, w = zp + dt * a3, zm + dt * b3
        a4, b4, _ = self._rhs(y, w)
        a4, b4 = a4 + lin * y, b4 - lin * w
        zp = zp + (dt / 6) * (a1 + 2 * a2 + 2 * a3 + a4)
        zm = zm + (dt / 6) * (b1 + 2 * b2 + 2 * b3 + b4)
        return zp, zm, aux

    def _step_if(self, zp, zm, dt, k1=None):
        """One integrating-factor RK4 step.

        The transport by the background field is applied exactly through
        the phase ``exp(+-i kappa1 dt)``; RK4 integrates the remaining
        (projected) nonlinear terms in the transported frame.
        """
        if k1 is None:
            k1 = self._rhs(zp, zm)
        a1, b1, aux = k1
        ep = np.exp(0.5 * dt * self._ik1)
        em = np.conj(ep)
        a2, b2, _ = self._rhs(ep * (zp + 0.5 * dt * a1), em * (zm + 0.5 * dt * b1))
        a3, b3, _ = self._rhs(ep * zp + 0.5 * dt * a2, em * zm + 0.5 * dt * b2)
        a4, b4, _ = self._rhs(ep * ep * zp + dt * ep * a3, em * em * zm + dt * em * b3)
        zp = ep * ep * zp + (dt / 6) * (ep * ep * a1 + 2 * ep * (a2 + a3) + a4)
        zm = em * em * zm + (dt / 6) * (em * em * b1 + 2 * em * (b2 + b3) + b4)
        return zp, zm, aux

    def run(
        self,
        state0: ElsasserState,
        t_end: float,
        callbacks: Iterable[Callback] = (),
        dt: float | None = None,
        check_invariants: bool = True,
    ) -> RunResult:
        """Advance ``state0`` to ``t_end`` (forward or backward).

        With ``dt=None`` the step follows the CFL rule; otherwise ``|dt|`` is
        used (the last step is shortened to land on ``t_end``).  Callbacks
        receive ``(state, info)`` at every accepted state including the
        first and the last; ``info`` holds ``t``, ``dt`` (step to the next
        state, 0 at the end) and the auxiliary fields of :meth:`rhs`.
        """
        callbacks = list(callbacks)
        t0 = state0.t
        direction = 1.0 if t_end >= t0 else -1.0
        report = RunReport(t0=t0, t_end=t_end)
        report.energy0 = (self._energy(state0, 1), self._energy(state0, -1))
        zp, zm, t = state0.zp_hat.copy(), state0.zm_hat.copy(), t0
        span = abs(t_end - t0)
        tol = 1e-12 * max(1.0, span)
        step = 0
        k1 = self._rhs(zp, zm)
        while True:
            remaining = abs(t_end - t)
            aux = k1[2]
            if remaining <= tol:
                h = 0.0
            elif dt is None:
                h = min(self.cfl * self.min_spacing() / (1 + aux["max_zp"] + aux["max_zm"]), remaining)
            else:
                h = min(abs(dt), remaining)
            # avoid a sliver of a final step
            if 0 < remaining - h < 1e-6 * h:
                h = remaining
            current = self._make_state(zp, zm, t, state0.meta)
            if step % self.monitor_every == 0 or h == 0.0:
                self._monitor(current, report, check_invariants)
            report.max_z1 = max(report.max_z1, self._max_z1(current))
            info = dict(aux, t=t, dt=direction * h, step=step)
            for cb in callbacks:
                cb(current, info)
            if h == 0.0:
                break
            zp, zm, _ = self._step(zp, zm, direction * h, k1)
            t = t + direction * h if remaining - h > tol else t_end
            step += 1
            k1 = self._rhs(zp, zm)
        final = self._make_state(zp, zm, t_end, state0.meta)
        report.steps = step
        report.energy1 = (self._energy(final, 1), self._energy(final, -1))
        return RunResult(final, report)


class Solver3D(Integrator):
    """RK4 pseudo-spectral integrator.

    Args:
        grid: slab grid (or unit-slab grid for the rescaled system).
        metric: factor on the vertical pressure derivative; ``delta**-2``
            for the rescaled system, 1 on the physical slab.
        cfl: Courant number.
        nonlinear: if False, drop the quadratic terms and the pressure
            (pure transport along the background field).
        monitor_every: steps between boundary and invariant checks.
        scheme: ``"rk4"`` (classical) or ``"ifrk4"`` (exact transport phase).
    """

    def __init__(
        self,
        grid: GridSpec,
        metric: float = 1.0,
        cfl: float = 0.4,
        nonlinear: bool = True,
        monitor_every: int = 10,
        boundary_tol: float = BOUNDARY_TOL,
        scheme: str = "rk4",
    ):
        if scheme not in ("rk4", "ifrk4"):
            raise ValueError("scheme must be 'rk4' or 'ifrk4'")
        self.scheme = scheme
        self.grid = grid
        self.metric = float(metric)
        self.cfl = cfl
        self.nonlinear = nonlinear
        self.monitor_every = monitor_every
        self.boundary_tol = boundary_tol
        h = grid.horizontal
        self._ik1 = 1j * h.kappa1_d
        self._ik2 = 1j * h.kappa2_d
        self._mask = grid.mask

    # --- spatial operator ------------------------------------------------

    def _d3_mixed(self, f: np.ndarray) -> np.ndarray:
        """Vertical derivative of three rows with parities ``(sin, sin, cos)``."""
        out = self.grid.m * f
        out[2] *= -1.0
        out[2, self.grid.mv] = 0.0
        return out

    def nonlinear_terms(self, zp_hat: np.ndarray, zm_hat: np.ndarray):
        """Return ``(N+, N-, s, maxima)``.

        ``N+ = z-.grad z+``, ``N- = z+.grad z-`` and the pressure source
        ``s = d_i d_j (z+^i z-^j)``, which has zero mean by construction.
        ``maxima`` holds ``max |z+|`` and ``max |z-|`` on the nodes.
        """
        g = self.grid
        z = sp.vector_to_physical(np.concatenate([zp_hat, zm_hat]), g, VECTOR_PARITY * 2)
        zp, zm = z[:3], z[3:]
        maxima = (float(np.sqrt((zp**2).sum(0)).max()), float(np.sqrt((zm**2).sum(0)).max()))
        prod = zp[:, None] * zm[None, :]
        mats = sp.vertical_matrices(g.mv)
        vt = sp._vapply(mats[COS, "f"], prod)
        vt[_SIN_PAIRS] = sp._vapply(mats[SIN, "f"], prod[_SIN_PAIRS])
        M = sp.h_forward(vt) * self._mask
        # d_j M_ij: horizontal j are multipliers, j = 3 flips the parity
        Np = self._ik1 * M[:, 0] + self._ik2 * M[:, 1] + self._d3_mixed(M[:, 2])
        Nm = self._ik1 * M[0] + self._ik2 * M[1] + self._d3_mixed(M[2])
        s = self._ik1 * Nm[0] + self._ik2 * Nm[1] + sp.d3(Nm[2], g, SIN)[0]
        return Np, Nm, s, maxima

    def rhs(self, state: ElsasserState):
        """Right-hand side ``(dzp, dzm, aux)``.

        ``aux`` carries the pressure ``p_hat``, the scattering integrands
        ``G+ = grad p + z-.grad z+`` and ``G-`` (spectral), and the
        maxima of ``|z+|`` and ``|z-|``.
        """
        nzp, nzm, aux = self._rhs(state.zp_hat, state.zm_hat)
        return nzp + self._ik1 * state.zp_hat * self._mask, nzm - self._ik1 * state.zm_hat * self._mask, aux

    def _rhs(self, zp_hat, zm_hat):
        """Nonlinear part ``-P G+`` and ``-P G-`` of the right-hand side."""
        g = self.grid
        if not self.nonlinear:
            zero = np.zeros_like(zp_hat)
            aux = {"p_hat": np.zeros_like(zp_hat[0]), "gp_hat": zero, "gm_hat": zero}
            aux["max_zp"] = sp.max_magnitude(zp_hat, g)
            aux["max_zm"] = sp.max_magnitude(zm_hat, g)
            return zero, zero, aux
        Np, Nm, s, (max_zp, max_zm) = self.nonlinear_terms(zp_hat, zm_hat)
        p_hat = sp.poisson(s, g, self.metric, warn=False)
        grad_p = sp.gradient(p_hat, g, self.metric)
        gp = Np + grad_p
        gm = Nm + grad_p
        nzp = -sp.leray(gp, g, self.metric) * self._mask
        nzm = -sp.leray(gm, g, self.metric) * self._mask
        aux = {"p_hat": p_hat, "gp_hat": gp, "gm_hat": gm, "max_zp": max_zp, "max_zm": max_zm}
        return nzp, nzm, aux

    def pressure_from_state(self, state: ElsasserState) -> np.ndarray:
        """Physical pressure (zero mean, Neumann walls)."""
        if not self.nonlinear:
            return np.zeros(self.grid.shape)
        s = self.nonlinear_terms(state.zp_hat, state.zm_hat)[2]
        return sp.to_physical(sp.poisson(s, self.grid, self.metric), self.grid, COS)

    # --- time stepping ---------------------------------------------------

    def min_spacing(self) -> float:
        g = self.grid
        return min(g.dx1, g.dx2, g.dx3)

    def cfl_dt(self, state: ElsasserState, max_zp: float | None = None, max_zm: float | None = None) -> float:
        if max_zp is None:
            max_zp = sp.max_magnitude(state.zp_hat, self.grid)
        if max_zm is None:
            max_zm = sp.max_magnitude(state.zm_hat, self.grid)
        return self.cfl * self.min_spacing() / (1.0 + max_zp + max_zm)

    def _make_state(self, zp, zm, t, meta):
        return ElsasserState(zp, zm, self.grid, t, meta)

    def _energy(self, state: ElsasserState, sign: int) -> float:
        # the rescaled system conserves the slab energy, not the unit-slab one
        if self.metric == 1.0:
            return state.energy(sign)
        return from_rescaled(state, self.metric**-0.5).energy(sign)

    def _max_z1(self, state: ElsasserState) -> float:
        return float(max(np.abs(state.zp[0]).max(), np.abs(state.zm[0]).max()))

    def _monitor(self, state: ElsasserState, report: RunReport, check_invariants: bool) -> None:
        frac = max(boundary_fraction(state.zp, self.grid), boundary_fraction(state.zm, self.grid))
        report.max_boundary_fraction = max(report.max_boundary_fraction, frac)
        if frac > self.boundary_tol:
            raise MonitorAbort(
                f"boundary energy fraction {frac:.2e} at t={state.t:.3f} exceeds {self.boundary_tol:.0e}", report
            )
        if not check_invariants:
            return
        div = state.divergence_residual()
        wall = state.wall_residual()
        report.max_divergence = max(report.max_divergence, div)
        report.max_wall = max(report.max_wall, wall)
        if div > DIV_TOL or wall > BC_TOL:
            raise MonitorAbort(f"invariant breach at t={state.t:.3f}: div={div:.2e}, wall={wall:.2e}", report)


# --- module-level conveniences ---------------------------------------------


def pressure_from_state(state: ElsasserState, metric: float = 1.0) -> np.ndarray:
    return Solver3D(state.grid, metric).pressure_from_state(state)


def rhs(state: ElsasserState, metric: float = 1.0, nonlinear: bool = True):
    dzp, dzm, aux = Solver3D(state.grid, metric, nonlinear=nonlinear).rhs(state)
    return dzp, dzm, aux["p_hat"]


def step_rk4(state: ElsasserState, dt: float, metric: float = 1.0, nonlinear: bool = True) -> ElsasserState:
    return Solver3D(state.grid, metric, nonlinear=nonlinear).step_rk4(state, dt)


def cfl_dt(state: ElsasserState, cfl: float = 0.4) -> float:
    return Solver3D(state.grid, cfl=cfl).cfl_dt(state)


def run(state0: ElsasserState, t_end: float, callbacks: Iterable[Callback] = (), **kw) -> RunResult:
    run_kw = {k: kw.pop(k) for k in ("dt", "check_invariants") if k in kw}
    return Solver3D(state0.grid, **kw).run(state0, t_end, callbacks, **run_kw)


# --- rescaled system on the unit slab --------------------------------------


def rescaled_grid(grid: GridSpec) -> GridSpec:
    return grid.with_delta(1.0)


def rescaled_solver(delta: float, grid: GridSpec, **kw) -> Solver3D:
    """Solver for the rescaled system on ``Omega_1`` at thickness ``delta``."""
    if grid.delta != 1.0:
        raise ValueError("the rescaled system lives on the unit slab")
    return Solver3D(grid, metric=delta**-2, **kw)


def to_rescaled(state: ElsasserState) -> ElsasserState:
    """Slab state to its unit-slab image ``(z^h, z^3 / delta)`` at ``x3 = delta s``."""
    d = state.grid.delta
    scale = np.array([1.0, 1.0, 1.0 / d])[:, None, None, None]
    return ElsasserState(
        state.zp_hat * scale, state.zm_hat * scale, rescaled_grid(state.grid), state.t, dict(state.meta, delta=d)
    )


def from_rescaled(state: ElsasserState, delta: float) -> ElsasserState:
    scale = np.array([1.0, 1.0, delta])[:, None, None, None]
    return ElsasserState(
        state.zp_hat * scale, state.zm_hat * scale, state.grid.with_delta(delta), state.t, dict(state.meta)
    )


def solver_for(grid: GridSpec, rescaled_delta: float | None = None, **kw) -> Solver3D:
    if rescaled_delta is None:
        return Solver3D(grid, **kw)
    return rescaled_solver(rescaled_delta, grid, **kw)


def energy_drift(result: RunResult) -> float:
    return max(result.report.drift)


def relative_l2_difference(a, b) -> float:
    """Relative L2 distance of two slab or planar states (both fields together)."""
    if isinstance(a.grid, GridSpec):
        norm = lambda vh, g: sp.vector_l2(vh, g)  # noqa: E731
    else:
        norm = lambda vh, g: math.sqrt(sum(sp.l2_norm_2d(c, g) ** 2 for c in vh))  # noqa: E731
    num = norm(a.zp_hat - b.zp_hat, a.grid) ** 2 + norm(a.zm_hat - b.zm_hat, a.grid) ** 2
    den = norm(b.zp_hat, b.grid) ** 2 + norm(b.zm_hat, b.grid) ** 2
    return math.sqrt(num / den) if den > 0 else math.sqrt(num)
