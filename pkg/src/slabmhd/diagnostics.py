"""Weighted energies, fluxes, nonlinear monitors and probes of the weighted inequalities.

All weighted norms use weights that depend on ``x1`` only.  A norm
``int w(x1) |d_h^alpha d_3^l f|^2 dx`` is therefore evaluated line by line:
an inverse transform along x1 gives every ``(vertical mode, kappa2)`` line
exactly on the x1 nodes, the x2 sum is Parseval, and the x3 trapezoid sum
is the discrete orthogonality of the vertical bases.  The result equals
the nodal rectangle/trapezoid quadrature to rounding (see
:func:`weighted_norm_nodal`, the direct nodal route used as an oracle), but
one set of x1 transforms serves every ``(alpha2, l)`` at once.

Derivative orders are capped by ``kmax`` (``k + l <= kmax``).  Where the
aggregate energies use orders ``2N``, ``2N - 1`` and ``N + 2`` this module
uses ``kmax``, ``kmax - 1`` and ``min(kmax // 2 + 2, kmax - 1)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import spectral as sp
from .core import COS, SIN, VECTOR_PARITY, ElsasserState, Grid2D, GridSpec, WeightContext

KMAX = 4
COMPONENTS = {"full": (0, 1, 2), "h": (0, 1), "3": (2,)}


# --- weighted norm kernels --------------------------------------------------


def hermitian_lines(fh: np.ndarray, h: Grid2D) -> np.ndarray:
    """Complete rfft2 coefficients to the full x1 spectrum of every kappa2 line."""
    n1, n2 = h.n1, h.n2
    full = np.empty(fh.shape[:-1] + (n1,), dtype=complex)
    full[..., : n1 // 2 + 1] = fh
    neg = fh[..., (-np.arange(n2)) % n2, 1 : n1 // 2]
    full[..., n1 // 2 + 1 :] = np.conj(neg[..., ::-1])
    return full


def _kappa1_full(h: Grid2D) -> np.ndarray:
    k = sfft.fftfreq(h.n1, 1.0 / h.n1) * (2 * math.pi / h.l1)
    k[h.n1 // 2] = 0.0
    return k


def _vertical_factors(grid: GridSpec, parity: str, lmax: int) -> np.ndarray:
    """``c_k |mult_{k,l}|^2`` for ``d_3^l`` of a field of the given parity."""
    out = np.zeros((lmax + 1, grid.mv + 1))
    mult = np.ones((grid.mv + 1, 1, 1))
    p = parity
    for l in range(lmax + 1):
        c = grid.mode_norm if p == COS else np.full(grid.mv + 1, grid.delta)
        row = np.abs(mult[:, 0, 0]) ** 2 * c
        if p == SIN:
            row[[0, grid.mv]] = 0.0
        out[l] = row
        mult, p = sp.d3(mult, grid, p)
    return out


def _line_energies(full: np.ndarray, h: Grid2D, weights: np.ndarray, amax: int) -> np.ndarray:
    """``A[a, w, ..., j2] = int w(x1) |d_1^a f_line(x1)|^2 dx1``."""
    ik1 = 1j * _kappa1_full(h)
    out = []
    for a in range(amax + 1):
        g = sfft.ifft(full * ik1**a, axis=-1, norm="forward", workers=sp.get_workers())
        out.append(np.einsum("...x,wx->w...", np.abs(g) ** 2, weights) * h.dx1)
    return np.array(out)


def weighted_table(fh: np.ndarray, parity: str, grid: GridSpec, weights, kmax: int = KMAX) -> np.ndarray:
    """Weighted derivative norms of a scalar slab field.

    Args:
        fh: spectral coefficients, shape ``grid.spectral_shape``.
        parity: vertical basis of ``fh``.
        weights: array ``(nw, n1)`` of squared weights on the x1 nodes.

    Returns:
        ``T[w, k, l] = sum_{|alpha| = k} int w |d_h^alpha d_3^l f|^2 dx`` for
        ``k + l <= kmax`` (zero elsewhere), shape ``(nw, kmax+1, kmax+1)``.
    """
    h = grid.horizontal
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    A = _line_energies(hermitian_lines(fh, h), h, weights, kmax)
    V = _vertical_factors(grid, parity, kmax)
    k2 = h.kappa2_d[:, 0] ** 2
    K2 = np.array([h.l2 * k2**b for b in range(kmax + 1)])
    # B[a, b, w, l] = sum_{k3, j2} A[a, w, k3, j2] V[l, k3] K2[b, j2]
    B = np.einsum("awkj,lk,bj->abwl", A, V, K2)
    out = np.zeros((weights.shape[0], kmax + 1, kmax + 1))
    for k in range(kmax + 1):
        for l in range(kmax + 1 - k):
            out[:, k, l] = sum(B[a, k - a, :, l] for a in range(k + 1))
    return out


def weighted_table_2d(fh: np.ndarray, h: Grid2D, weights, kmax: int = KMAX, multinomial: bool = False) -> np.ndarray:
    """2D analogue of :func:`weighted_table`: ``T[w, k] = sum_{|alpha|=k} int w |d^alpha f|^2``.

    With ``multinomial=True`` each multi-index counts ``binom(k, alpha_1)``
    times, which gives the tensor norm ``int w |grad^k f|^2``.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    A = _line_energies(hermitian_lines(fh, h), h, weights, kmax)
    k2 = h.kappa2_d[:, 0] ** 2
    out = np.zeros((weights.shape[0], kmax + 1))
    for k in range(kmax + 1):
        for a in range(k + 1):
            c = math.comb(k, a) if multinomial else 1
            out[:, k] += c * h.l2 * A[a] @ k2 ** (k - a)
    return out


def weighted_norm_nodal(fh, parity: str, grid: GridSpec, weight_x1, alpha: tuple[int, int], l: int) -> float:
    """``int w(x1) |d^alpha d_3^l f|^2`` by nodal quadrature (reference route)."""
    dh, p = sp.partial_multi(fh, grid, alpha, l, parity)
    f = sp.to_physical(dh, grid, p)
    w = np.asarray(weight_x1, dtype=float)[None, None, :]
    e = (w * f**2).sum(axis=(1, 2)) * grid.dx1 * grid.dx2
    return float(e @ grid.trapezoid)


def vector_table(vh: np.ndarray, grid: GridSpec, weights, kmax: int = KMAX, parities=VECTOR_PARITY) -> np.ndarray:
    """Per-component tables, shape ``(3, nw, kmax+1, kmax+1)``."""
    return np.array([weighted_table(vh[c], p, grid, weights, kmax) for c, p in enumerate(parities)])


def energy(
    state: ElsasserState,
    ctx: WeightContext,
    k: int,
    l: int,
    component: str = "full",
    sign: int = 1,
    kmax: int = KMAX,
) -> float:
    """``E^(k,l)_sign`` of ``z_sign`` (or of its horizontal / vertical part)."""
    if k < 0 or l < 0 or k + l > kmax:
        raise ValueError(f"order k + l = {k + l} exceeds kmax = {kmax}")
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {sorted(COMPONENTS)}")
    zh = state.field_hat(sign)
    w = ctx.energy_weight(sign, state.t, state.grid.x1)[None]
    total = 0.0
    for c in COMPONENTS[component]:
        total += weighted_table(zh[c], VECTOR_PARITY[c], state.grid, w, k + l)[0, k, l]
    return float(total)


# --- rescaling between the slab and the unit slab ---------------------------


def rescale_factors(delta: float, kmax: int = KMAX) -> np.ndarray:
    """Factor ``r[c, l]`` with ``E(unit-slab image) = r * E(slab)``.

    ``r = delta^(2(l - 1/2))`` for horizontal components and
    ``delta^(2(l - 3/2))`` for the vertical one.
    """
    l = np.arange(kmax + 1)
    r = np.array([delta ** (2 * l - 1.0)] * 3)
    r[2] = delta ** (2 * l - 3.0)
    return r


# --- the ledger -------------------------------------------------------------


@dataclass
class _Trapezoid:
    """Running trapezoid-in-time integral of an array-valued integrand."""

    total: np.ndarray | None = None
    last: np.ndarray | None = None

    def add(self, value: np.ndarray, dt: float) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        if self.total is None:
            self.total = np.zeros_like(value)
        elif dt != 0.0:
            self.total = self.total + 0.5 * abs(dt) * (self.last + value)
        self.last = value
        return self.total


def _keys(prefix: str, kmax: int, lmax_of=lambda k, kmax: kmax - k) -> list[tuple[str, int, int]]:
    return [(f"{prefix}_k{k}_l{l}", k, l) for k in range(kmax + 1) for l in range(lmax_of(k, kmax) + 1)]


@dataclass
class EnergyLedger:
    """Time table of weighted energies, fluxes, nonlinear and pressure monitors.

    Use as a solver callback (``ledger(state, info)``) or feed states with
    :meth:`update`.  States on the unit slab (rescaled runs) are accepted
    with ``rescaled=True``; they are mapped back to the slab of thickness
    ``delta`` before any norm is taken.

    ``eps2`` fixes the smallness scale ``eps^2``; by default it is the
    initial aggregate energy ``E(0)``.
    """

    ctx: WeightContext
    delta: float
    kmax: int = KMAX
    eps2: float | None = None
    rescaled: bool = False
    every: int = 1
    rows: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.kmax < 1:
            raise ValueError("kmax must be at least 1")
        self._flux = _Trapezoid()
        self._mon = {name: _Trapezoid() for name in ("I", "J", "K", "P")}
        self._sup_energy = None
        self._t_last = None
        self._calls = 0
        self.decay_max = {"p": 0.0, "G+": 0.0, "G-": 0.0}
        self.max_z1 = 0.0
        self.energy0 = None
        self.energy0_delta = None
        self.bootstrap_max = 0.0

    # orders used by the aggregates
    @property
    def n3(self) -> int:
        return min(self.kmax // 2 + 2, self.kmax - 1)

    # --- feeding ----------------------------------------------------------

    def __call__(self, state: ElsasserState, info: dict | None = None) -> None:
        last = info is not None and info.get("dt", 1.0) == 0.0
        if self._calls % self.every == 0 or last:
            dt = 0.0 if self._t_last is None else state.t - self._t_last
            self.update(state, dt, info)
        self._calls += 1

    def _slab_state(self, state: ElsasserState) -> ElsasserState:
        if not self.rescaled:
            return state
        from .solver3d import from_rescaled

        return from_rescaled(state, self.delta)

    def update(self, state: ElsasserState, dt: float, aux: dict | None = None) -> dict:
        """Evaluate every channel at ``state`` and advance the time integrals by ``dt``."""
        slab = self._slab_state(state)
        if not self.rescaled and abs(slab.grid.delta - self.delta) > 1e-14:
            raise ValueError("state thickness does not match the ledger")
        tables = self.energy_tables(slab)
        flux = self._flux.add(tables["flux"], dt)
        mon = self.nonlinear_tables(slab, aux)
        I = self._mon["I"].add(mon["I"], dt)
        J = self._mon["J"].add(mon["J"], dt)
        K = self._mon["K"].add(mon["K"], dt)
        P = self._mon["P"].add(mon["P"], dt)
        energy = tables["energy"]
        if self._sup_energy is None:
            self._sup_energy = energy.copy()
        else:
            self._sup_energy = np.maximum(self._sup_energy, energy)
        for key, val in mon["decay"].items():
            self.decay_max[key] = max(self.decay_max[key], val)
        self.max_z1 = max(self.max_z1, float(max(np.abs(slab.zp[0]).max(), np.abs(slab.zm[0]).max())))
        agg = self.aggregate(self._sup_energy, flux)
        agg_d = self.aggregate_delta(self._sup_energy, flux)
        if self.energy0 is None:
            self.energy0 = self.aggregate(energy, np.zeros_like(energy))
            self.energy0_delta = self.aggregate_delta(energy, np.zeros_like(energy))
            if self.eps2 is None:
                self.eps2 = self.energy0
        eps2 = self.eps2 if self.eps2 and self.eps2 > 0 else 1.0
        boot = max(float(self.bootstrap_entries(energy).max()), float(self.bootstrap_entries(flux).max())) / eps2
        self.bootstrap_max = max(self.bootstrap_max, boot)
        self._t_last = state.t
        row = self._row(state.t, energy, flux, I, J, K, P, mon["decay"], agg, agg_d, boot)
        self.rows.append(row)
        return row

    # --- evaluation -------------------------------------------------------

    def energy_tables(self, state: ElsasserState) -> dict:
        """``energy[s, c, k, l]`` and ``flux`` integrands (s: 0 for +, 1 for -)."""
        g = state.grid
        x1 = g.x1
        e = np.zeros((2, 3, self.kmax + 1, self.kmax + 1))
        f = np.zeros_like(e)
        for s, sign in enumerate((1, -1)):
            w = np.array([self.ctx.energy_weight(sign, state.t, x1), self.ctx.flux_weight(sign, state.t, x1)])
            tab = vector_table(state.field_hat(sign), g, w, self.kmax)
            e[s] = tab[:, 0]
            f[s] = tab[:, 1]
        return {"energy": e, "flux": f}

    def nonlinear_tables(self, state: ElsasserState, aux: dict | None = None) -> dict:
        """Squared weighted norms of I, J, K and grad p, plus the decay quantities."""
        from .solver3d import Solver3D

        g = state.grid
        solver = Solver3D(g)
        if aux is None or self.rescaled or "gp_hat" not in aux:
            Np, Nm, s, _ = solver.nonlinear_terms(state.zp_hat, state.zm_hat)
            p_hat = sp.poisson(s, g, warn=False)
            grad_p = sp.gradient(p_hat, g)
        else:
            p_hat = aux["p_hat"]
            grad_p = sp.gradient(p_hat, g)
            Np = aux["gp_hat"] - grad_p
            Nm = aux["gm_hat"] - grad_p
            s = sp.divergence(Nm, g)
        km = self.kmax
        x1 = g.x1
        I = np.zeros((2, km + 1, km + 1))
        J = np.zeros((2, km + 1, km + 1))
        K = np.zeros((2, km + 1, km + 1))
        d = self.delta
        lpow = np.arange(km + 1)
        ws = np.array([self.ctx.monitor_weight(1, state.t, x1), self.ctx.monitor_weight(-1, state.t, x1)])
        tI = weighted_table(s, COS, g, ws, km - 1)
        for si, N in enumerate((Np, Nm)):
            tJ = vector_table(N, g, ws[si : si + 1], km).sum(axis=0)[0]
            I[si, : km, : km] = tI[si] * d ** (2 * lpow[:km] + 1.0)
            J[si, : km, : km] = tJ[: km, : km] * d ** (2 * lpow[:km] - 1.0)
            # K^(alpha, l) is J^(alpha, l + 1) with the coefficient of order l
            K[si, : km, : km] = tJ[: km, 1:] * d ** (2 * lpow[:km] - 1.0)
        tP = vector_table(grad_p, g, ws[:1], km - 1).sum(axis=0)[0]
        P = np.zeros((km + 1, km + 1))
        P[: km, : km] = tP * d ** (2 * lpow[:km] - 1.0)
        phys = sp.vector_to_physical(np.concatenate([grad_p, Np + grad_p, Nm + grad_p]), g, VECTOR_PARITY * 3)
        mags = [float(np.sqrt((phys[3 * i : 3 * i + 3] ** 2).sum(axis=0)).max()) for i in range(3)]
        growth = (1.0 + abs(state.t - self.ctx.t_origin + self.ctx.a)) ** (1 + self.ctx.sigma)
        decay = {"p": mags[0] * growth, "G+": mags[1] * growth, "G-": mags[2] * growth}
        return {"I": I, "J": J, "K": K, "P": P, "decay": decay}

    # --- aggregates -------------------------------------------------------

    def aggregate(self, energy: np.ndarray, flux: np.ndarray) -> float:
        """The slab aggregate of sup-energies plus fluxes (orders capped by ``kmax``)."""
        km = self.kmax
        d = self.delta
        total = 0.0
        for tab in (energy, flux):
            full = tab.sum(axis=1)
            for k in range(km + 1):
                for l in range(km + 1 - k):
                    total += d ** (2 * l - 1.0) * full[:, k, l].sum()
            for k in range(km):
                total += d**-3 * tab[:, 2, k, 0].sum()
            # d_3 z terms: E^(k,l)(d_3 z) = E^(k,l+1)(z)
            for k in range(self.n3 + 1):
                for l in range(self.n3 + 1 - k):
                    total += d ** (2 * l - 1.0) * full[:, k, l + 1].sum()
        return float(total)

    def aggregate_delta(self, energy: np.ndarray, flux: np.ndarray) -> float:
        """The unit-slab aggregate of the rescaled fields (orders capped by ``kmax``)."""
        km = self.kmax
        r = rescale_factors(self.delta, km)
        total = 0.0
        for tab in (energy, flux):
            unit = tab * r[None, :, None, :]
            h = unit[:, :2].sum(axis=1)
            v = unit[:, 2]

            def order(t, n):
                return sum(t[:, k, n - k].sum() for k in range(n + 1))

            total += sum(order(h, n) for n in range(km + 1))
            total += sum(order(v, n) for n in range(km))
            total += self.delta**2 * order(v, km)
            # d_s z^h on the unit slab shifts l by one
            total += self.delta**-2 * sum(
                sum(h[:, k, n - k + 1].sum() for k in range(n + 1)) for n in range(self.n3 + 1)
            )
        return float(total)

    def bootstrap_entries(self, tab: np.ndarray) -> np.ndarray:
        """The individual bootstrap quantities (energy or flux form), flattened."""
        km = self.kmax
        d = self.delta
        full = tab.sum(axis=1)
        out = []
        for k in range(km + 1):
            for l in range(km + 1 - k):
                out.append(d ** (2 * l - 1.0) * full[:, k, l])
        for k in range(km):
            out.append(d**-3 * tab[:, 2, k, 0])
        for k in range(self.n3 + 1):
            for l in range(self.n3 + 1 - k):
                out.append(d ** (2 * l - 1.0) * full[:, k, l + 1])
        return np.concatenate(out)

    # --- output -----------------------------------------------------------

    def _row(self, t, energy, flux, I, J, K, P, decay, agg, agg_d, boot) -> dict:
        km = self.kmax
        row = {"t": float(t)}
        for s, tag in enumerate(("p", "m")):
            full = energy[s].sum(axis=0)
            for name, k, l in _keys(f"E{tag}", km):
                row[name] = float(full[k, l])
            for name, k, l in _keys(f"E{tag}3", km):
                row[name] = float(energy[s, 2, k, l])
            ff = flux[s].sum(axis=0)
            for name, k, l in _keys(f"F{tag}", km):
                row[name] = float(ff[k, l])
            for name, k, l in _keys(f"F{tag}3", km):
                row[name] = float(flux[s, 2, k, l])
            for prefix, tab in (("I", I), ("J", J), ("K", K)):
                for name, k, l in _keys(f"{prefix}{tag}", km - 1):
                    row[name] = float(tab[s, k, l])
        for name, k, l in _keys("P", km - 1):
            row[name] = float(P[k, l])
        row["decay_p"] = decay["p"]
        row["decay_Gp"] = decay["G+"]
        row["decay_Gm"] = decay["G-"]
        row["agg"] = agg
        row["agg_delta"] = agg_d
        row["bootstrap"] = boot
        return row

    @property
    def columns(self) -> list[str]:
        return list(self.rows[0].keys()) if self.rows else []

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([repr(float(row[c])) for c in self.columns])
        return buf.getvalue()

    def summary(self) -> dict:
        """End-of-run monitors; nonlinear and pressure norms as ratios to ``eps^2``."""
        if not self.rows:
            return {}
        last = self.rows[-1]
        eps2 = self.eps2 if self.eps2 and self.eps2 > 0 else 1.0
        out = {
            "t_end": last["t"],
            "kmax": self.kmax,
            "delta": self.delta,
            "sigma": self.ctx.sigma,
            "a": self.ctx.a,
            "eps2": self.eps2,
            "agg0": self.energy0,
            "agg": last["agg"],
            "agg_delta0": self.energy0_delta,
            "agg_delta": last["agg_delta"],
            "agg_ratio": self.ratio("agg"),
            "agg_delta_ratio": self.ratio("agg_delta"),
            "bootstrap_max": self.bootstrap_max,
            "max_z1": self.max_z1,
            "decay_max": dict(self.decay_max),
        }
        for prefix in ("I", "J", "K"):
            for tag in ("p", "m"):
                vals = [last[n] for n, _, _ in _keys(f"{prefix}{tag}", self.kmax - 1)]
                out[f"{prefix}{tag}_ratio"] = math.sqrt(max(vals)) / eps2
        out["P_ratio"] = math.sqrt(max(last[n] for n, _, _ in _keys("P", self.kmax - 1))) / eps2
        return out

    def ratio(self, column: str) -> float:
        """``max_t column / column(0)``; 1 by convention for zero data."""
        first = self.rows[0][column]
        if first == 0:
            return 1.0
        return max(r[column] for r in self.rows) / first

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def flux_accumulate(ledger: EnergyLedger, state: ElsasserState, dt: float) -> EnergyLedger:
    """Add the trapezoid increment of the flux integrand over the last ``dt``."""
    slab = ledger._slab_state(state)
    ledger._flux.add(ledger.energy_tables(slab)["flux"], dt)
    return ledger


def monitor_nonlinear(ledger: EnergyLedger, state: ElsasserState, dt: float, which: str) -> EnergyLedger:
    if which not in ("I", "J", "K"):
        raise ValueError("which must be 'I', 'J' or 'K'")
    slab = ledger._slab_state(state)
    ledger._mon[which].add(ledger.nonlinear_tables(slab)[which], dt)
    return ledger


def monitor_pressure(ledger: EnergyLedger, state: ElsasserState, dt: float) -> EnergyLedger:
    slab = ledger._slab_state(state)
    tabs = ledger.nonlinear_tables(slab)
    ledger._mon["P"].add(tabs["P"], dt)
    for key, val in tabs["decay"].items():
        ledger.decay_max[key] = max(ledger.decay_max[key], val)
    return ledger


def accumulated(ledger: EnergyLedger, channel: str) -> np.ndarray:
    """Current time integral of a channel (``"F"``, ``"I"``, ``"J"``, ``"K"`` or ``"P"``)."""
    trap = ledger._flux if channel == "F" else ledger._mon[channel]
    if trap.total is None:
        raise ValueError(f"channel {channel!r} has no data")
    return trap.total


# --- inequality probes -----------------------------------------------------------


def _full_gradient_norms(fh: np.ndarray, grid: GridSpec, order: int) -> np.ndarray:
    """``N[k, l] = ||grad_h^k d_3^l f||^2`` with the tensor norm (multinomial weights)."""
    ones = np.ones((1, grid.n1))
    tab = np.zeros((order + 1, order + 1))
    h = grid.horizontal
    for k in range(order + 1):
        for l in range(order + 1 - k):
            total = 0.0
            for a in range(k + 1):
                dh, p = sp.partial_multi(fh, grid, (a, k - a), l, COS)
                total += math.comb(k, a) * weighted_table(dh, p, grid, ones, 0)[0, 0, 0]
            tab[k, l] = total
    return tab


def sobolev_probe(f: np.ndarray, grid: GridSpec) -> float:
    """Ratio ``||f||_inf / sum_{k+l<=2} delta^(l-1/2) ||grad_h^k d_3^l f||`` for a cosine field."""
    fh = sp.to_spectral(f, grid, COS)
    tab = _full_gradient_norms(fh, grid, 2)
    rhs = sum(grid.delta ** (l - 0.5) * math.sqrt(tab[k, l]) for k in range(3) for l in range(3 - k))
    lhs = float(np.abs(f).max())
    return lhs / rhs if rhs > 0 else 0.0


def divcurl_probe(v: np.ndarray, grid: GridSpec, lam) -> dict:
    """Both sides of the weighted div-curl inequality for a wall-compatible field.

    Args:
        v: nodal vector field with parities ``(cos, cos, sin)``.
        lam: weight ``lambda(x1) >= 1`` on the x1 nodes (or a scalar).

    Returns:
        ``lhs = ||sqrt(lam) grad v||^2`` and the right-hand terms ``div``,
        ``curl``, ``zeroth`` and ``wall`` (the boundary integral
        ``|int lam (v^h . grad_h v^3 - v^3 div_h v^h)|`` over both walls,
        with the outward normal sign), plus their sum ``rhs``.
    """
    g = grid
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (g.n1,))[None]
    vh = sp.vector_to_spectral(v, g)
    lhs = 0.0
    for c, p in enumerate(VECTOR_PARITY):
        for axis in range(3):
            d, q = sp.partial(vh[c], g, axis, p)
            lhs += weighted_table(d, q, g, lam, 0)[0, 0, 0]
    div = weighted_table(sp.divergence(vh, g), COS, g, lam, 0)[0, 0, 0]
    curl = sp.curl(vh, g, VECTOR_PARITY)
    curl_norm = sum(weighted_table(curl[c], p, g, lam, 0)[0, 0, 0] for c, p in enumerate((SIN, SIN, COS)))
    zeroth = sum(weighted_table(vh[c], p, g, lam, 0)[0, 0, 0] for c, p in enumerate(VECTOR_PARITY))
    # wall integrand from nodal values on x3 = -delta and x3 = +delta
    d1 = [sp.to_physical(sp.partial(vh[c], g, 0, p)[0], g, p) for c, p in enumerate(VECTOR_PARITY)]
    d2 = [sp.to_physical(sp.partial(vh[c], g, 1, p)[0], g, p) for c, p in enumerate(VECTOR_PARITY)]
    integrand = lam[:, None, :] * (v[0] * d1[2] + v[1] * d2[2] - v[2] * (d1[0] + d2[1]))
    wall = abs(float((integrand[-1] - integrand[0]).sum() * g.dx1 * g.dx2))
    rhs = div + curl_norm + zeroth + wall
    return {"lhs": lhs, "div": div, "curl": curl_norm, "zeroth": zeroth, "wall": wall, "rhs": rhs}


def _product_weight(ctx: WeightContext, sign: int, t, x1):
    g = 1 + ctx.sigma
    return ctx.weight(-sign, t, x1) ** g * ctx.weight(sign, t, x1) ** (g / 2)


def weight_probe(ctx: WeightContext, n: int = 20000, seed: int = 0, t_max: float = 100.0) -> dict:
    """Fitted constants of the weight properties on random samples.

    Returns the envelopes ``near`` (ratio of product weights for
    ``|x_h - y_h| <= 2``), ``far`` (ratio over ``|x_h - y_h|^(3(1+sigma)/2)``
    for ``|x_h - y_h| >= 1``), ``deriv`` (max of ``|d_1^k <u>^(1+sigma)| /
    <u>^(1+sigma)`` for ``k <= 3`` by central differences, both signs) and
    ``product`` (max of ``(1 + |t + a|) / (<u+><u->)`` on a space-time
    lattice).  Times lie in ``[-t_max, t_max]`` around ``t_origin``.
    """
    rng = np.random.default_rng(seed)
    g = 1 + ctx.sigma
    # the properties hold for all t; forward-only samples would tie the envelope to t + a >= a
    t = rng.uniform(-t_max, t_max, n) + ctx.t_origin
    span = 2 * t_max + abs(ctx.a) + 50.0
    x = rng.uniform(-span, span, n)
    out = {}
    # (i) nearby points, displacement anywhere in the disc of radius 2
    r = 2.0 * np.sqrt(rng.uniform(0, 1, n))
    th = rng.uniform(0, 2 * np.pi, n)
    y_near = x + r * np.cos(th)
    # (ii) distant points with heavy-tailed separations
    dist = np.exp(rng.uniform(0.0, np.log(4 * span), n))
    y_far = x + dist * np.cos(rng.uniform(0, 2 * np.pi, n))
    sep = np.abs(dist)
    near = far = 0.0
    for sign in (1, -1):
        wx = _product_weight(ctx, sign, t, x)
        near = max(near, float((wx / _product_weight(ctx, sign, t, y_near)).max()))
        far = max(far, float((wx / _product_weight(ctx, sign, t, y_far) / sep ** (1.5 * g)).max()))
    out["near"] = near
    out["far"] = far
    h = 1e-3
    deriv = 0.0
    for sign in (1, -1):
        f = lambda s: ctx.weight(sign, t, x + s) ** g  # noqa: E731
        base = f(0.0)
        d1 = (f(h) - f(-h)) / (2 * h)
        d2 = (f(h) - 2 * base + f(-h)) / h**2
        d3 = (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h**3)
        for d in (d1, d2, d3):
            deriv = max(deriv, float((np.abs(d) / base).max()))
    out["deriv"] = deriv
    # the product bound peaks in a narrow region between the centres, so use a lattice
    tl = np.linspace(-t_max, t_max, 2001)[:, None] + ctx.t_origin
    half = t_max + abs(ctx.a) + 10.0
    xl = np.linspace(-half, half, int(40 * half) + 1)[None, :]
    prod = ctx.weight(1, tl, xl) * ctx.weight(-1, tl, xl)
    out["product"] = float(((1 + np.abs(tl - ctx.t_origin + ctx.a)) / prod).max())
    return out


def spread(values) -> float:
    """``max / min`` of positive values (``inf`` if any is zero)."""
    v = np.asarray(list(values), dtype=float)
    if (v <= 0).any():
        return math.inf
    return float(v.max() / v.min())
