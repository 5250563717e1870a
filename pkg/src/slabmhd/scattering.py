"""Scattering fields at infinity along the characteristic lines.

For the left-travelling field::

    z+(inf; u-, x2, x3) = z+(0, u-, x2, x3) - int_0^inf G+(tau, u- - tau, x2, x3) dtau

with ``G+ = grad p + z- . grad z+`` (and the mirror formula for ``z-``
with ``u+ + tau``).  Sampling every ``u`` at once is an exact spectral
shift of the integrand by ``tau`` along x1, so the field is accumulated
in coefficient space with the trapezoid rule on the solver's own steps.

The same code serves the slab (``GridSpec``, three components) and the
plane (``Grid2D``, two components).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import spectral as sp
from .core import VECTOR_PARITY, Grid2D, GridSpec, WeightContext, _check_sign
from .diagnostics import weighted_table, weighted_table_2d


def _is_slab(grid) -> bool:
    return isinstance(grid, GridSpec)


def _to_physical(vh: np.ndarray, grid) -> np.ndarray:
    if _is_slab(grid):
        return sp.vector_to_physical(vh, grid)
    return sp.h_inverse(vh, grid.n1)


def _sup(vh: np.ndarray, grid) -> float:
    v = _to_physical(vh, grid)
    return float(np.sqrt((v**2).sum(axis=0)).max())


@dataclass
class ScatteringField:
    """Scattering field of ``z_sign`` sampled on the initial-slice lattice.

    Attributes:
        sign: +1 for the left field on the plus infinity, -1 for the right one.
        coeffs: spectral coefficients (components first).
        grid: slab or planar grid; ``u`` runs along the x1 nodes.
        t_max: time reached by the integral.
        tail_bound: certified bound on the sup of the neglected remainder.
        c_hat: envelope of ``sup_x |G| (1 + |t + a|)^(1 + sigma)``.
    """

    sign: int
    coeffs: np.ndarray
    grid: object
    sigma: float = 0.25
    a: float = 0.0
    t_origin: float = 0.0
    t_max: float = 0.0
    tail_bound: float = math.inf
    c_hat: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return _to_physical(self.coeffs, self.grid)

    @property
    def delta(self) -> float:
        return self.grid.delta if _is_slab(self.grid) else 0.0

    def manifest(self) -> dict:
        g = self.grid
        grid = {"n1": g.n1, "n2": g.n2, "l1": g.l1, "l2": g.l2}
        if _is_slab(g):
            grid.update(mv=g.mv, delta=g.delta)
        return {
            "format": "scattering-field",
            "version": "1",
            "grid": grid,
            "sign": self.sign,
            "t_max": self.t_max,
            "tail_bound": self.tail_bound,
            "c_hat": self.c_hat,
            "sigma": self.sigma,
            "a": self.a,
            "delta": self.delta,
            "order": "[component][x3][x2][u]" if _is_slab(g) else "[component][x2][u]",
            "dtype": "<f8",
        }


class ScatteringAccumulator:
    """Solver callback accumulating the scattering field of ``z_sign``.

    The first callback sets the field to the data transported back to the
    initial slice; each later callback adds the trapezoid increment of the
    shifted integrand.  ``G_sign`` is read from the solver's ``info``
    (``gp_hat`` / ``gm_hat``) when present.
    """

    def __init__(
        self,
        sign: int,
        grid,
        ctx: WeightContext | None = None,
        wrap_margin: float = 0.0,
        l2_envelope: bool = False,
        rescaled_delta: float | None = None,
    ):
        self.sign = _check_sign(sign)
        self.grid = grid
        self.ctx = ctx or WeightContext()
        self.wrap_margin = wrap_margin
        self.l2_envelope = l2_envelope
        self.rescaled_delta = rescaled_delta
        self.coeffs = None
        self._last = None
        self._t_last = None
        self.t_start = None
        # (t, sup_x |G|, normalized weighted L2 norm of the shifted G or nan)
        self.history: list[tuple[float, float, float]] = []
        self.max_shift = 0.0
        self.warnings: list[str] = []

    def _shift(self, t: float) -> float:
        # z+ is sampled at x1 = u - tau, i.e. shifted by +tau
        return self.sign * (t - self.ctx.t_origin)

    def __call__(self, state, info: dict) -> None:
        key = "gp_hat" if self.sign > 0 else "gm_hat"
        g_hat = info[key]
        self.accumulate(state, g_hat, state.t)

    def accumulate(self, state, g_hat: np.ndarray, t: float) -> None:
        s = self._shift(t)
        self.max_shift = max(self.max_shift, abs(s))
        l1 = self.grid.l1
        if abs(s) > l1 / 2 - self.wrap_margin:
            msg = f"characteristic shift {s:.3g} exceeds the half box minus margin"
            if msg not in self.warnings:
                self.warnings.append(msg)
                warnings.warn(msg, RuntimeWarning, stacklevel=2)
        shifted = sp.shift_x1(g_hat, self.grid, s)
        l2 = self._l2(shifted) if self.l2_envelope else math.nan
        self.history.append((t, _sup(g_hat, self.grid), l2))
        if self.coeffs is None:
            self.coeffs = sp.shift_x1(state.field_hat(self.sign), self.grid, s).copy()
            self.t_start = t
        else:
            dt = t - self._t_last
            self.coeffs = self.coeffs - 0.5 * dt * (self._last + shifted)
        self._last = shifted
        self._t_last = t

    def _l2(self, vh: np.ndarray) -> float:
        """Normalized weighted L2 norm on the initial slice (``delta^-1/2 ||.||`` on the slab)."""
        w = self.ctx.energy_weight(self.sign, self.ctx.t_origin, self.grid.x1)[None]
        g = self.grid
        if not _is_slab(g):
            return math.sqrt(sum(weighted_table_2d(vh[c], g, w, 0)[0, 0] for c in range(vh.shape[0])))
        scale = [1.0, 1.0, 1.0]
        if self.rescaled_delta is not None:
            # unit-slab norm of (Z^h, delta Z^3) equals the normalized slab norm
            scale[2] = self.rescaled_delta
            norm2 = 1.0
        else:
            norm2 = 1.0 / g.delta
        total = sum(
            scale[c] ** 2 * weighted_table(vh[c], VECTOR_PARITY[c], g, w, 0)[0, 0, 0] for c in range(3)
        )
        return math.sqrt(norm2 * total)

    def field(self) -> ScatteringField:
        if self.coeffs is None:
            raise ValueError("no states accumulated")
        meta = {}
        if self.l2_envelope:
            meta["c_hat_l2"] = self.envelope("l2")
        if self.rescaled_delta is not None:
            meta["rescaled_delta"] = self.rescaled_delta
        return ScatteringField(
            self.sign,
            self.coeffs.copy(),
            self.grid,
            self.ctx.sigma,
            self.ctx.a,
            self.ctx.t_origin,
            t_max=self._t_last - self.ctx.t_origin,
            c_hat=self.envelope(),
            meta=meta,
        )

    def decay_values(self, kind: str = "sup", ctx: WeightContext | None = None) -> np.ndarray:
        """``|G| (1 + |t + a|)^(1 + sigma)`` along the run (``kind``: ``"sup"`` or ``"l2"``).

        ``ctx`` may override the position parameter; the integrand itself
        does not depend on it.
        """
        ctx = ctx or self.ctx
        if not self.history:
            return np.zeros(0)
        h = np.array(self.history)
        growth = (1.0 + np.abs(h[:, 0] - ctx.t_origin + ctx.a)) ** (1 + ctx.sigma)
        return h[:, 1 if kind == "sup" else 2] * growth

    def envelope(self, kind: str = "sup") -> float:
        v = self.decay_values(kind)
        return float(v.max()) if v.size else 0.0

    def envelope_growing(self, fraction: float = 0.2) -> bool:
        """True if the envelope still rises in the last ``fraction`` of the run."""
        if len(self.history) < 2:
            return False
        t = np.array([h[0] for h in self.history])
        v = self.decay_values()
        cut = t[0] + (1 - fraction) * (t[-1] - t[0])
        early = v[t <= cut]
        late = v[t > cut]
        return late.size > 0 and early.size > 0 and late.max() > early.max()


def accumulate(acc: ScatteringAccumulator, state, g_hat: np.ndarray, dt: float | None = None) -> ScatteringAccumulator:
    """Functional form of :meth:`ScatteringAccumulator.accumulate` at ``state.t``."""
    acc.accumulate(state, g_hat, state.t)
    return acc


def tail_bound(c_hat: float, t_max: float, sigma: float, a: float) -> float:
    """``C int_{t_max}^inf (1 + tau + a)^-(1+sigma) dtau = C (1 + t_max + a)^-sigma / sigma``."""
    if c_hat == 0:
        return 0.0
    return c_hat * (1.0 + t_max + a) ** (-sigma) / sigma


def finalize(acc: ScatteringAccumulator, c_hat: float | None = None) -> ScatteringField:
    """Attach the certified tail bound to the accumulated field."""
    sc = acc.field()
    if c_hat is None:
        c_hat = sc.c_hat
        if acc.envelope_growing():
            msg = "integrand envelope still growing near the end of the run"
            acc.warnings.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    meta = dict(sc.meta)
    if "c_hat_l2" in meta:
        meta["tail_bound_l2"] = tail_bound(meta["c_hat_l2"], sc.t_max, sc.sigma, sc.a)
    return replace(sc, c_hat=c_hat, tail_bound=tail_bound(c_hat, sc.t_max, sc.sigma, sc.a), meta=meta)


def to_slab(sc: ScatteringField, delta: float) -> ScatteringField:
    """Map a field accumulated by the rescaled solver on the unit slab to the slab of thickness ``delta``."""
    if not _is_slab(sc.grid) or sc.grid.delta != 1.0:
        raise ValueError("expected a field on the unit slab")
    coeffs = sc.coeffs.copy()
    coeffs[2] *= delta
    meta = {k: v for k, v in sc.meta.items() if k != "rescaled_delta"}
    return replace(sc, coeffs=coeffs, grid=sc.grid.with_delta(delta), meta=meta)


def _weight(sc: ScatteringField) -> np.ndarray:
    ctx = WeightContext(sc.sigma, sc.a, sc.t_origin)
    return ctx.energy_weight(sc.sign, sc.t_origin, sc.grid.x1)[None]


def _weighted_norm(vh: np.ndarray, sc: ScatteringField, k: int = 0, l: int = 0, comps=None) -> float:
    g = sc.grid
    w = _weight(sc)
    ncomp = vh.shape[0]
    comps = range(ncomp) if comps is None else comps
    total = 0.0
    for c in comps:
        if _is_slab(g):
            total += weighted_table(vh[c], VECTOR_PARITY[c], g, w, k + l)[0, k, l]
        else:
            total += weighted_table_2d(vh[c], g, w, k)[0, k]
    return math.sqrt(total)


def transported(state, sign: int, t_origin: float = 0.0) -> np.ndarray:
    """Coefficients of ``z_sign(T, u -+ T)`` on the initial-slice lattice."""
    return sp.shift_x1(state.field_hat(sign), state.grid, sign * (state.t - t_origin))


def residual(sc: ScatteringField, state, k: int = 0, l: int = 0) -> float:
    """Weighted L2 distance between the field and the transported state at time T."""
    diff = sc.coeffs - transported(state, sc.sign, sc.t_origin)
    return _weighted_norm(diff, replace(sc, coeffs=diff), k, l)


def sup_difference(a: ScatteringField, b: ScatteringField) -> float:
    """``max |a - b|`` over the lattice."""
    return _sup(a.coeffs - b.coeffs, a.grid)


def scattering_norm(sc: ScatteringField, k: int, l: int = 0, part: str = "full") -> float:
    """Weighted L2 norms with their thickness coefficients.

    ``part="full"``: ``delta^(l-1/2) ||d_h^k d_3^l z||``;
    ``part="3"``: ``delta^(-3/2) ||d_h^k z^3||`` (``l`` must be 0);
    ``part="d3"``: ``delta^(l-1/2) ||d_h^k d_3^l (d_3 z)||``.
    On a planar grid only ``part="full"`` with ``l = 0`` applies and no
    thickness factor is used.
    """
    g = sc.grid
    if not _is_slab(g):
        if l or part != "full":
            raise ValueError("planar scattering fields have no vertical direction")
        return _weighted_norm(sc.coeffs, sc, k, 0)
    d = g.delta
    if part == "full":
        return d ** (l - 0.5) * _weighted_norm(sc.coeffs, sc, k, l)
    if part == "3":
        if l:
            raise ValueError("the vertical-component norm is defined for l = 0")
        return d**-1.5 * _weighted_norm(sc.coeffs, sc, k, 0, comps=(2,))
    if part == "d3":
        return d ** (l - 0.5) * _weighted_norm(sc.coeffs, sc, k, l + 1)
    raise ValueError("part must be 'full', '3' or 'd3'")


def save(sc: ScatteringField, path) -> tuple[Path, Path]:
    """Write ``<path>.bin`` (little-endian float64) and ``<path>.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.ascontiguousarray(sc.values, dtype="<f8")
    bin_path = path.with_suffix(".bin")
    json_path = path.with_suffix(".json")
    bin_path.write_bytes(data.tobytes())
    manifest = sc.manifest()
    manifest["shape"] = list(data.shape)
    json_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return bin_path, json_path


def load(path) -> ScatteringField:
    path = Path(path)
    manifest = json.loads(path.with_suffix(".json").read_text())
    if manifest.get("format") != "scattering-field" or manifest.get("version") != "1":
        raise ValueError("not a version 1 scattering-field manifest")
    gm = manifest["grid"]
    shape = tuple(manifest["shape"])
    raw = path.with_suffix(".bin").read_bytes()
    if len(raw) != 8 * int(np.prod(shape)):
        raise ValueError("payload size does not match the manifest shape")
    values = np.frombuffer(raw, dtype="<f8").reshape(shape)
    if "mv" in gm:
        grid = GridSpec(gm["n1"], gm["n2"], gm["mv"], gm["delta"], gm["l2"], gm["l1"])
        coeffs = sp.vector_to_spectral(values, grid)
    else:
        grid = Grid2D(gm["n1"], gm["n2"], gm["l1"], gm["l2"])
        coeffs = sp.h_forward(values)
    return ScatteringField(
        manifest["sign"],
        coeffs,
        grid,
        manifest["sigma"],
        manifest["a"],
        t_max=manifest["t_max"],
        tail_bound=manifest["tail_bound"],
        c_hat=manifest["c_hat"],
    )


class _SkipFirst:
    """Callback wrapper that ignores the first call (the already-seen start of a continued run)."""

    def __init__(self, cb):
        self.cb = cb
        self.seen = False

    def __call__(self, state, info):
        if self.seen:
            self.cb(state, info)
        self.seen = True


def _finalize_all(accs: dict, report) -> dict:
    fields = {}
    for s, acc in accs.items():
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fields[s] = finalize(acc)
        for w in caught:
            if str(w.message) not in report.warnings:
                report.warnings.append(str(w.message))
        report.warnings.extend(m for m in acc.warnings if m not in report.warnings)
        report.max_shift = max(report.max_shift, acc.max_shift)
    return fields


def scattering_run(
    solver,
    state0,
    horizons,
    ctx: WeightContext | None = None,
    callbacks=(),
    signs=(1, -1),
    l2_envelope: bool = False,
    rescaled_delta: float | None = None,
    **run_kw,
):
    """Run ``solver`` from ``state0`` and accumulate the scattering fields on the way.

    ``horizons`` is one end time or an increasing list; the run is continued
    from one horizon to the next and the fields are finalized at each.
    Returns ``(result, fields)`` for a single horizon, otherwise a list of
    ``(T, result, fields, accumulators)``, where ``fields[sign]`` is a
    finalized :class:`ScatteringField` and ``result`` the run up to ``T``.
    """
    single = np.ndim(horizons) == 0
    horizons = [float(horizons)] if single else [float(T) for T in horizons]
    ctx = ctx or WeightContext(t_origin=state0.t)
    accs = {
        s: ScatteringAccumulator(s, solver.grid, ctx, l2_envelope=l2_envelope, rescaled_delta=rescaled_delta)
        for s in signs
    }
    out = []
    state = state0
    for i, T in enumerate(horizons):
        cbs = [*accs.values(), *callbacks]
        if i:
            cbs = [_SkipFirst(cb) for cb in cbs]
        result = solver.run(state, T, cbs, **run_kw)
        fields = _finalize_all(accs, result.report)
        out.append((T, result, fields, accs))
        state = result.state
    if single:
        return out[0][1], out[0][2]
    return out
