"""Orchestrated experiments: rigidity by time reversal, the thin-slab limit and uniformity sweeps.

All slab runs go through the rescaled solver on the unit slab (at
``delta = 1`` it is the slab solver itself), so the time step does not
shrink with the thickness.  Norms are always reported for the slab fields
with the thickness coefficients of the weighted spaces, i.e. as
``delta^-1/2 ||z^h||`` and ``delta^-1/2 ||z^3||`` on ``Omega_delta``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import spectral as sp
from .core import ElsasserState, GridSpec, WeightContext
from .diagnostics import EnergyLedger, spread, weighted_table_2d
from .scattering import ScatteringField, residual, scattering_norm, scattering_run, to_slab
from .solver2d import ElsasserState2D, Solver2D, embed
from .solver3d import from_rescaled, relative_l2_difference, rescaled_solver, to_rescaled


def _is_monotone_decreasing(values) -> bool:
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))


def weighted_data_norm(state: ElsasserState, ctx: WeightContext) -> float:
    """``(sum_pm delta^-1 ||<u_-+>^(1+sigma) z_pm||^2)^(1/2)`` on the initial slice."""
    total = 0.0
    for sign in (1, -1):
        sc = ScatteringField(sign, state.field_hat(sign), state.grid, ctx.sigma, ctx.a, ctx.t_origin)
        total += scattering_norm(sc, 0, 0) ** 2
    return math.sqrt(total)


# --- rigidity -------------------------------------------------------------------


@dataclass
class RigidityReport:
    """Outcome of one forward/backward rigidity run.

    ``eta_hat`` is the weighted norm of the scattering fields truncated at
    ``T``; ``tail`` is their certified weighted-L2 tail; ``recovered`` the
    weighted norm of the data recovered by the backward run, measured in
    the same space as the scattering fields.  ``rho = recovered / (eta_hat +
    tail)`` is never reported below ``floor``, the relative reversibility
    error of the round trip.
    """

    delta: float
    T: float
    sigma: float
    a: float
    eta_hat: float
    tail: float
    tail_sup: float
    residual: float
    data_norm: float
    recovered: float
    floor: float
    rho: float
    forward: dict = field(default_factory=dict)
    backward: dict = field(default_factory=dict)
    ledger: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _prepare(data0: ElsasserState, scheme: str, nonlinear: bool, cfl: float):
    delta = data0.grid.delta
    unit = to_rescaled(data0)
    solver = rescaled_solver(delta, unit.grid, scheme=scheme, nonlinear=nonlinear, cfl=cfl)
    return delta, unit, solver


def forward_scattering(
    data0: ElsasserState,
    horizons,
    ctx: WeightContext | None = None,
    scheme: str = "rk4",
    nonlinear: bool = True,
    cfl: float = 0.4,
    dt: float | None = None,
    callbacks=(),
):
    """One forward run of the rescaled system with scattering fields at each horizon.

    Returns a list of ``(T, state_T, fields, result, accumulators)`` where
    ``state_T`` and ``fields`` are mapped back to the slab of ``data0``.
    """
    ctx = ctx or WeightContext()
    delta, unit, solver = _prepare(data0, scheme, nonlinear, cfl)
    out = scattering_run(
        solver, unit, list(horizons), ctx, callbacks, l2_envelope=True, rescaled_delta=delta, dt=dt
    )
    return [
        (T, from_rescaled(res.state, delta), {s: to_slab(f, delta) for s, f in fields.items()}, res, accs)
        for T, res, fields, accs in out
    ]


def rigidity_from_forward(
    data0: ElsasserState,
    T: float,
    state_T: ElsasserState,
    fields: dict,
    forward_report=None,
    ctx: WeightContext | None = None,
    scheme: str = "rk4",
    nonlinear: bool = True,
    cfl: float = 0.4,
    dt: float | None = None,
    ledger_every: int = 0,
    kmax: int = 2,
) -> RigidityReport:
    """Backward half of the rigidity procedure from a completed forward run.

    The state at ``T`` becomes new data with position parameter ``a = T``
    (weights re-centred with ``t_origin = T``), and the system is solved
    back to ``t = 0``.
    """
    ctx = ctx or WeightContext()
    delta, unit_T, solver = _prepare(state_T, scheme, nonlinear, cfl)
    back_ctx = WeightContext(ctx.sigma, a=T, t_origin=T)
    callbacks = []
    ledger = None
    if ledger_every:
        ledger = EnergyLedger(back_ctx, delta, kmax=kmax, rescaled=True, every=ledger_every)
        callbacks.append(ledger)
    back = solver.run(unit_T, data0.t, callbacks, dt=dt)
    recovered = from_rescaled(back.state, delta)
    eta = math.sqrt(sum(scattering_norm(f, 0, 0) ** 2 for f in fields.values()))
    tail = math.sqrt(sum(f.meta.get("tail_bound_l2", 0.0) ** 2 for f in fields.values()))
    tail_sup = max(f.tail_bound for f in fields.values())
    resid = sum((delta**-0.5 * residual(f, state_T)) ** 2 for f in fields.values())
    rec = weighted_data_norm(recovered, ctx)
    data_norm = weighted_data_norm(data0, ctx)
    floor = relative_l2_difference(recovered, data0) if data_norm > 0 else 0.0
    denom = eta + tail
    rho = rec / denom if denom > 0 else 0.0
    return RigidityReport(
        delta=delta,
        T=T,
        sigma=ctx.sigma,
        a=ctx.a,
        eta_hat=eta,
        tail=tail,
        tail_sup=tail_sup,
        residual=math.sqrt(resid),
        data_norm=data_norm,
        recovered=rec,
        floor=floor,
        rho=max(rho, floor),
        forward=forward_report.as_dict() if forward_report is not None else {},
        backward=back.report.as_dict(),
        ledger=ledger.summary() if ledger is not None else {},
    )


def rigidity_experiment(
    data0: ElsasserState,
    T,
    ctx: WeightContext | None = None,
    scheme: str = "rk4",
    nonlinear: bool = True,
    cfl: float = 0.4,
    dt: float | None = None,
    ledger_every: int = 0,
    forward=None,
):
    """Forward run to ``T``, re-centre at ``a = T``, run back and compare.

    ``T`` may be a list; all horizons then share one forward run.  A
    precomputed :func:`forward_scattering` output can be passed as
    ``forward``.  Returns one :class:`RigidityReport` per horizon.
    """
    single = np.ndim(T) == 0
    horizons = [float(T)] if single else [float(x) for x in T]
    if forward is None:
        forward = forward_scattering(data0, horizons, ctx, scheme, nonlinear, cfl, dt)
    by_T = {float(Tf): (st, f, res) for Tf, st, f, res, _ in forward}
    reports = []
    for Tk in horizons:
        if Tk not in by_T:
            raise ValueError(f"forward run has no horizon at T = {Tk}")
        st, f, res = by_T[Tk]
        reports.append(
            rigidity_from_forward(data0, Tk, st, f, res.report, ctx, scheme, nonlinear, cfl, dt, ledger_every)
        )
    return reports[0] if single else reports


# --- the thin-slab limit -----------------------------------------------------------


@dataclass
class LimitReport:
    """Slice differences between the rescaled slab runs and the planar run.

    For each ``delta``: ``slice_diff`` is the largest (over the requested
    ``x3`` nodes) discrete ``H^k`` norm of ``Z^h_(delta) - z^h_(0)``,
    ``z3_norm`` the largest slice L2 norm of ``Z^3_(delta)`` and
    ``sc_diff`` the largest weighted slice L2 norm of the difference of
    the horizontal scattering fields (both signs combined).  ``relative``
    holds ``slice_diff`` over the planar ``H^k`` norm.
    """

    deltas: list
    t_eval: float
    kmax: int
    slices: list
    slice_diff: list = field(default_factory=list)
    relative: list = field(default_factory=list)
    z3_norm: list = field(default_factory=list)
    sc_diff: list = field(default_factory=list)
    reports: list = field(default_factory=list)

    @property
    def trends(self) -> dict:
        out = {}
        for name in ("slice_diff", "z3_norm", "sc_diff"):
            v = getattr(self, name)
            ratio = v[-1] / v[0] if v and v[0] > 0 else 0.0
            out[name] = {"monotone": _is_monotone_decreasing(v), "final_over_first": ratio}
        return out

    def as_dict(self) -> dict:
        d = asdict(self)
        d["trends"] = self.trends
        return d

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "slice_diff", "relative", "z3_norm", "sc_diff"])
        for row in zip(self.deltas, self.slice_diff, self.relative, self.z3_norm, self.sc_diff):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _hk_norm(fh_list, h, kmax: int, weight=None) -> float:
    w = np.ones((1, h.n1)) if weight is None else weight[None]
    return math.sqrt(sum(weighted_table_2d(fh, h, w, kmax, multinomial=True)[0].sum() for fh in fh_list))


def limit_data(profile: ElsasserState2D, unit: GridSpec, delta: float, perturbation: ElsasserState | None):
    """Rescaled data ``embed(profile) + delta * Y`` on the unit slab."""
    base = embed(profile, unit)
    if perturbation is None:
        return base
    return base.replace(
        zp_hat=base.zp_hat + delta * perturbation.zp_hat, zm_hat=base.zm_hat + delta * perturbation.zm_hat
    )


def delta_limit_experiment(
    profile: ElsasserState2D,
    unit: GridSpec,
    deltas=(0.4, 0.2, 0.1, 0.05),
    t_eval: float = 10.0,
    x3_slices=None,
    perturbation: ElsasserState | None = None,
    kmax: int = 2,
    dt: float = 0.1,
    ctx: WeightContext | None = None,
    scheme: str = "rk4",
) -> LimitReport:
    """Compare rescaled slab runs with the planar run as ``delta -> 0``.

    Args:
        profile: planar data ``z_(0)``.
        unit: unit-slab grid whose horizontal part matches ``profile.grid``.
        perturbation: unit-slab field ``Y`` (divergence-free, wall
            compatible); the rescaled data are ``embed(profile) + delta Y``.
            ``None`` gives the trivially embedded planar data.
        x3_slices: unit-slab node indices (default: all nodes).
        dt: fixed step shared by every run so the discretizations agree.
    """
    if unit.delta != 1.0:
        raise ValueError("the limit harness runs on the unit slab")
    ctx = ctx or WeightContext()
    h = unit.horizontal
    slices = list(range(unit.mv + 1)) if x3_slices is None else list(x3_slices)
    res2, sc2 = scattering_run(Solver2D(h, scheme=scheme), profile, t_eval, ctx, dt=dt)
    s2 = res2.state
    ref = _hk_norm([s2.zp_hat[c] for c in range(2)] + [s2.zm_hat[c] for c in range(2)], h, kmax)
    report = LimitReport(list(map(float, deltas)), float(t_eval), kmax, slices)
    for delta in deltas:
        data = limit_data(profile, unit, delta, perturbation)
        solver = rescaled_solver(delta, unit, scheme=scheme)
        res3, sc3 = scattering_run(solver, data, t_eval, ctx, dt=dt)
        s3 = res3.state
        diff = z3 = scd = 0.0
        for j3 in slices:
            parts = []
            z3parts = []
            for z3d, z2d in ((s3.zp, s2.zp), (s3.zm, s2.zm)):
                for c in range(2):
                    parts.append(sp.h_forward(z3d[c, j3] - z2d[c]))
                z3parts.append(sp.h_forward(z3d[2, j3]))
            diff = max(diff, _hk_norm(parts, h, kmax))
            z3 = max(z3, _hk_norm(z3parts, h, 0))
            total = 0.0
            for sign in (1, -1):
                v3 = sc3[sign].values[:2, j3]
                v2 = sc2[sign].values
                w = ctx.energy_weight(sign, ctx.t_origin, h.x1)
                total += _hk_norm([sp.h_forward(v3[c] - v2[c]) for c in range(2)], h, 0, w) ** 2
            scd = max(scd, math.sqrt(total))
        report.slice_diff.append(diff)
        report.relative.append(diff / ref if ref > 0 else diff)
        report.z3_norm.append(z3)
        report.sc_diff.append(scd)
        report.reports.append({"delta": float(delta), "run": res3.report.as_dict()})
    return report


# --- uniformity sweep ---------------------------------------------------------------


@dataclass
class SweepReport:
    """Per-run growth ratios of the aggregates and the bootstrap constants.

    ``rows`` holds one entry per ``(delta, a)``.  The bootstrap constant of
    a run is the largest bootstrap quantity over ``eps^2 = E(0)``.
    """

    rows: list = field(default_factory=list)

    def spread(self, key: str) -> float:
        return spread(r[key] for r in self.rows)

    @property
    def spreads(self) -> dict:
        keys = ("agg_ratio", "agg_delta_ratio", "bootstrap_max")
        return {k: self.spread(k) for k in keys} if self.rows else {}

    @property
    def bootstrap_ok(self) -> bool:
        """``||z_pm^1||_inf <= 1/2`` along every run."""
        return all(r["max_z1"] <= 0.5 for r in self.rows)

    def bootstrap_spreads(self, deltas=(1.0, 0.5, 0.25)) -> dict:
        """Spread of the bootstrap constants along each swept parameter.

        ``"delta"``: largest spread over ``deltas`` at fixed ``a``;
        ``"a"``: largest spread over ``a`` at fixed ``delta``; ``"joint"``:
        spread over all selected runs.
        """
        rows = [r for r in self.rows if any(math.isclose(r["delta"], d) for d in deltas)]
        a_vals = sorted({r["a"] for r in rows})
        d_vals = sorted({r["delta"] for r in rows})
        along_d = [spread(r["bootstrap_max"] for r in rows if r["a"] == a) for a in a_vals]
        along_a = [spread(r["bootstrap_max"] for r in rows if r["delta"] == d) for d in d_vals]
        return {
            "delta": max(along_d, default=1.0),
            "a": max(along_a, default=1.0),
            "joint": spread(r["bootstrap_max"] for r in rows) if rows else 1.0,
        }

    def as_dict(self) -> dict:
        return {
            "rows": self.rows,
            "spreads": self.spreads,
            "bootstrap_spreads": self.bootstrap_spreads(),
            "bootstrap_ok": self.bootstrap_ok,
        }

    def to_csv(self) -> str:
        if not self.rows:
            return ""
        buf = io.StringIO()
        keys = list(self.rows[0].keys())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in self.rows:
            w.writerow([repr(float(r[k])) for k in keys])
        return buf.getvalue()


@dataclass(frozen=True)
class SweepJob:
    """One member of a sweep: a thickness and the weights evaluated along its run."""

    grid: GridSpec
    amplitude: float
    widths: tuple
    seed: int
    delta: float
    a_values: tuple
    t_end: float
    sigma: float = 0.25
    kmax: int = 2
    every: int = 5
    dt: float | None = None


def thin_family(unit: GridSpec, delta: float, amplitude: float, widths=(12.0, 3.0), seed: int = 0) -> ElsasserState:
    """Rescaled data ``embed(Z_0) + delta Y`` of the thin-slab small-data class.

    ``Z_0`` is a planar packet and ``Y`` a unit-slab packet, both with
    ``max |.| = amplitude``.  The aggregate carries ``delta^-2 E(d_3 z^h)``,
    so data stay uniformly small in ``delta`` only when the vertical
    structure of ``z^h`` is of size ``delta``; this family is the natural one.
    """
    from .core import gaussian_packet
    from .solver2d import gaussian_packet_2d

    profile = gaussian_packet_2d(unit.horizontal, amplitude, widths=widths, seed=seed)
    y = gaussian_packet(unit, amplitude, widths=widths, seed=seed + 1)
    return limit_data(profile, unit, delta, y)


def _run_sweep_job(job: SweepJob) -> list[dict]:
    unit = thin_family(job.grid, job.delta, job.amplitude, job.widths, job.seed)
    solver = rescaled_solver(job.delta, unit.grid)
    ledgers = [
        EnergyLedger(WeightContext(job.sigma, a), job.delta, job.kmax, rescaled=True, every=job.every)
        for a in job.a_values
    ]
    res = solver.run(unit, job.t_end, ledgers, dt=job.dt)
    rows = []
    for a, led in zip(job.a_values, ledgers):
        summ = led.summary() if led.rows else {}
        rows.append(
            {
                "delta": job.delta,
                "a": float(a),
                "agg_ratio": led.ratio("agg") if led.rows else 1.0,
                "agg_delta_ratio": led.ratio("agg_delta") if led.rows else 1.0,
                "bootstrap_max": summ.get("bootstrap_max", 0.0),
                "max_z1": max(summ.get("max_z1", 0.0), res.report.max_z1),
                "drift": max(res.report.drift),
            }
        )
    return rows


def uniformity_sweep(
    grid: GridSpec,
    amplitude: float = 0.01,
    deltas=(1.0, 0.5, 0.25, 0.1),
    a_values=(0.0, 10.0),
    t_end: float = 10.0,
    widths=(12.0, 3.0),
    seed: int = 0,
    sigma: float = 0.25,
    kmax: int = 2,
    every: int = 5,
    dt: float | None = None,
    jobs: int = 1,
) -> SweepReport:
    """Matched runs of :func:`thin_family` data over ``deltas``; one ledger per ``a``.

    The trajectory does not depend on ``a`` (it only enters the weights), so
    every ``a`` shares the run of its thickness.  With ``jobs > 1`` the
    thicknesses run in separate processes; rows are merged in input order.
    """
    if grid.delta != 1.0:
        raise ValueError("sweeps take the unit-slab grid")
    members = [
        SweepJob(grid, amplitude, tuple(widths), seed, float(d), tuple(a_values), t_end, sigma, kmax, every, dt)
        for d in deltas
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_sweep_job, members))
    else:
        results = [_run_sweep_job(m) for m in members]
    return SweepReport([row for rows in results for row in rows])


def write_report(report, path) -> None:
    """JSON (and CSV when available) next to each other: ``<path>.json`` and ``<path>.csv``."""
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = report.as_dict() if hasattr(report, "as_dict") else report
    path.with_suffix(".json").write_text(json.dumps(d, indent=2, sort_keys=True, default=_jsonable))
    if hasattr(report, "to_csv"):
        path.with_suffix(".csv").write_text(report.to_csv())


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")
