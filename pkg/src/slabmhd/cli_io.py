"""Command line, run configuration and field persistence.

Fields are stored as raw little-endian float64 in ``[component][x3][x2][x1]``
order (``<name>.bin``) with a JSON manifest (``<name>.json``).  Every run
directory receives ``config.json`` (the resolved configuration), a ledger
CSV where one applies, and ``summary.json``.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import spectral as sp
from .core import VECTOR_PARITY, ElsasserState, GridSpec, WeightContext, gaussian_packet
from .diagnostics import EnergyLedger
from .experiments import (
    _jsonable,
    delta_limit_experiment,
    forward_scattering,
    rigidity_from_forward,
    uniformity_sweep,
    write_report,
)
from .scattering import _SkipFirst, residual
from .scattering import save as save_scattering
from .solver2d import gaussian_packet_2d
from .solver3d import MonitorAbort, from_rescaled, relative_l2_difference, rescaled_solver, to_rescaled

FORMAT_VERSION = "1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3

DEFAULT_CONFIG = {
    "grid": {"n1": 128, "n2": 32, "mv": 8, "delta": 1.0, "l1": 128 * math.pi, "l2": 8 * math.pi},
    "data": {"amplitude": 0.01, "center": [0.0, 0.0], "widths": [12.0, 3.0], "seed": 1, "vertical_modes": 2},
    "weights": {"sigma": 0.25, "a": 0.0},
    "run": {
        "t_end": 10.0,
        "cfl": 0.4,
        "dt": None,
        "scheme": "rk4",
        "nonlinear": True,
        "kmax": 2,
        "ledger_every": 5,
        "snapshots": [],
        "return": False,
    },
    "scatter": {"horizons": [5.0, 10.0, 20.0, 40.0]},
    "rigidity": {"deltas": [1.0, 0.25], "horizons": [20.0, 40.0], "ledger_every": 0},
    "limit": {"deltas": [0.4, 0.2, 0.1, 0.05], "t_eval": 10.0, "kmax": 2, "dt": 0.1, "perturbation": True},
    "sweep": {"deltas": [1.0, 0.5, 0.25, 0.1], "a_values": [0.0, 10.0], "t_end": 10.0, "every": 5, "jobs": 1},
}


class ConfigError(ValueError):
    pass


# --- field files ------------------------------------------------------------------


def _paths(path) -> tuple[Path, Path]:
    path = Path(path)
    if path.suffix in (".bin", ".json"):
        path = path.with_suffix("")
    return path.with_suffix(".bin"), path.with_suffix(".json")


def save_field(path, values: np.ndarray, grid: GridSpec, t: float = 0.0, ctx: WeightContext | None = None,
               parities=VECTOR_PARITY, **extra) -> tuple[Path, Path]:
    """Write nodal ``values`` of shape ``(ncomp, mv + 1, n2, n1)`` and its manifest."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 4 or values.shape[1:] != grid.shape:
        raise ValueError(f"expected (ncomp, {', '.join(map(str, grid.shape))}), got {values.shape}")
    if len(parities) != values.shape[0]:
        raise ValueError("one parity per component is required")
    ctx = ctx or WeightContext()
    bin_path, json_path = _paths(path)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    bin_path.write_bytes(values.astype("<f8").tobytes(order="C"))
    manifest = {
        "format": "slab-field",
        "version": FORMAT_VERSION,
        "grid": {"n1": grid.n1, "n2": grid.n2, "mv": grid.mv, "l1": grid.l1, "l2": grid.l2},
        "delta": grid.delta,
        "sigma": ctx.sigma,
        "a": ctx.a,
        "t": float(t),
        "components": values.shape[0],
        "parities": list(parities),
        "order": "[component][x3][x2][x1]",
        "dtype": "<f8",
        **extra,
    }
    json_path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable))
    return bin_path, json_path


def load_manifest(path) -> dict:
    """Metadata of a stored field without reading the payload."""
    _, json_path = _paths(path)
    manifest = json.loads(json_path.read_text())
    if manifest.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported field format version {manifest.get('version')!r}")
    return manifest


def manifest_grid(manifest: dict) -> GridSpec:
    g = manifest["grid"]
    return GridSpec(g["n1"], g["n2"], g["mv"], manifest["delta"], lh=g["l2"], lh1=g["l1"])


def load_field(path) -> tuple[np.ndarray, dict]:
    """Read a field written by :func:`save_field`; returns ``(values, manifest)``."""
    bin_path, _ = _paths(path)
    manifest = load_manifest(path)
    g = manifest["grid"]
    shape = (manifest["components"], g["mv"] + 1, g["n2"], g["n1"])
    raw = bin_path.read_bytes()
    expected = 8 * int(np.prod(shape))
    if len(raw) != expected:
        raise ValueError(f"payload has {len(raw)} bytes, expected {expected}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64), manifest


def save_state(path, state: ElsasserState, ctx: WeightContext | None = None) -> tuple[Path, Path]:
    """Both Elsasser fields as six components ``(z+^1..3, z-^1..3)``."""
    values = np.concatenate([state.zp, state.zm])
    return save_field(path, values, state.grid, state.t, ctx, VECTOR_PARITY * 2, fields=["z+", "z-"])


def load_state(path) -> ElsasserState:
    values, manifest = load_field(path)
    if manifest["components"] != 6:
        raise ValueError("not an Elsasser state file")
    return ElsasserState.from_physical(values[:3], values[3:], manifest_grid(manifest), manifest["t"])


# --- configuration ----------------------------------------------------------------


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where}{key!r} must be an object")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def load_config(path=None, seed: int | None = None) -> dict:
    """Defaults overridden by the JSON file at ``path`` and the seed flag."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        cfg = _merge(cfg, user)
    if seed is not None:
        cfg["data"]["seed"] = seed
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    try:
        grid_from_config(cfg)
        r = cfg["run"]
        if r["scheme"] not in ("rk4", "ifrk4"):
            raise ConfigError("run.scheme must be 'rk4' or 'ifrk4'")
        if not 0 < float(r["cfl"]) <= 1:
            raise ConfigError("run.cfl must lie in (0, 1]")
        if r["dt"] is not None and not float(r["dt"]) > 0:
            raise ConfigError("run.dt must be positive")
        if int(r["kmax"]) < 1 or int(r["ledger_every"]) < 0:
            raise ConfigError("run.kmax must be >= 1 and run.ledger_every >= 0")
        if float(cfg["data"]["amplitude"]) < 0:
            raise ConfigError("data.amplitude must be non-negative")
        if float(cfg["weights"]["sigma"]) <= 0:
            raise ConfigError("weights.sigma must be positive")
        data_from_config(cfg)
        for key in ("scatter", "rigidity"):
            h = [float(x) for x in cfg[key]["horizons"]]
            if not h or any(b <= a for a, b in zip(h, h[1:])) or h[0] <= 0:
                raise ConfigError(f"{key}.horizons must be positive and increasing")
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def grid_from_config(cfg: dict, delta: float | None = None) -> GridSpec:
    g = cfg["grid"]
    return GridSpec(
        int(g["n1"]), int(g["n2"]), int(g["mv"]), float(g["delta"] if delta is None else delta),
        lh=float(g["l2"]), lh1=float(g["l1"]),
    )


def data_from_config(cfg: dict, delta: float | None = None) -> ElsasserState:
    d = cfg["data"]
    return gaussian_packet(
        grid_from_config(cfg, delta), float(d["amplitude"]), tuple(d["center"]), tuple(d["widths"]),
        int(d["seed"]), int(d["vertical_modes"]),
    )


def ctx_from_config(cfg: dict) -> WeightContext:
    w = cfg["weights"]
    return WeightContext(float(w["sigma"]), float(w["a"]))


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))


# --- subcommands ------------------------------------------------------------------


def cmd_simulate(cfg: dict, out: Path) -> int:
    r = cfg["run"]
    ctx = ctx_from_config(cfg)
    data = data_from_config(cfg)
    delta = data.grid.delta
    unit = to_rescaled(data)
    solver = rescaled_solver(delta, unit.grid, cfl=r["cfl"], scheme=r["scheme"], nonlinear=r["nonlinear"])
    ledger = EnergyLedger(ctx, delta, int(r["kmax"]), rescaled=True, every=max(1, int(r["ledger_every"])))
    callbacks = [ledger] if r["ledger_every"] else []
    t_end = float(r["t_end"])
    stops = sorted({float(s) for s in r["snapshots"] if 0 < abs(s) < abs(t_end) and s * t_end > 0}, key=abs)
    save_state(out / "snapshots" / "state_0", data, ctx)
    state, reports = unit, []
    for i, stop in enumerate([*stops, t_end]):
        cbs = [_SkipFirst(cb) for cb in callbacks] if i else callbacks
        res = solver.run(state, stop, cbs, dt=r["dt"])
        reports.append(res.report.as_dict())
        if stop != state.t:
            save_state(out / "snapshots" / f"state_{i + 1}", from_rescaled(res.state, delta), ctx)
        state = res.state
    summary = {"runs": reports, "ledger": ledger.summary()}
    if r["return"] and t_end != 0.0:
        back = solver.run(state, 0.0, dt=r["dt"])
        summary["reversibility"] = relative_l2_difference(from_rescaled(back.state, delta), data)
    (out / "ledger.csv").write_text(ledger.to_csv() if ledger.rows else "")
    _dump(out / "summary.json", summary)
    return EXIT_OK


def cmd_scatter(cfg: dict, out: Path) -> int:
    r = cfg["run"]
    ctx = ctx_from_config(cfg)
    data = data_from_config(cfg)
    horizons = [float(x) for x in cfg["scatter"]["horizons"]]
    forward = forward_scattering(data, horizons, ctx, r["scheme"], r["nonlinear"], r["cfl"], r["dt"])
    rows = []
    for T, state, fields, res, _ in forward:
        for sign, f in fields.items():
            tag = "p" if sign > 0 else "m"
            save_scattering(f, out / "fields" / f"sc_{tag}_T{T:g}")
            rows.append(
                {
                    "T": T,
                    "sign": sign,
                    "residual": f.delta**-0.5 * residual(f, state),
                    "tail_bound": f.tail_bound,
                    "tail_bound_l2": f.meta.get("tail_bound_l2", math.nan),
                }
            )
    keys = list(rows[0])
    lines = [",".join(keys)] + [",".join(repr(float(row[k])) for k in keys) for row in rows]
    (out / "residuals.csv").write_text("\n".join(lines) + "\n")
    _dump(out / "summary.json", {"residuals": rows, "runs": [res.report.as_dict() for *_, res, _ in forward]})
    return EXIT_OK


def cmd_rigidity(cfg: dict, out: Path) -> int:
    r = cfg["run"]
    rc = cfg["rigidity"]
    ctx = ctx_from_config(cfg)
    horizons = [float(x) for x in rc["horizons"]]
    reports = []
    for delta in rc["deltas"]:
        data = data_from_config(cfg, float(delta))
        forward = forward_scattering(data, horizons, ctx, r["scheme"], r["nonlinear"], r["cfl"], r["dt"])
        for T, state, fields, res, _ in forward:
            reports.append(
                rigidity_from_forward(
                    data, T, state, fields, res.report, ctx, r["scheme"], r["nonlinear"], r["cfl"], r["dt"],
                    int(rc["ledger_every"]), int(r["kmax"]),
                )
            )
    keys = ["delta", "T", "eta_hat", "tail", "recovered", "data_norm", "floor", "rho"]
    lines = [",".join(keys)] + [",".join(repr(float(getattr(rep, k))) for k in keys) for rep in reports]
    (out / "rigidity.csv").write_text("\n".join(lines) + "\n")
    rhos = [rep.rho for rep in reports]
    spread = max(rhos) / min(rhos) if min(rhos) > 0 else math.inf
    _dump(out / "summary.json", {"reports": [rep.as_dict() for rep in reports], "rho_spread": spread})
    return EXIT_OK


def cmd_limit(cfg: dict, out: Path) -> int:
    lc = cfg["limit"]
    d = cfg["data"]
    unit = grid_from_config(cfg, 1.0)
    widths = tuple(d["widths"])
    profile = gaussian_packet_2d(unit.horizontal, float(d["amplitude"]), tuple(d["center"]), widths, int(d["seed"]))
    y = None
    if lc["perturbation"]:
        y = gaussian_packet(unit, float(d["amplitude"]), tuple(d["center"]), widths, int(d["seed"]) + 1)
    rep = delta_limit_experiment(
        profile, unit, lc["deltas"], float(lc["t_eval"]), perturbation=y, kmax=int(lc["kmax"]),
        dt=float(lc["dt"]), ctx=ctx_from_config(cfg), scheme=cfg["run"]["scheme"],
    )
    write_report(rep, out / "limit")
    _dump(out / "summary.json", {"trends": rep.trends})
    return EXIT_OK


def cmd_sweep(cfg: dict, out: Path) -> int:
    sc = cfg["sweep"]
    d = cfg["data"]
    rep = uniformity_sweep(
        grid_from_config(cfg, 1.0), float(d["amplitude"]), sc["deltas"], sc["a_values"], float(sc["t_end"]),
        tuple(d["widths"]), int(d["seed"]), float(cfg["weights"]["sigma"]), int(cfg["run"]["kmax"]),
        int(sc["every"]), cfg["run"]["dt"], int(sc["jobs"]),
    )
    write_report(rep, out / "sweep")
    _dump(out / "summary.json", {"spreads": rep.spreads, "bootstrap_spreads": rep.bootstrap_spreads(),
                                 "bootstrap_ok": rep.bootstrap_ok})
    return EXIT_OK


def cmd_check(cfg: dict, out: Path) -> int:
    results = run_checks(seed=int(cfg["data"]["seed"]))
    for name, res in results.items():
        print(f"{'PASS' if res['ok'] else 'FAIL'} {name}: {res['value']:.3g} (limit {res['limit']:.3g})")
    _dump(out / "summary.json", results)
    return EXIT_OK if all(r["ok"] for r in results.values()) else EXIT_FAIL


# --- self-check battery --------------------------------------------------------------


def _random_cosine_field(grid: GridSpec, rng, modes: int = 6) -> np.ndarray:
    """Smooth random field, cosine in x3, built on the unit slab and sampled at ``x3 = delta s``."""
    x1, x2, x3 = grid.mesh()
    s = x3 / grid.delta
    k1 = 2 * np.pi / grid.l1
    k2 = 2 * np.pi / grid.l2
    f = np.zeros(grid.shape)
    for _ in range(modes):
        a, b = rng.integers(-2, 3, 2)
        kz = rng.integers(0, 3)
        f += rng.normal() * np.cos(a * k1 * x1 + b * k2 * x2 + rng.uniform(0, 2 * np.pi)) * np.cos(
            kz * np.pi * (s + 1) / 2
        )
    return f


def _random_wall_field(grid: GridSpec, rng, modes: int = 4) -> np.ndarray:
    """Random ``(cos, cos, sin)`` vector field with ``v3 = 0`` on the walls."""
    x1, x2, x3 = grid.mesh()
    s = x3 / grid.delta
    k1 = 2 * np.pi / grid.l1
    k2 = 2 * np.pi / grid.l2
    v = np.zeros((3,) + grid.shape)
    for _ in range(modes):
        a, b = rng.integers(-2, 3, 2)
        kz = rng.integers(1, 3)
        phase = a * k1 * x1 + b * k2 * x2 + rng.uniform(0, 2 * np.pi)
        v[0] += rng.normal() * np.cos(phase) * np.cos(kz * np.pi * (s + 1) / 2)
        v[1] += rng.normal() * np.sin(phase) * np.cos(kz * np.pi * (s + 1) / 2)
        v[2] += rng.normal() * np.cos(phase) * np.sin(kz * np.pi * (s + 1) / 2)
    return v


def _manufactured_3d():
    from .greens import grad_p_direct, pressure_source
    from .solver3d import pressure_from_state

    g = GridSpec(32, 32, 8, 1.0, lh=2 * math.pi)
    x1, x2, _ = np.broadcast_arrays(*g.mesh())
    zero = np.zeros_like(x1)
    state = ElsasserState.from_physical(np.array([np.sin(x2), zero, zero]), np.array([zero, np.sin(x1), zero]), g)
    spec = float(np.abs(pressure_from_state(state) - 0.5 * np.cos(x1) * np.cos(x2)).max())
    pts = [(4, 5, 7), (2, 16, 16), (6, 20, 3)]
    direct = grad_p_direct(pressure_source(state), g, pts)
    exact = np.array(
        [[-0.5 * np.sin(g.x1[j1]) * np.cos(g.x2[j2]), -0.5 * np.cos(g.x1[j1]) * np.sin(g.x2[j2]), 0.0]
         for _, j2, j1 in pts]
    )
    return spec, float(np.abs(direct - exact).max() / 0.5)


def _manufactured_2d():
    from .core import Grid2D
    from .solver2d import ElsasserState2D, grad_p_direct_2d, pressure2d

    h = Grid2D(32, 32, 2 * math.pi, 2 * math.pi)
    x1, x2 = np.meshgrid(h.x1, h.x2)
    state = ElsasserState2D.from_physical(np.array([np.sin(x2), 0 * x2]), np.array([0 * x1, np.sin(x1)]), h)
    spec = float(np.abs(pressure2d(state) - 0.5 * np.cos(x1) * np.cos(x2)).max())
    pts = [(3, 5), (10, 20), (16, 16)]
    direct = grad_p_direct_2d(state, pts, refine=3)
    exact = np.array(
        [[-0.5 * np.sin(h.x1[j1]) * np.cos(h.x2[j2]), -0.5 * np.cos(h.x1[j1]) * np.sin(h.x2[j2])] for j2, j1 in pts]
    )
    return spec, float(np.abs(direct - exact).max() / 0.5)


def _greens_tail(rng, n: int = 50) -> float:
    """Largest ratio of the observed truncation change to the certified tail bound."""
    from .greens import ImageKernelQuery, greens_grad

    worst = 0.0
    for delta in (1.0, 0.25):
        for _ in range(n):
            x = (0.0, 0.0, rng.uniform(-0.95, 0.95) * delta)
            r = delta * 10 ** rng.uniform(-1, 1)
            th = rng.uniform(0, 2 * np.pi)
            y = (r * np.cos(th), r * np.sin(th), rng.uniform(-0.95, 0.95) * delta)
            q = ImageKernelQuery(x, y, delta)
            k = int(rng.integers(2, 20))
            a = greens_grad(q, k)
            b = greens_grad(q, 2 * k)
            worst = max(worst, float(np.abs(a.value - b.value).max()) / a.tail_bound)
    return worst


def run_checks(seed: int = 0) -> dict:
    """Weight, Sobolev, div-curl, Green's function and manufactured-solution checks.

    Each entry holds the measured ``value``, its ``limit`` and ``ok``.
    """
    from .diagnostics import divcurl_probe, sobolev_probe, spread, weight_probe

    rng = np.random.default_rng(seed)
    out = {}

    def record(name, value, limit, ok):
        out[name] = {"value": float(value), "limit": float(limit), "ok": bool(ok)}

    x = rng.uniform(-500, 500, 4000)
    t = rng.uniform(0, 100, 4000)
    wmin = min(float(WeightContext(a=a).weight(s, t, x).min()) for a in (0.0, 10.0, 100.0) for s in (1, -1))
    record("weights >= 1", wmin, 1.0, wmin >= 1.0)
    probes = [weight_probe(WeightContext(a=a), n=4000, seed=seed) for a in (0.0, 10.0, 100.0)]
    for key in probes[0]:
        sp_ = spread(p[key] for p in probes)
        record(f"weight {key} spread over a", sp_, 2.0, sp_ < 2.0)
    envelopes = []
    dc = []
    for delta in (1.0, 0.25, 0.0625):
        g = GridSpec(16, 16, 8, delta, lh=2 * math.pi)
        envelopes.append(max(sobolev_probe(_random_cosine_field(g, rng), g) for _ in range(20)))
        lam = WeightContext().energy_weight(1, 0.0, g.x1)
        ratios = []
        for _ in range(10):
            r = divcurl_probe(_random_wall_field(g, rng), g, lam)
            ratios.append(r["lhs"] / r["rhs"])
        dc.append(max(ratios))
    record("Sobolev envelope spread over delta", spread(envelopes), 2.0, spread(envelopes) < 2.0)
    record("div-curl envelope spread over delta", spread(dc), 2.0, spread(dc) < 2.0)
    worst = _greens_tail(rng)
    record("Green's tail bound / observed change", worst, 1.0, worst <= 1.0)
    spec3, dir3 = _manufactured_3d()
    record("manufactured pressure 3D spectral", spec3, 1e-10, spec3 < 1e-10)
    record("manufactured pressure 3D direct", dir3, 1e-2, dir3 < 1e-2)
    spec2, dir2 = _manufactured_2d()
    record("manufactured pressure 2D spectral", spec2, 1e-10, spec2 < 1e-10)
    record("manufactured pressure 2D direct", dir2, 1e-2, dir2 < 1e-2)
    g = GridSpec(16, 16, 8, 0.25, lh=2 * math.pi)
    v = _random_wall_field(g, rng)
    vh = sp.vector_to_spectral(v, g)
    rt = float(np.abs(sp.vector_to_physical(vh, g) - v).max() / np.abs(v).max())
    record("transform round trip", rt, 1e-12, rt < 1e-12)
    p1 = sp.leray(vh, g)
    idem = float(np.abs(sp.leray(p1, g) - p1).max() / max(np.abs(p1).max(), 1e-300))
    record("Leray idempotence", idem, 1e-12, idem < 1e-12)
    return out


COMMANDS = {
    "simulate": cmd_simulate,
    "scatter": cmd_scatter,
    "rigidity": cmd_rigidity,
    "limit": cmd_limit,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slabmhd", description="Alfvén waves in a thin slab.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration (defaults are used for missing keys)")
    parser.add_argument("--out", default="runs/out", help="run directory")
    parser.add_argument("--seed", type=int, help="packet seed (overrides data.seed)")
    parser.add_argument("--threads", type=int, default=1, help="FFT threads")
    parser.add_argument("--precision", choices=["f64"], default="f64")
    return parser


def cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.seed)
        sp.set_workers(args.threads)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "config.json", {"command": args.command, "threads": args.threads, "precision": args.precision,
                                **cfg})
    try:
        return COMMANDS[args.command](cfg, out)
    except MonitorAbort as exc:
        path = out / "abort_report.json"
        _dump(path, {"error": str(exc), "report": exc.report.as_dict()})
        print(f"monitor abort: {exc}; report written to {path}", file=sys.stderr)
        return EXIT_ABORT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
