import json
import math
import warnings

import numpy as np
import pytest

from slabmhd.core import GridSpec, WeightContext, gaussian_packet
from slabmhd.scattering import (
    ScatteringAccumulator,
    ScatteringField,
    load,
    residual,
    save,
    scattering_norm,
    scattering_run,
    sup_difference,
    tail_bound,
    to_slab,
    transported,
)
from slabmhd.solver2d import Solver2D, gaussian_packet_2d, scattering2d
from slabmhd.solver3d import Solver3D, from_rescaled, rescaled_solver, to_rescaled


@pytest.fixture(scope="module")
def strong():
    return gaussian_packet(GridSpec(32, 32, 8, 1.0), 0.05, widths=(5.0, 5.0), seed=5)


@pytest.mark.parametrize("scheme", ["rk4", "ifrk4"])
def test_linear_flow_scatters_to_the_data(packet, scheme):
    solver = Solver3D(packet.grid, nonlinear=False, scheme=scheme)
    res, fields = scattering_run(solver, packet, 2.0, dt=0.1)
    for sign in (1, -1):
        sc = fields[sign]
        np.testing.assert_array_equal(sc.coeffs, packet.field_hat(sign))
        assert sc.c_hat == 0.0 and sc.tail_bound == 0.0
        tol = 1e-13 if scheme == "ifrk4" else 1e-7
        assert residual(sc, res.state) < tol * scattering_norm(sc, 0) * math.sqrt(packet.grid.delta)


@pytest.mark.parametrize("sign", [1, -1])
def test_transport_undoes_linear_motion(packet, sign):
    out = Solver3D(packet.grid, nonlinear=False, scheme="ifrk4").run(packet, 3.0, dt=0.1).state
    np.testing.assert_allclose(transported(out, sign), packet.field_hat(sign), atol=1e-15)


def test_residual_converges_at_second_order(strong):
    res = []
    for dt in (0.1, 0.05):
        r, fields = scattering_run(Solver3D(strong.grid), strong, 2.0, dt=dt)
        res.append(max(residual(fields[s], r.state) for s in (1, -1)))
    assert 3.6 < res[0] / res[1] < 4.4


def test_chained_horizons_match_a_single_run(strong):
    chain = scattering_run(Solver3D(strong.grid), strong, [1.0, 2.0], dt=0.1)
    _, single = scattering_run(Solver3D(strong.grid), strong, 2.0, dt=0.1)
    assert [T for T, *_ in chain] == [1.0, 2.0]
    for sign in (1, -1):
        assert sup_difference(chain[-1][2][sign], single[sign]) < 1e-15
        assert chain[0][2][sign].t_max == 1.0


def test_rescaled_fields_map_to_the_slab():
    g = GridSpec(32, 32, 8, 0.5)
    st_ = gaussian_packet(g, 0.05, widths=(5.0, 5.0), seed=6)
    _, direct = scattering_run(Solver3D(g), st_, 1.0, dt=0.05)
    solver = rescaled_solver(0.5, g.with_delta(1.0))
    _, unit = scattering_run(solver, to_rescaled(st_), 1.0, dt=0.05, l2_envelope=True, rescaled_delta=0.5)
    for sign in (1, -1):
        slab = to_slab(unit[sign], 0.5)
        assert np.abs(slab.coeffs - direct[sign].coeffs).max() < 1e-13 * np.abs(direct[sign].coeffs).max()
        assert scattering_norm(slab, 1) == pytest.approx(scattering_norm(direct[sign], 1), rel=1e-11)
        assert "tail_bound_l2" in unit[sign].meta


def test_to_slab_requires_unit_slab(packet):
    sc = ScatteringField(1, packet.zp_hat, GridSpec(32, 32, 8, 0.5))
    with pytest.raises(ValueError):
        to_slab(sc, 0.5)


def test_tail_bound_formula():
    assert tail_bound(0.0, 10.0, 0.25, 0.0) == 0.0
    assert tail_bound(2.0, 15.0, 0.25, 1.0) == pytest.approx(2.0 * 17.0**-0.25 / 0.25)
    assert tail_bound(1.0, 80.0, 0.25, 0.0) < tail_bound(1.0, 40.0, 0.25, 0.0)


def test_decay_envelope_and_growth_flag(box):
    acc = ScatteringAccumulator(1, box, WeightContext(0.25, 0.0))
    acc.history = [(t, (1 + t) ** -1.25, math.nan) for t in np.linspace(0, 10, 11)]
    np.testing.assert_allclose(acc.decay_values(), 1.0)
    assert not acc.envelope_growing()
    acc.history = [(t, (1 + t) ** -1.0, math.nan) for t in np.linspace(0, 10, 11)]
    assert acc.envelope_growing()
    shifted = acc.decay_values(ctx=WeightContext(0.25, 5.0))
    assert shifted[0] == pytest.approx(6**1.25)


def test_wrap_warning(packet):
    solver = Solver3D(packet.grid, nonlinear=False, scheme="ifrk4", boundary_tol=np.inf)
    with pytest.warns(RuntimeWarning, match="characteristic shift"):
        res, _ = scattering_run(solver, packet, 0.6 * packet.grid.l1, dt=0.5)
    assert res.report.max_shift > packet.grid.l1 / 2


def test_norm_parts(packet):
    sc = ScatteringField(1, packet.zp_hat, packet.grid)
    assert scattering_norm(sc, 0, part="d3") == pytest.approx(scattering_norm(sc, 0, 1))
    assert scattering_norm(sc, 0, part="3") > 0
    with pytest.raises(ValueError):
        scattering_norm(sc, 0, 1, part="3")
    with pytest.raises(ValueError):
        scattering_norm(sc, 0, part="x")


@pytest.mark.parametrize("planar", [False, True])
def test_save_load_round_trip(tmp_path, packet, planar):
    if planar:
        st_ = gaussian_packet_2d(packet.grid.horizontal, 0.01, widths=(5.0, 5.0), seed=1)
        sc = ScatteringField(-1, st_.zm_hat, st_.grid, 0.25, 3.0, t_max=2.0, tail_bound=0.1, c_hat=0.2)
    else:
        sc = ScatteringField(-1, packet.zm_hat, packet.grid, 0.25, 3.0, t_max=2.0, tail_bound=0.1, c_hat=0.2)
    bin_path, json_path = save(sc, tmp_path / "sc")
    back = load(tmp_path / "sc")
    np.testing.assert_array_equal(np.frombuffer(bin_path.read_bytes(), "<f8"), sc.values.ravel())
    # reloading passes through the forward and inverse transforms
    np.testing.assert_allclose(back.values, sc.values, rtol=0, atol=1e-15 * np.abs(sc.values).max())
    assert (back.sign, back.a, back.t_max, back.tail_bound) == (-1, 3.0, 2.0, 0.1)
    assert bin_path.stat().st_size == 8 * sc.values.size
    assert json.loads(json_path.read_text())["dtype"] == "<f8"


def test_load_rejects_bad_files(tmp_path, packet):
    save(ScatteringField(1, packet.zp_hat, packet.grid), tmp_path / "sc")
    raw = (tmp_path / "sc.bin").read_bytes()
    (tmp_path / "sc.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        load(tmp_path / "sc")
    man = json.loads((tmp_path / "sc.json").read_text())
    man["version"] = "2"
    (tmp_path / "sc.json").write_text(json.dumps(man))
    with pytest.raises(ValueError):
        load(tmp_path / "sc")


def test_planar_scattering(packet):
    h = packet.grid.horizontal
    st_ = gaussian_packet_2d(h, 0.05, widths=(5.0, 5.0), seed=2)
    res = []
    for dt in (0.1, 0.05):
        r, fields = scattering2d(st_, 2.0, dt=dt)
        res.append(max(residual(fields[s], r.state) for s in (1, -1)))
    assert 3.6 < res[0] / res[1] < 4.4
    with pytest.raises(ValueError):
        scattering_norm(fields[1], 0, 1)
