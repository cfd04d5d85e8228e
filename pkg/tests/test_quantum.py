import numpy as np
import pytest

from cqm.fieldlang import FieldDef
from cqm.hermitian import SpinorSection, act_on_section, from_special
from cqm.quantum import (
    GridGeometry,
    GridMismatch,
    GridSpec,
    NonStaticMetric,
    SolverDivergence,
    SpinorGrid,
    check_linearity,
    evolve_pauli,
    grid_norm,
    inner_product,
    measure_frequency,
    observed_laplacian,
    operator_bracket,
    pauli_generator,
    prequantum,
    read_snapshot,
    write_snapshot,
)
from cqm.scenario import load_scenario
from cqm.units import DIMLESS

from conftest import make_special, scenario_dict


def flat_1d_spec(n=201, half=12.0):
    return GridSpec(((-half, half, n), (0.0, 0.0, 1), (0.0, 0.0, 1)), 0.0)


def gaussian_1d(spec, sigma=1.5, k=0.0):
    xs = spec.coords()
    mesh = np.meshgrid(*xs, indexing="ij")
    psi = np.zeros(spec.shape + (2,), dtype=complex)
    psi[..., 0] = np.exp(-mesh[0] ** 2 / (4 * sigma**2)) * np.exp(1j * k * mesh[0])
    return SpinorGrid(spec, psi)


def test_inner_product_examples(flat_scenario):
    spec = flat_1d_spec()
    geom = GridGeometry(flat_scenario.qd, spec)
    g = gaussian_1d(spec)
    nrm = grid_norm(geom, g)
    g.psi /= nrm
    assert inner_product(geom, g, g).real == pytest.approx(1.0, abs=1e-12)
    # continuum normalization of the Gaussian: integral = sigma sqrt(2 pi)
    assert nrm**2 == pytest.approx(1.5 * np.sqrt(2 * np.pi), rel=1e-3)
    # sesquilinearity is exact
    h = gaussian_1d(spec, sigma=2.0)
    alpha = 0.3 - 1.7j
    lhs = inner_product(geom, g, SpinorGrid(spec, alpha * h.psi))
    assert lhs == pytest.approx(alpha * inner_product(geom, g, h), rel=1e-15)
    with pytest.raises(GridMismatch):
        inner_product(geom, g, gaussian_1d(flat_1d_spec(n=101)))


def test_plane_wave_symbol(flat_scenario):
    """Discrete eigenvalue of Delta0 on one active axis: 2(cos kh - 1)/h^2."""
    spec = flat_1d_spec(n=256, half=np.pi * 4)
    geom = GridGeometry(flat_scenario.qd, spec)
    lap = observed_laplacian(geom)
    k = 1.0
    xs = spec.coords()[0]
    h = spec.spacing(0)
    psi = np.zeros(spec.shape + (2,), dtype=complex)
    psi[..., 0] = np.exp(1j * k * xs)[:, None, None]
    out = lap.apply_fn(psi)
    interior = slice(2, -2)
    ratio = out[interior, 0, 0, 0] / psi[interior, 0, 0, 0]
    symbol = geom.kinetic * 2.0 * (np.cos(k * h) - 1.0) / h**2
    assert np.allclose(ratio, symbol, atol=1e-12)
    # O(h^2)-close to the continuum eigenvalue -k^2
    assert symbol == pytest.approx(-geom.kinetic * k**2, rel=2e-3)


def test_constant_potential_shifts_symbol():
    scn = scenario_dict("flat")
    scn["A"] = ["0", "0.7", "0", "0"]
    sc = load_scenario(scn)
    spec = flat_1d_spec(n=512, half=np.pi * 4)
    geom = GridGeometry(sc.qd, spec)
    lap = observed_laplacian(geom)
    k, a = 1.3, 0.7
    xs = spec.coords()[0]
    h = spec.spacing(0)
    psi = np.zeros(spec.shape + (2,), dtype=complex)
    psi[..., 0] = np.exp(1j * k * xs)[:, None, None]
    out = lap.apply_fn(psi)
    interior = slice(2, -2)
    ratio = out[interior, 0, 0, 0] / psi[interior, 0, 0, 0]
    # (d - iA)^2 -> discrete symbol 2(cos kh - 1)/h^2 + 2 a sin(kh)/h - a^2
    expect = geom.kinetic * (2.0 * (np.cos(k * h) - 1.0) / h**2 + 2.0 * a * np.sin(k * h) / h - a**2)
    assert np.allclose(ratio, expect, atol=1e-12)
    # the shift k -> k - a to O(h^2)
    assert expect == pytest.approx(-geom.kinetic * (k - a) ** 2, rel=4e-3)


def test_laplacian_flat_seven_point(flat_scenario):
    spec = GridSpec(((-2, 2, 9), (-2, 2, 9), (-2, 2, 9)), 0.0)
    geom = GridGeometry(flat_scenario.qd, spec)
    lap = observed_laplacian(geom)
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(spec.shape + (2,)) + 0j
    out = lap.apply_fn(psi)
    h = spec.spacing(0)
    manual = np.zeros_like(psi)
    for ax in range(3):
        shifted_p = np.zeros_like(psi)
        shifted_m = np.zeros_like(psi)
        sl_p = [slice(None)] * 4
        sl_m = [slice(None)] * 4
        sl_p[ax] = slice(None, -1)
        sl_m[ax] = slice(1, None)
        shifted_p[tuple(sl_p)] = psi[tuple(sl_m)]
        shifted_m[tuple(sl_m)] = psi[tuple(sl_p)]
        manual += (shifted_p - 2 * psi + shifted_m) / h**2
    assert np.allclose(out, geom.kinetic * manual, atol=1e-13)


def test_prequantum_equals_action_for_f0_free(curved_magnetic_scenario):
    """(f + phi)^ psi = i Y[f + phi].psi node-by-node when f0 = 0."""
    sc = curved_magnetic_scenario
    consts = sc.background.constants.table()
    f = make_special(consts, fi=("0.4", "x2*x1", "0.1"), fbrev="x1*x2",
                     phi=("x1", "0.2", "x2"), name="F")
    spec = GridSpec(((-2, 2, 7), (-2, 2, 7), (0, 0, 1)), 0.0)
    geom = GridGeometry(sc.qd, spec)
    op = prequantum(sc.qd, geom, f)
    psi_fields = SpinorSection((
        (FieldDef("r0", DIMLESS, "x1*x2", consts), FieldDef("i0", DIMLESS, "0.3*x1", consts)),
        (FieldDef("r1", DIMLESS, "x2", consts), FieldDef("i1", DIMLESS, "x1+x2", consts)),
    ))
    xs = spec.coords()
    mesh = np.meshgrid(*xs, indexing="ij")
    coords = [np.zeros(spec.shape)] + list(mesh)
    psi = np.zeros(spec.shape + (2,), dtype=complex)
    for comp in range(2):
        re_f, im_f = psi_fields.components[comp]
        psi[..., comp] = re_f.eval_array(coords) + 1j * im_f.eval_array(coords)
    got = op.apply_fn(psi)
    y = from_special(f, sc.qd)
    # compare on interior nodes where the stencil derivative is exact
    # (psi is quadratic in x1, x2, so the central difference is exact too)
    for idx in ((3, 3, 0), (2, 4, 0), (4, 1, 0)):
        pt = (0.0, mesh[0][idx], mesh[1][idx], mesh[2][idx])
        expect = 1j * act_on_section(y, psi_fields, pt)
        assert np.allclose(got[idx], expect, atol=1e-10)


def test_position_momentum_commutator(flat_scenario):
    sc = flat_scenario

    def defect(n):
        spec = GridSpec(((-4, 4, n), (-4, 4, 5), (-4, 4, 5)), 0.0)
        geom = GridGeometry(sc.qd, spec)
        op_x = prequantum(sc.qd, geom, sc.function("x1"))
        op_p = prequantum(sc.qd, geom, sc.function("P1"))
        xs = spec.coords()
        mesh = np.meshgrid(*xs, indexing="ij")
        psi = np.zeros(spec.shape + (2,), dtype=complex)
        psi[..., 0] = np.exp(-0.35 * mesh[0] ** 2) * (1.0 + 0.2 * mesh[1])
        probe = SpinorGrid(spec, psi)
        br = operator_bracket(op_x, op_p, probe)
        return float(np.max(np.abs(br.psi - probe.psi))), probe, op_x, spec, geom

    d1, probe, op_x, spec, geom = defect(33)
    d2 = defect(65)[0]
    # [x^1, P_1] psi = psi to O(h^2): halving h shrinks the defect ~4x
    assert d1 < 0.05
    assert d1 / d2 > 3.0
    # and [x1, x2] = 0 exactly
    op_x2 = prequantum(sc.qd, geom, sc.function("x2"))
    br2 = operator_bracket(op_x, op_x2, probe)
    assert np.max(np.abs(br2.psi)) == 0.0


def test_operator_linearity(flat_magnetic_scenario):
    sc = flat_magnetic_scenario
    spec = GridSpec(((-3, 3, 9), (-3, 3, 9), (-3, 3, 9)), 0.0)
    geom = GridGeometry(sc.qd, spec)
    rng = np.random.default_rng(2)
    for name in ("x1", "P1", "H0prime"):
        op = prequantum(sc.qd, geom, sc.function(name))
        assert check_linearity(op, spec, rng) < 1e-12


def test_zero_generator_keeps_state(flat_scenario):
    spec = GridSpec(((-0.5, 0.5, 1), (-0.5, 0.5, 1), (-0.5, 0.5, 1)), 0.0)
    psi0 = SpinorGrid(spec, np.array([[[[0.6, 0.8j]]]], dtype=complex))
    traj = evolve_pauli(flat_scenario.qd, psi0, 0.05, 200)
    assert np.max(np.abs(traj.norms - traj.norms[0])) == 0.0
    assert np.allclose(traj.final.psi, psi0.psi)


def test_dispersion_with_nonunit_constants():
    # diffusivity u0 hbar / 2m flows through the generator for u0, hbar, m != 1
    scn = {"constants": {"m": 1.3, "q": 1.0, "hbar": 0.9, "mu": 1.0, "u0": 0.8}}
    sc = load_scenario(scn)
    spec = flat_1d_spec(n=191, half=12.0)
    geom = GridGeometry(sc.qd, spec)
    packet = gaussian_1d(spec, sigma=1.5)
    packet.psi /= grid_norm(geom, packet)
    diffusivity = 0.8 * 0.9 / (2 * 1.3)
    traj = evolve_pauli(sc.qd, packet, 0.01, 600, geom=geom)
    sigma0 = traj.widths[0]
    t = traj.times[-1]
    analytic = sigma0 * np.sqrt(1.0 + (diffusivity * t / sigma0**2) ** 2)
    assert traj.widths[-1] == pytest.approx(analytic, rel=0.01)
    assert traj.widths[-1] > 1.2 * sigma0


def test_norm_conservation_long_run(flat_magnetic_scenario):
    sc = flat_magnetic_scenario
    spec = GridSpec(((-6, 6, 49), (0, 0, 1), (0, 0, 1)), 0.0)
    geom = GridGeometry(sc.qd, spec)
    packet = gaussian_1d(spec, sigma=1.2, k=0.8)
    packet.psi /= grid_norm(geom, packet)
    traj = evolve_pauli(sc.qd, packet, 0.004, 2000, geom=geom)
    drift = np.max(np.abs(traj.norms - traj.norms[0])) / traj.norms[0]
    assert drift < 1e-12


def test_step_guard(flat_scenario):
    spec = GridSpec(((-2, 2, 65), (0, 0, 1), (0, 0, 1)), 0.0)
    packet = gaussian_1d(spec, sigma=0.4)
    with pytest.raises(SolverDivergence):
        evolve_pauli(flat_scenario.qd, packet, 1.0, 2)


def test_nonstatic_metric_rejected():
    # g = (1 + 0.1 x0) delta with its metric-compatible time components
    # K^i_{0i} = (1/2) d0 g / g: a valid background, but not static
    scn = scenario_dict("flat")
    scn["metric"] = [["1+0.1*x0", "0", "0"], ["0", "1+0.1*x0", "0"], ["0", "0", "1+0.1*x0"]]
    w = "0.05/(1+0.1*x0)"
    scn["Kgrav"] = {"1_01": w, "2_02": w, "3_03": w}
    sc = load_scenario(scn)
    rep = sc.background.validate([(0.2, 0.1, 0.3, -0.2)])
    assert rep["metricity"] < 1e-12
    spec = GridSpec(((-1, 1, 5), (-1, 1, 5), (-1, 1, 5)), 0.0)
    geom = GridGeometry(sc.qd, spec)
    with pytest.raises(NonStaticMetric):
        pauli_generator(geom)


def test_measure_frequency_plain_cosine():
    dt = 0.05
    t = np.arange(4000) * dt
    sig = np.cos(0.7318 * t)
    assert measure_frequency(sig, dt) == pytest.approx(0.7318, rel=1e-4)


def test_snapshot_round_trip(tmp_path, flat_scenario):
    spec = GridSpec(((-2, 2, 5), (-1, 1, 3), (0, 0, 1)), 0.25)
    rng = np.random.default_rng(3)
    grid = SpinorGrid(spec, rng.standard_normal(spec.shape + (2,)) + 1j * rng.standard_normal(spec.shape + (2,)))
    path = tmp_path / "snap.bin"
    write_snapshot(path, grid)
    back = read_snapshot(path)
    assert back.spec == spec
    assert np.array_equal(back.psi, grid.psi)
    # header layout: 3 int64 + 7 f64 = 80 bytes, then 16 bytes per node pair
    assert path.stat().st_size == 80 + 5 * 3 * 1 * 2 * 16


def test_geometry_rejects_foreign_quantum_data(flat_scenario, flat_magnetic_scenario):
    spec = GridSpec(((-1, 1, 3), (-1, 1, 3), (-1, 1, 3)), 0.0)
    geom = GridGeometry(flat_scenario.qd, spec)
    with pytest.raises(GridMismatch):
        prequantum(flat_magnetic_scenario.qd, geom, flat_magnetic_scenario.function("x1"))
