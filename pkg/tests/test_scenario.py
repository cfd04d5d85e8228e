import numpy as np
import pytest

from cqm.background import PhasePoint
from cqm.quantum import GridGeometry, grid_norm
from cqm.scenario import ScenarioError, load_scenario
from cqm.special import eval_special

from conftest import SCENARIO_DIR, scenario_dict


def test_load_from_file():
    sc = load_scenario(SCENARIO_DIR / "flat.json")
    assert sc.samples == 100
    assert sc.background.constants.m.value == 1.0
    assert "reference" in sc.observers and "drift" in sc.observers


def test_missing_file():
    with pytest.raises(ScenarioError):
        load_scenario("no_such_scenario.json")


def test_invalid_json_string():
    with pytest.raises(ScenarioError):
        load_scenario("{not json")


def test_defaults():
    sc = load_scenario({})
    pt = (0.1, 0.2, 0.3, 0.4)
    b = sc.background.jets(pt)
    assert b.metric(0)[0][0].value == 1.0
    assert b.metric(0)[0][1].value == 0.0
    assert sc.background.fields_constant


def test_bad_metric_symmetry():
    scn = scenario_dict("flat")
    scn["metric"] = [["1", "x1", "0"], ["0", "1", "0"], ["0", "0", "1"]]
    with pytest.raises(ScenarioError) as err:
        load_scenario(scn)
    assert "symmetric" in str(err.value)


def test_bad_kgrav_key():
    scn = scenario_dict("flat")
    scn["Kgrav"] = {"4_00": "1"}
    with pytest.raises(ScenarioError) as err:
        load_scenario(scn)
    assert "Kgrav" in str(err.value)


def test_bad_f_key():
    scn = scenario_dict("flat")
    scn["F"] = {"21": "1"}
    with pytest.raises(ScenarioError) as err:
        load_scenario(scn)
    assert "F key" in str(err.value)


def test_parse_error_location_reported():
    scn = scenario_dict("flat")
    scn["A"] = ["0", "x1 + * 2", "0", "0"]
    with pytest.raises(ScenarioError) as err:
        load_scenario(scn)
    assert "A[1]" in str(err.value)


def test_unknown_constant_in_field():
    scn = scenario_dict("flat")
    scn["metric"] = [["1+nope", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]
    with pytest.raises(ScenarioError):
        load_scenario(scn)


def test_builtin_momentum_includes_potential(flat_magnetic_scenario):
    sc = flat_magnetic_scenario
    # P2 builtin: fbrev = A_2 = (q b / hbar) x1
    p = PhasePoint((0.0, 0.5, 0.0, 0.0), (0.0, 0.0, 0.0))
    val = eval_special(sc.function("P2"), sc.background, p)
    assert val == pytest.approx(0.4 * 0.5)


def test_builtin_h0prime_spin_term(flat_magnetic_scenario):
    sc = flat_magnetic_scenario
    c = sc.background.constants
    f = sc.function("H0prime")
    # phi = -u0 mu B_flat: with B = (0, 0, 0.4)
    p = PhasePoint((0, 0, 0, 0), (0, 0, 0), (0, 0, 1.0))
    val = eval_special(f, sc.background, p)
    assert val == pytest.approx(-c.u0.value * c.mu.value * 0.4)


def test_builtin_h0prime_curved_uses_derived_fields(curved_magnetic_scenario):
    sc = curved_magnetic_scenario
    f = sc.function("H0prime")
    c = sc.background.constants
    pt = (0.0, 0.5, 0.2, -0.1)
    b3 = sc.background.magnetic_field(pt)[2].value
    assert f.phi[2](pt) == pytest.approx(-c.u0.value * c.mu.value * b3)


def test_spin_n_function_entry(flat_scenario):
    scn = scenario_dict("flat")
    scn["functions"] = {"sz": {"builtin": "spin_n", "n": ["0", "0", "1"]}}
    sc = load_scenario(scn)
    f = sc.function("sz")
    assert [c((0, 0, 0, 0)) for c in f.phi] == [0.0, 0.0, -1.0]
    with pytest.raises(ScenarioError):
        load_scenario({"functions": {"bad": {"builtin": "nope"}}})


def test_custom_function_entry():
    scn = scenario_dict("flat")
    scn["functions"] = {"mine": {"f0": "0.2", "fi": ["x1", "0", "0"], "fbrev": "x2",
                                 "phi": ["0", "0.1", "0"]}}
    sc = load_scenario(scn)
    f = sc.function("mine")
    assert f.f0((0, 0, 0, 0)) == 0.2
    assert f.fi[0]((0, 1.5, 0, 0)) == 1.5
    with pytest.raises(ScenarioError):
        sc.function("absent")


def test_initial_grid_normalized():
    sc = load_scenario(SCENARIO_DIR / "free_packet.json")
    grid = sc.initial_grid()
    geom = GridGeometry(sc.qd, grid.spec)
    assert grid_norm(geom, grid) == pytest.approx(1.0, abs=1e-12)


def test_sample_points_deterministic():
    sc1 = load_scenario(scenario_dict("flat"))
    sc2 = load_scenario(scenario_dict("flat"))
    rng1 = np.random.default_rng(sc1.seed)
    rng2 = np.random.default_rng(sc2.seed)
    assert np.array_equal(sc1.sample_points(rng1), sc2.sample_points(rng2))


def test_shipped_scenarios_load():
    for name in ("flat", "flat_magnetic", "curved_magnetic", "larmor", "free_packet"):
        sc = load_scenario(SCENARIO_DIR / f"{name}.json")
        assert sc.background is not None
