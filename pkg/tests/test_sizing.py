import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlidrive.errors import ConfigError, InfeasibleError
from mlidrive.reference import size_topologies
from mlidrive.sizing import (AREA_BOUNDS, SizingConstraints, brute_force_min_area,
                             design_operating_point, full_load_feasible, full_load_result,
                             max_junction_temp, partial_load_feasible, peak_operating_point,
                             size_full_load, size_partial_load)


@pytest.fixture(scope="module")
def peak(motor, constraints):
    return peak_operating_point(motor, constraints)


def test_unbounded_temperature_gives_minimum_area(topologies, peak):
    c = SizingConstraints(t_j_max=math.inf)
    areas, binding = size_full_load(topologies["B6_SiC"], peak, c)
    assert set(areas.values()) == {AREA_BOUNDS[0]}
    assert binding is None


def test_lower_budget_needs_more_area(topologies, peak):
    a_hot, _ = size_full_load(topologies["B6_SiC"], peak, SizingConstraints(t_j_max=175))
    a_cool, _ = size_full_load(topologies["B6_SiC"], peak, SizingConstraints(t_j_max=150))
    assert a_cool["T1"] > a_hot["T1"]


def test_sized_bridge_sits_at_the_limit(topologies, peak, constraints):
    topo = topologies["B6_SiC"]
    areas, binding = size_full_load(topo, peak, constraints, rel_tol=0.001)
    t_j = max_junction_temp(topo.with_area_factors(areas), peak, "2L")
    assert binding == "thermal"
    assert 174.5 <= t_j <= 175.0


def test_design_point(motor, constraints):
    op = design_operating_point(motor, constraints)
    assert op.motor_speed == pytest.approx(motor.machine.n_max * 2 / 3)
    assert op.motor_torque == pytest.approx(0.8 * motor.mtpv_torque(op.motor_speed))


def test_peak_point_is_max_power(motor, constraints, peak):
    v_max = 800 / math.sqrt(3)
    for s in np.linspace(100, motor.machine.n_max, 25):
        assert s * motor.machine.max_torque(s, v_max) <= peak.motor_speed * peak.motor_torque * (1 + 1e-6)


SEEDS = [0, 1, 2, 3]


@pytest.mark.parametrize("seed", SEEDS)
def test_bisection_matches_brute_force(seed, topologies, motor):
    rng = np.random.default_rng(seed)
    c = SizingConstraints(t_j_max=float(rng.uniform(130, 190)), f_sw=float(rng.uniform(5e3, 25e3)))
    kind = ["B6_SiC", "B6_Si", "TNPC_SiC", "ANPC_SiC"][seed]
    topo = replace(topologies[kind], f_sw=c.f_sw)
    peak = peak_operating_point(motor, c)
    areas, _ = size_full_load(topo, peak, c)
    bf = brute_force_min_area(full_load_feasible(topo, peak, c))
    a = next(iter(areas.values()))
    assert abs(a / bf - 1) <= 0.005
    if topo.supports_3l:
        res = size_partial_load(topo, areas, c, motor)
        base = topo.with_area_factors(areas)
        bf_p = brute_force_min_area(partial_load_feasible(base, res.design_op, c))
        a_p = res.per_role_area[topo.partial_load_roles[0]]
        assert abs(a_p / bf_p - 1) <= 0.005


@settings(max_examples=100)
@given(st.sampled_from(["B6_SiC", "B6_Si", "TNPC_SiC", "ANPC_SiC"]),
       st.floats(0.3, 8.0), st.floats(1.05, 2.0), st.floats(0.1, 1.0), st.floats(0.5, 1.0))
def test_junction_temperature_falls_with_area(topologies, kind, a, growth, m, pf):
    from mlidrive.drive_cycle import OperatingPoint
    topo = topologies[kind]
    op = OperatingPoint(500.0, 100.0, m, pf, 250.0, 300.0)
    small = topo.with_area_factors({r: a for r in topo.roles})
    big = topo.with_area_factors({r: a * growth for r in topo.roles})
    for mode in (("2L", "3L") if topo.supports_3l else ("2L",)):
        assert max_junction_temp(big, op, mode) <= max_junction_temp(small, op, mode)


def test_sizing_is_deterministic(topologies, motor, constraints):
    one = size_topologies(topologies.values(), motor, constraints)
    two = size_topologies(topologies.values(), motor, constraints)
    assert [r.to_json() for r in one.values()] == [r.to_json() for r in two.values()]


def test_three_level_adds_area(sized):
    for kind in ("TNPC_SiC", "ANPC_SiC"):
        r = sized[kind]
        assert r.total_area_delta > 0
        assert r.added_area_delta > 0
        assert r.margins["t_j_margin_K"] >= 0
        assert r.margins["ripple_margin_V"] >= 0
    assert sized["B6_SiC"].total_area_delta == pytest.approx(0.0, abs=1e-12)


def test_thermal_infeasible_names_constraint(topologies, peak):
    with pytest.raises(InfeasibleError) as exc:
        size_full_load(topologies["B6_SiC"], peak, SizingConstraints(t_j_max=66.0))
    assert exc.value.constraint == "thermal"


def test_ripple_infeasible_names_constraint(topologies, motor, constraints):
    topo = replace(topologies["TNPC_SiC"], dc_link_capacitance=1e-6)
    with pytest.raises(InfeasibleError) as exc:
        size_partial_load(topo, {r: 3.0 for r in topo.full_load_roles}, constraints, motor)
    assert exc.value.constraint == "ripple"


def test_partial_load_needs_three_level(topologies, motor, constraints):
    with pytest.raises(ConfigError):
        size_partial_load(topologies["B6_SiC"], {}, constraints, motor)


@pytest.mark.parametrize("kw", [{"t_j_max": 0}, {"ripple_frac": 1.5}, {"torque_frac": -0.1}])
def test_constraint_validation(kw):
    with pytest.raises(ConfigError):
        SizingConstraints(**kw)


def test_result_json_roundtrip(topologies, peak, constraints):
    import json
    res = full_load_result(topologies["B6_SiC"], peak, constraints)
    d = json.loads(res.to_json())
    assert d["binding_constraint"] == "thermal"
    assert d["per_role_area"]["T1"] == res.per_role_area["T1"]


@pytest.mark.parametrize("t_max", [140.0, 175.0])
def test_result_is_minimal(topologies, peak, t_max):
    c = SizingConstraints(t_j_max=t_max)
    topo = topologies["TNPC_SiC"]
    areas, _ = size_full_load(topo, peak, c)
    a = areas["T1"]
    feasible = full_load_feasible(topo, peak, c)
    assert feasible(a)
    assert not feasible(a * (1 - 2 * 0.005))
