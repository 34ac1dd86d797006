import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlidrive.drive_cycle import DriveCycle
from mlidrive.economics import (CycleResult, comparison_rows, cost_delta, integrate_cycle,
                                simulate_topology)
from mlidrive.errors import DataError


def steady(duration=1800.0, distance=23250.0, n=19):
    t = np.linspace(0.0, duration, n)
    return DriveCycle(t, np.full(n, distance / duration))


def test_constant_power_per100():
    cyc = steady()
    res = integrate_cycle(np.full(cyc.time.size, 10e3), cyc)
    # 5 kWh over 23.25 km
    assert res.e_loss_per100 == pytest.approx(21.505376344, rel=1e-9)
    held = integrate_cycle(np.full(cyc.time.size - 1, 10e3), cyc)
    assert held.e_loss_per100 == pytest.approx(res.e_loss_per100, rel=1e-12)


def test_zero_losses():
    cyc = steady()
    assert integrate_cycle({"a": np.zeros(19), "b": np.zeros(18)}, cyc).e_loss_per100 == 0.0


@given(st.lists(st.floats(0, 5e4), min_size=2, max_size=60), st.integers(0, 2**31))
def test_interval_sum_matches_brute_force(powers, seed):
    rng = np.random.default_rng(seed)
    n = len(powers) + 1
    t = np.concatenate([[0.0], np.cumsum(rng.uniform(0.1, 5.0, n - 1))])
    cyc = DriveCycle(t, rng.uniform(1.0, 30.0, n))
    res = integrate_cycle(np.array(powers), cyc)
    joules = 0.0
    for k in range(n - 1):
        joules += powers[k] * (t[k + 1] - t[k])
    dist = 0.0
    for k in range(n - 1):
        dist += 0.5 * (cyc.speed[k] + cyc.speed[k + 1]) * (t[k + 1] - t[k])
    expected = joules / 3.6e6 * 100.0 / (dist / 1000.0)
    assert res.e_loss_per100 == pytest.approx(expected, rel=1e-12, abs=1e-12)


@given(st.lists(st.floats(0, 5e4), min_size=2, max_size=40), st.integers(0, 2**31))
def test_refinement_invariance(powers, seed):
    rng = np.random.default_rng(seed)
    n = len(powers) + 1
    t = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 3.0, n - 1))])
    v = rng.uniform(1.0, 30.0, n)
    coarse = integrate_cycle(np.array(powers), DriveCycle(t, v))
    # split every interval in two; speed interpolated linearly, power held
    tf = np.sort(np.concatenate([t, 0.5 * (t[1:] + t[:-1])]))
    vf = np.interp(tf, t, v)
    fine = integrate_cycle(np.repeat(powers, 2), DriveCycle(tf, vf))
    assert fine.e_loss_per100 == pytest.approx(coarse.e_loss_per100, rel=1e-6, abs=1e-9)


def test_zero_distance_rejected():
    cyc = DriveCycle(np.array([0.0, 10.0]), np.zeros(2))
    with pytest.raises(DataError):
        integrate_cycle(np.ones(2), cyc)


def test_misaligned_series_rejected():
    with pytest.raises(DataError):
        integrate_cycle(np.ones(5), steady())


@pytest.mark.parametrize("d100,cells", [
    (0.4504, (94.58, 157.64, 220.70)),
    (-0.6696, (-140.62, -234.36, -328.10)),
    (-0.7796, (-163.72, -272.86, -382.00)),
])
def test_battery_cost_examples(d100, cells):
    for rng, want in zip((300, 500, 700), cells):
        _, eur = cost_delta(d100, rng, 70.0)
        assert eur == pytest.approx(want, abs=0.005)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(50, 1000), st.floats(10, 500))
def test_cost_is_linear(a, b, rng, price):
    ea, ca = cost_delta(a, rng, price)
    eb, cb = cost_delta(b, rng, price)
    es, cs = cost_delta(a + b, rng, price)
    assert cs == pytest.approx(ca + cb, abs=1e-9)
    assert es == pytest.approx(ea + eb, abs=1e-9)
    assert cost_delta(a, 2 * rng, price)[1] == pytest.approx(2 * ca, abs=1e-9)


def test_cost_argument_checks():
    with pytest.raises(ValueError):
        cost_delta(1.0, 0.0)
    with pytest.raises(ValueError):
        cost_delta(1.0, 300.0, -1.0)


def fake_results(values):
    return {k: CycleResult(v, {"total": v}, 0.0, 23.25, k) for k, v in values.items()}


def test_baseline_against_itself_is_zero():
    rows = comparison_rows(fake_results({"A": 10.0, "B": 11.0}), "A")
    assert all(r["delta_cost_eur"] == 0.0 for r in rows if r["topology"] == "A")


@given(st.floats(5, 30), st.floats(5, 30))
def test_baseline_swap_antisymmetry(ea, eb):
    res = fake_results({"A": ea, "B": eb})
    ab = {(r["topology"], r["range_km"]): r["delta_cost_eur"] for r in comparison_rows(res, "A")}
    ba = {(r["topology"], r["range_km"]): r["delta_cost_eur"] for r in comparison_rows(res, "B")}
    for rng in (300.0, 500.0, 700.0):
        assert ab[("B", rng)] == pytest.approx(-ba[("A", rng)], abs=1e-12)


def test_simulate_short_cycle(topologies, vehicle, motor):
    t = np.arange(0.0, 61.0)
    v = np.clip(np.minimum(t, 60 - t), 0, None) * 0.6
    res, trace = simulate_topology(topologies["B6_SiC"], vehicle, DriveCycle(t, v), motor)
    assert res.e_loss_per100 > 0
    assert res.mode_share_3L == 0.0
    assert set(res.breakdown_per100) == {"inv_sw", "inv_cond", "mot_f", "mot_h"}
    assert math.fsum(res.breakdown_per100.values()) == pytest.approx(res.e_loss_per100, rel=1e-12)
    assert sum(res.shares().values()) == pytest.approx(1.0)
    assert len(trace.modes) == t.size - 1
