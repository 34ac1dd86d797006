"""Cycle energy per 100 km, battery-cost mapping and topology comparison."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .drive_cycle import DriveCycle, VehicleParams, cycle_operating_points
from .errors import DataError
from .inverter.modes import evaluate_modes
from .inverter.topology import TopologyConfig

BATTERY_PRICE = 70.0  # EUR/kWh
RANGES_KM = (300.0, 500.0, 700.0)
COMPONENTS = ("inv_sw", "inv_cond", "mot_f", "mot_h")
J_PER_KWH = 3.6e6


@dataclass
class CycleResult:
    e_loss_per100: float
    breakdown_per100: dict
    mode_share_3L: float
    distance: float  # km
    topology: str = ""

    def shares(self) -> dict:
        tot = self.e_loss_per100
        return {k: (v / tot if tot else 0.0) for k, v in self.breakdown_per100.items()}

    def to_dict(self) -> dict:
        return {"topology": self.topology, "e_loss_per100_kwh": self.e_loss_per100,
                "breakdown_per100_kwh": {k: self.breakdown_per100[k] for k in self.breakdown_per100},
                "mode_share_3L": self.mode_share_3L, "distance_km": self.distance}


@dataclass
class CycleTrace:
    """Per-interval loss samples behind a :class:`CycleResult`."""

    time: np.ndarray
    dt: np.ndarray
    components: dict
    modes: list


@dataclass
class CostComparison:
    baseline: str
    rows: list
    battery_price: float
    results: dict = field(default_factory=dict, repr=False)


def _energy_kwh(series, cycle: DriveCycle) -> float:
    p = np.asarray(series, dtype=float)
    n = cycle.time.size
    if p.shape == (n,):
        e = np.trapezoid(p, cycle.time)
    elif p.shape == (n - 1,):
        # one value per interval, held over the interval
        e = float(p @ np.diff(cycle.time))
    else:
        raise DataError(f"loss series of length {p.size} matches neither the {n} samples "
                        f"nor the {n - 1} intervals of the cycle")
    return float(e) / J_PER_KWH


def integrate_cycle(losses, cycle: DriveCycle, mode_share_3L: float = 0.0, topology: str = "") -> CycleResult:
    """Loss energy per 100 km from a power series in W.

    ``losses`` is one series or a mapping of named component series. A series
    aligned with the cycle samples is integrated with the trapezoidal rule;
    one aligned with the intervals is summed with the interval lengths.
    """
    dist_km = cycle.distance / 1000.0
    if not dist_km > 0:
        raise DataError("cycle distance must be positive")
    comps = losses if isinstance(losses, dict) else {"total": losses}
    per100 = {k: _energy_kwh(v, cycle) * 100.0 / dist_km for k, v in comps.items()}
    total = math.fsum(per100.values())
    return CycleResult(total, per100, mode_share_3L, dist_km, topology)


def cost_delta(delta_e_per100: float, range_km: float, battery_price: float = BATTERY_PRICE):
    """``(delta_e_total kWh, delta_cost EUR)`` for a consumption delta over ``range_km``."""
    if range_km <= 0 or battery_price <= 0:
        raise ValueError("range_km and battery_price must be positive")
    de = delta_e_per100 * range_km / 100.0
    return de, de * battery_price


def simulate_topology(topo: TopologyConfig, vehicle: VehicleParams, cycle: DriveCycle, motor,
                      feasible_3L=None, dc_voltage: float = 800.0):
    """Run the full loss chain over a cycle; returns ``(CycleResult, CycleTrace)``."""
    points = cycle_operating_points(cycle, vehicle, motor, dc_voltage)
    cache: dict = {}
    comps = {k: np.zeros(len(points)) for k in COMPONENTS}
    modes = []
    for k, cp in enumerate(points):
        op = cp.op
        key = (op.motor_speed, op.motor_torque)
        if key not in cache:
            mode, cands = evaluate_modes(topo, op, feasible_3L, motor)
            bd, p_h = cands[mode]
            cache[key] = (mode, bd.P_sw_inv, bd.P_cond_inv, motor.fundamental_loss(op), p_h)
        mode, p_sw, p_cond, p_f, p_h = cache[key]
        comps["inv_sw"][k] = p_sw
        comps["inv_cond"][k] = p_cond
        comps["mot_f"][k] = p_f
        comps["mot_h"][k] = p_h
        modes.append(mode)
    dt = np.array([cp.dt for cp in points])
    share = float(sum(d for d, m in zip(dt, modes) if m == "3L") / dt.sum())
    res = integrate_cycle(comps, cycle, share, topo.name)
    trace = CycleTrace(np.array([cp.time for cp in points]), dt, comps, modes)
    return res, trace


def comparison_rows(results: dict, baseline: str, ranges=RANGES_KM, battery_price=BATTERY_PRICE):
    base = results[baseline].e_loss_per100
    rows = []
    for name in results:
        d100 = results[name].e_loss_per100 - base
        for rng in ranges:
            de, dc = cost_delta(d100, rng, battery_price)
            rows.append({"topology": name, "range_km": float(rng), "delta_e_per100_kwh": d100,
                         "delta_e_kwh": de, "delta_cost_eur": dc})
    return rows


def compare_topologies(configs, vehicle: VehicleParams, cycle: DriveCycle, motor,
                       battery_price: float = BATTERY_PRICE, ranges=RANGES_KM,
                       baseline: str = "B6_SiC", feasible_3L=None, dc_voltage: float = 800.0,
                       max_workers: int | None = None) -> CostComparison:
    """Cycle losses of every topology and their battery-cost deltas versus ``baseline``."""
    configs = list(configs)
    names = [c.name for c in configs]
    if baseline not in names:
        raise ValueError(f"baseline {baseline!r} not among {names}")
    with ThreadPoolExecutor(max_workers=max_workers) as ex:
        out = list(ex.map(lambda c: simulate_topology(c, vehicle, cycle, motor, feasible_3L,
                                                      dc_voltage)[0], configs))
    results = dict(zip(names, out))
    return CostComparison(baseline, comparison_rows(results, baseline, ranges, battery_price),
                          battery_price, results)
