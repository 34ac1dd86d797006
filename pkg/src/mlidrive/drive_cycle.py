"""Drive-cycle loading and longitudinal vehicle dynamics.

A cycle is a speed trace sampled at strictly increasing times. Each interval
``[t_i, t_{i+1})`` is held at its midpoint speed with a finite-difference
acceleration, which makes the interval energy sum identical to trapezoidal
integration of the sample series.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib.resources import as_file, files
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import DataError, EnvelopeError

if TYPE_CHECKING:
    from .motor import MotorModel

KMH_TO_MPS = 1.0 / 3.6
M_MAX_LINEAR = 2.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class DriveCycle:
    """Speed trace in SI units (s, m/s)."""

    time: np.ndarray
    speed: np.ndarray
    name: str = "cycle"

    def __post_init__(self):
        t = np.asarray(self.time, dtype=float)
        v = np.asarray(self.speed, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise DataError("cycle needs two equally long 1-D series with at least 2 samples")
        if t[0] != 0.0:
            raise DataError("cycle time must start at 0")
        bad = np.nonzero(np.diff(t) <= 0.0)[0]
        if bad.size:
            raise DataError(f"non-monotone time at row {int(bad[0]) + 1}")
        neg = np.nonzero(v < 0.0)[0]
        if neg.size:
            raise DataError(f"negative speed at row {int(neg[0])}")
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "speed", v)

    @property
    def distance(self) -> float:
        """Trapezoidal distance in metres."""
        return float(np.trapezoid(self.speed, self.time))

    @property
    def duration(self) -> float:
        return float(self.time[-1])

    def intervals(self):
        """Midpoint speed, acceleration and length of every interval."""
        dt = np.diff(self.time)
        v_mid = 0.5 * (self.speed[1:] + self.speed[:-1])
        accel = np.diff(self.speed) / dt
        return v_mid, accel, dt


def load_cycle(path, name: str | None = None) -> DriveCycle:
    """Read a ``t_s,v_kmh`` CSV (header optional) into a :class:`DriveCycle`."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"cycle file not found: {path}")
    times, speeds = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise DataError(f"row {k}: expected two columns")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                if k == 0:
                    continue  # header
                raise DataError(f"row {k}: non-numeric value {row!r}") from None
            times.append(t)
            speeds.append(v)
    # row indices in errors count data rows from 0
    t = np.asarray(times)
    v = np.asarray(speeds) * KMH_TO_MPS
    if t.size and np.any(np.diff(t) <= 0):
        k = int(np.nonzero(np.diff(t) <= 0)[0][0]) + 1
        raise DataError(f"non-monotone time at row {k}")
    cycle = DriveCycle(t, v, name=name or path.stem)
    if cycle.distance <= 0.0:
        raise DataError("cycle distance must be positive")
    return cycle


def builtin_cycle(name: str = "wltc_class3b") -> DriveCycle:
    """Load a cycle bundled with the package (currently only WLTC class 3b)."""
    res = files("mlidrive") / "data" / f"{name}.csv"
    if not res.is_file():
        raise DataError(f"unknown built-in cycle {name!r}")
    with as_file(res) as p:
        return load_cycle(p, name=name)


@dataclass(frozen=True)
class VehicleParams:
    mass: float
    drag_area_CdA: float
    rolling_coeff_Crr: float
    wheel_radius: float
    gear_ratio: float
    driveline_eff: float = 0.97
    aux_power: float = 0.0
    air_density: float = 1.2
    gravity: float = 9.81

    def __post_init__(self):
        if self.mass <= 0 or self.wheel_radius <= 0 or self.gear_ratio <= 0:
            raise ValueError("mass, wheel_radius and gear_ratio must be positive")
        if not 0.0 < self.driveline_eff <= 1.0:
            raise ValueError("driveline_eff must lie in (0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "VehicleParams":
        return cls(**d)


def traction_power(v, a, params: VehicleParams):
    """Wheel power in W; negative while braking. Accepts scalars or arrays."""
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    force = (
        0.5 * params.air_density * params.drag_area_CdA * v**2
        + params.mass * params.gravity * params.rolling_coeff_Crr * np.sign(v)
        + params.mass * a
    )
    p = force * v
    return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class OperatingPoint:
    """Motor shaft state plus the fundamental electrical quantities."""

    motor_speed: float  # rad/s, mechanical
    motor_torque: float  # N*m
    modulation_index: float = 0.0
    power_factor: float = 1.0
    phase_current_peak: float = 0.0
    fundamental_freq: float = 0.0
    dc_voltage: float = 800.0

    def __post_init__(self):
        if not -1e-12 <= self.modulation_index <= M_MAX_LINEAR + 1e-9:
            raise ValueError(f"modulation index {self.modulation_index} outside [0, 2/sqrt(3)]")
        if abs(self.power_factor) > 1.0 + 1e-12:
            raise ValueError("|power factor| must not exceed 1")
        if self.phase_current_peak < 0:
            raise ValueError("phase current amplitude must be non-negative")
        if self.dc_voltage <= 0:
            raise ValueError("dc_voltage must be positive")

    @property
    def mech_power(self) -> float:
        return self.motor_speed * self.motor_torque


@dataclass(frozen=True)
class CyclePoint:
    time: float
    dt: float
    wheel_power: float
    op: OperatingPoint = field(repr=False)


def shaft_state(v_mid, accel, params: VehicleParams):
    """Motor speed (rad/s) and torque (N*m) for interval midpoints."""
    v_mid = np.asarray(v_mid, dtype=float)
    p_wheel = np.asarray(traction_power(v_mid, accel, params), dtype=float)
    speed = v_mid * params.gear_ratio / params.wheel_radius
    with np.errstate(divide="ignore", invalid="ignore"):
        t_wheel = np.where(v_mid > 0, p_wheel / np.where(v_mid > 0, v_mid, 1.0), 0.0) * params.wheel_radius
    eff = np.where(t_wheel >= 0, 1.0 / params.driveline_eff, params.driveline_eff)
    torque = t_wheel / params.gear_ratio * eff
    return speed, torque, p_wheel


def cycle_operating_points(cycle: DriveCycle, params: VehicleParams, motor: "MotorModel",
                           dc_voltage: float = 800.0) -> list[CyclePoint]:
    """One operating point per cycle interval, electrical state from ``motor``."""
    if dc_voltage <= 0:
        raise ValueError("dc_voltage must be positive")
    v_mid, accel, dt = cycle.intervals()
    speed, torque, p_wheel = shaft_state(v_mid, accel, params)
    points = []
    deficits = []
    for k in range(len(dt)):
        try:
            m, pf, ipk = motor.solve_electrical_state(speed[k], torque[k], dc_voltage)
        except EnvelopeError as exc:
            deficits.append(f"t={cycle.time[k]:g}s: {exc}")
            continue
        op = OperatingPoint(
            motor_speed=float(speed[k]),
            motor_torque=float(torque[k]),
            modulation_index=m,
            power_factor=pf,
            phase_current_peak=ipk,
            fundamental_freq=float(speed[k]) * motor.pole_pairs / (2 * math.pi),
            dc_voltage=dc_voltage,
        )
        points.append(CyclePoint(float(cycle.time[k]), float(dt[k]), float(p_wheel[k]), op))
    if deficits:
        head = "; ".join(deficits[:5])
        more = f" (+{len(deficits) - 5} more)" if len(deficits) > 5 else ""
        raise EnvelopeError(f"demanded torque exceeds motor envelope at {head}{more}")
    return points
