"""Motor losses and operating-point electrical state.

Two sources of truth are supported: a small dq-frame interior PM machine
(synthetic parameters, used to generate maps and for tests) and tabulated
loss / operating-point maps on a speed x torque grid. Maps are bilinearly
interpolated; a query whose cell touches an infeasible (NaN) node falls back
to the machine if one is attached.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .drive_cycle import M_MAX_LINEAR, OperatingPoint
from .errors import ConfigError, DataError, EnvelopeError

F_SW_REF = 10e3


@dataclass(frozen=True)
class DQMachine:
    """Interior PM synchronous machine in the rotor dq frame (peak-value convention).

    Torque ``T = 1.5 p (psi i_q + (L_d - L_q) i_d i_q)``; voltages include the
    stator resistance. Loss coefficients give copper, iron (hysteresis plus
    eddy, scaled with the air-gap flux) and mechanical losses.
    """

    pole_pairs: int = 4
    psi_pm: float = 0.11
    l_d: float = 0.20e-3
    l_q: float = 0.45e-3
    r_s: float = 8e-3
    i_max: float = 450.0
    n_max: float = 16000 * 2 * math.pi / 60
    k_hyst: float = 0.8  # W/Hz at nominal flux
    k_eddy: float = 1.6e-3  # W/Hz^2 at nominal flux
    c_fric: float = 0.1  # W/(rad/s)
    c_wind: float = 2.0e-8  # W/(rad/s)^3

    def __post_init__(self):
        if min(self.psi_pm, self.l_d, self.l_q, self.i_max, self.n_max) <= 0 or self.r_s < 0:
            raise ConfigError("machine parameters must be positive")
        if self.pole_pairs < 1:
            raise ConfigError("pole_pairs must be >= 1")

    def torque(self, i_d, i_q):
        return 1.5 * self.pole_pairs * (self.psi_pm * i_q + (self.l_d - self.l_q) * i_d * i_q)

    def voltage(self, speed, i_d, i_q):
        """``(v_d, v_q)`` at mechanical speed ``speed`` (rad/s)."""
        w = speed * self.pole_pairs
        return (self.r_s * i_d - w * self.l_q * i_q,
                self.r_s * i_q + w * (self.l_d * i_d + self.psi_pm))

    def voltage_mag(self, speed, i_d, i_q):
        vd, vq = self.voltage(speed, i_d, i_q)
        return np.hypot(vd, vq)

    def mtpa_id(self, current):
        """Direct-axis current of the MTPA point at current magnitude ``current``."""
        dl = self.l_q - self.l_d
        if dl <= 0:
            return 0.0 * current
        return (self.psi_pm - np.sqrt(self.psi_pm**2 + 8 * dl**2 * current**2)) / (4 * dl)

    def mtpa_torque(self, current):
        i_d = self.mtpa_id(current)
        i_q = np.sqrt(np.maximum(current**2 - i_d**2, 0.0))
        return self.torque(i_d, i_q)

    def iq_for_torque(self, torque, i_d):
        return torque / (1.5 * self.pole_pairs * (self.psi_pm + (self.l_d - self.l_q) * i_d))

    def currents(self, speed, torque, v_max):
        """Minimal-current ``(i_d, i_q)`` for ``torque`` within the voltage limit.

        MTPA below base speed, field weakening along the constant-torque curve
        above it. Raises :class:`EnvelopeError` outside the capability.
        """
        t_abs = abs(torque)
        sgn = 1.0 if torque >= 0 else -1.0
        if t_abs == 0.0:
            i_d0 = 0.0
        else:
            peak = self.mtpa_torque(self.i_max)
            if t_abs > peak * (1 + 1e-12):
                raise EnvelopeError(f"torque {torque:.1f} N*m exceeds current-limited peak {peak:.1f} N*m")
            i_abs = brentq(lambda i: self.mtpa_torque(i) - t_abs, 0.0, self.i_max, xtol=1e-10)
            i_d0 = float(self.mtpa_id(i_abs))

        def excess(i_d):
            return self.voltage_mag(speed, i_d, sgn * self.iq_for_torque(t_abs, i_d)) - v_max

        if excess(i_d0) <= 0:
            return i_d0, sgn * self.iq_for_torque(t_abs, i_d0)
        # push i_d negative until the voltage fits, without exceeding the current limit
        i_lo = -self.i_max

        def cur_excess(i_d):
            return math.hypot(i_d, self.iq_for_torque(t_abs, i_d)) - self.i_max

        if cur_excess(i_lo) > 0 or excess(i_lo) > 0:
            # find the most negative i_d on the torque curve inside the current circle
            if cur_excess(i_d0) > 0:
                raise EnvelopeError(f"torque {torque:.1f} N*m infeasible at {speed:.1f} rad/s")
            if cur_excess(i_lo) > 0:
                i_lo = brentq(cur_excess, i_lo, i_d0, xtol=1e-9)
            if excess(i_lo) > 0:
                t_env = self.max_torque(speed, v_max)
                raise EnvelopeError(
                    f"torque {torque:.1f} N*m exceeds voltage-limited {t_env:.1f} N*m "
                    f"at {speed:.1f} rad/s (deficit {t_abs - t_env:.1f} N*m)")
        i_d = brentq(excess, i_lo, i_d0, xtol=1e-9)
        return i_d, sgn * self.iq_for_torque(t_abs, i_d)

    def _iq_voltage_limit(self, speed, i_d, v_max):
        """Range ``(lo, hi)`` of q-axis current meeting the voltage limit at ``i_d``, or None."""
        w = speed * self.pole_pairs
        a = w * self.l_q
        b = w * (self.l_d * i_d + self.psi_pm)
        r = self.r_s
        qa = a * a + r * r
        qb = 2 * r * (b - a * i_d)
        qc = r * r * i_d * i_d + b * b - v_max * v_max
        if qa == 0.0:
            return (-np.inf, np.inf) if qc <= 0 else None
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            return None
        sq = math.sqrt(disc)
        return (-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)

    def max_torque(self, speed, v_max):
        """Largest motoring torque within the current circle and the voltage ellipse."""

        def t_at(i_d):
            rng = self._iq_voltage_limit(speed, i_d, v_max)
            if rng is None:
                return 0.0
            i_q = min(math.sqrt(max(self.i_max**2 - i_d**2, 0.0)), rng[1])
            if i_q <= max(rng[0], 0.0):
                return 0.0
            return float(self.torque(i_d, i_q))

        grid = np.linspace(-self.i_max, 0.0, 201)
        vals = np.array([t_at(x) for x in grid])
        k = int(np.argmax(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        res = minimize_scalar(lambda x: -t_at(x), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-9})
        return max(-res.fun, vals[k])

    def loss_components(self, speed, i_d, i_q):
        """``(copper, iron, mechanical)`` losses in W."""
        p_cu = 1.5 * self.r_s * (i_d**2 + i_q**2)
        f_e = abs(speed) * self.pole_pairs / (2 * math.pi)
        flux = math.hypot(self.psi_pm + self.l_d * i_d, self.l_q * i_q) / self.psi_pm
        p_fe = (self.k_hyst * f_e + self.k_eddy * f_e**2) * flux**2
        w = abs(speed)
        p_mech = self.c_fric * w + self.c_wind * w**3
        return p_cu, p_fe, p_mech

    def electrical_state(self, speed, torque, u_dc):
        """``(m, cos_phi, I_peak, i_d, i_q)`` at the minimal-current control point."""
        v_max = M_MAX_LINEAR * u_dc / 2
        i_d, i_q = self.currents(speed, torque, v_max)
        vd, vq = self.voltage(speed, i_d, i_q)
        v = math.hypot(vd, vq)
        i = math.hypot(i_d, i_q)
        m = min(v / (u_dc / 2), M_MAX_LINEAR)
        if i == 0.0 or v == 0.0:
            pf = 1.0
        else:
            pf = (vd * i_d + vq * i_q) / (v * i)
        return m, float(np.clip(pf, -1.0, 1.0)), i, i_d, i_q

    @classmethod
    def from_dict(cls, d: dict) -> "DQMachine":
        return cls(**d)


def brute_force_mtpa(machine: DQMachine, torque: float, n_angle: int = 4001, n_current: int = 4001):
    """Minimal current for ``torque`` by sweeping current angle and magnitude."""
    gam = np.linspace(0.0, 0.5 * math.pi, n_angle)
    cur = np.linspace(0.0, machine.i_max, n_current)
    best = None
    for g in gam:
        t = machine.torque(-cur * math.sin(g), cur * math.cos(g))
        ok = np.nonzero(t >= torque)[0]
        if ok.size and (best is None or cur[ok[0]] < best[0]):
            best = (cur[ok[0]], g)
    return best


@dataclass
class GridMap:
    """Values on a regular ``speed x torque`` grid with bilinear interpolation."""

    speeds: np.ndarray
    torques: np.ndarray
    values: np.ndarray  # shape (n_speed, n_torque[, n_channels])
    names: tuple = ("value",)

    def __post_init__(self):
        self.speeds = np.asarray(self.speeds, dtype=float)
        self.torques = np.asarray(self.torques, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 2:
            self.values = self.values[:, :, None]
        shape = (self.speeds.size, self.torques.size, len(self.names))
        if self.values.shape != shape:
            raise DataError(f"map shape {self.values.shape} does not match axes {shape}")
        if np.any(np.diff(self.speeds) <= 0) or np.any(np.diff(self.torques) <= 0):
            raise DataError("map axes must be strictly increasing")

    def in_hull(self, speed, torque) -> bool:
        return (self.speeds[0] <= speed <= self.speeds[-1]
                and self.torques[0] <= torque <= self.torques[-1])

    def __call__(self, speed, torque):
        """Interpolated channel values; NaN if any corner of the cell is infeasible."""
        if not self.in_hull(speed, torque):
            raise EnvelopeError(
                f"({speed:.2f} rad/s, {torque:.2f} N*m) outside map "
                f"[{self.speeds[0]:g}, {self.speeds[-1]:g}] x [{self.torques[0]:g}, {self.torques[-1]:g}]")
        i = min(int(np.searchsorted(self.speeds, speed, side="right")) - 1, self.speeds.size - 2)
        j = min(int(np.searchsorted(self.torques, torque, side="right")) - 1, self.torques.size - 2)
        x = (speed - self.speeds[i]) / (self.speeds[i + 1] - self.speeds[i])
        y = (torque - self.torques[j]) / (self.torques[j + 1] - self.torques[j])
        c = self.values
        # exact node values without NaN leakage from unused corners
        wts = ((1 - x) * (1 - y), x * (1 - y), (1 - x) * y, x * y)
        nodes = (c[i, j], c[i + 1, j], c[i, j + 1], c[i + 1, j + 1])
        out = np.zeros(len(self.names))
        for w, v in zip(wts, nodes):
            if w != 0.0:
                out = out + w * v
        return out

    def scaled(self, factor: float) -> "GridMap":
        return GridMap(self.speeds, self.torques, self.values * factor, self.names)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["speed_radps", "torque_Nm", *self.names])
            for a, s in enumerate(self.speeds):
                for b, t in enumerate(self.torques):
                    wr.writerow([repr(float(s)), repr(float(t)),
                                 *(repr(float(v)) for v in self.values[a, b])])

    @classmethod
    def from_csv(cls, path) -> "GridMap":
        path = Path(path)
        if not path.exists():
            raise DataError(f"map file not found: {path}")
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:2] != ["speed_radps", "torque_Nm"] or len(rows[0]) < 3:
            raise DataError(f"{path}: expected header speed_radps,torque_Nm,<value...>")
        names = tuple(rows[0][2:])
        try:
            data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
        speeds = np.unique(data[:, 0])
        torques = np.unique(data[:, 1])
        if data.shape[0] != speeds.size * torques.size:
            raise DataError(f"{path}: map is not a complete regular grid")
        vals = np.full((speeds.size, torques.size, len(names)), np.nan)
        ia = np.searchsorted(speeds, data[:, 0])
        ib = np.searchsorted(torques, data[:, 1])
        vals[ia, ib] = data[:, 2:]
        return cls(speeds, torques, vals, names)


@dataclass
class MotorModel:
    """Loss maps, harmonic scaling law and electrical-state solver of one machine."""

    loss_map_fundamental: GridMap
    harmonic_ref: GridMap
    machine: DQMachine | None = None
    op_solver_map: GridMap | None = None
    f_sw_ref: float = F_SW_REF
    kappa_3l: float = 0.30
    beta_fsw: float = 0.6
    capacitive_share: float = 0.0
    fundamental_scale: float = 1.0
    harmonic_coeff: float = 1.0
    map_u_dc: float = 800.0
    pole_pairs: int = field(default=4)

    def __post_init__(self):
        if not 0 < self.kappa_3l < 1:
            raise ConfigError("kappa_3l must lie in (0, 1)")
        if not 0.5 <= self.beta_fsw <= 0.7:
            raise ConfigError("beta_fsw must lie in [0.5, 0.7]")
        if not 0 <= self.capacitive_share <= 1:
            raise ConfigError("capacitive_share must lie in [0, 1]")
        for g in (self.loss_map_fundamental, self.harmonic_ref):
            v = g.values[np.isfinite(g.values)]
            if np.any(v < 0):
                raise DataError("loss map entries must be non-negative")
        if self.machine is not None:
            self.pole_pairs = self.machine.pole_pairs

    @property
    def n_max(self) -> float:
        return float(self.loss_map_fundamental.speeds[-1])

    @property
    def t_max(self) -> float:
        return float(self.loss_map_fundamental.torques[-1])

    def ratings(self, u_dc: float = 800.0):
        """``(P_max, T_max, n_max)`` from the machine (or the map extent)."""
        if self.machine is None:
            g = self.loss_map_fundamental
            ok = np.isfinite(g.values[:, :, 0])
            s, t = np.meshgrid(g.speeds, g.torques, indexing="ij")
            return float(np.max(np.where(ok, s * t, 0.0))), self.t_max, self.n_max
        m = self.machine
        speeds = np.linspace(0, m.n_max, 161)
        v_max = M_MAX_LINEAR * u_dc / 2
        p = max(s * m.max_torque(s, v_max) for s in speeds)
        return float(p), float(m.mtpa_torque(m.i_max)), float(m.n_max)

    def torque_envelope(self, speed: float, u_dc: float = 800.0) -> float:
        """Voltage- and current-limited torque at ``speed``."""
        if self.machine is None:
            raise EnvelopeError("torque envelope needs the machine model")
        return self.machine.max_torque(speed, M_MAX_LINEAR * u_dc / 2)

    def mtpv_torque(self, speed: float, u_dc: float = 800.0) -> float:
        return self.torque_envelope(speed, u_dc)

    def fundamental_loss(self, op: OperatingPoint) -> float:
        return fundamental_loss(self, op)

    def harmonic_loss(self, op: OperatingPoint, mode: str, f_sw: float) -> float:
        return harmonic_loss(self, op, mode, f_sw)

    def solve_electrical_state(self, speed, torque, u_dc=800.0):
        return solve_electrical_state(self, speed, torque, u_dc)


def _map_or_machine(model: MotorModel, grid: GridMap, speed, torque, direct):
    val = grid(speed, torque)
    if np.all(np.isfinite(val)):
        return val
    if model.machine is None:
        raise EnvelopeError(f"({speed:.2f} rad/s, {torque:.2f} N*m) lies in an infeasible map cell")
    return np.atleast_1d(direct())


def machine_fundamental_loss(machine: DQMachine, speed, torque, u_dc=800.0) -> float:
    *_, i_d, i_q = machine.electrical_state(speed, torque, u_dc)
    return float(sum(machine.loss_components(speed, i_d, i_q)))


def machine_harmonic_ref(machine: DQMachine, speed, torque, u_dc=800.0) -> float:
    """Shape of the 2L harmonic loss at the reference switching frequency (``m * I^2``)."""
    m, _, i, *_ = machine.electrical_state(speed, torque, u_dc)
    return float(m * i * i)


def fundamental_loss(model: MotorModel, op: OperatingPoint) -> float:
    """Fundamental-frequency machine loss in W (bilinear map interpolation)."""
    g = model.loss_map_fundamental
    val = _map_or_machine(model, g, op.motor_speed, op.motor_torque,
                          lambda: machine_fundamental_loss(model.machine, op.motor_speed,
                                                           op.motor_torque, model.map_u_dc))
    return float(val[0]) * model.fundamental_scale


def harmonic_factor(model: MotorModel, mode: str, f_sw: float) -> float:
    if f_sw <= 0:
        raise ValueError("f_sw must be positive")
    if mode not in ("2L", "3L"):
        raise ValueError(f"mode must be '2L' or '3L', got {mode!r}")
    x = f_sw / model.f_sw_ref
    c = model.capacitive_share
    topo = 1.0 if mode == "2L" else model.kappa_3l
    return topo * ((1.0 - c) * x ** (-model.beta_fsw) + c * x)


def harmonic_loss(model: MotorModel, op: OperatingPoint, mode: str, f_sw: float) -> float:
    """Modulation-induced machine loss in W."""
    factor = harmonic_factor(model, mode, f_sw)
    g = model.harmonic_ref
    val = _map_or_machine(model, g, op.motor_speed, op.motor_torque,
                          lambda: machine_harmonic_ref(model.machine, op.motor_speed,
                                                       op.motor_torque, model.map_u_dc))
    return float(val[0]) * model.harmonic_coeff * factor


def solve_electrical_state(model: MotorModel, speed, torque, u_dc=800.0):
    """``(m, cos_phi, I_peak)`` for a shaft operating point."""
    if u_dc <= 0:
        raise ValueError("u_dc must be positive")
    if speed < 0:
        raise EnvelopeError("negative motor speed is not supported")
    if model.machine is not None:
        if speed > model.machine.n_max * (1 + 1e-9):
            raise EnvelopeError(f"speed {speed:.1f} rad/s above n_max {model.machine.n_max:.1f} rad/s")
        m, pf, i, *_ = model.machine.electrical_state(speed, torque, u_dc)
        return m, pf, i
    if model.op_solver_map is None:
        raise EnvelopeError("no electrical-state source: attach a machine or an op-solver map")
    m, pf, i = model.op_solver_map(speed, torque)
    if not np.all(np.isfinite((m, pf, i))):
        raise EnvelopeError(f"({speed:.2f} rad/s, {torque:.2f} N*m) outside the operating envelope")
    # the map is tabulated at map_u_dc; the modulation index scales inversely with u_dc
    m = m * model.map_u_dc / u_dc
    if m > M_MAX_LINEAR + 1e-9:
        raise EnvelopeError(f"voltage-infeasible at u_dc={u_dc:g} V (m={m:.3f})")
    return float(m), float(pf), float(i)


def generate_maps(machine: DQMachine, n_speed: int = 65, n_torque: int = 81, u_dc: float = 800.0):
    """Tabulate fundamental loss, harmonic shape and electrical state for ``machine``."""
    t_pk = float(machine.mtpa_torque(machine.i_max))
    speeds = np.linspace(0.0, machine.n_max, n_speed)
    torques = np.linspace(-t_pk, t_pk, n_torque)
    fund = np.full((n_speed, n_torque), np.nan)
    harm = np.full((n_speed, n_torque), np.nan)
    opm = np.full((n_speed, n_torque, 3), np.nan)
    for a, s in enumerate(speeds):
        for b, t in enumerate(torques):
            try:
                m, pf, i, i_d, i_q = machine.electrical_state(s, t, u_dc)
            except EnvelopeError:
                continue
            fund[a, b] = sum(machine.loss_components(s, i_d, i_q))
            harm[a, b] = m * i * i
            opm[a, b] = (m, pf, i)
    return (GridMap(speeds, torques, fund), GridMap(speeds, torques, harm),
            GridMap(speeds, torques, opm, ("m", "cos_phi", "i_peak")))


def load_motor(fundamental_path=None, harmonic_path=None, op_path=None, machine=None, **kw):
    """Build a :class:`MotorModel` from map CSVs (bundled reference maps by default)."""
    base = files("mlidrive") / "data"
    fund = GridMap.from_csv(fundamental_path or base / "motor_fundamental_loss.csv")
    harm = GridMap.from_csv(harmonic_path or base / "motor_harmonic_ref.csv")
    opm = GridMap.from_csv(op_path) if op_path else None
    return MotorModel(fund, harm, machine=machine, op_solver_map=opm, **kw)
