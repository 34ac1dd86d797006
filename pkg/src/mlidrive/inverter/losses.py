"""Fundamental-period averaged inverter losses (closed-form equivalent).

Each phase leg follows a min-max injected sinusoidal reference. Between the
breakpoints ``k*pi/6`` (where the injection changes branch) and the current
zero crossings, every duty-weighted loss integrand is a smooth trigonometric
polynomial, so piecewise Gauss-Legendre quadrature reproduces the analytic
integrals to rounding error. Phases b and c are phase-shifted copies of a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..drive_cycle import OperatingPoint
from ..errors import InfeasibleError
from ..semiconductors import T_REF, conduction_coeffs, solve_electrothermal
from .topology import INCIDENCE, NEG, POS, TopologyConfig, conduction_path, levels

PHASES = ("a", "b", "c")
CHANNELS = ("T", "D")
_GL_NODES = 12


@dataclass
class LossBreakdown:
    """Per-element losses ``"phase.role.channel" -> (P_cond, P_sw)`` in W."""

    per_device: dict
    mode: str
    junction_temps: dict = field(default_factory=dict)
    P_sw_inv: float = 0.0
    P_cond_inv: float = 0.0

    def __post_init__(self):
        self.P_cond_inv = float(sum(c for c, _ in self.per_device.values()))
        self.P_sw_inv = float(sum(s for _, s in self.per_device.values()))

    @property
    def totals(self):
        return self.P_sw_inv, self.P_cond_inv

    @property
    def total(self) -> float:
        return self.P_sw_inv + self.P_cond_inv

    def role_loss(self, role: str, phase: str = "a") -> float:
        """Conduction plus switching loss of one physical switch."""
        out = 0.0
        for ch in CHANNELS:
            c, s = self.per_device.get(f"{phase}.{role}.{ch}", (0.0, 0.0))
            out += c + s
        return out


def check_mode(topo: TopologyConfig, mode: str):
    if mode not in ("2L", "3L"):
        raise ValueError(f"mode must be '2L' or '3L', got {mode!r}")
    if mode == "3L" and not topo.supports_3l:
        raise InfeasibleError(f"{topo.kind} cannot operate in 3L mode", constraint="mode")


def phase_angle(op: OperatingPoint) -> float:
    """Current lag behind the voltage reference (rad)."""
    return math.acos(max(-1.0, min(1.0, op.power_factor)))


def references(theta, m):
    """Normalised min-max injected references of legs a, b, c (shape 3 x N)."""
    theta = np.asarray(theta, dtype=float)
    u = np.stack([m * np.cos(theta - 2 * np.pi * k / 3) for k in range(3)])
    return u - 0.5 * (u.max(axis=0) + u.min(axis=0))


def duties(v, mode: str):
    """Level -> duty array for a normalised reference ``v`` in [-1, 1]."""
    v = np.clip(v, -1.0, 1.0)
    if mode == "2L":
        return {1: 0.5 * (1 + v), -1: 0.5 * (1 - v)}
    pos = v >= 0
    return {1: np.where(pos, v, 0.0), 0: 1.0 - np.abs(v), -1: np.where(pos, 0.0, -v)}


def _quadrature(phi: float):
    brk = {k * math.pi / 6 for k in range(13)}
    for z in (phi + math.pi / 2, phi - math.pi / 2, phi + 1.5 * math.pi):
        brk.add(z % (2 * math.pi))
    brk = np.array(sorted(brk))
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    a, b = brk[:-1], brk[1:]
    keep = b - a > 1e-12
    a, b = a[keep], b[keep]
    theta = (0.5 * (b - a)[:, None] * x[None, :] + 0.5 * (a + b)[:, None]).ravel()
    weight = (0.5 * (b - a)[:, None] * w[None, :]).ravel() / (2 * math.pi)
    return theta, weight


@dataclass
class LossIntegrals:
    """Temperature-independent pieces of the averaged loss of one leg.

    ``cond[(role, ch)] = (avg |i|, avg i^2)`` weighted by conduction time;
    ``sw[(role, ch)]`` is switching power in W.
    """

    cond: dict
    sw: dict
    mode: str


def leg_integrals(topo: TopologyConfig, op: OperatingPoint, mode: str) -> LossIntegrals:
    check_mode(topo, mode)
    fam = topo.family
    cond: dict = {}
    sw: dict = {}
    ipk = op.phase_current_peak
    if ipk == 0.0:
        return LossIntegrals(cond, sw, mode)
    phi = phase_angle(op)
    theta, w = _quadrature(phi)
    v = references(theta, op.modulation_index)[0]
    i = ipk * np.cos(theta - phi)
    ai, i2 = np.abs(i), i * i
    sign_mask = {1: i > 0, -1: i < 0}
    half_mask = {POS: v >= 0, NEG: v < 0}
    d = duties(v, mode)
    for lvl in levels(mode):
        for s, smask in sign_mask.items():
            for h, hmask in half_mask.items():
                wt = w * d[lvl] * smask * hmask
                if not np.any(wt):
                    continue
                a_abs, a_sq = float(wt @ ai), float(wt @ i2)
                for key in conduction_path(fam, lvl, s, h):
                    pa, pb = cond.get(key, (0.0, 0.0))
                    cond[key] = (pa + a_abs, pb + a_sq)
    # a carrier period switches only while the duty is strictly inside (0, 1)
    active = np.abs(v) < 1.0 if mode == "2L" else (np.abs(v) > 0) & (np.abs(v) < 1.0)
    for s, smask in sign_mask.items():
        for h, hmask in half_mask.items():
            s_abs = float((w * smask * hmask * active) @ ai)
            if s_abs == 0.0:
                continue
            for role, ch, event, frac in INCIDENCE[fam][(mode, h, s)]:
                e_per_amp = event_energy_per_amp(topo.devices[role], event, frac * op.dc_voltage)
                sw[(role, ch)] = sw.get((role, ch), 0.0) + topo.f_sw * e_per_amp * s_abs
    return LossIntegrals(cond, sw, mode)


def event_energy_per_amp(device, event: str, voltage: float) -> float:
    """Switching energy per ampere of switched current at ``voltage``."""
    if event == "rr" and not device.is_mosfet:
        device = device.reverse
    e_ref = {"on": device.e_on, "off": device.e_off, "rr": device.e_rr}[event]
    if voltage <= 0:
        return 0.0
    return e_ref / device.i_ref * (voltage / device.u_ref) ** device.k_voltage


def conduction_loss(device, channel: str, avg_abs: float, avg_sq: float, t_j: float) -> float:
    dev = device if channel == "T" else device.reverse_conductor()
    v0, r = conduction_coeffs(dev, t_j)
    return float(v0 * avg_abs + r * avg_sq)


def _temps_for(topo, junction_temps):
    if junction_temps is None:
        return {r: T_REF for r in topo.roles}
    if isinstance(junction_temps, dict):
        return {r: float(junction_temps.get(r, T_REF)) for r in topo.roles}
    return {r: float(junction_temps) for r in topo.roles}


def breakdown_from_integrals(topo, li: LossIntegrals, temps: dict) -> LossBreakdown:
    per = {}
    for role in topo.roles:
        for ch in CHANNELS:
            a_abs, a_sq = li.cond.get((role, ch), (0.0, 0.0))
            pc = conduction_loss(topo.devices[role], ch, a_abs, a_sq, temps[role]) if a_sq else 0.0
            ps = li.sw.get((role, ch), 0.0)
            for ph in PHASES:
                per[f"{ph}.{role}.{ch}"] = (pc, ps)
    return LossBreakdown(per, li.mode, junction_temps=dict(temps))


def analytic_losses(topo: TopologyConfig, op: OperatingPoint, mode: str,
                    junction_temps=None) -> LossBreakdown:
    """Averaged losses at fixed junction temperatures (25 C unless given)."""
    li = leg_integrals(topo, op, mode)
    return breakdown_from_integrals(topo, li, _temps_for(topo, junction_temps))


def electrothermal_losses(topo: TopologyConfig, op: OperatingPoint, mode: str,
                          tol: float = 0.1, max_iter: int = 50) -> LossBreakdown:
    """Averaged losses at the self-consistent junction temperature of every switch."""
    li = leg_integrals(topo, op, mode)
    roles = topo.roles
    paths = [topo.thermal_path(r) for r in roles]

    def loss_fn(t):
        bd = breakdown_from_integrals(topo, li, dict(zip(roles, t)))
        return np.array([bd.role_loss(r) for r in roles])

    t, _, _ = solve_electrothermal(loss_fn, paths, tol=tol, max_iter=max_iter)
    return breakdown_from_integrals(topo, li, dict(zip(roles, map(float, t))))
