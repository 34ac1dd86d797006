"""Sampled time-domain switching simulation used to verify the averaged model.

All three legs are compared against triangular carriers over one fundamental
period. Conduction is accumulated per sample from the instantaneous switch
state. Switching events are not looked up in the incidence tables; they are
derived from gate transitions and conduction paths:

* turn-off: a gate drops on a switch that was conducting forward current,
* turn-on: a gate rises on a switch that conducts forward in the new state,
* recovery: a reverse-conducting element loses its current and must block.

The commutated voltage ``|dL| * U_dc/2`` is shared equally by the devices
undergoing the same kind of event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..drive_cycle import OperatingPoint
from .losses import (CHANNELS, PHASES, LossBreakdown, _temps_for, check_mode, conduction_loss,
                     event_energy_per_amp, phase_angle, references)
from .topology import NEG, POS, TopologyConfig, conduction_path, gate_pattern, levels


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    phase: str
    role: str
    channel: str
    event: str
    current: float
    voltage: float


def default_samples(topo: TopologyConfig, op: OperatingPoint) -> int:
    return int(max(2000, 1000 * topo.f_sw / max(op.fundamental_freq, 1e-9)))


def carrier(t, f_sw):
    """Triangular carrier in [-1, 1], peak at multiples of ``1/f_sw``."""
    x = np.mod(f_sw * np.asarray(t, dtype=float), 1.0)
    return np.abs(2.0 * x - 1.0) * 2.0 - 1.0


def leg_levels(v, c, mode):
    if mode == "2L":
        return np.where(v > c, 1, -1)
    upper = 0.5 * (c + 1.0)
    lower = 0.5 * (c - 1.0)
    return np.where(v > upper, 1, np.where(v < lower, -1, 0))


def transition_events(family, mode, old, new, sign, dc_voltage):
    """Events ``(role, channel, kind, voltage)`` of one state change at current ``sign``."""
    (l0, h0), (l1, h1) = old, new
    g0 = gate_pattern(family, mode, l0, h0)
    g1 = gate_pattern(family, mode, l1, h1)
    p0 = set(conduction_path(family, l0, sign, h0))
    p1 = set(conduction_path(family, l1, sign, h1))
    offs = [r for r, ch in p0 if ch == "T" and r not in g1 and (r, "T") not in p1]
    ons = [r for r, ch in p1 if ch == "T" and r not in g0 and (r, "T") not in p0]
    rrs = [r for r, ch in p0 if ch == "D" and (r, "D") not in p1 and r not in g1] if ons else []
    u_c = abs(l1 - l0) * 0.5 * dc_voltage
    out = []
    for kind, ch, roles in (("off", "T", offs), ("on", "T", ons), ("rr", "D", rrs)):
        for r in sorted(roles):
            out.append((r, ch, kind, u_c / len(roles)))
    return out


def oracle_losses(topo: TopologyConfig, op: OperatingPoint, mode: str,
                  samples_per_period: int | None = None, junction_temps=None,
                  events: list | None = None) -> LossBreakdown:
    """Losses from a sampled carrier comparison over one fundamental period.

    ``events``, if a list, receives every :class:`SwitchEvent` of the period.
    """
    check_mode(topo, mode)
    fam = topo.family
    temps = _temps_for(topo, junction_temps)
    per = {f"{ph}.{r}.{ch}": (0.0, 0.0) for ph in PHASES for r in topo.roles for ch in CHANNELS}
    if op.phase_current_peak == 0.0:
        return LossBreakdown(per, mode, junction_temps=temps)
    if op.fundamental_freq <= 0:
        raise ValueError("the oracle needs a positive fundamental frequency")
    n = samples_per_period or default_samples(topo, op)
    period = 1.0 / op.fundamental_freq
    dt = period / n
    t = (np.arange(n) + 0.5) * dt
    theta = 2 * math.pi * op.fundamental_freq * t
    phi = phase_angle(op)
    refs = references(theta, op.modulation_index)
    c = carrier(t, topo.f_sw)
    cond_acc: dict = {}
    sw_acc: dict = {}
    for k, ph in enumerate(PHASES):
        v = refs[k]
        lv = leg_levels(v, c, mode)
        half = np.where(v >= 0, 1, -1)
        i = op.phase_current_peak * np.cos(theta - 2 * math.pi * k / 3 - phi)
        sgn = np.where(i > 0, 1, np.where(i < 0, -1, 0))
        for lvl in levels(mode):
            for s in (1, -1):
                for hs, h in ((1, POS), (-1, NEG)):
                    mask = (lv == lvl) & (sgn == s) & (half == hs)
                    if not mask.any():
                        continue
                    a_abs = float(np.abs(i[mask]).sum()) / n
                    a_sq = float((i[mask] ** 2).sum()) / n
                    for key in conduction_path(fam, lvl, s, h):
                        pa, pb = cond_acc.get((ph,) + key, (0.0, 0.0))
                        cond_acc[(ph,) + key] = (pa + a_abs, pb + a_sq)
        # state changes between consecutive samples, wrapping around the period
        lv_prev, half_prev = np.roll(lv, 1), np.roll(half, 1)
        idx = np.nonzero((lv != lv_prev) | (half != half_prev))[0]
        for j in idx:
            tj = t[j] - 0.5 * dt
            ij = op.phase_current_peak * math.cos(2 * math.pi * op.fundamental_freq * tj
                                                  - 2 * math.pi * k / 3 - phi)
            if ij == 0.0:
                continue
            s = 1 if ij > 0 else -1
            old = (int(lv_prev[j]), POS if half_prev[j] > 0 else NEG)
            new = (int(lv[j]), POS if half[j] > 0 else NEG)
            for role, ch, kind, volt in transition_events(fam, mode, old, new, s, op.dc_voltage):
                e = abs(ij) * event_energy_per_amp(topo.devices[role], kind, volt)
                sw_acc[(ph, role, ch)] = sw_acc.get((ph, role, ch), 0.0) + e
                if events is not None:
                    events.append(SwitchEvent(float(tj), ph, role, ch, kind, abs(ij), volt))
    for (ph, role, ch), (a_abs, a_sq) in cond_acc.items():
        pc = conduction_loss(topo.devices[role], ch, a_abs, a_sq, temps[role])
        per[f"{ph}.{role}.{ch}"] = (pc, per[f"{ph}.{role}.{ch}"][1])
    for (ph, role, ch), e in sw_acc.items():
        per[f"{ph}.{role}.{ch}"] = (per[f"{ph}.{role}.{ch}"][0], e / period)
    return LossBreakdown(per, mode, junction_temps=temps)
