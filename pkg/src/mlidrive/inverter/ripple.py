"""DC-link capacitor current and voltage ripple.

The DC side of the bridge draws ``i_eq = (i_P - i_N) / 2`` where ``i_P`` and
``i_N`` are the phase currents connected to the positive and negative rail.
The source supplies the period average ``I_b`` and the capacitor bank carries
the rest. Within one carrier period the leg states are centred pulses (rail P
centred on the carrier valley, rail N on the peak), so the second moment of
``i_eq`` follows from pulse overlaps without time stepping.
"""

from __future__ import annotations

import math

import numpy as np

from ..drive_cycle import OperatingPoint
from .losses import _quadrature, check_mode, phase_angle, references
from .oracle import carrier, default_samples, leg_levels
from .topology import TopologyConfig

RIPPLE_FRAC = 0.05


def _rail_duties(v, mode):
    v = np.clip(v, -1.0, 1.0)
    if mode == "2L":
        return 0.5 * (1 + v), 0.5 * (1 - v)
    return np.maximum(v, 0.0), np.maximum(-v, 0.0)


def _pulse_overlap(a, b, same_centre):
    return np.minimum(a, b) if same_centre else np.maximum(0.0, a + b - 1.0)


def _phase_state(op, theta):
    phi = phase_angle(op)
    refs = references(theta, op.modulation_index)
    cur = np.stack([op.phase_current_peak * np.cos(theta - 2 * np.pi * k / 3 - phi)
                    for k in range(3)])
    return refs, cur


def _ripple_charge(dp, dn, cur, i_b):
    """Peak-to-peak charge per unit carrier period, one value per column."""
    # pulse edges on [0, 1): P centred on 0.5, N centred on 0 (wrapping)
    n = dp.shape[1]
    edges = np.concatenate([np.zeros((1, n)), np.ones((1, n)),
                            0.5 - dp / 2, 0.5 + dp / 2, dn / 2, 1 - dn / 2])
    edges = np.sort(np.clip(edges, 0.0, 1.0), axis=0)
    mids = 0.5 * (edges[1:] + edges[:-1])
    i_eq = np.zeros_like(mids)
    for k in range(3):
        in_p = np.abs(mids - 0.5) < dp[k] / 2
        in_n = (mids < dn[k] / 2) | (mids > 1 - dn[k] / 2)
        i_eq += 0.5 * cur[k] * (in_p.astype(float) - in_n.astype(float))
    q = np.cumsum((i_eq - i_b) * np.diff(edges, axis=0), axis=0)
    q = np.vstack([np.zeros((1, n)), q])
    return q.max(axis=0) - q.min(axis=0)


def dc_link_ripple(topo: TopologyConfig, op: OperatingPoint, mode: str, n_theta: int = 720):
    """``(delta_u, i_cap_rms)``: half the peak-to-peak voltage ripple and capacitor RMS current."""
    check_mode(topo, mode)
    if op.phase_current_peak == 0.0:
        return 0.0, 0.0
    theta, w = _quadrature(phase_angle(op))
    refs, cur = _phase_state(op, theta)
    dp, dn = _rail_duties(refs, mode)
    mean = 0.5 * np.sum((dp - dn) * cur, axis=0)
    second = np.zeros_like(theta)
    for x in range(3):
        for y in range(3):
            e_ll = (_pulse_overlap(dp[x], dp[y], True) + _pulse_overlap(dn[x], dn[y], True)
                    - _pulse_overlap(dp[x], dn[y], False) - _pulse_overlap(dn[x], dp[y], False))
            second += 0.25 * cur[x] * cur[y] * e_ll
    i_b = float(w @ mean)
    i_rms = math.sqrt(max(float(w @ second) - i_b**2, 0.0))
    # voltage ripple: worst carrier period over a dense angle grid
    th = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    r2, c2 = _phase_state(op, th)
    p2, n2 = _rail_duties(r2, mode)
    pp = float(_ripple_charge(p2, n2, c2, i_b).max())
    delta_u = 0.5 * pp / (topo.f_sw * topo.dc_link_capacitance)
    return float(delta_u), float(i_rms)


def ripple_ok(topo: TopologyConfig, op: OperatingPoint, mode: str, frac: float = RIPPLE_FRAC) -> bool:
    du, _ = dc_link_ripple(topo, op, mode)
    return du <= frac * op.dc_voltage


def oracle_ripple(topo: TopologyConfig, op: OperatingPoint, mode: str,
                  samples_per_period: int | None = None):
    """Time-domain counterpart of :func:`dc_link_ripple` from sampled leg states."""
    check_mode(topo, mode)
    if op.phase_current_peak == 0.0:
        return 0.0, 0.0
    n = samples_per_period or default_samples(topo, op)
    period = 1.0 / op.fundamental_freq
    dt = period / n
    t = (np.arange(n) + 0.5) * dt
    theta = 2 * math.pi * op.fundamental_freq * t
    refs, cur = _phase_state(op, theta)
    c = carrier(t, topo.f_sw)
    lv = np.stack([leg_levels(refs[k], c, mode) for k in range(3)])
    i_eq = 0.5 * np.sum(lv * cur, axis=0)
    i_b = i_eq.mean()
    i_rms = float(np.sqrt(np.mean((i_eq - i_b) ** 2)))
    # charge excursion inside every carrier period
    q = np.cumsum((i_eq - i_b) * dt)
    win = np.floor(t * topo.f_sw).astype(int)
    pp = 0.0
    for k in np.unique(win):
        seg = q[win == k]
        start = q[np.nonzero(win == k)[0][0] - 1] if np.nonzero(win == k)[0][0] > 0 else 0.0
        pp = max(pp, max(seg.max(), start) - min(seg.min(), start))
    return float(0.5 * pp / topo.dc_link_capacitance), i_rms
