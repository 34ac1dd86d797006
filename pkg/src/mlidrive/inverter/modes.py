"""Choice between 2L and 3L operation of a multilevel bridge."""

from __future__ import annotations

from ..drive_cycle import OperatingPoint
from ..errors import InfeasibleError
from .losses import LossBreakdown, electrothermal_losses
from .topology import TopologyConfig


def mode_losses(topo: TopologyConfig, op: OperatingPoint, mode: str, motor=None):
    """``(inverter breakdown, harmonic motor loss)`` of one mode, or None if it runs away."""
    try:
        bd = electrothermal_losses(topo, op, mode)
    except InfeasibleError:
        return None
    p_h = motor.harmonic_loss(op, mode, topo.f_sw) if motor is not None else 0.0
    return bd, p_h


def evaluate_modes(topo: TopologyConfig, op: OperatingPoint, feasible_3L=None, motor=None):
    """Chosen mode plus the losses of every evaluated candidate.

    Returns ``(mode, {mode: (LossBreakdown, P_h)})``. ``feasible_3L`` is a
    predicate ``(topo, op) -> bool``; without it 3L is only limited by the
    electro-thermal solution existing.
    """
    cands = {}
    two = mode_losses(topo, op, "2L", motor)
    if two is not None:
        cands["2L"] = two
    if topo.supports_3l and topo.mode_policy != "always2L":
        ok = feasible_3L(topo, op) if feasible_3L is not None else True
        if ok:
            three = mode_losses(topo, op, "3L", motor)
            if three is not None:
                cands["3L"] = three
    if not cands:
        raise InfeasibleError(f"{topo.name}: no thermally feasible mode at this operating point",
                              constraint="thermal")
    if "3L" not in cands:
        return "2L", cands
    if "2L" not in cands or topo.mode_policy == "always3L_when_feasible":
        return "3L", cands
    total = {m: bd.total + p_h for m, (bd, p_h) in cands.items()}
    return ("3L" if total["3L"] < total["2L"] else "2L"), cands


def select_mode(topo: TopologyConfig, op: OperatingPoint, feasible_3L=None, motor=None) -> str:
    """Operating mode per the topology's mode policy.

    ``min_loss`` compares inverter plus modulation-induced motor loss (the
    fundamental machine loss does not depend on the mode).
    """
    return evaluate_modes(topo, op, feasible_3L, motor)[0]


__all__ = ["LossBreakdown", "evaluate_modes", "mode_losses", "select_mode"]
