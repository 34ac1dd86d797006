"""Inverter loss models for two- and three-level traction inverters."""

from .losses import LossBreakdown, analytic_losses, electrothermal_losses
from .oracle import oracle_losses
from .topology import TOPOLOGY_KINDS, TopologyConfig

__all__ = ["LossBreakdown", "TopologyConfig", "TOPOLOGY_KINDS", "analytic_losses",
           "electrothermal_losses", "oracle_losses"]
