"""Drivetrain loss and battery-cost co-simulation for multilevel traction inverters."""

__version__ = "0.1.0"
