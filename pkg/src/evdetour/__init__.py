"""EV detour-to-recharge simulation and charging-station siting."""

__version__ = "0.1.0"
