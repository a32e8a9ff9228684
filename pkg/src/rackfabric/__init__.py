"""Composable-rack placement over a broadcast-and-select WDM backplane."""

from .errors import CapacityViolation, ChannelDeficit, Infeasible
from .topology import RackTopology, build_default_rack, node_capacity_gbps
from .workload import Application, generate_apps

__version__ = "0.1.0"

__all__ = [
    "Application",
    "CapacityViolation",
    "ChannelDeficit",
    "Infeasible",
    "RackTopology",
    "build_default_rack",
    "generate_apps",
    "node_capacity_gbps",
]
