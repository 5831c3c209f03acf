"""Deterministic discrete-event simulator for on-demand MANET routing.

Implements AODV, DSR and a scalar-height TORA over a unit-disk radio with
trajectory mobility, plus scenario presets and a small CLI.
"""

from manetsim.engine import Engine, Event, RandomStream, SchedulingInPast, ns, seconds

__all__ = ["Engine", "Event", "RandomStream", "SchedulingInPast", "ns", "seconds"]
__version__ = "0.1.0"
