"""Cavity emitter with one-photon and degenerate two-photon decay channels."""

__version__ = "0.1.0"

from .hilbert import SpaceSpec
from .model import Channel, ThreeLevelParams, TwoLevelParams, liouvillian
from .steady import steady_state, steady_state_report, sweep, truncation_convergence

__all__ = [
    "Channel",
    "SpaceSpec",
    "ThreeLevelParams",
    "TwoLevelParams",
    "liouvillian",
    "steady_state",
    "steady_state_report",
    "sweep",
    "truncation_convergence",
]
