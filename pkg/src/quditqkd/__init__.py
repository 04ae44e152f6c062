"""Qubit and qudit quantum key distribution simulator."""

from .analysis import chau_tolerances, cloning_figures, keyrate_bb84, keyrate_mub, mutual_info, threshold
from .channel import ChannelKind, ChannelSpec
from .config import parse_config
from .protocols import ProtocolKind, ProtocolSpec
from .simkit import RunConfig, RunReport, run_experiment, sweep

__all__ = [
    "ChannelKind",
    "ChannelSpec",
    "ProtocolKind",
    "ProtocolSpec",
    "RunConfig",
    "RunReport",
    "chau_tolerances",
    "cloning_figures",
    "keyrate_bb84",
    "keyrate_mub",
    "mutual_info",
    "parse_config",
    "run_experiment",
    "sweep",
    "threshold",
]
