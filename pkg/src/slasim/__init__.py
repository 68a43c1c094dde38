"""Discrete-event simulator for session-based SLA admission control and server allocation."""
from .config import ExperimentConfig, ParseError, format_config, parse_config
from .model import BoundedProportional, Flat, InvalidParameter, Proportional, ServiceClass
from .policy import Controller, PolicyConfig, threshold_search
from .presets import get_preset, list_presets
from .sim import run_simulation

__version__ = "0.1.0"

__all__ = [
    "BoundedProportional",
    "Controller",
    "ExperimentConfig",
    "Flat",
    "InvalidParameter",
    "ParseError",
    "PolicyConfig",
    "Proportional",
    "ServiceClass",
    "format_config",
    "get_preset",
    "list_presets",
    "parse_config",
    "run_simulation",
    "threshold_search",
]
