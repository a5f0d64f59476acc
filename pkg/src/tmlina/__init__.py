"""Thinging-machine models, their execution, and the LINA packet pipeline."""

from .behavior import Accepted, BehaviorAutomaton, Rejected, check_chronology, derive_automaton
from .core import (
    ActionKind,
    AnchorNotFound,
    ArrowKind,
    InvalidModel,
    ModelError,
    StaticModel,
    anchor_lookup,
    build_model,
    export_dot,
    validate_model,
)
from .events import EventInstance, EventKind, EventProjector, event_catalog
from .lina import Simulator, build_lina_model, load_tables, process_packet
from .monitor import LogManager, MergeRule, MetaEvent, Monitor, MonitorConfig, merge, observe
from .runtime import Engine, HandlerResult, Thing

__version__ = "0.1.0"

__all__ = [
    "Accepted",
    "ActionKind",
    "AnchorNotFound",
    "ArrowKind",
    "BehaviorAutomaton",
    "Engine",
    "EventInstance",
    "EventKind",
    "EventProjector",
    "HandlerResult",
    "InvalidModel",
    "LogManager",
    "MergeRule",
    "MetaEvent",
    "ModelError",
    "Monitor",
    "MonitorConfig",
    "Rejected",
    "Simulator",
    "StaticModel",
    "Thing",
    "anchor_lookup",
    "build_lina_model",
    "build_model",
    "check_chronology",
    "derive_automaton",
    "event_catalog",
    "export_dot",
    "load_tables",
    "merge",
    "observe",
    "process_packet",
    "validate_model",
]
