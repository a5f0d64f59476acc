"""The LINA engine: static model, tables and packet processing."""

from .model import build_lina_model
from .ops import Disposition, Dropped, ToDAQ, ToFlowUpdate
from .pipeline import Simulator, process_packet
from .tables import Packet, ParseError, Tables, load_tables, parse_packet, read_trace

__all__ = [
    "Disposition",
    "Dropped",
    "Packet",
    "ParseError",
    "Simulator",
    "Tables",
    "ToDAQ",
    "ToFlowUpdate",
    "build_lina_model",
    "load_tables",
    "parse_packet",
    "process_packet",
    "read_trace",
]
