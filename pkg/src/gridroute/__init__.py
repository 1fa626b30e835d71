"""Online packet routing on uni-directional lines and grids with bounded buffers."""

from .model import INF, GridSpec, Outcome, PacketRequest, RunMetrics, parse_trace, emit_trace

__all__ = ["INF", "GridSpec", "Outcome", "PacketRequest", "RunMetrics", "parse_trace", "emit_trace"]
__version__ = "0.1.0"
