"""Space-time view of a grid: lazy successors, untilting, sinks and path-length constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .model import INF, GridSpec, PacketRequest

E0 = "move"
E1 = "buffer"
SINK = "sink"

# A space-time vertex is a pair (v, t) with v a coordinate tuple.
STVertex = tuple


@dataclass(frozen=True)
class STEdge:
    src: STVertex
    dst: STVertex
    kind: str

    def capacity(self, grid: GridSpec) -> float:
        if self.kind == E0:
            return grid.c
        if self.kind == E1:
            return grid.B
        return INF


def st_successors(x: STVertex, grid: GridSpec) -> list[STEdge]:
    """Out-edges of a space-time vertex; the graph is never materialized."""
    v, t = x
    out = [STEdge(x, (w, t + 1), E0) for w in grid.out_neighbors(v)]
    out.append(STEdge(x, (v, t + 1), E1))
    return out


def edge_kind(src: STVertex, dst: STVertex) -> str:
    (u, t0), (v, t1) = src, dst
    if t1 != t0 + 1:
        raise ValueError(f"not a space-time edge: {src} -> {dst}")
    if u == v:
        return E1
    diffs = [b - a for a, b in zip(u, v)]
    if sorted(diffs) == [0] * (len(diffs) - 1) + [1]:
        return E0
    raise ValueError(f"not a grid move: {src} -> {dst}")


def untilt(point: tuple[int, ...]) -> tuple[int, ...]:
    """Map (x_1..x_d, t) to (x_1..x_d, t - sum x)."""
    *xs, t = point
    return (*xs, t - sum(xs))


def untilt_inverse(point: tuple[int, ...]) -> tuple[int, ...]:
    *xs, s = point
    return (*xs, s + sum(xs))


def untilt_vertex(x: STVertex) -> tuple[int, ...]:
    v, t = x
    return untilt((*v, t))


def _ceil(q: Fraction) -> int:
    return math.ceil(q)


def pmax_line(n: int, B: int, c: int) -> int:
    """Path-length bound for a line of n nodes: 2n(1 + n(B/c + 1))."""
    return _ceil(2 * n * (1 + n * (Fraction(B, c) + 1)))


def pmax_grid(n: int, d: int, B: int, c: int, diam: int) -> int:
    """Path-length bound for a d-dimensional grid: 2 diam (1 + n(B/c + d))."""
    return _ceil(2 * diam * (1 + n * (Fraction(B, c) + d)))


def pmax_st_line(n: int, B: int, c: int) -> int:
    """Bound on useful space-time path lengths in a line: 2(n-1)(1 + B/c)."""
    return _ceil(2 * (n - 1) * (1 + Fraction(B, c)))


def deadline_sink_targets(req: PacketRequest, horizon: int | None = None) -> set:
    """Space-time copies of the destination that still count as on time.

    An infinite deadline is clamped to ``horizon``, which must then be given.
    """
    last = req.deadline
    if last == INF:
        if horizon is None:
            raise ValueError("infinite deadline needs a horizon")
        last = horizon
    return {(req.b, tt) for tt in range(req.t, int(last) + 1)}
