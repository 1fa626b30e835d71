"""Tilings of the untilted space-time grid and the tile-level sketch graphs.

Untilted points are tuples ``(x_1, ..., x_d, s)`` where ``s = t - sum(x)``.
The last axis is the time axis; in a drawing with time running to the right,
moving along it is "east" (a buffer step) and moving along a spatial axis is
"north" (a link traversal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .model import INF, GridSpec, PacketRequest
from .spacetime import untilt_vertex

HORIZONTAL = "horizontal"
VERTICAL = "vertical"
INTERIOR = "interior"
SINK_EDGE = "sink"

SW, NW, SE, NE = "SW", "NW", "SE", "NE"


@dataclass(frozen=True)
class TilingParams:
    """Tile sides and phase shifts.

    ``space_side`` is the tile extent along every spatial axis and
    ``time_side`` along the time axis. Square tilings use ``k`` for both and
    zero shifts; rectangular tilings (one-dimensional only) use ``Q`` rows and
    ``tau`` columns.
    """

    d: int
    space_side: int
    time_side: int
    space_shift: int = 0
    time_shift: int = 0
    mode: str = "square"

    def __post_init__(self):
        if self.space_side < 1 or self.time_side < 1:
            raise ValueError("tile sides must be positive")
        if not (0 <= self.space_shift < self.space_side and 0 <= self.time_shift < self.time_side):
            raise ValueError("shifts must lie in [0, side)")
        if self.mode == "rect" and (self.space_side % 2 or self.time_side % 2):
            raise ValueError("rectangular tiles need even sides")

    @classmethod
    def square(cls, k: int, d: int = 1) -> "TilingParams":
        return cls(d, k, k)

    @classmethod
    def rect(cls, tau: int, Q: int, phi_tau: int = 0, phi_Q: int = 0) -> "TilingParams":
        return cls(1, Q, tau, phi_Q, phi_tau, mode="rect")

    @property
    def k(self) -> int:
        if self.space_side != self.time_side:
            raise AttributeError("rectangular tiling has no single side length")
        return self.space_side

    @property
    def tau(self) -> int:
        return self.time_side

    @property
    def Q(self) -> int:
        return self.space_side

    def sides(self) -> tuple[int, ...]:
        return (self.space_side,) * self.d + (self.time_side,)

    def shifts(self) -> tuple[int, ...]:
        return (self.space_shift,) * self.d + (self.time_shift,)


TileId = tuple


def tile_of_point(point: tuple[int, ...], params: TilingParams) -> TileId:
    """Lower corner of the tile holding an untilted point."""
    return tuple(
        ((p - phi) // side) * side + phi
        for p, side, phi in zip(point, params.sides(), params.shifts())
    )


def tile_of(x, params: TilingParams) -> TileId:
    """Tile of a space-time vertex ``(v, t)``."""
    return tile_of_point(untilt_vertex(x), params)


def tile_contains(corner: TileId, point: tuple[int, ...], params: TilingParams) -> bool:
    return all(c <= p < c + side for c, p, side in zip(corner, point, params.sides()))


def tile_side_k(p_max: int) -> int:
    """Smallest k with 2**k >= 1 + 3 p_max."""
    if p_max < 1:
        raise ValueError("p_max must be positive")
    return (3 * p_max).bit_length()


def quadrant(point: tuple[int, ...], params: TilingParams) -> str:
    """Quadrant of a one-dimensional untilted point inside its tile (half-open halves)."""
    corner = tile_of_point(point, params)
    north = point[0] - corner[0] >= params.space_side // 2
    east = point[1] - corner[1] >= params.time_side // 2
    return {(False, False): SW, (True, False): NW, (False, True): SE, (True, True): NE}[(north, east)]


class SketchGraph:
    """Tile-level graph over a grid's untilted space-time drawing.

    Tiles are identified by lower corners and only exist when they hold at
    least one real vertex. Edges go from a tile to its successor along each
    axis. Everything is computed on demand since time is unbounded.
    """

    def __init__(self, grid: GridSpec, params: TilingParams, sink_mode: str = "per-vertex"):
        if params.d != grid.d:
            raise ValueError("tiling dimension does not match grid")
        if sink_mode not in ("per-vertex", "per-request"):
            raise ValueError(f"unknown sink mode {sink_mode}")
        self.grid = grid
        self.params = params
        self.sink_mode = sink_mode
        sides = params.sides()
        cross = [math.prod(sides[:i] + sides[i + 1:]) for i in range(len(sides))]
        # crossing a face orthogonal to a spatial axis uses links, the time face uses buffers
        self.axis_capacity = [grid.c * cross[i] for i in range(grid.d)] + [grid.B * cross[-1]]
        d = grid.d
        vol = math.prod(sides)
        self.node_capacity = (d + 1) * vol * (grid.B + d * grid.c)

    @property
    def horizontal_capacity(self):
        return self.axis_capacity[-1]

    @property
    def vertical_capacity(self):
        return self.axis_capacity[0]

    def tile_exists(self, corner: TileId) -> bool:
        sides = self.params.sides()
        for i, m in enumerate(self.grid.dims):
            if corner[i] + sides[i] - 1 < 1 or corner[i] > m:
                return False
        return True

    def neighbors(self, corner: TileId):
        """Yield ``(next_corner, kind, capacity)`` for each existing successor tile."""
        sides = self.params.sides()
        for axis, side in enumerate(sides):
            nxt = corner[:axis] + (corner[axis] + side,) + corner[axis + 1:]
            if self.tile_exists(nxt):
                kind = HORIZONTAL if axis == len(sides) - 1 else VERTICAL
                yield nxt, kind, self.axis_capacity[axis]

    def contains_copy(self, corner: TileId, b: tuple[int, ...], window=None) -> bool:
        """Whether the tile holds some ``(b, t')``; ``window`` limits t' to [lo, hi]."""
        sides = self.params.sides()
        for i, x in enumerate(b):
            if not corner[i] <= x < corner[i] + sides[i]:
                return False
        if window is None:
            return True
        lo, hi = window
        shift = sum(b)
        s_lo = corner[-1]
        s_hi = corner[-1] + sides[-1] - 1
        hi_s = INF if hi == INF else hi - shift
        return s_lo <= hi_s and lo - shift <= s_hi

    def source_tile(self, req: PacketRequest) -> TileId:
        return tile_of((req.a, req.t), self.params)

    def sink_window(self, req: PacketRequest):
        if self.sink_mode == "per-vertex":
            return None
        return (req.t, req.deadline)


def build_sketch(grid: GridSpec, params: TilingParams, sink_mode: str = "per-vertex") -> SketchGraph:
    return SketchGraph(grid, params, sink_mode)


class SplitSketch:
    """Node-split sketch with capacities in {1, d+1, inf}.

    Every tile ``s`` becomes ``("in", s) -> ("out", s)`` with capacity
    ``interior``; edges between tiles get capacity 1 and sink edges stay
    infinite. Path lengths roughly double, so the hop bound is ``2 p + 1``.
    """

    def __init__(self, base: SketchGraph, p_max: int, interior: int | None = None):
        self.base = base
        self.interior = base.grid.d + 1 if interior is None else interior
        self.p_max = 2 * p_max + 1

    def successors(self, node):
        side, corner = node
        if side == "in":
            yield ("out", corner), self.interior
        else:
            for nxt, _kind, _cap in self.base.neighbors(corner):
                yield ("in", nxt), 1


def split_sketch(sketch: SketchGraph, d: int | None = None, p_max: int = 1) -> SplitSketch:
    """Split every tile into in/out halves; ``p_max`` is the unsplit hop bound."""
    d = sketch.grid.d if d is None else d
    return SplitSketch(sketch, p_max, interior=d + 1)


def tiling_params_rand(n: int, B: int, c: int, phi_tau: int = 0, phi_Q: int = 0) -> TilingParams:
    """Rectangular tile sides for the randomized line algorithm.

    All comparisons against log2(n) are done on integers: ``x < log2 n`` iff
    ``2**x < n``.
    """
    if B < 1 or c < 1:
        raise ValueError("need B, c >= 1")

    def ceil_log_over(m: int) -> int:
        q = 0
        while 2 ** (q * m) < n:
            q += 1
        return q

    if 2 ** (B * c) < n:
        tau, Q = 2 * ceil_log_over(c), 2 * ceil_log_over(B)
    else:
        tau, Q = 2 * B, 2 * c
    return TilingParams.rect(tau, Q, phi_tau % tau, phi_Q % Q)


class EqualizedSketch:
    """A one-dimensional sketch whose inter-tile edges all carry capacity ``cS``."""

    def __init__(self, base: SketchGraph, cS: int):
        self.base = base
        self.cS = cS

    def successors(self, corner):
        for nxt, _kind, _cap in self.base.neighbors(corner):
            yield nxt, self.cS


def equalize_capacities(S: SketchGraph) -> EqualizedSketch:
    hi = max(S.horizontal_capacity, S.vertical_capacity)
    lo = min(S.horizontal_capacity, S.vertical_capacity)
    if lo <= 0 or Fraction(hi, lo) > 2:
        raise ValueError(f"capacity ratio {hi}/{lo} exceeds 2; tiling parameters are off")
    return EqualizedSketch(S, lo)


def classify(req: PacketRequest, params: TilingParams) -> str:
    """``"near"`` when the source tile already holds a copy of the destination."""
    corner = tile_of((req.a, req.t), params)
    side = params.space_side
    ok = all(c <= x < c + side for c, x in zip(corner, req.b))
    return "near" if ok else "far"


def in_sw_quadrant(req: PacketRequest, params: TilingParams) -> bool:
    """Whether the source sits in the south-west quadrant of its tile."""
    return quadrant(untilt_vertex((req.a, req.t)), params) == SW
