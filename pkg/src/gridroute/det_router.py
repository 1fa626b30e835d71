"""Deterministic online routing on uni-directional lines, plus its variants.

The line router admits requests with path packing on a coarse tile graph and
then realizes admitted tile paths step by step in the untilted space-time
grid. Three one-unit tracks are reserved on every edge:

* track 1 carries straight runs at the start and the end of a tile path
  (first and last segments), arbitrated by online interval packing per row
  and per column;
* track 2 carries the middle of the path, where packets bend with knock-knee
  swaps;
* track 3 carries the final climb inside the destination tile.

Rows are fixed vertices (moving east means waiting in a buffer) and columns
are fixed untilted times (moving north means crossing a link).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .intervals import Interval, Offer, PackState
from .ipp import Path, PrimalDualState, certify, ipp_process, lightest_path_search
from .model import INF, GridSpec, Outcome, PacketRequest, RunMetrics, validate_request
from .spacetime import pmax_grid, pmax_line, pmax_st_line
from .tiling import TilingParams, build_sketch, tile_side_k

N, E = "N", "E"
FIRST, INTERNAL, LAST_SEG, LAST_TILE = "first", "internal", "last-segment", "last-tile"


class ConfigError(ValueError):
    pass


def _log2_at_least(n: int, x: int) -> bool:
    """True iff x <= log2(n)."""
    return 2 ** x <= n


@dataclass(frozen=True)
class DetParams:
    p_max: int
    k: int
    split_p_max: int


def det_parameters(grid: GridSpec) -> DetParams:
    if grid.d == 1:
        p = pmax_line(grid.n, grid.B, grid.c)
    else:
        p = pmax_grid(grid.n, grid.d, grid.B, grid.c, grid.diameter)
    k = tile_side_k(p)
    return DetParams(p, k, 2 * p + 1)


# ---------------------------------------------------------------------------
# node rules for the middle of a tile path


def route_internal_step(horz, vert):
    """Assign the two out-edges of a node from its two in-edges.

    ``horz`` and ``vert`` are ``None`` or ``(rid, exit_side)`` with exit side
    ``"E"`` or ``"N"``. Returns ``(horz_out, vert_out)`` as request ids.
    """
    if horz is None or vert is None:
        only = horz if vert is None else vert
        if only is None:
            return None, None
        return (only[0], None) if only[1] == E else (None, only[0])
    if horz[1] == E or vert[1] == N:
        return horz[0], vert[0]
    return vert[0], horz[0]


def route_internal_ddim(inputs: list) -> list:
    """Node rule for (d+1)-axis tiles.

    ``inputs[j]`` is ``None`` or ``(rid, exit_axis)`` for the packet arriving
    along axis ``j``. Returns ``outputs[j]``, the request leaving along axis
    ``j``. Straight packets keep their axis; a packet wanting axis ``l`` swaps
    with the packet on ``l`` if that one wants its axis, or takes an idle
    ``l`` when it is the lowest-indexed input wanting ``l``; otherwise it
    carries on and tries again at the next node.
    """
    m = len(inputs)
    out = [None] * m
    for j, item in enumerate(inputs):
        if item is None:
            continue
        rid, ell = item
        if ell == j:
            out[j] = rid
            continue
        other = inputs[ell]
        if other is not None and other[1] != j:
            out[j] = rid
            continue
        lowest = min(i for i, it in enumerate(inputs) if it is not None and it[1] == ell)
        if (other is not None and other[1] == j) or (other is None and j == lowest):
            out[ell] = rid
            out[j] = other[0] if other is not None else None
            continue
        out[j] = rid
    return out


def simulate_tile(d: int, k: int, entries: list) -> dict:
    """Push packets through one tile of side ``k`` in ``d + 1`` axes.

    ``entries`` holds ``(rid, entry_axis, face_offset, exit_axis)`` where
    ``face_offset`` is a ``d``-tuple giving the position on the entry face.
    Returns ``{rid: exit_axis_used}``; a packet leaving through the wrong
    face is reported with the axis it actually used.
    """
    m = d + 1
    arriving = defaultdict(dict)  # node -> {axis: (rid, exit)}
    for rid, axis, offset, ell in entries:
        coords = list(offset)
        coords.insert(axis, 0)
        node = tuple(coords)
        if axis in arriving[node]:
            raise ValueError(f"two packets enter {node} along axis {axis}")
        arriving[node][axis] = (rid, ell)
    result = {}
    order = sorted(
        (tuple(c) for c in _cube(m, k)),
        key=lambda p: (sum(p), p),
    )
    for node in order:
        ins = arriving.pop(node, None)
        if not ins:
            continue
        inputs = [ins.get(j) for j in range(m)]
        exits = {it[0]: it[1] for it in inputs if it is not None}
        outs = route_internal_ddim(inputs)
        for axis, rid in enumerate(outs):
            if rid is None:
                continue
            nxt = list(node)
            nxt[axis] += 1
            if nxt[axis] >= k:
                result[rid] = axis
                continue
            slot = arriving[tuple(nxt)]
            if axis in slot:
                raise AssertionError(f"edge into {tuple(nxt)} along {axis} used twice")
            slot[axis] = (rid, exits[rid])
    return result


def _cube(m, k):
    if m == 0:
        yield ()
        return
    for rest in _cube(m - 1, k):
        for i in range(k):
            yield rest + (i,)


def route_special_segment(pack: PackState, rid, start: int, end: int) -> Offer:
    """Offer a straight first or last segment ``(start, end)`` on its row or column."""
    return pack.offer(Interval(start, end, rid))


def route_last_tile(pack: PackState, rid, entry: int, dest: int) -> Offer:
    """Offer the climb from ``entry`` to ``dest`` in one column; nearer destinations win."""
    return pack.offer(Interval(entry, dest, rid))


# ---------------------------------------------------------------------------
# the line router


@dataclass
class _Packet:
    rid: int
    req: PacketRequest
    tiles: list
    dirs: list
    plan: str
    first_bend: int | None
    last_bend: int | None
    x: int
    s: int
    heading: str = N
    track: int = 1
    phase: str = FIRST
    tile_idx: int = 0
    seg_end: int = 0
    line: tuple | None = None
    path: list = field(default_factory=list)

    @property
    def coord(self) -> int:
        return self.s if self.heading == E else self.x

    @property
    def time(self) -> int:
        return self.x + self.s


@dataclass
class DetResult:
    outcomes: dict
    paths: dict
    sketch_paths: dict
    metrics: RunMetrics
    stats: dict
    ipp: PrimalDualState | None = None
    packs: dict = field(default_factory=dict)


class LineRouter:
    """Step-by-step detailed routing for the one-dimensional deterministic algorithm."""

    def __init__(self, grid: GridSpec, deadlines: bool = False, enforce_domain: bool = True,
                 label: str | None = None):
        if grid.d != 1:
            raise ConfigError("the deterministic line router needs d = 1")
        if enforce_domain:
            for name, val in (("B", grid.B), ("c", grid.c)):
                if val < 3 or not _log2_at_least(grid.n, val):
                    raise ConfigError(f"{name}={val} outside [3, log2 n] for n={grid.n}")
        elif grid.B < 3 or grid.c < 3:
            raise ConfigError("three tracks need B, c >= 3")
        self.grid = grid
        self.n = grid.n
        self.deadlines = deadlines
        self.params = det_parameters(grid)
        self.k = self.params.k
        self.tiling = TilingParams.square(self.k, 1)
        self.sketch = build_sketch(grid, self.tiling, "per-request" if deadlines else "per-vertex")
        self.ipp = PrimalDualState(self.params.split_p_max)
        self.label = label or ("det-deadline" if deadlines else "det")
        self.special = defaultdict(PackState)  # ('row', x) / ('col', s) -> track 1 intervals
        self.last = defaultdict(PackState)  # column s -> track 3 intervals
        self.live: dict[int, _Packet] = {}
        self.outcomes: dict = {}
        self.paths: dict = {}
        self.sketch_paths: dict = {}
        self.usage = defaultdict(int)
        self.stats = {
            "injected": 0,
            "reached_last": 0,
            "reached_by_tile": defaultdict(int),
            "delivered_by_tile": defaultdict(int),
            "internal_failures": 0,
            "failure_notes": [],
            "preempted_special": 0,
            "preempted_last_tile": 0,
            "late": 0,
            "knock_knees": 0,
            "max_track_use": 0,
        }

    # -- geometry ---------------------------------------------------------
    def tile_at(self, x: int, s: int) -> tuple:
        k = self.k
        return ((x // k) * k, (s // k) * k)

    # -- admission --------------------------------------------------------
    def _successors(self, req: PacketRequest):
        b = req.b[0]
        window = self.sketch.sink_window(req)
        hi_s = None
        if window is not None and window[1] != INF:
            hi_s = window[1] - b
        sink = ("sink",)
        sk = self.sketch
        interior = self.grid.d + 1

        def succ(node):
            side, corner = node
            if side == "in":
                yield ("out", corner), interior
                return
            if side == "out":
                if sk.contains_copy(corner, req.b, window):
                    yield sink, INF
                for nxt, _kind, _cap in sk.neighbors(corner):
                    if nxt[0] > b:
                        continue
                    if hi_s is not None and nxt[1] > hi_s:
                        continue
                    yield ("in", nxt), 1

        return succ

    def admit(self, req: PacketRequest) -> list | None:
        src = self.tile_at(req.a[0], req.t - req.a[0])
        succ = self._successors(req)
        path = ipp_process(self.ipp, req.id, succ, ("in", src), ("sink",))
        if path is None:
            return None
        return [node[1] for node in path.nodes if node[0] == "in"]

    # -- bookkeeping ------------------------------------------------------
    def _finish(self, pk: _Packet, outcome: Outcome) -> None:
        self.outcomes[pk.rid] = outcome
        self.paths[pk.rid] = pk.path
        self._release(pk)
        self.live.pop(pk.rid, None)

    def _release(self, pk: _Packet) -> None:
        if pk.line is None:
            return
        if pk.track == 1:
            self.special[pk.line].remove(pk.rid)
        elif pk.track == 3:
            self.last[pk.line].remove(pk.rid)
        pk.line = None

    def _fail(self, pk: _Packet, why: str) -> None:
        self.stats["internal_failures"] += 1
        self.stats["failure_notes"].append((pk.rid, pk.time, why))
        self._finish(pk, Outcome.preempted(pk.time))

    def _preempt(self, rid: int, t: int, where: str) -> None:
        victim = self.live.get(rid)
        if victim is None:
            return
        if victim.time != t:
            raise AssertionError(f"preempted packet {rid} is not at the conflict point")
        self.stats["preempted_special" if where == "special" else "preempted_last_tile"] += 1
        self._finish(victim, Outcome.preempted(t))

    def _offer(self, pk: _Packet, track: int, heading: str, end: int) -> bool:
        """Start a straight run on track 1 or 3; returns False if the packet lost."""
        self._release(pk)
        pk.track, pk.heading, pk.seg_end = track, heading, end
        if track == 3:
            line, table = pk.s, self.last
        else:
            line, table = (("row", pk.x) if heading == E else ("col", pk.s)), self.special
        res = table[line].offer(Interval(pk.coord, end, pk.rid))
        if not res.accepted:
            self.stats["preempted_special" if track == 1 else "preempted_last_tile"] += 1
            self._finish(pk, Outcome.preempted(pk.time))
            return False
        pk.line = line
        if res.preempted is not None:
            self._preempt(res.preempted, pk.time, "special" if track == 1 else "last")
        return True

    def _entry_coord(self, tile: tuple, heading: str) -> int:
        return tile[1] if heading == E else tile[0]

    def _start_last_tile(self, pk: _Packet) -> None:
        pk.phase = LAST_TILE
        tile = pk.tiles[-1]
        self.stats["reached_last"] += 1
        self.stats["reached_by_tile"][tile] += 1
        b = pk.req.b[0]
        if pk.x == b:
            self._deliver(pk)
            return
        self._offer(pk, 3, N, b)

    def _start_last_segment(self, pk: _Packet, bend: int) -> None:
        pk.phase = LAST_SEG
        heading = pk.dirs[bend]
        end = self._entry_coord(pk.tiles[-1], heading)
        self._offer(pk, 1, heading, end)

    def _deliver(self, pk: _Packet) -> None:
        t = pk.time
        if pk.tile_idx != len(pk.tiles) - 1:
            raise AssertionError(f"packet {pk.rid} delivered outside its last tile")
        if t > pk.req.deadline:
            self.stats["late"] += 1
        self.stats["delivered_by_tile"][pk.tiles[-1]] += 1
        self._finish(pk, Outcome.delivered(t))

    # -- packet creation --------------------------------------------------
    def _inject(self, req: PacketRequest, tiles: list) -> None:
        dirs = []
        for u, v in zip(tiles, tiles[1:]):
            dirs.append(N if v[0] > u[0] else E)
        bends = [i for i in range(1, len(tiles) - 1) if dirs[i - 1] != dirs[i]]
        if len(tiles) == 1:
            plan = "near"
        elif not bends:
            plan = "straight"
        elif len(bends) == 1:
            plan = "one-bend"
        else:
            plan = "multi-bend"
        x, s = req.a[0], req.t - req.a[0]
        pk = _Packet(req.id, req, tiles, dirs, plan,
                     bends[0] if bends else None, bends[-1] if bends else None, x, s)
        pk.path.append(((x,), req.t))
        self.live[pk.rid] = pk
        self.sketch_paths[pk.rid] = tiles
        self.stats["injected"] += 1
        if plan == "near":
            self._start_last_tile(pk)
            return
        heading = dirs[0]
        if plan == "straight":
            end = self._entry_coord(tiles[-1], heading)
        elif plan == "one-bend":
            end = self._entry_coord(tiles[pk.first_bend], heading)
        else:
            end = self._entry_coord(tiles[pk.first_bend], heading) + self.k - 1
        pk.phase = FIRST
        self._offer(pk, 1, heading, end)

    # -- per-step transitions --------------------------------------------
    def _transition(self, pk: _Packet) -> None:
        if pk.phase == FIRST:
            if pk.plan == "straight" and pk.coord == pk.seg_end:
                self._start_last_tile(pk)
            elif pk.plan == "one-bend" and pk.coord == pk.seg_end:
                self._start_last_segment(pk, pk.first_bend)
        elif pk.phase == INTERNAL:
            if pk.tile_idx == pk.last_bend:
                self._start_last_segment(pk, pk.last_bend)
        elif pk.phase == LAST_SEG:
            if pk.coord == pk.seg_end:
                self._start_last_tile(pk)
        elif pk.phase == LAST_TILE:
            if pk.x == pk.req.b[0]:
                self._deliver(pk)

    def _is_bender(self, pk: _Packet) -> bool:
        return (pk.phase == FIRST and pk.plan == "multi-bend"
                and pk.tile_idx == pk.first_bend)

    def _exit_side(self, pk: _Packet) -> str:
        return pk.dirs[pk.first_bend] if pk.phase == FIRST else pk.dirs[pk.tile_idx]

    def _node_moves(self, pks: list) -> dict:
        """Decide the heading and track of every packet sitting on one node."""
        moves = {}
        h2 = [p for p in pks if p.phase == INTERNAL and p.heading == E]
        v2 = [p for p in pks if p.phase == INTERNAL and p.heading == N]
        benders = [p for p in pks if self._is_bender(p)]
        for p in pks:
            if p.phase != INTERNAL and p not in benders:
                moves[p.rid] = (p.heading, p.track)
        if not (h2 or v2 or benders):
            return moves
        if len(h2) > 1 or len(v2) > 1:
            raise AssertionError("two packets share a track-2 edge")
        eb = [p for p in benders if p.heading == E]
        nb = [p for p in benders if p.heading == N]
        H = h2[0] if h2 else (eb[0] if eb else None)
        V = v2[0] if v2 else (nb[0] if nb else None)
        hin = (H.rid, self._exit_side(H)) if H else None
        vin = (V.rid, self._exit_side(V)) if V else None
        hout, vout = route_internal_step(hin, vin)
        if H is not None and V is not None and hout == V.rid:
            self.stats["knock_knees"] += 1
        free = {E: True, N: True}
        for P in (H, V):
            if P is None:
                continue
            out = E if hout == P.rid else N
            if P.phase == FIRST:
                if out == P.heading:
                    moves[P.rid] = (P.heading, 1)
                    continue
                moves[P.rid] = (out, 2)
            else:
                moves[P.rid] = (out, 2)
            free[out] = False
        for P in benders:
            if P.rid in moves:
                continue
            want = P.dirs[P.first_bend]
            if free[want]:
                moves[P.rid] = (want, 2)
                free[want] = False
            else:
                moves[P.rid] = (P.heading, 1)
        return moves

    def _move(self, pk: _Packet, heading: str, track: int) -> None:
        bending = pk.phase == FIRST and track == 2
        if pk.phase == FIRST and track == 1 and pk.plan == "multi-bend" and pk.coord >= pk.seg_end:
            self._fail(pk, "could not bend inside its first-bend tile")
            return
        key = ((pk.x, pk.s), heading, track)
        self.usage[key] += 1
        use = self.usage[key]
        self.stats["max_track_use"] = max(self.stats["max_track_use"], use)
        if use > 1:
            raise AssertionError(f"track {track} edge {key[:2]} used twice")
        if bending:
            self._release(pk)
            pk.phase = INTERNAL
        pk.track = track
        pk.heading = heading
        if heading == E:
            pk.s += 1
        else:
            pk.x += 1
        pk.path.append(((pk.x,), pk.time))
        if pk.x > self.n:
            self._fail(pk, "walked off the grid")
            return
        tile = self.tile_at(pk.x, pk.s)
        if tile != pk.tiles[pk.tile_idx]:
            nxt = pk.tile_idx + 1
            if nxt < len(pk.tiles) and tile == pk.tiles[nxt]:
                pk.tile_idx = nxt
            else:
                self._fail(pk, f"left tile path at {tile}")

    # -- main loop --------------------------------------------------------
    def run(self, trace: list[PacketRequest]) -> DetResult:
        arrivals = defaultdict(list)
        for r in trace:
            ok, _why = validate_request(r, self.grid)
            if not ok:
                self.outcomes[r.id] = Outcome.rejected()
                continue
            arrivals[r.t].append(r)
        if arrivals:
            t = min(arrivals)
            last_arrival = max(arrivals)
            while self.live or t <= last_arrival:
                # in-flight packets first, then new requests, both by id
                for rid in sorted(self.live):
                    pk = self.live.get(rid)
                    if pk is not None:
                        self._transition(pk)
                for req in sorted(arrivals.get(t, []), key=lambda r: r.id):
                    tiles = self.admit(req)
                    if tiles is None:
                        self.outcomes[req.id] = Outcome.rejected()
                        continue
                    self._inject(req, tiles)
                by_node = defaultdict(list)
                for pk in self.live.values():
                    by_node[(pk.x, pk.s)].append(pk)
                for node in sorted(by_node):
                    pks = sorted(by_node[node], key=lambda p: p.rid)
                    moves = self._node_moves(pks)
                    for pk in pks:
                        if pk.rid in self.live:
                            self._move(pk, *moves[pk.rid])
                t += 1
        for r in trace:
            self.outcomes.setdefault(r.id, Outcome.rejected())
        metrics = RunMetrics.from_outcomes(self.label, self.outcomes)
        stats = dict(self.stats)
        stats["reached_by_tile"] = dict(self.stats["reached_by_tile"])
        stats["delivered_by_tile"] = dict(self.stats["delivered_by_tile"])
        stats["k"] = self.k
        stats["p_max"] = self.params.p_max
        packs = {"special": dict(self.special), "last": dict(self.last)}
        return DetResult(self.outcomes, self.paths, self.sketch_paths, metrics, stats, self.ipp, packs)


def run_deterministic(trace: list[PacketRequest], grid: GridSpec, enforce_domain: bool = True) -> DetResult:
    return LineRouter(grid, deadlines=False, enforce_domain=enforce_domain).run(trace)


def route_with_deadlines(trace: list[PacketRequest], grid: GridSpec, enforce_domain: bool = True) -> DetResult:
    return LineRouter(grid, deadlines=True, enforce_domain=enforce_domain).run(trace)


def tile_sequence(path: list, k: int) -> list:
    """Consecutive distinct square tiles visited by a one-dimensional space-time path."""
    out = []
    for v, t in path:
        x = v[0]
        tile = ((x // k) * k, ((t - x) // k) * k)
        if not out or out[-1] != tile:
            out.append(tile)
    return out


def check_invariants(res: DetResult) -> dict:
    """Recompute the run-level guarantees from a finished deterministic run."""
    k = res.stats["k"]
    projection = True
    for rid, path in res.paths.items():
        seq = tile_sequence(path, k)
        sk = res.sketch_paths[rid]
        if res.outcomes[rid].kind == Outcome.DELIVERED:
            projection &= seq == sk
        else:
            projection &= seq == sk[:len(seq)]
    injected = res.stats["injected"]
    reached_last = res.stats["reached_last"]
    survivor_bound = reached_last * 2 * k >= injected
    per_tile_bound = all(
        res.stats["delivered_by_tile"].get(tile, 0) * 2 * k >= reached
        for tile, reached in res.stats["reached_by_tile"].items()
    )
    forest = True
    for table in res.packs.values():
        for pack in table.values():
            try:
                pack.check_forest()
            except AssertionError:
                forest = False
    late = sum(
        1 for rid, o in res.outcomes.items()
        if o.kind == Outcome.DELIVERED and rid in res.paths and o.time is not None
        and res.paths[rid][-1][1] != o.time
    )
    return {
        "projection": projection,
        "survivor_bound": survivor_bound,
        "per_tile_bound": per_tile_bound,
        "forest": forest,
        "internal_failures": res.stats["internal_failures"],
        "late": res.stats["late"] + late,
        "track_discipline": res.stats["max_track_use"] <= 1,
    }


# ---------------------------------------------------------------------------
# variants


def _st_successors_factory(grid: GridSpec, B_cap: int, c_cap: int, req: PacketRequest, last_t: int):
    sink = ("sink",)
    b = req.b

    def succ(node):
        v, t = node
        if v == b:
            yield sink, INF
        if t >= last_t:
            return
        for w in grid.out_neighbors(v):
            if all(x <= y for x, y in zip(w, b)) and c_cap > 0:
                yield (w, t + 1), c_cap
        if B_cap > 0:
            yield (v, t + 1), B_cap

    return succ


def large_capacity_parameters(grid: GridSpec) -> tuple[int, int]:
    """Hop bound and tile side used when buffers and links are large."""
    if grid.d == 1:
        p = pmax_st_line(grid.n, grid.B, grid.c)
    else:
        p = pmax_grid(grid.n, grid.d, grid.B, grid.c, grid.diameter)
    return p, tile_side_k(p)


def run_large_capacity(trace: list[PacketRequest], grid: GridSpec, enforce_domain: bool = True) -> DetResult:
    """Path packing directly on the space-time graph with capacities divided by k.

    Accepted paths are final: nothing is ever preempted.
    """
    p_max, k = large_capacity_parameters(grid)
    if enforce_domain and (grid.B < k or grid.c < k):
        raise ConfigError(f"large-capacity mode needs B, c >= k = {k}")
    B_s, c_s = grid.B // k, grid.c // k
    if c_s < 1:
        raise ConfigError("scaled link capacity is zero")
    state = PrimalDualState(p_max)
    outcomes, paths, sketch_paths = {}, {}, {}
    for r in sorted(trace, key=lambda r: (r.t, r.id)):
        ok, _ = validate_request(r, grid)
        if not ok:
            outcomes[r.id] = Outcome.rejected()
            continue
        last_t = r.t + p_max if r.deadline == INF else min(int(r.deadline), r.t + p_max)
        succ = _st_successors_factory(grid, B_s, c_s, r, last_t)
        path = ipp_process(state, r.id, succ, (r.a, r.t), ("sink",))
        if path is None:
            outcomes[r.id] = Outcome.rejected()
            continue
        st = [nd for nd in path.nodes if nd != ("sink",)]
        paths[r.id] = st
        sketch_paths[r.id] = st
        outcomes[r.id] = Outcome.delivered(st[-1][1])
    metrics = RunMetrics.from_outcomes("large-capacity", outcomes)
    stats = {"k": k, "p_max": p_max, "preemptions": 0, "B_scaled": B_s, "c_scaled": c_s}
    return DetResult(outcomes, paths, sketch_paths, metrics, stats, state)


def run_bufferless(trace: list[PacketRequest], grid: GridSpec) -> DetResult:
    """Routing without buffers.

    On a line this is nearest-to-go, which packs each untilted column
    optimally. On higher-dimensional grids every untilted time slice is an
    independent grid; requests are admitted by path packing on their slice
    and kept only while the true link capacity holds.
    """
    if grid.B != 0:
        raise ConfigError("bufferless mode needs B = 0")
    if grid.d == 1:
        from .baselines import nearest_to_go

        res = nearest_to_go(trace, grid)
        return DetResult(res.outcomes, res.paths, {}, RunMetrics.from_outcomes("bufferless", res.outcomes), {})
    outcomes, paths = {}, {}
    states: dict = {}
    load = defaultdict(int)
    p_max = grid.diameter
    for r in sorted(trace, key=lambda r: (r.t, r.id)):
        ok, _ = validate_request(r, grid)
        if not ok:
            outcomes[r.id] = Outcome.rejected()
            continue
        slice_id = r.t - sum(r.a)
        state = states.setdefault(slice_id, PrimalDualState(max(1, p_max)))
        if r.a == r.b:
            outcomes[r.id] = Outcome.delivered(r.t)
            paths[r.id] = [(r.a, r.t)]
            continue
        b = r.b

        def succ(v, b=b):
            for w in grid.out_neighbors(v):
                if all(x <= y for x, y in zip(w, b)):
                    yield w, grid.c

        path = lightest_path_search(succ, r.a, b, state.weight, state.p_max)
        if path is not None and any(load[(slice_id, e)] >= grid.c for e in path.edges):
            path = None
        if not state.decide(r.id, path):
            outcomes[r.id] = Outcome.rejected()
            continue
        for e in path.edges:
            load[(slice_id, e)] += 1
        st = [(v, r.t + i) for i, v in enumerate(path.nodes)]
        paths[r.id] = st
        outcomes[r.id] = Outcome.delivered(st[-1][1])
    return DetResult(outcomes, paths, {}, RunMetrics.from_outcomes("bufferless", outcomes), {"slices": len(states)})
