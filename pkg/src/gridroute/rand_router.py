"""Randomized routing on a uni-directional line.

A run draws random tile shifts and a fair coin. Heads: only requests that
start in the south-west quadrant of their tile and cannot finish inside it
are served, through path packing on the tile graph, a biased thinning coin,
a quarter-load cap and straight exits out of the starting quadrant. Tails:
only requests whose destination lies inside their starting tile are served,
by greedy vertical routing. Every packet that is injected is delivered.

Coordinates are untilted: ``(x, s)`` with ``s = t - x``. Moving "east"
increments ``s`` (a buffer step, capacity ``B``); moving "north" increments
``x`` (a link, capacity ``c``).
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .ipp import PrimalDualState, ipp_process
from .model import INF, GridSpec, Outcome, PacketRequest, RunMetrics, filter_simultaneous, validate_request
from .tiling import NE, NW, SE, SW, SketchGraph, TilingParams, quadrant, tiling_params_rand

N, E = "N", "E"
GAMMA = 200


class RoutingFailure(AssertionError):
    """A quadrant discipline that should never fail did."""


def rand_parameters(n: int, gamma: int = GAMMA) -> tuple[int, float, int]:
    """Return ``(k, lam, p_max)`` for a line of ``n`` vertices."""
    p_max = 4 * n
    k = (3 * p_max).bit_length()  # ceil(log2(1 + 3 p_max))
    return k, 1.0 / (gamma * k), p_max


@dataclass(frozen=True)
class RandConfig:
    tau: int
    Q: int
    phi_tau: int
    phi_Q: int
    lam: float
    k: int
    p_max: int
    cS: int
    coin_b: int
    seed: int | None
    gamma: int = GAMMA

    @property
    def tiling(self) -> TilingParams:
        return TilingParams.rect(self.tau, self.Q, self.phi_tau, self.phi_Q)


def draw_config(grid: GridSpec, rng: random.Random, seed=None, gamma: int = GAMMA) -> RandConfig:
    """Draw shifts, then the class coin, from ``rng`` (in that order)."""
    base = tiling_params_rand(grid.n, grid.B, grid.c)
    tau, Q = base.tau, base.Q
    phi_tau = rng.randrange(tau)
    phi_Q = rng.randrange(Q)
    coin_b = rng.randrange(2)
    k, lam, p_max = rand_parameters(grid.n, gamma)
    cS = min(Q * grid.B, tau * grid.c)
    if 2 * cS < max(Q * grid.B, tau * grid.c):
        raise ValueError("tile capacities differ by more than a factor of two")
    return RandConfig(tau, Q, phi_tau, phi_Q, lam, k, p_max, cS, coin_b, seed, gamma)


# ---------------------------------------------------------------------------
# 0-1 matrix helpers


def first_one_per_row(X) -> np.ndarray:
    """Keep only the first one of every row."""
    X = np.asarray(X, dtype=bool)
    out = np.zeros_like(X)
    has = X.any(axis=1)
    first = X.argmax(axis=1)
    rows = np.nonzero(has)[0]
    out[rows, first[rows]] = True
    return out


def weight(X) -> int:
    return int(np.count_nonzero(X))


def check_dom(L, Bm) -> bool:
    """For ``L <= Bm`` check ``w(I(L)) >= w(I(Bm)) - w(Bm & ~L)``."""
    L = np.asarray(L, dtype=bool)
    Bm = np.asarray(Bm, dtype=bool)
    if np.any(L & ~Bm):
        raise ValueError("L must be dominated by B entrywise")
    return weight(first_one_per_row(L)) >= weight(first_one_per_row(Bm)) - weight(Bm & ~L)


def sparsified_first_ones(A, lam: float, rng: np.random.Generator, draws: int) -> np.ndarray:
    """``w(I(A & Z))`` for ``draws`` independent Bernoulli(lam) masks ``Z``."""
    A = np.asarray(A, dtype=bool)
    Z = rng.random((draws,) + A.shape) < lam
    kept = Z & A
    return kept.any(axis=2).sum(axis=1)


def reverse_markov(mean: float, a: float, d: float) -> float:
    """Lower bound on ``Pr[X >= d]`` for ``X`` in ``[0, a]`` with the given mean."""
    if not d < a:
        raise ValueError("need d < a")
    if not (0 <= mean <= a) or d < 0:
        raise ValueError("need 0 <= mean <= a and d >= 0")
    return (mean - d) / (a - d)


# ---------------------------------------------------------------------------
# quadrant disciplines


def quadrant_step(east_in: list, north_in: list, B: int, c: int) -> dict:
    """Route the packets meeting at one node.

    ``east_in`` and ``north_in`` list ``(rid, wanted_direction)`` for packets
    arriving while moving east and north. Packets already heading their way
    keep going. Opposite benders swap in pairs; leftover benders turn only
    into spare capacity. Returns ``{rid: direction}``.
    """
    if len(east_in) > B or len(north_in) > c:
        raise RoutingFailure("node receives more packets than its in-edges carry")
    out = {}
    east_turn = sorted(r for r, want in east_in if want == N)
    north_turn = sorted(r for r, want in north_in if want == E)
    for r, want in east_in:
        if want == E:
            out[r] = E
    for r, want in north_in:
        if want == N:
            out[r] = N
    pairs = min(len(east_turn), len(north_turn))
    for r in east_turn[:pairs]:
        out[r] = N
    for r in north_turn[:pairs]:
        out[r] = E
    spare_v = c - len(north_in)
    for r in east_turn[pairs:]:
        if spare_v > 0:
            out[r] = N
            spare_v -= 1
        else:
            out[r] = E
    spare_h = B - len(east_in)
    for r in north_turn[pairs:]:
        if spare_h > 0:
            out[r] = E
            spare_h -= 1
        else:
            out[r] = N
    return out


def route_quadrant(height: int, width: int, west: list, south: list, B: int, c: int) -> dict:
    """Run the node rule over one quadrant in isolation.

    ``west`` holds ``(rid, row, wanted_side)`` entering row ``row`` at the
    west side, ``south`` holds ``(rid, col, wanted_side)`` entering column
    ``col`` at the south side. Returns ``{rid: (side, position)}``.
    """
    east_at = defaultdict(list)
    north_at = defaultdict(list)
    want = {}
    for rid, row, side in west:
        east_at[(row, 0)].append(rid)
        want[rid] = side
    for rid, col, side in south:
        north_at[(0, col)].append(rid)
        want[rid] = side
    result = {}
    for diag in range(height + width - 1):
        for x in range(max(0, diag - width + 1), min(height, diag + 1)):
            s = diag - x
            e_in = [(r, want[r]) for r in east_at.pop((x, s), [])]
            n_in = [(r, want[r]) for r in north_at.pop((x, s), [])]
            if not e_in and not n_in:
                continue
            for r, d in quadrant_step(e_in, n_in, B, c).items():
                if d == E:
                    if s + 1 >= width:
                        result[r] = (E, x)
                    else:
                        east_at[(x, s + 1)].append(r)
                else:
                    if x + 1 >= height:
                        result[r] = (N, s)
                    else:
                        north_at[(x + 1, s)].append(r)
    return result


def t_route(height: int, width: int, west: list, south: list, exit_side: str, B: int, c: int) -> dict:
    """Two entry sides, one exit side; raises ``RoutingFailure`` if anyone leaves elsewhere."""
    west = [(r, row, exit_side) for r, row in west]
    south = [(r, col, exit_side) for r, col in south]
    res = route_quadrant(height, width, west, south, B, c)
    for r, (side, _pos) in res.items():
        if side != exit_side:
            raise RoutingFailure(f"packet {r} left through the blocked side")
    return res


def x_route(height: int, width: int, west: list, south: list, B: int, c: int) -> dict:
    """Entries west and south, exits east and north, each packet to its own side."""
    res = route_quadrant(height, width, west, south, B, c)
    wanted = {r: side for r, _p, side in west + south}
    for r, (side, _pos) in res.items():
        if side != wanted[r]:
            raise RoutingFailure(f"packet {r} left through {side} instead of {wanted[r]}")
    return res


# ---------------------------------------------------------------------------
# the router


@dataclass
class _FarPacket:
    rid: int
    req: PacketRequest
    tiles: list
    dirs: list
    x: int
    s: int
    heading: str
    mode: str = "I"
    tile_idx: int = 0
    path: list = field(default_factory=list)

    @property
    def time(self) -> int:
        return self.x + self.s


@dataclass
class RandResult:
    outcomes: dict
    paths: dict
    sketch_paths: dict
    metrics: RunMetrics
    stats: dict
    config: RandConfig


class RandRouter:
    def __init__(self, grid: GridSpec, seed: int | None = None, gamma: int = GAMMA,
                 enforce_domain: bool = True, coin_b: int | None = None):
        if grid.d != 1:
            raise ValueError("the randomized router is one-dimensional")
        if enforce_domain:
            for name, val in (("B", grid.B), ("c", grid.c)):
                if val < 1 or 2 ** val > grid.n:
                    raise ValueError(f"{name}={val} outside [1, log2 n] for n={grid.n}")
        self.grid = grid
        self.rng = random.Random(seed)
        cfg = draw_config(grid, self.rng, seed, gamma)
        if coin_b is not None:
            cfg = RandConfig(**{**cfg.__dict__, "coin_b": coin_b})
        self.cfg = cfg
        self.params = cfg.tiling
        self.sketch = SketchGraph(grid, self.params, "per-vertex")
        self.ipp = PrimalDualState(cfg.p_max)
        self.flow = defaultdict(int)  # sketch edge -> paths that passed the load cap
        self.claims = set()
        self.side_used = defaultdict(int)
        self.live: dict[int, _FarPacket] = {}
        self.outcomes: dict = {}
        self.paths: dict = {}
        self.sketch_paths: dict = {}
        self.near_h = defaultdict(int)
        self.near_v = defaultdict(int)
        self.stats = defaultdict(int)
        self.stats["max_post_cap_load"] = 0.0

    # -- geometry ----------------------------------------------------------
    def tile_at(self, x: int, s: int) -> tuple:
        return self.params_tile((x, s))

    def params_tile(self, point):
        p = self.params
        return (((point[0] - p.space_shift) // p.Q) * p.Q + p.space_shift,
                ((point[1] - p.time_shift) // p.tau) * p.tau + p.time_shift)

    def classify(self, req: PacketRequest) -> str:
        x, s = req.a[0], req.t - req.a[0]
        corner = self.tile_at(x, s)
        near = corner[0] <= req.b[0] < corner[0] + self.params.Q
        if near:
            return "near"
        return "far+" if quadrant((x, s), self.params) == SW else "far"

    # -- Far+ ----------------------------------------------------------------
    def _successors(self, req: PacketRequest):
        b = req.b[0]
        sink = ("sink",)
        sk, cS = self.sketch, self.cfg.cS

        def succ(node):
            if node == sink:
                return
            if sk.contains_copy(node, req.b):
                yield sink, INF
            for nxt, _kind, _cap in sk.neighbors(node):
                if nxt[0] > b:
                    continue
                yield nxt, cS

        return succ

    def far_plus_process(self, req: PacketRequest, plane: int) -> str:
        """Admission for one Far+ request; returns the stage that decided it."""
        x, s = req.a[0], req.t - req.a[0]
        src = self.tile_at(x, s)
        path = ipp_process(self.ipp, req.id, self._successors(req), src, ("sink",))
        if path is None:
            return "ipp"
        self.stats["ipp_accepted"] += 1
        tiles = [nd for nd in path.nodes if nd != ("sink",)]
        self.stats["coin_tosses"] += 1
        if not self.rng.random() < self.cfg.lam:
            return "coin"
        self.stats["coin_heads"] += 1
        edges = list(zip(tiles, tiles[1:]))
        cS = self.cfg.cS
        if any(4 * (self.flow[e] + 1) >= cS for e in edges):
            return "cap"
        for e in edges:
            self.flow[e] += 1
            self.stats["max_post_cap_load"] = max(self.stats["max_post_cap_load"], self.flow[e] / cS)
        heading = self.i_route(req, plane)
        if heading is None:
            return "i-route"
        self._inject(req, tiles, heading)
        return "injected"

    def i_route(self, req: PacketRequest, plane: int) -> str | None:
        """Claim a row (planes 1..B) or column (later planes) of the source quadrant."""
        x, s = req.a[0], req.t - req.a[0]
        corner = self.tile_at(x, s)
        if plane <= self.grid.B:
            key, side = (corner, plane, "row", x), E
        else:
            key, side = (corner, plane, "col", s), N
        if key in self.claims:
            return None
        if 4 * (self.side_used[(corner, side)] + 1) > self.cfg.cS:
            return None
        self.claims.add(key)
        self.side_used[(corner, side)] += 1
        return side

    def _inject(self, req: PacketRequest, tiles: list, heading: str) -> None:
        dirs = [N if v[0] > u[0] else E for u, v in zip(tiles, tiles[1:])]
        x, s = req.a[0], req.t - req.a[0]
        pk = _FarPacket(req.id, req, tiles, dirs, x, s, heading)
        pk.path.append(((x,), req.t))
        self.live[pk.rid] = pk
        self.sketch_paths[pk.rid] = tiles
        self.stats["injected"] += 1

    def _fail(self, pk: _FarPacket, why: str) -> None:
        self.stats["post_injection_failures"] += 1
        self.stats.setdefault("failure_notes", []).append((pk.rid, pk.time, why))
        self.outcomes[pk.rid] = Outcome.preempted(pk.time)
        self.paths[pk.rid] = pk.path
        del self.live[pk.rid]

    def _want(self, pk: _FarPacket) -> str:
        if pk.mode == "last":
            return N
        q = quadrant((pk.x, pk.s), self.params)
        if q == SE:
            return N
        if q == NW:
            return E
        if q == NE:
            return pk.dirs[pk.tile_idx]
        raise RoutingFailure(f"packet {pk.rid} routed inside a south-west quadrant")

    def _after_move(self, pk: _FarPacket, moved: str) -> None:
        tile = self.tile_at(pk.x, pk.s)
        if tile != pk.tiles[pk.tile_idx]:
            nxt = pk.tile_idx + 1
            if nxt >= len(pk.tiles) or tile != pk.tiles[nxt] or moved != pk.dirs[pk.tile_idx]:
                self._fail(pk, f"left its tile path towards {tile}")
                return
            entered = quadrant((pk.x, pk.s), self.params)
            if entered != (NW if moved == E else SE):
                self._fail(pk, f"entered tile {tile} through its {entered} quadrant")
                return
            pk.tile_idx = nxt
            if nxt == len(pk.tiles) - 1:
                if moved != N:
                    raise RoutingFailure(f"packet {pk.rid} entered its last tile from the west")
                pk.mode = "last"
        if pk.mode == "I" and quadrant((pk.x, pk.s), self.params) != SW:
            pk.mode = "route"

    def _step(self) -> None:
        by_node = defaultdict(list)
        for pk in self.live.values():
            by_node[(pk.x, pk.s)].append(pk)
        B, c = self.grid.B, self.grid.c
        for node in sorted(by_node):
            pks = by_node[node]
            moves = {}
            if any(p.mode == "I" for p in pks) and any(p.mode != "I" for p in pks):
                raise RoutingFailure(f"routed traffic entered a starting quadrant at {node}")
            straight = [p for p in pks if p.mode == "I"]
            for p in straight:
                moves[p.rid] = p.heading
            rest = [p for p in pks if p.mode != "I"]
            if rest:
                e_in = [(p.rid, self._want(p)) for p in rest if p.heading == E]
                n_in = [(p.rid, self._want(p)) for p in rest if p.heading == N]
                moves.update(quadrant_step(e_in, n_in, B, c))
            east = sum(1 for d in moves.values() if d == E)
            north = len(moves) - east
            if east > B or north > c:
                raise RoutingFailure(f"capacity exceeded leaving {node}")
            for p in sorted(pks, key=lambda q: q.rid):
                d = moves[p.rid]
                p.heading = d
                if d == E:
                    p.s += 1
                else:
                    p.x += 1
                p.path.append(((p.x,), p.time))
                self._after_move(p, d)

    def _deliver_arrivals(self) -> None:
        for rid in sorted(self.live):
            pk = self.live[rid]
            if pk.mode == "last" and pk.x == pk.req.b[0]:
                self.outcomes[rid] = Outcome.delivered(pk.time)
                self.paths[rid] = pk.path
                del self.live[rid]
            elif pk.x > pk.req.b[0]:
                self._fail(pk, "passed its destination")

    # -- Near -----------------------------------------------------------------
    def near_process(self, req: PacketRequest) -> bool:
        """Greedy vertical routing confined to the source tile."""
        a, b = req.a[0], req.b[0]
        s = req.t - a
        corner = self.tile_at(a, s)
        s_end = corner[1] + self.params.tau
        while True:
            if all(self.near_v[(x, s)] < self.grid.c for x in range(a, b)):
                break
            if self.near_h[(a, s)] >= self.grid.B:
                return False
            if s + 1 >= s_end:
                return False
            s += 1
        s0 = req.t - a
        for ss in range(s0, s):
            self.near_h[(a, ss)] += 1
        for x in range(a, b):
            self.near_v[(x, s)] += 1
        path = [((a,), a + ss) for ss in range(s0, s + 1)]
        path += [((x,), x + s) for x in range(a + 1, b + 1)]
        self.paths[req.id] = path
        self.outcomes[req.id] = Outcome.delivered(b + s)
        return True

    # -- driver -----------------------------------------------------------------
    def run(self, trace: list[PacketRequest]) -> RandResult:
        valid = []
        for r in trace:
            ok, _ = validate_request(r, self.grid)
            if ok:
                valid.append(r)
            else:
                self.outcomes[r.id] = Outcome.rejected()
        by_point = defaultdict(list)
        for r in valid:
            by_point[(r.a, r.t)].append(r)
        kept = []
        for group in by_point.values():
            k, dropped = filter_simultaneous(group, self.grid)
            kept.extend(k)
            for r in dropped:
                self.outcomes[r.id] = Outcome.rejected()
                self.stats["filtered"] += 1
        kept.sort(key=lambda r: (r.t, r.id))
        classes = {r.id: self.classify(r) for r in kept}
        for r in kept:
            self.stats["requests"] += 1
            self.stats["class_" + classes[r.id]] += 1
            if quadrant((r.a[0], r.t - r.a[0]), self.params) == SW:
                self.stats["in_sw"] += 1
        chosen = "far+" if self.cfg.coin_b == 1 else "near"
        arrivals = defaultdict(list)
        for r in kept:
            if classes[r.id] != chosen:
                self.outcomes[r.id] = Outcome.rejected()
            elif chosen == "near":
                if not self.near_process(r):
                    self.outcomes[r.id] = Outcome.rejected()
            else:
                arrivals[r.t].append(r)
        if arrivals:
            t = min(arrivals)
            last = max(arrivals)
            while self.live or t <= last:
                self._deliver_arrivals()
                plane_rank = defaultdict(int)
                for r in sorted(arrivals.get(t, []), key=lambda r: r.id):
                    plane_rank[r.a] += 1
                    verdict = self.far_plus_process(r, plane_rank[r.a])
                    self.stats["stage_" + verdict] += 1
                    if verdict != "injected":
                        self.outcomes[r.id] = Outcome.rejected()
                self._step()
                t += 1
        for r in trace:
            self.outcomes.setdefault(r.id, Outcome.rejected())
        stats = dict(self.stats)
        stats["chosen"] = chosen
        metrics = RunMetrics.from_outcomes("rand", self.outcomes, seed=self.cfg.seed)
        return RandResult(self.outcomes, self.paths, self.sketch_paths, metrics, stats, self.cfg)


def run_randomized(trace: list[PacketRequest], grid: GridSpec, seed: int | None = None,
                   gamma: int = GAMMA, enforce_domain: bool = True) -> RandResult:
    return RandRouter(grid, seed, gamma, enforce_domain).run(trace)
