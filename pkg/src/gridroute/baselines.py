"""Local forwarding policies and an exact optimum for tiny instances."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .model import INF, GridSpec, Outcome, PacketRequest, RunMetrics, l1, validate_request


@dataclass
class PolicyResult:
    outcomes: dict
    paths: dict
    metrics: RunMetrics


def _next_hop(v: tuple, b: tuple) -> tuple | None:
    """Dimension-order next hop towards ``b`` (first axis that still differs)."""
    for i, (x, y) in enumerate(zip(v, b)):
        if x < y:
            return v[:i] + (x + 1,) + v[i + 1:]
    return None


def _local_policy(trace: list[PacketRequest], grid: GridSpec, priority, algo: str) -> PolicyResult:
    outcomes, paths = {}, {}
    arrivals = defaultdict(list)
    for r in trace:
        ok, _ = validate_request(r, grid)
        if ok:
            arrivals[r.t].append(r)
        else:
            outcomes[r.id] = Outcome.rejected()
    live = {}  # rid -> (request, node)
    if arrivals:
        t = min(arrivals)
        last = max(arrivals)
        while live or t <= last:
            for r in arrivals.get(t, []):
                live[r.id] = (r, r.a)
                paths[r.id] = [(r.a, t)]
            at_node = defaultdict(list)
            for rid, (r, v) in list(live.items()):
                if v == r.b:
                    outcomes[rid] = Outcome.delivered(t)
                    del live[rid]
                elif t + l1(v, r.b) > r.deadline:
                    outcomes[rid] = Outcome.preempted(t)
                    del live[rid]
                else:
                    at_node[v].append(r)
            for v, reqs in at_node.items():
                reqs.sort(key=lambda r: priority(r, v))
                link_used = defaultdict(int)
                losers = []
                for r in reqs:
                    w = _next_hop(v, r.b)
                    if link_used[w] < grid.c:
                        link_used[w] += 1
                        live[r.id] = (r, w)
                        paths[r.id].append((w, t + 1))
                    else:
                        losers.append(r)
                for i, r in enumerate(losers):
                    if i < grid.B and t + 1 + l1(v, r.b) <= r.deadline:
                        paths[r.id].append((v, t + 1))
                    else:
                        outcomes[r.id] = Outcome.preempted(t)
                        del live[r.id]
            t += 1
    for r in trace:
        outcomes.setdefault(r.id, Outcome.rejected())
    return PolicyResult(outcomes, paths, RunMetrics.from_outcomes(algo, outcomes))


def nearest_to_go(trace: list[PacketRequest], grid: GridSpec) -> PolicyResult:
    """Forward the packets closest to their destinations; buffer the next ones; drop the rest."""
    return _local_policy(trace, grid, lambda r, v: (l1(v, r.b), r.id), "ntg")


def greedy_fifo(trace: list[PacketRequest], grid: GridSpec) -> PolicyResult:
    """Forward in injection order; the youngest packets are the ones left behind."""
    return _local_policy(trace, grid, lambda r, v: (r.t, r.id), "greedy")


# ---------------------------------------------------------------------------
# exact optimum


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_n: int = 8
    max_horizon: int = 12
    max_requests: int = 10


@dataclass
class OracleResult:
    opt: int
    witness: dict  # rid -> space-time path of a delivered packet
    outcomes: dict
    stats: dict = field(default_factory=dict)


FWD, STAY, DROP = 0, 1, 2


def brute_force_opt(trace: list[PacketRequest], grid: GridSpec, limits: OracleLimits = OracleLimits(),
                    horizon: int | None = None) -> OracleResult:
    """Maximum number of deliverable packets, found by memoized search over time steps.

    Deliveries must happen by ``horizon``. Without buffers the default (last
    injection plus the grid diameter) loses nothing; with buffers the default
    is the whole window the limits allow. Only decision vectors
    that waste no free capacity are explored: a packet is dropped only when
    neither a useful link nor the buffer has room left.
    """
    reqs = [r for r in trace if validate_request(r, grid)[0]]
    if grid.n > limits.max_n:
        raise OracleLimitError(f"n={grid.n} exceeds oracle limit {limits.max_n}")
    if len(reqs) > limits.max_requests:
        raise OracleLimitError(f"{len(reqs)} requests exceed oracle limit {limits.max_requests}")
    if not reqs:
        return OracleResult(0, {}, {r.id: Outcome.rejected() for r in trace}, {"states": 0})
    t0 = min(r.t for r in reqs)
    if horizon is None:
        horizon = default_horizon(reqs, grid, limits)
    if horizon - t0 > limits.max_horizon:
        raise OracleLimitError(f"horizon span {horizon - t0} exceeds oracle limit {limits.max_horizon}")
    limit_of = {r.id: min(horizon, r.deadline) for r in reqs}
    inject = defaultdict(list)
    for r in reqs:
        inject[r.t].append(r)
    later = sorted(inject)
    memo: dict = {}
    stats = {"states": 0}

    def canon(entries):
        # entries: list of (node, dest, limit)
        return tuple(sorted(entries))

    def admit(t, entries):
        """Add injections at ``t``; returns (immediate deliveries, entries)."""
        got = 0
        out = list(entries)
        for r in inject.get(t, []):
            if r.a == r.b:
                got += 1
            elif t + l1(r.a, r.b) <= limit_of[r.id]:
                out.append((r.a, r.b, limit_of[r.id]))
        return got, out

    def options(t, entry):
        v, b, lim = entry
        opts = []
        for w in grid.out_neighbors(v):
            if all(x <= y for x, y in zip(w, b)) and t + 1 + l1(w, b) <= lim:
                opts.append((FWD, w))
        if grid.B > 0 and t + 1 + l1(v, b) <= lim:
            opts.append((STAY, v))
        opts.append((DROP, None))
        return opts

    def best(t, state):
        """Most deliveries achievable from ``state`` (packets present at ``t``)."""
        if not state:
            nxt = [s for s in later if s > t]
            if not nxt:
                return 0, None
            t1 = nxt[0]
            got, entries = admit(t1, [])
            val, _ = best(t1, canon(entries))
            return got + val, ("jump", t1)
        key = (t, state)
        if key in memo:
            return memo[key]
        stats["states"] += 1
        opts = [options(t, e) for e in state]
        best_val, best_choice = -1, None
        link = defaultdict(int)
        store = defaultdict(int)
        choice = [None] * len(state)
        idx = [0] * len(state)

        def rec(i):
            nonlocal best_val, best_choice
            if i == len(state):
                # reject wasteful vectors: a dropped packet with an open option
                for j, (kind, _w) in enumerate(choice):
                    if kind != DROP:
                        continue
                    v = state[j][0]
                    for okind, w in opts[j]:
                        if okind == FWD and link[(v, w)] < grid.c:
                            return
                        if okind == STAY and store[v] < grid.B:
                            return
                got = 0
                moved = []
                for j, (kind, w) in enumerate(choice):
                    if kind == DROP:
                        continue
                    _v, b, lim = state[j]
                    if w == b:
                        got += 1
                    else:
                        moved.append((w, b, lim))
                g2, entries = admit(t + 1, moved)
                val, _ = best(t + 1, canon(entries))
                val += got + g2
                if val > best_val:
                    best_val, best_choice = val, tuple(choice)
                return
            start = idx[i - 1] if i > 0 and state[i] == state[i - 1] else 0
            v = state[i][0]
            for oi in range(start, len(opts[i])):
                kind, w = opts[i][oi]
                if kind == FWD:
                    if link[(v, w)] >= grid.c:
                        continue
                    link[(v, w)] += 1
                elif kind == STAY:
                    if store[v] >= grid.B:
                        continue
                    store[v] += 1
                choice[i] = (kind, w)
                idx[i] = oi
                rec(i + 1)
                if kind == FWD:
                    link[(v, w)] -= 1
                elif kind == STAY:
                    store[v] -= 1

        rec(0)
        memo[key] = (best_val, best_choice)
        return memo[key]

    got0, entries0 = admit(t0, [])
    opt_rest, _ = best(t0, canon(entries0))
    opt = got0 + opt_rest

    # rebuild one witness by replaying the memoized choices on concrete packets
    witness, outcomes = {}, {}
    live = []  # (node, dest, lim, rid)

    def inject_concrete(t):
        for r in inject.get(t, []):
            if r.a == r.b:
                witness[r.id] = [(r.a, t)]
                outcomes[r.id] = Outcome.delivered(t)
            elif t + l1(r.a, r.b) <= limit_of[r.id]:
                live.append((r.a, r.b, limit_of[r.id], r.id))
                witness[r.id] = [(r.a, t)]

    t = t0
    inject_concrete(t)
    while True:
        live.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
        state = canon([e[:3] for e in live])
        _val, choice = best(t, state)
        if choice is None:
            break
        if choice[0] == "jump":
            t = choice[1]
            inject_concrete(t)
            continue
        nxt = []
        for (v, b, lim, rid), (kind, w) in zip(live, choice):
            if kind == DROP:
                outcomes[rid] = Outcome.preempted(t)
                continue
            witness[rid].append((w, t + 1))
            if w == b:
                outcomes[rid] = Outcome.delivered(t + 1)
            else:
                nxt.append((w, b, lim, rid))
        live = nxt
        t += 1
        inject_concrete(t)
    for rid in list(witness):
        if outcomes.get(rid, Outcome.rejected()).kind != Outcome.DELIVERED:
            witness.pop(rid)
    for r in trace:
        outcomes.setdefault(r.id, Outcome.rejected())
    delivered = sum(1 for o in outcomes.values() if o.kind == Outcome.DELIVERED)
    if delivered != opt:
        raise AssertionError(f"witness delivers {delivered}, search claims {opt}")
    stats["horizon"] = horizon
    return OracleResult(opt, witness, outcomes, stats)


def default_horizon(reqs: list[PacketRequest], grid: GridSpec, limits: OracleLimits = OracleLimits()) -> int:
    t0 = min(r.t for r in reqs)
    tight = max(r.t for r in reqs) + grid.diameter
    return tight if grid.B == 0 else max(tight, t0 + limits.max_horizon)


def delivered_by(outcomes: dict, horizon: int) -> int:
    """Deliveries that happened no later than ``horizon``."""
    return sum(1 for o in outcomes.values() if o.kind == Outcome.DELIVERED and o.time <= horizon)


def milp_opt(trace: list[PacketRequest], grid: GridSpec, horizon: int | None = None) -> int:
    """Same optimum as ``brute_force_opt`` via an integer program on the space-time graph."""
    import numpy as np
    from scipy.optimize import LinearConstraint, milp
    from scipy.sparse import lil_matrix

    reqs = [r for r in trace if validate_request(r, grid)[0]]
    if not reqs:
        return 0
    if horizon is None:
        horizon = default_horizon(reqs, grid)
    var = {}

    def new(key):
        var[key] = len(var)
        return var[key]

    edges = defaultdict(list)  # capacity edge -> variable ids
    node_in = defaultdict(list)
    node_out = defaultdict(list)
    y = {}
    for r in reqs:
        lim = min(horizon, r.deadline)
        y[r.id] = new(("y", r.id))
        if r.a == r.b:
            continue
        t_lo = r.t
        for t in range(t_lo, int(lim)):
            for v in grid.vertices():
                if not all(p <= q <= s for p, q, s in zip(r.a, v, r.b)) or v == r.b:
                    continue
                for w in list(grid.out_neighbors(v)) + [v]:
                    if not all(q <= s for q, s in zip(w, r.b)):
                        continue
                    if w == v and grid.B == 0:
                        continue
                    i = new((r.id, v, t, w))
                    edges[(v, t, w)].append(i)
                    node_out[(r.id, v, t)].append(i)
                    node_in[(r.id, w, t + 1)].append(i)
    nv = len(var)
    rows = []
    for r in reqs:
        lim = min(horizon, r.deadline)
        if r.a == r.b:
            continue
        for t in range(r.t, int(lim) + 1):
            for v in grid.vertices():
                key = (r.id, v, t)
                ins, outs = node_in.get(key, []), node_out.get(key, [])
                if v == r.b:
                    continue
                if (v, t) == (r.a, r.t):
                    rows.append(({i: 1 for i in outs} | {y[r.id]: -1}, 0, 0))
                elif ins or outs:
                    rows.append(({**{i: 1 for i in ins}, **{i: -1 for i in outs}}, 0, 0))
        sink_in = [i for t in range(r.t + 1, int(lim) + 1) for i in node_in.get((r.id, r.b, t), [])]
        rows.append(({**{i: 1 for i in sink_in}, y[r.id]: -1}, 0, 0))
    for (v, t, w), ids in edges.items():
        cap = grid.B if v == w else grid.c
        rows.append(({i: 1 for i in ids}, -np.inf, cap))
    A = lil_matrix((len(rows), nv))
    lo = np.empty(len(rows))
    hi = np.empty(len(rows))
    for k, (coef, l, h) in enumerate(rows):
        for i, a in coef.items():
            A[k, i] = a
        lo[k], hi[k] = l, h
    cost = np.zeros(nv)
    for i in y.values():
        cost[i] = -1
    res = milp(cost, constraints=LinearConstraint(A.tocsr(), lo, hi),
               integrality=np.ones(nv), bounds=(0, 1))
    if not res.success:
        raise RuntimeError(res.message)
    return int(round(-res.fun))
