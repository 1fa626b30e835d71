"""Synchronous store-and-forward simulator used to verify planned routes.

Node model: in one step a node holds whatever arrived on its in-links (at
most ``c`` per link), whatever sat in its buffer (at most ``B``) and any
local injections. It may send at most ``c`` packets down each out-link and
keep at most ``B`` for the next step. A link traversal takes one step.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import TextIO

from .model import INF, GridSpec, Outcome, PacketRequest, RunMetrics

FORWARD = "forward"
STORE = "store"
DROP = "drop"
DELIVER = "deliver"


@dataclass(frozen=True)
class Violation:
    t: int
    location: object
    message: str

    def __str__(self):
        return f"t={self.t} at {self.location}: {self.message}"


@dataclass
class StepReport:
    t: int
    link_counts: dict = field(default_factory=dict)
    buffer_counts: dict = field(default_factory=dict)
    deliveries: list = field(default_factory=list)
    drops: list = field(default_factory=list)
    violations: list = field(default_factory=list)


@dataclass
class _Live:
    pid: object
    dest: tuple
    deadline: float
    node: tuple


class Simulator:
    """Executes per-step decisions and reports every capacity breach it sees."""

    def __init__(self, grid: GridSpec, log: TextIO | None = None):
        self.grid = grid
        self.live: dict = {}
        self.log = log
        self.t = None
        self.delivered: dict = {}
        self.dropped: dict = {}

    def _emit(self, t, kind, payload):
        if self.log is not None:
            self.log.write(f"{t} {kind} {payload}\n")

    def inject(self, t: int, pid, src: tuple, dest: tuple, deadline: float = INF) -> None:
        if pid in self.live or pid in self.delivered or pid in self.dropped:
            raise ValueError(f"packet {pid!r} injected twice")
        self.live[pid] = _Live(pid, tuple(dest), deadline, tuple(src))
        self._emit(t, "inject", f"{pid} {src}")

    def step(self, t: int, decisions: dict) -> StepReport:
        """Apply decisions for every live packet at time ``t`` and advance to ``t + 1``."""
        rep = StepReport(t)
        links: Counter = Counter()
        stores: Counter = Counter()
        moved = {}
        for pid, pk in list(self.live.items()):
            action = decisions.get(pid, (DROP,))
            kind = action[0]
            if kind == FORWARD:
                nxt = tuple(action[1])
                if nxt not in self.grid.out_neighbors(pk.node):
                    rep.violations.append(Violation(t, pk.node, f"packet {pid} sent to non-neighbour {nxt}"))
                    continue
                links[(pk.node, nxt)] += 1
                moved[pid] = nxt
                self._emit(t, "forward", f"{pid} {pk.node}->{nxt}")
            elif kind == STORE:
                stores[pk.node] += 1
                moved[pid] = pk.node
                self._emit(t, "store", f"{pid} {pk.node}")
            elif kind == DELIVER:
                if pk.node != pk.dest:
                    rep.violations.append(Violation(t, pk.node, f"packet {pid} delivered away from {pk.dest}"))
                elif t > pk.deadline:
                    rep.violations.append(Violation(t, pk.node, f"packet {pid} late (deadline {pk.deadline})"))
                rep.deliveries.append((pid, t))
                self.delivered[pid] = t
                del self.live[pid]
                self._emit(t, "deliver", f"{pid} {pk.node}")
            else:
                rep.drops.append(pid)
                self.dropped[pid] = t
                del self.live[pid]
                self._emit(t, "drop", f"{pid} {pk.node}")
        for edge, n in links.items():
            if n > self.grid.c:
                rep.violations.append(Violation(t, edge, f"{n} packets on a link of capacity {self.grid.c}"))
        for node, n in stores.items():
            if n > self.grid.B:
                rep.violations.append(Violation(t, node, f"{n} packets in a buffer of size {self.grid.B}"))
        for pid, node in moved.items():
            if pid in self.live:
                self.live[pid].node = node
        rep.link_counts = dict(links)
        rep.buffer_counts = dict(stores)
        for v in rep.violations:
            self._emit(t, "violation", str(v))
        self.t = t + 1
        return rep


def path_decisions(path: list) -> dict:
    """Turn a space-time path into ``{t: action}`` for every node but the last."""
    out = {}
    for (v, t), (w, t2) in zip(path, path[1:]):
        if t2 != t + 1:
            raise ValueError(f"path skips time between {t} and {t2}")
        out[t] = (STORE,) if v == w else (FORWARD, w)
    return out


@dataclass
class ReplayResult:
    metrics: RunMetrics
    violations: list
    outcomes: dict

    @property
    def ok(self) -> bool:
        return not self.violations


def replay(paths: dict, trace: list[PacketRequest], grid: GridSpec, outcomes: dict | None = None,
           algo: str = "replay", log: TextIO | None = None) -> ReplayResult:
    """Re-execute routed paths step by step and check every constraint.

    ``paths`` maps request id to a list of ``(v, t)`` vertices starting at the
    injection point. A path ending at the destination counts as a delivery
    unless ``outcomes`` marks it preempted; any other path ends in a drop.
    Requests without a path are rejections.
    """
    reqs = {r.id: r for r in trace}
    sim = Simulator(grid, log)
    plan = {}
    start = defaultdict(list)
    last_t = -1
    violations = []
    for pid, path in paths.items():
        r = reqs[pid]
        if not path:
            continue
        v0, t0 = path[0]
        if tuple(v0) != r.a or t0 != r.t:
            violations.append(Violation(t0, v0, f"packet {pid} does not start at its source"))
            continue
        try:
            acts = path_decisions(path)
        except ValueError as exc:
            violations.append(Violation(t0, v0, str(exc)))
            continue
        v_end, t_end = path[-1]
        ends_home = tuple(v_end) == r.b
        marked = outcomes.get(pid) if outcomes else None
        if ends_home and (marked is None or marked.kind == Outcome.DELIVERED):
            acts[t_end] = (DELIVER,)
        elif marked is not None and marked.kind == Outcome.INFLIGHT:
            pass
        else:
            acts[t_end] = (DROP,)
        plan[pid] = acts
        start[t0].append(pid)
        last_t = max(last_t, t_end)
    parked = {}
    if plan:
        t = min(start)
        while t <= last_t:
            for pid in start.get(t, []):
                r = reqs[pid]
                sim.inject(t, pid, r.a, r.b, r.deadline)
            for pid in list(sim.live):
                if t not in plan[pid]:
                    # path ends without a verdict: the packet is still travelling
                    parked[pid] = sim.live.pop(pid)
            decisions = {pid: plan[pid][t] for pid in sim.live}
            rep = sim.step(t, decisions)
            violations.extend(rep.violations)
            t += 1
    result = {}
    for r in trace:
        if r.id in sim.delivered:
            result[r.id] = Outcome.delivered(sim.delivered[r.id])
        elif r.id in sim.dropped:
            result[r.id] = Outcome.preempted(sim.dropped[r.id])
        elif r.id in sim.live or r.id in parked:
            result[r.id] = Outcome.inflight()
        else:
            result[r.id] = Outcome.rejected()
    metrics = RunMetrics.from_outcomes(algo, result)
    return ReplayResult(metrics, violations, result)
