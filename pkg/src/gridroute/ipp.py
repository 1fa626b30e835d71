"""Online integral path packing with a primal-dual certificate.

Each accepted request multiplies the weight of every edge on its path by
``2**(1/c)`` and adds a small additive term, so that an edge carrying ``f``
paths has weight ``(2**(f/c) - 1) / p_max``. A request is accepted only when
its lightest path (at most ``p_max`` hops) weighs strictly less than one.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable

from .model import INF

Node = Hashable
Edge = tuple  # (tail, head)

# successor function: node -> iterable of (head, capacity)
Successors = Callable[[Node], Iterable[tuple[Node, float]]]


class CertificateError(AssertionError):
    """Raised when the primal-dual bookkeeping contradicts its guarantees."""


@dataclass
class Path:
    nodes: list
    caps: list

    @property
    def edges(self) -> list[Edge]:
        return list(zip(self.nodes, self.nodes[1:]))

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1


@dataclass
class PrimalDualState:
    p_max: int
    exact: bool = False
    x: dict = field(default_factory=dict)
    z: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)
    cap: dict = field(default_factory=dict)
    accepted: list = field(default_factory=list)

    def __post_init__(self):
        if self.p_max < 1:
            raise ValueError("p_max must be positive")
        self._zero = Fraction(0) if self.exact else 0.0
        self._inv_p = Fraction(1, self.p_max) if self.exact else 1.0 / self.p_max

    def weight(self, edge: Edge, capacity: float):
        if capacity == INF:
            return self._zero
        return self.x.get(edge, self._zero)

    def growth(self, capacity: float):
        if self.exact:
            if capacity != 1:
                raise ValueError("exact arithmetic only supports unit (or infinite) capacities")
            return Fraction(2)
        return 2.0 ** (1.0 / capacity)

    def path_weight(self, path: Path):
        return sum((self.weight(e, c) for e, c in zip(path.edges, path.caps)), self._zero)

    def decide(self, rid, path: Path | None) -> bool:
        """Accept or reject ``rid`` given its lightest legal path (or ``None``)."""
        if path is None or path.hops > self.p_max:
            self.z[rid] = self._zero
            return False
        alpha = self.path_weight(path)
        if alpha >= 1:
            self.z[rid] = self._zero
            return False
        for e, c in zip(path.edges, path.caps):
            if c == INF:
                continue
            if c < 1:
                raise ValueError("edge capacities must be at least 1")
            g = self.growth(c)
            old = self.x.get(e, self._zero)
            self.x[e] = old * g + self._inv_p * (g - 1)
            self.flow[e] = self.flow.get(e, 0) + 1
            self.cap[e] = c
        self.z[rid] = 1 - alpha
        self.accepted.append((rid, path))
        return True

    def closed_form(self, edge: Edge):
        f, c = self.flow.get(edge, 0), self.cap[edge]
        if self.exact:
            return (Fraction(2) ** f - 1) * self._inv_p
        return (2.0 ** (f / c) - 1.0) / self.p_max


def lightest_bounded_path(succ: Successors, source: Node, dest: Node, weight, p_max: int) -> Path | None:
    """Reference lightest path with at most ``p_max`` hops, by hop-layered dynamic programming.

    ``weight(edge, capacity)`` gives the current edge weight. Among equally
    light paths the one with fewer hops wins, then the lexicographically
    smallest node sequence. Intended for small graphs and as an oracle.
    """
    # layer[h][node] = (weight, node sequence) of the best path with exactly h hops
    layer = {source: (0, (source,), ())}
    best = None
    for h in range(p_max + 1):
        if dest in layer:
            w, seq, caps = layer[dest]
            if best is None or w < best[0]:
                best = (w, seq, caps)
        if h == p_max:
            break
        nxt = {}
        for node, (w, seq, caps) in layer.items():
            if node == dest:
                continue
            for head, cap in succ(node):
                cand = (w + weight((node, head), cap), seq + (head,), caps + (cap,))
                cur = nxt.get(head)
                if cur is None or (cand[0], cand[1]) < (cur[0], cur[1]):
                    nxt[head] = cand
        if not nxt:
            break
        layer = nxt
    if best is None:
        return None
    return Path(list(best[1]), list(best[2]))


def lightest_path_search(succ: Successors, source: Node, dest: Node, weight, p_max: int,
                         max_expansions: int | None = None) -> Path | None:
    """Fast lightest bounded-hop path for large lazily generated DAGs.

    Runs Dijkstra on (weight, hops) keys; if the unconstrained optimum needs
    more than ``p_max`` hops it falls back to the layered reference search.
    """
    counter = 0
    start = (0, 0, counter, source)
    heap = [start]
    dist = {source: (0, 0)}
    parent = {source: None}
    done = set()
    while heap:
        w, h, _, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == dest:
            break
        if max_expansions is not None and len(done) > max_expansions:
            break
        for head, cap in succ(node):
            nw = w + weight((node, head), cap)
            key = (nw, h + 1)
            old = dist.get(head)
            if old is None or key < old:
                dist[head] = key
                parent[head] = (node, cap)
                counter += 1
                heapq.heappush(heap, (nw, h + 1, counter, head))
    if dest not in done:
        return None
    seq, caps = [dest], []
    cur = dest
    while parent[cur] is not None:
        prev, cap = parent[cur]
        seq.append(prev)
        caps.append(cap)
        cur = prev
    seq.reverse()
    caps.reverse()
    path = Path(seq, caps)
    if path.hops <= p_max:
        return path
    return lightest_bounded_path(succ, source, dest, weight, p_max)


def lightest_candidate(state: PrimalDualState, candidates: list[Path]) -> Path | None:
    """Lightest path among an explicit candidate list, hop bound enforced."""
    legal = [p for p in candidates if p.hops <= state.p_max]
    if not legal:
        return None
    return min(legal, key=lambda p: (state.path_weight(p), p.hops))


def ipp_process(state: PrimalDualState, rid, succ: Successors, source: Node, dest: Node,
                fast: bool = True) -> Path | None:
    """Route one request through the packing; return its path or ``None`` on rejection."""
    finder = lightest_path_search if fast else lightest_bounded_path
    path = finder(succ, source, dest, state.weight, state.p_max)
    return path if state.decide(rid, path) else None


def load_bound(p_max: int) -> float:
    return math.log2(1 + 3 * p_max)


def certify(state: PrimalDualState, tol: float = 1e-9, strict: bool = True) -> dict:
    """Check the competitive certificate; raise ``CertificateError`` when ``strict``."""
    primal = sum((state.x[e] * state.cap[e] for e in state.x), state._zero) + sum(state.z.values(), state._zero)
    throughput = len(state.accepted)
    max_load = max((state.flow[e] / state.cap[e] for e in state.flow), default=0)
    closed_ok = True
    worst = 0.0
    for e in state.x:
        want = state.closed_form(e)
        if state.exact:
            if state.x[e] != want:
                closed_ok = False
        else:
            gap = abs(state.x[e] - want)
            worst = max(worst, gap)
            if gap > tol * max(1.0, abs(want)):
                closed_ok = False
    report = {
        "primal_cost": primal,
        "throughput": throughput,
        "max_relative_load": max_load,
        "closed_form_ok": closed_ok,
        "closed_form_gap": worst,
        "x_max": max(state.x.values(), default=state._zero),
    }
    if strict:
        if primal > 2 * throughput + tol:
            raise CertificateError(f"primal {primal} exceeds twice the throughput {throughput}")
        if max_load > load_bound(state.p_max) + tol:
            raise CertificateError(f"load {max_load} exceeds log2(1+3p_max)")
        if not closed_ok:
            raise CertificateError("edge weight drifted from its closed form")
    return report
