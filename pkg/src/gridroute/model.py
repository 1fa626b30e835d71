"""Grid description, packet requests, trace I/O and run metrics."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

INF = math.inf


@dataclass(frozen=True)
class GridSpec:
    """A uni-directional d-dimensional grid with uniform capacities.

    Attributes:
        dims: side lengths, one per axis.
        B: buffer size of every node.
        c: capacity of every link.
    """

    dims: tuple[int, ...]
    B: int
    c: int

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        if not self.dims or any(x < 1 for x in self.dims):
            raise ValueError(f"bad dims {self.dims}")
        if self.n < 2:
            raise ValueError("grid needs at least two vertices")
        if self.B < 0 or self.c < 1:
            raise ValueError(f"need B >= 0 and c >= 1, got B={self.B} c={self.c}")

    @classmethod
    def line(cls, n: int, B: int, c: int) -> "GridSpec":
        return cls((n,), B, c)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        return math.prod(self.dims)

    @property
    def diameter(self) -> int:
        return sum(x - 1 for x in self.dims)

    def contains(self, v: tuple[int, ...]) -> bool:
        return len(v) == self.d and all(1 <= x <= m for x, m in zip(v, self.dims))

    def out_neighbors(self, v: tuple[int, ...]) -> list[tuple[int, ...]]:
        out = []
        for axis in range(self.d):
            if v[axis] < self.dims[axis]:
                out.append(v[:axis] + (v[axis] + 1,) + v[axis + 1:])
        return out

    def vertices(self) -> Iterable[tuple[int, ...]]:
        from itertools import product

        return product(*(range(1, m + 1) for m in self.dims))


@dataclass(frozen=True, order=True)
class PacketRequest:
    id: int
    a: tuple[int, ...]
    b: tuple[int, ...]
    t: int
    deadline: float = INF

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(x) for x in self.a))
        object.__setattr__(self, "b", tuple(int(x) for x in self.b))

    @property
    def distance(self) -> int:
        return l1(self.a, self.b)

    def with_deadline(self, deadline: float) -> "PacketRequest":
        return PacketRequest(self.id, self.a, self.b, self.t, deadline)


def l1(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    return sum(abs(x - y) for x, y in zip(a, b))


@dataclass(frozen=True)
class Outcome:
    """What happened to one request.

    ``kind`` is one of ``rejected``, ``preempted``, ``delivered`` or
    ``inflight``; ``time`` is the preemption or arrival step when relevant.
    """

    kind: str
    time: int | None = None

    REJECTED = "rejected"
    PREEMPTED = "preempted"
    DELIVERED = "delivered"
    INFLIGHT = "inflight"

    @classmethod
    def rejected(cls) -> "Outcome":
        return cls(cls.REJECTED)

    @classmethod
    def preempted(cls, time: int) -> "Outcome":
        return cls(cls.PREEMPTED, time)

    @classmethod
    def delivered(cls, time: int) -> "Outcome":
        return cls(cls.DELIVERED, time)

    @classmethod
    def inflight(cls) -> "Outcome":
        return cls(cls.INFLIGHT)


@dataclass
class RunMetrics:
    algo: str
    seed: int | None = None
    total: int = 0
    throughput: int = 0
    rejected: int = 0
    preempted: int = 0
    inflight: int = 0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_outcomes(cls, algo: str, outcomes: dict[int, Outcome], seed=None) -> "RunMetrics":
        m = cls(algo, seed, total=len(outcomes))
        for o in outcomes.values():
            if o.kind == Outcome.DELIVERED:
                m.throughput += 1
            elif o.kind == Outcome.REJECTED:
                m.rejected += 1
            elif o.kind == Outcome.PREEMPTED:
                m.preempted += 1
            else:
                m.inflight += 1
        return m

    def consistent(self) -> bool:
        return self.throughput + self.rejected + self.preempted + self.inflight == self.total


def validate_request(req: PacketRequest, grid: GridSpec) -> tuple[bool, str | None]:
    """Return ``(True, None)`` for a usable request, else ``(False, reason)``."""
    if not grid.contains(req.a) or not grid.contains(req.b):
        return False, "out of range"
    if any(x > y for x, y in zip(req.a, req.b)):
        return False, "monotonicity"
    if req.t < 0:
        return False, "negative injection time"
    if req.deadline < req.t + req.distance:
        return False, f"infeasible deadline: {req.deadline} < {req.t}+{req.distance}"
    return True, None


def filter_simultaneous(reqs: list[PacketRequest], grid: GridSpec):
    """Keep the B+c requests closest to their destinations; the rest are rejected.

    All requests are assumed to share an injection node and time. Ties on
    distance go to the lower id.
    """
    ranked = sorted(reqs, key=lambda r: (r.distance, r.id))
    cap = grid.B + grid.c
    return ranked[:cap], ranked[cap:]


class TraceParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _coords(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def parse_trace(stream: TextIO | str) -> list[PacketRequest]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    out = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise TraceParseError(lineno, f"expected 5 fields, got {len(parts)}")
        try:
            rid = int(parts[0])
            a, b = _coords(parts[1]), _coords(parts[2])
            t = int(parts[3])
            deadline = INF if parts[4].lower() == "inf" else int(parts[4])
        except ValueError as exc:
            raise TraceParseError(lineno, str(exc)) from None
        if len(a) != len(b):
            raise TraceParseError(lineno, "source and destination differ in dimension")
        out.append(PacketRequest(rid, a, b, t, deadline))
    return out


def format_request(r: PacketRequest) -> str:
    dl = "inf" if r.deadline == INF else str(int(r.deadline))
    a = ",".join(map(str, r.a))
    b = ",".join(map(str, r.b))
    return f"{r.id} {a} {b} {r.t} {dl}"


def emit_trace(reqs: Iterable[PacketRequest], stream: TextIO | None = None) -> str:
    text = "".join(format_request(r) + "\n" for r in reqs)
    if stream is not None:
        stream.write(text)
    return text
