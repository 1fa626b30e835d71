"""Online packing of open intervals on a line, with preemption."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations


@dataclass(frozen=True)
class Interval:
    a: int
    b: int
    owner: object = None

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"empty interval ({self.a}, {self.b})")

    def intersects(self, other: "Interval") -> bool:
        # open intervals: touching endpoints do not overlap
        return self.a < other.b and other.a < self.b


@dataclass(frozen=True)
class Offer:
    accepted: bool
    preempted: object = None  # owner of the interval pushed out, if any


class ContractViolation(AssertionError):
    pass


@dataclass
class PackState:
    """Current disjoint set plus the forest of who preempted whom."""

    current: dict = field(default_factory=dict)  # owner -> Interval
    forest: dict = field(default_factory=dict)  # preempted owner -> preemptor owner
    history: dict = field(default_factory=dict)  # owner -> Interval for every accepted offer
    last_a: int | None = None

    def offer(self, p: Interval) -> Offer:
        if self.last_a is not None and p.a < self.last_a:
            raise ContractViolation(f"arrival {p.a} precedes earlier left endpoint {self.last_a}")
        self.last_a = p.a
        hits = [q for q in self.current.values() if q.intersects(p)]
        if len(hits) > 1:
            raise ContractViolation("sorted arrivals cannot meet two disjoint intervals")
        if not hits:
            self._add(p)
            return Offer(True)
        q = hits[0]
        if p.b > q.b:
            return Offer(False)
        del self.current[q.owner]
        self.forest[q.owner] = p.owner
        self._add(p)
        return Offer(True, q.owner)

    def remove(self, owner) -> None:
        """Drop an interval whose packet left the line for another reason."""
        self.current.pop(owner, None)

    def _add(self, p: Interval) -> None:
        if p.owner in self.current or p.owner in self.history:
            raise ContractViolation(f"owner {p.owner!r} offered twice on one line")
        self.current[p.owner] = p
        self.history[p.owner] = p

    def descendants(self, owner) -> list:
        children = {}
        for child, parent in self.forest.items():
            children.setdefault(parent, []).append(child)
        out, stack = [], list(children.get(owner, []))
        while stack:
            c = stack.pop()
            out.append(c)
            stack.extend(children.get(c, []))
        return out

    def check_forest(self) -> None:
        """Every descendant of an interval contains that interval's last unit edge."""
        for owner, iv in self.history.items():
            for dsc in self.descendants(owner):
                j = self.history[dsc]
                if not (j.a <= iv.b - 1 and iv.b <= j.b):
                    raise ContractViolation(f"{dsc!r} does not cover the last edge of {owner!r}")


def greedy_mis(intervals) -> int:
    """Maximum number of pairwise disjoint open intervals, earliest right end first."""
    count, frontier = 0, None
    for iv in sorted(intervals, key=lambda q: (q.b, q.a)):
        if frontier is None or iv.a >= frontier:
            count += 1
            frontier = iv.b
    return count


def exhaustive_mis(intervals) -> int:
    items = list(intervals)
    for size in range(len(items), 0, -1):
        for combo in combinations(items, size):
            if all(not x.intersects(y) for x, y in combinations(combo, 2)):
                return size
    return 0


def brute_force_mis(intervals) -> int:
    """Exact maximum disjoint subset; small inputs are double-checked exhaustively."""
    items = list(intervals)
    if len(items) > 20:
        raise ValueError("oracle limited to 20 intervals")
    best = greedy_mis(items)
    if len(items) <= 12:
        other = exhaustive_mis(items)
        if other != best:
            raise AssertionError(f"greedy {best} disagrees with exhaustive {other}")
    return best
