import random

import pytest
from hypothesis import given, strategies as st

from gridroute.intervals import ContractViolation, Interval, PackState, brute_force_mis, exhaustive_mis, greedy_mis


def _offer_all(pairs):
    pack = PackState()
    return pack, [pack.offer(Interval(a, b, i)) for i, (a, b) in enumerate(pairs)]


def test_disjoint_both_accepted():
    pack, res = _offer_all([(1, 2), (3, 4)])
    assert all(r.accepted for r in res) and len(pack.current) == 2


def test_shorter_right_end_preempts():
    pack, res = _offer_all([(1, 5), (2, 4)])
    assert res[1].accepted and res[1].preempted == 0
    assert set(pack.current) == {1} and pack.forest == {0: 1}


def test_longer_right_end_rejected():
    pack, res = _offer_all([(1, 3), (2, 5)])
    assert not res[1].accepted and set(pack.current) == {0}


def test_unsorted_arrival_is_a_contract_violation():
    pack = PackState()
    pack.offer(Interval(3, 4, "x"))
    with pytest.raises(ContractViolation):
        pack.offer(Interval(1, 2, "y"))


def test_empty_interval_rejected_at_construction():
    with pytest.raises(ValueError):
        Interval(2, 2)


def test_mis_examples():
    assert brute_force_mis([]) == 0
    assert brute_force_mis([Interval(1, 5), Interval(2, 4)]) == 1
    assert brute_force_mis([Interval(1, 2), Interval(3, 4), Interval(2, 3)]) == 3


def _random_sorted(rng, count):
    pairs = []
    for _ in range(count):
        a = rng.randint(1, 11)
        pairs.append((a, rng.randint(a + 1, 12)))
    return sorted(pairs, key=lambda p: p[0])


@given(st.integers(0, 100_000))
def test_prefix_optimal_and_forest(seed):
    rng = random.Random(seed)
    pairs = _random_sorted(rng, rng.randint(0, 10))
    pack = PackState()
    offered = []
    for i, (a, b) in enumerate(pairs):
        iv = Interval(a, b, i)
        pack.offer(iv)
        offered.append(iv)
        assert len(pack.current) == brute_force_mis(offered)
        cur = list(pack.current.values())
        assert all(not x.intersects(y) for j, x in enumerate(cur) for y in cur[j + 1:])
    pack.check_forest()


@given(st.lists(st.tuples(st.integers(0, 15), st.integers(1, 6)), max_size=9))
def test_greedy_equals_exhaustive(raw):
    ivs = [Interval(a, a + w) for a, w in raw]
    assert greedy_mis(ivs) == exhaustive_mis(ivs)
