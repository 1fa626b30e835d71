import io

from gridroute.model import GridSpec, Outcome, PacketRequest
from gridroute.sim import DELIVER, DROP, FORWARD, STORE, Simulator, path_decisions, replay

LINE = GridSpec.line(4, 1, 1)


def test_forward_takes_one_step():
    sim = Simulator(LINE)
    sim.inject(0, "p", (1,), (2,))
    rep = sim.step(0, {"p": (FORWARD, (2,))})
    assert not rep.violations and sim.live["p"].node == (2,)
    rep = sim.step(1, {"p": (DELIVER,)})
    assert rep.deliveries == [("p", 1)]


def test_link_overload_flagged():
    sim = Simulator(LINE)
    sim.inject(0, "p", (1,), (2,))
    sim.inject(0, "q", (1,), (2,))
    rep = sim.step(0, {"p": (FORWARD, (2,)), "q": (FORWARD, (2,))})
    assert len(rep.violations) == 1 and rep.violations[0].location == ((1,), (2,))


def test_buffer_overload_flagged():
    sim = Simulator(LINE)
    sim.inject(0, "p", (1,), (2,))
    sim.inject(0, "q", (1,), (2,))
    rep = sim.step(0, {"p": (STORE,), "q": (STORE,)})
    assert len(rep.violations) == 1 and rep.violations[0].location == (1,)


def test_store_and_forward_in_one_step():
    # one packet arrives over the link while another is injected locally: one waits, one leaves
    sim = Simulator(LINE)
    sim.inject(0, "p", (1,), (3,))
    sim.step(0, {"p": (FORWARD, (2,))})
    sim.inject(1, "q", (2,), (3,))
    rep = sim.step(1, {"p": (FORWARD, (3,)), "q": (STORE,)})
    assert not rep.violations and not rep.drops


def test_wrong_direction_and_early_delivery():
    sim = Simulator(LINE)
    sim.inject(0, "p", (2,), (3,))
    rep = sim.step(0, {"p": (FORWARD, (1,))})
    assert rep.violations
    sim = Simulator(LINE)
    sim.inject(0, "p", (2,), (3,))
    rep = sim.step(0, {"p": (DELIVER,)})
    assert rep.violations


def test_undecided_packets_are_dropped():
    sim = Simulator(LINE)
    sim.inject(0, "p", (1,), (2,))
    rep = sim.step(0, {})
    assert rep.drops == ["p"]


def test_path_decisions():
    path = [((1,), 0), ((1,), 1), ((2,), 2)]
    assert path_decisions(path) == {0: (STORE,), 1: (FORWARD, (2,))}


def test_empty_replay():
    rep = replay({}, [], LINE)
    assert rep.ok and rep.metrics.throughput == 0


def test_replay_counts_and_logs():
    trace = [PacketRequest(0, (1,), (3,), 0), PacketRequest(1, (2,), (2,), 1), PacketRequest(2, (1,), (4,), 0)]
    paths = {0: [((1,), 0), ((2,), 1), ((3,), 2)], 1: [((2,), 1)], 2: [((1,), 0), ((1,), 1), ((2,), 2)]}
    log = io.StringIO()
    outcomes = {0: Outcome.delivered(2), 1: Outcome.delivered(1), 2: Outcome.preempted(2)}
    rep = replay(paths, trace, LINE, outcomes, log=log)
    assert rep.ok
    assert rep.metrics.throughput == 2 and rep.metrics.preempted == 1
    assert rep.outcomes[0] == Outcome.delivered(2)
    assert any(line.split()[1] == "deliver" for line in log.getvalue().splitlines())


def test_shared_unit_edge_is_exactly_one_violation():
    trace = [PacketRequest(0, (1,), (3,), 0), PacketRequest(1, (2,), (3,), 1)]
    good = {0: [((1,), 0), ((2,), 1), ((3,), 2)], 1: [((2,), 1), ((2,), 2), ((3,), 3)]}
    assert replay(good, trace, LINE).ok
    corrupted = dict(good)
    corrupted[1] = [((2,), 1), ((3,), 2)]
    rep = replay(corrupted, trace, LINE)
    assert len(rep.violations) == 1
    assert rep.violations[0].t == 1


def test_deadline_enforced():
    trace = [PacketRequest(0, (1,), (2,), 0, 1)]
    rep = replay({0: [((1,), 0), ((1,), 1), ((2,), 2)]}, trace, LINE)
    assert len(rep.violations) == 1
