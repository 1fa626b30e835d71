"""End-to-end acceptance checks.

Each check prints one ``PASS``/``FAIL`` line. Run under pytest, or directly
with ``python3 tests/test_acceptance.py``.
"""

import itertools
import math
import os
import random
import statistics
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import line_trace, random_dag  # noqa: E402
from gridroute.baselines import brute_force_opt, nearest_to_go  # noqa: E402
from gridroute.det_router import (check_invariants, large_capacity_parameters, route_with_deadlines,  # noqa: E402
                                  run_deterministic, run_large_capacity)
from gridroute.intervals import Interval, PackState, brute_force_mis  # noqa: E402
from gridroute.ipp import Path, PrimalDualState, certify, ipp_process, lightest_candidate, load_bound  # noqa: E402
from gridroute.model import INF, GridSpec, Outcome, PacketRequest  # noqa: E402
from gridroute.rand_router import (check_dom, first_one_per_row, reverse_markov, run_randomized,  # noqa: E402
                                   sparsified_first_ones, weight)
from gridroute.sim import replay  # noqa: E402
from gridroute.spacetime import st_successors  # noqa: E402

RESULTS: list[str] = []


def _report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}"
    RESULTS.append(line)
    print(line)


def _run(number, title, check):
    try:
        ok, detail = check()
    except Exception as exc:  # a crash is a failed criterion, reported like any other
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    _report(number, title, ok, detail)
    return ok, detail


# ---------------------------------------------------------------------------
# 1. path packing certificate


def _spacetime_instance(rng):
    n, span = rng.randint(3, 6), rng.randint(4, 8)
    grid = GridSpec.line(n, rng.randint(1, 3), rng.randint(1, 3))

    def succ(node):
        if node[1] >= span:
            return []
        return [(e.dst, e.capacity(grid)) for e in st_successors(node, grid)]

    def query():
        a = rng.randint(1, n)
        b = rng.randint(a, min(n, a + span))
        t = rng.randint(0, span - (b - a))
        return ((a,), t), ((b,), t + (b - a) + rng.randint(0, span - t - (b - a)))

    return succ, query, n + 3


def _dag_instance(rng, unit):
    nodes = rng.randint(8, 40)
    succ = random_dag(rng, nodes, rng.randint(nodes, min(200, nodes * (nodes - 1) // 2)), 1 if unit else 4)

    def query():
        u = rng.randrange(nodes - 1)
        return u, rng.randrange(u + 1, nodes)

    return succ, query, rng.randint(2, 10)


def check_ipp_certificate(instances=1000):
    t0 = time.perf_counter()
    worst_gap, checks = 0.0, 0
    for i in range(instances):
        rng = random.Random(i)
        exact = i % 5 == 0
        if i % 3 == 2 and not exact:
            succ, query, p_max = _spacetime_instance(rng)
        else:
            succ, query, p_max = _dag_instance(rng, exact)
        state = PrimalDualState(p_max, exact=exact)
        for rid in range(rng.randint(5, 30)):
            src, dst = query()
            ipp_process(state, rid, succ, src, dst)
            rep = certify(state, strict=False)
            checks += 1
            if rep["primal_cost"] > 2 * rep["throughput"] + 1e-9:
                return False, f"instance {i}: primal {rep['primal_cost']} > 2 x {rep['throughput']}"
            if rep["max_relative_load"] > load_bound(p_max):
                return False, f"instance {i}: load {rep['max_relative_load']}"
            if not rep["closed_form_ok"]:
                return False, f"instance {i}: closed form drift {rep['closed_form_gap']}"
            worst_gap = max(worst_gap, rep["closed_form_gap"])
    elapsed = time.perf_counter() - t0
    return elapsed < 30, f"{instances} instances, {checks} certificates, worst drift {worst_gap:.1e}, {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 2. path packing against the exhaustive optimum


def _all_paths(succ, u, v, limit):
    out, stack = [], [(u, [u], [])]
    while stack:
        node, seq, caps = stack.pop()
        if node == v:
            out.append(Path(seq, caps))
            continue
        if len(seq) > limit:
            continue
        for head, cap in succ(node):
            stack.append((head, seq + [head], caps + [cap]))
    return out


def _exhaustive_opt(cands, capacity):
    best = 0

    def go(i, load, count):
        nonlocal best
        if count + (len(cands) - i) <= best:
            return
        if i == len(cands):
            best = max(best, count)
            return
        for p in cands[i]:
            if all(load.get(e, 0) < capacity[e] for e in p.edges):
                for e in p.edges:
                    load[e] = load.get(e, 0) + 1
                go(i + 1, load, count + 1)
                for e in p.edges:
                    load[e] -= 1
        go(i + 1, load, count)

    go(0, {}, 0)
    return best


def check_ipp_vs_opt(instances=300):
    failures, ratios = 0, []
    for i in range(instances):
        rng = random.Random(10_000 + i)
        nodes = rng.randint(4, 7)
        succ = random_dag(rng, nodes, rng.randint(nodes, nodes * (nodes - 1) // 2), max_cap=rng.choice([1, 1, 2]))
        cands, capacity = [], {}
        while len(cands) < rng.randint(1, 6):
            u = rng.randrange(nodes - 1)
            paths = _all_paths(succ, u, rng.randrange(u + 1, nodes), nodes)
            if not paths:
                continue
            chosen = rng.sample(paths, min(4, len(paths)))
            cands.append(chosen)
            for p in chosen:
                for e, c in zip(p.edges, p.caps):
                    capacity[e] = c
        state = PrimalDualState(max(p.hops for ps in cands for p in ps))
        for rid, paths in enumerate(cands):
            state.decide(rid, lightest_candidate(state, paths))
        got = len(state.accepted)
        opt = _exhaustive_opt(cands, capacity)
        if 2 * got < opt:
            failures += 1
        if got:
            ratios.append(opt / got)
    return failures == 0, f"{instances} instances, {failures} below half, worst opt/ipp {max(ratios):.2f}"


# ---------------------------------------------------------------------------
# 3. interval packing


def check_interval_prefix(sequences=500):
    prefixes = 0
    for i in range(sequences):
        rng = random.Random(20_000 + i)
        pairs = []
        for _ in range(rng.randint(1, 10)):
            a = rng.randint(1, 11)
            pairs.append((a, rng.randint(a + 1, 12)))
        pairs.sort(key=lambda p: p[0])
        pack, offered = PackState(), []
        for j, (a, b) in enumerate(pairs):
            iv = Interval(a, b, j)
            pack.offer(iv)
            offered.append(iv)
            prefixes += 1
            if len(pack.current) != brute_force_mis(offered):
                return False, f"sequence {i} prefix {j + 1}"
        pack.check_forest()
    return True, f"{sequences} sequences, {prefixes} prefixes optimal"


# ---------------------------------------------------------------------------
# 4. nearest-to-go without buffers


def check_nearest_to_go(instances=200):
    for i in range(instances):
        rng = random.Random(30_000 + i)
        n = rng.randint(2, 8)
        grid = GridSpec.line(n, 0, rng.randint(1, 3))
        trace = line_trace(rng, n, rng.randint(0, 10), rng.randint(1, 4))
        got = nearest_to_go(trace, grid).metrics.throughput
        opt = brute_force_opt(trace, grid).opt
        if got != opt:
            return False, f"instance {i}: nearest-to-go {got}, optimum {opt}"
    return True, f"{instances} instances equal to the optimum"


# ---------------------------------------------------------------------------
# 5. deterministic router end to end


def _det_trace(rng, n):
    return line_trace(rng, n, rng.choice([30, 80, 150]), rng.choice([n, 3 * n]))


def check_deterministic(traces=100):
    t0 = time.perf_counter()
    totals = {"delivered": 0, "requests": 0, "knock_knees": 0}
    for n in (16, 32):
        grid = GridSpec.line(n, 3, 3)
        for i in range(traces):
            rng = random.Random(40_000 + 1000 * n + i)
            trace = _det_trace(rng, n)
            res = run_deterministic(trace, grid)
            inv = check_invariants(res)
            rep = replay(res.paths, trace, grid, res.outcomes)
            bad = [key for key in ("projection", "survivor_bound", "per_tile_bound", "forest", "track_discipline") if not inv[key]]
            if rep.violations or inv["internal_failures"] or bad:
                return False, (f"n={n} trace {i}: {len(rep.violations)} violations, "
                               f"{inv['internal_failures']} internal failures, failed {bad}")
            totals["delivered"] += res.metrics.throughput
            totals["requests"] += len(trace)
            totals["knock_knees"] += res.stats["knock_knees"]
    elapsed = time.perf_counter() - t0
    return elapsed < 120, (f"{2 * traces} traces, {totals['delivered']}/{totals['requests']} delivered, "
                           f"{totals['knock_knees']} knock-knees, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 6. deadlines


def check_deadlines(traces=100):
    delivered = 0
    for i in range(traces):
        rng = random.Random(50_000 + i)
        n = rng.choice([16, 32])
        grid = GridSpec.line(n, 3, 3)
        trace = line_trace(rng, n, rng.choice([30, 80]), 2 * n, slack=4)
        res = route_with_deadlines(trace, grid)
        for r in trace:
            o = res.outcomes[r.id]
            if o.kind == Outcome.DELIVERED:
                delivered += 1
                if o.time > r.deadline:
                    return False, f"trace {i}: request {r.id} late"
        rep = replay(res.paths, trace, grid, res.outcomes)
        if rep.violations:
            return False, f"trace {i}: {rep.violations[0]}"
        open_trace = [r.with_deadline(INF) for r in trace]
        if route_with_deadlines(open_trace, grid).outcomes != run_deterministic(open_trace, grid).outcomes:
            return False, f"trace {i}: infinite deadlines change the outcome"
    return True, f"{traces} traces, {delivered} on-time deliveries, infinite deadlines match"


# ---------------------------------------------------------------------------
# 7. randomized router


def check_randomized(seeds=500):
    grid = GridSpec.line(64, 1, 1)
    sw_fracs, tosses, heads, failures, worst_load, lam = [], 0, 0, 0, 0.0, None
    for seed in range(seeds):
        trace = line_trace(random.Random(60_000 + seed), 64, 300, 256)
        res = run_randomized(trace, grid, seed=seed)
        st = res.stats
        failures += st.get("post_injection_failures", 0)
        worst_load = max(worst_load, st["max_post_cap_load"])
        if st["requests"]:
            sw_fracs.append(st["in_sw"] / st["requests"])
        tosses += st.get("coin_tosses", 0)
        heads += st.get("coin_heads", 0)
        lam = res.config.lam
        rep = replay(res.paths, trace, grid, res.outcomes)
        if rep.violations:
            return False, f"seed {seed}: {rep.violations[0]}"
    sw_mean = statistics.fmean(sw_fracs)
    sw_sigma = statistics.stdev(sw_fracs) / math.sqrt(len(sw_fracs))
    coin_rate = heads / tosses if tosses else float("nan")
    coin_sigma = math.sqrt(lam * (1 - lam) / tosses) if tosses else float("nan")
    ok = (failures == 0 and worst_load <= 0.25 and abs(sw_mean - 0.25) <= 3 * sw_sigma
          and tosses > 0 and abs(coin_rate - lam) <= 3 * coin_sigma)
    return ok, (f"{seeds} seeds, {failures} post-injection failures, max load {worst_load:.3f}, "
                f"SW rate {sw_mean:.4f} (3 sigma {3 * sw_sigma:.4f}), "
                f"coin rate {heads}/{tosses}={coin_rate:.5f} vs {lam:.5f} (3 sigma {3 * coin_sigma:.5f})")


# ---------------------------------------------------------------------------
# 8. thinning keeps enough first ones


def check_sparsification(matrices=20, draws=10_000):
    rng = np.random.default_rng(7)
    worst = math.inf
    for i in range(matrices):
        rows, tau = int(rng.integers(5, 40)), int(rng.integers(2, 16))
        A = rng.random((rows, tau)) < rng.uniform(0.1, 0.9)
        if not A.any():
            A[0, 0] = True
        lam = float(rng.uniform(0.05, 1.0)) * 2 / tau
        mean = sparsified_first_ones(A, lam, rng, draws).mean()
        need = 0.95 * (lam / 2) * weight(A)
        worst = min(worst, mean / need)
        if mean < need:
            return False, f"matrix {i}: mean {mean:.3f} < {need:.3f}"
    return True, f"{matrices} matrices, smallest mean/bound ratio {worst:.3f}"


# ---------------------------------------------------------------------------
# 9. first-one domination


def check_domination(pairs=10_000):
    rng = np.random.default_rng(9)
    for i in range(pairs):
        shape = tuple(int(x) for x in rng.integers(1, 9, size=2))
        Bm = rng.random(shape) < rng.random()
        L = Bm & (rng.random(shape) < rng.random())
        if not check_dom(L, Bm):
            return False, f"pair {i} violates the inequality"
        # recompute independently of the helper
        lhs = sum(1 for row in L if row.any())
        rhs = sum(1 for row in Bm if row.any()) - int((Bm & ~L).sum())
        if lhs < rhs or weight(first_one_per_row(L)) != lhs:
            return False, f"pair {i}: recount disagrees"
    return True, f"{pairs} pairs satisfy the inequality"


# ---------------------------------------------------------------------------
# 10. reverse Markov bound


def check_reverse_markov(trials=20_000):
    a = Fraction(12)
    # two-point laws {v, a} with v < d: the slack is exactly (1 - q)(d - v)/(a - d) and vanishes as v -> d
    for d in range(1, 12):
        for q in (Fraction(j, 10) for j in range(11)):
            for v in (Fraction(d) - Fraction(1, 2 ** e) for e in range(1, 12)):
                mean = q * a + (1 - q) * v
                bound = reverse_markov(mean, a, Fraction(d))
                slack = q - bound
                if slack != (1 - q) * (d - v) / (a - d):
                    return False, f"two-point law v={v} q={q} d={d}: slack {slack}"
    if reverse_markov(a, a, Fraction(5)) != 1:
        return False, "a point mass at a does not reach the bound"
    if reverse_markov(Fraction(1, 4), Fraction(1), Fraction(1, 8)) != Fraction(1, 7):
        return False, "OPT/4, OPT/8 case is not 1/7"
    rng = random.Random(11)
    for i in range(trials):
        support = [Fraction(rng.randint(0, 12)) for _ in range(rng.randint(1, 5))]
        weights = [rng.randint(1, 9) for _ in support]
        total = sum(weights)
        probs = [Fraction(w, total) for w in weights]
        mean = sum(p * x for p, x in zip(probs, support))
        d = Fraction(rng.randint(0, 11 * 4), 4)
        pr = sum(p for p, x in zip(probs, support) if x >= d)
        if pr < reverse_markov(mean, a, d):
            return False, f"random law {i} violates the bound"
    return True, f"two-point slack matches its closed form and vanishes at the extreme; {trials} random laws hold"


# ---------------------------------------------------------------------------
# 11. large capacities


def check_large_capacity(traces=50):
    grid0 = GridSpec.line(16, 1, 1)
    _p, k = large_capacity_parameters(GridSpec.line(16, 8, 8))
    grid = GridSpec.line(16, k, k)
    del grid0
    delivered = rejected = 0
    for i in range(traces):
        rng = random.Random(70_000 + i)
        trace = line_trace(rng, 16, rng.choice([100, 300, 600]), rng.choice([8, 32]))
        res = run_large_capacity(trace, grid)
        rep = replay(res.paths, trace, grid, res.outcomes)
        if rep.violations or res.metrics.preempted or res.stats["preemptions"]:
            return False, f"trace {i}: {len(rep.violations)} violations, {res.metrics.preempted} preempted"
        if rep.metrics.throughput != res.metrics.throughput:
            return False, f"trace {i}: replay throughput differs"
        delivered += res.metrics.throughput
        rejected += res.metrics.rejected
    return True, f"k={k}, B=c={k}, {traces} traces, {delivered} delivered, {rejected} rejected, 0 violations"


CRITERIA = [
    (1, "path packing certificate", check_ipp_certificate),
    (2, "path packing vs exhaustive optimum", check_ipp_vs_opt),
    (3, "interval packing prefix optimality", check_interval_prefix),
    (4, "nearest-to-go equals optimum without buffers", check_nearest_to_go),
    (5, "deterministic router end to end", check_deterministic),
    (6, "deadline safety", check_deadlines),
    (7, "randomized router", check_randomized),
    (8, "thinning keeps enough first ones", check_sparsification),
    (9, "first-one domination", check_domination),
    (10, "reverse Markov bound", check_reverse_markov),
    (11, "large-capacity variant", check_large_capacity),
]


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_acceptance(number, title, check):
    ok, detail = _run(number, title, check)
    assert ok, detail


if __name__ == "__main__":
    outcomes = [_run(*c)[0] for c in CRITERIA]
    sys.exit(0 if all(outcomes) else 1)
