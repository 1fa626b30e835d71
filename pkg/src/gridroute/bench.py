"""Trace generators and the experiment harness."""

from __future__ import annotations

import csv
import io
import random
import statistics
import time
from dataclasses import dataclass

from .baselines import OracleLimitError, brute_force_opt, delivered_by, greedy_fifo, nearest_to_go
from .model import INF, GridSpec, PacketRequest, l1, validate_request
from .sim import replay

TRACE_KINDS = ("uniform", "bursty", "dense-source", "greedy-adversarial")
ALGOS = ("det", "det-deadline", "bufferless", "large-capacity", "rand", "ntg", "greedy")
CSV_FIELDS = ["algo", "seed", "trace", "n", "d", "B", "c", "throughput", "opt", "ratio",
              "runtime_ms", "mean", "stddev", "error"]


@dataclass(frozen=True)
class TraceGenSpec:
    kind: str
    n: int
    d: int = 1
    B: int = 1
    c: int = 1
    count: int = 20
    seed: int = 0
    span: int | None = None  # injection times are drawn from [0, span)
    slack: int | None = None  # finite deadlines t + L1 + uniform[0, slack] when set

    @property
    def grid(self) -> GridSpec:
        return GridSpec((self.n,) * self.d, self.B, self.c)


def _random_pair(rng: random.Random, dims: tuple, origin=None):
    a = origin or tuple(rng.randint(1, m) for m in dims)
    b = tuple(rng.randint(x, m) for x, m in zip(a, dims))
    return a, b


def generate_trace(spec: TraceGenSpec) -> list[PacketRequest]:
    """Random request sequence of the given kind; every request is valid for the grid."""
    if spec.kind not in TRACE_KINDS:
        raise ValueError(f"unknown trace kind {spec.kind!r}")
    rng = random.Random(spec.seed)
    grid = spec.grid
    dims = grid.dims
    span = spec.span or max(4, 2 * max(dims))
    raw = []
    if spec.kind == "uniform":
        for _ in range(spec.count):
            a, b = _random_pair(rng, dims)
            raw.append((a, b, rng.randrange(span)))
    elif spec.kind == "bursty":
        bursts = sorted(rng.sample(range(span), k=min(span, max(1, spec.count // 8))))
        for _ in range(spec.count):
            a, b = _random_pair(rng, dims)
            raw.append((a, b, rng.choice(bursts)))
    elif spec.kind == "dense-source":
        origin = tuple(1 for _ in dims)
        for _ in range(spec.count):
            src = origin if rng.random() < 0.75 else None
            a, b = _random_pair(rng, dims, src)
            raw.append((a, b, rng.randrange(span)))
    else:
        # heuristic: long trips from the origin keep getting crossed by short hops,
        # which holds first-come-first-served forwarding back on the long ones
        origin = tuple(1 for _ in dims)
        far = tuple(dims)
        t = 0
        while len(raw) < spec.count:
            raw.append((origin, far, t))
            for _ in range(min(2, spec.count - len(raw))):
                v = tuple(rng.randint(1, m) for m in dims)
                w = tuple(min(m, x + 1) for x, m in zip(v, dims))
                raw.append((v, w, t))
            t += 1
    out = []
    for i, (a, b, t) in enumerate(sorted(raw, key=lambda x: x[2])):
        deadline = INF if spec.slack is None else t + l1(a, b) + rng.randint(0, spec.slack)
        r = PacketRequest(i, a, b, t, deadline)
        ok, why = validate_request(r, grid)
        if not ok:
            raise AssertionError(f"generator produced an invalid request: {why}")
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# running algorithms by name


@dataclass
class AlgoRun:
    outcomes: dict
    paths: dict
    metrics: object
    invariants_ok: bool
    detail: dict


def run_algorithm(algo: str, trace: list[PacketRequest], grid: GridSpec, seed: int | None = None,
                  gamma: float | None = None, enforce_domain: bool = True) -> AlgoRun:
    from . import det_router, rand_router

    if algo in ("det", "rand") and any(r.deadline != INF for r in trace):
        raise ValueError(f"{algo} ignores deadlines; use det-deadline for traces with finite deadlines")
    if algo in ("det", "det-deadline"):
        fn = det_router.run_deterministic if algo == "det" else det_router.route_with_deadlines
        res = fn(trace, grid, enforce_domain=enforce_domain)
        inv = det_router.check_invariants(res)
        ok = (inv["projection"] and inv["survivor_bound"] and inv["per_tile_bound"] and inv["forest"]
              and inv["internal_failures"] == 0 and inv["late"] == 0 and inv["track_discipline"])
        return AlgoRun(res.outcomes, res.paths, res.metrics, ok, inv)
    if algo == "bufferless":
        res = det_router.run_bufferless(trace, grid)
        return AlgoRun(res.outcomes, res.paths, res.metrics, True, res.stats)
    if algo == "large-capacity":
        res = det_router.run_large_capacity(trace, grid, enforce_domain=enforce_domain)
        return AlgoRun(res.outcomes, res.paths, res.metrics, res.stats["preemptions"] == 0, res.stats)
    if algo == "rand":
        kw = {} if gamma is None else {"gamma": gamma}
        res = rand_router.run_randomized(trace, grid, seed=seed, enforce_domain=enforce_domain, **kw)
        ok = res.stats.get("post_injection_failures", 0) == 0 and res.stats["max_post_cap_load"] <= 0.25
        return AlgoRun(res.outcomes, res.paths, res.metrics, ok, res.stats)
    if algo == "ntg":
        res = nearest_to_go(trace, grid)
        return AlgoRun(res.outcomes, res.paths, res.metrics, True, {})
    if algo == "greedy":
        res = greedy_fifo(trace, grid)
        return AlgoRun(res.outcomes, res.paths, res.metrics, True, {})
    raise ValueError(f"unknown algorithm {algo!r}")


# ---------------------------------------------------------------------------
# experiments


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _int_list(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    text = str(value)
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.replace(",", " ").split()]


@dataclass
class ExperimentConfig:
    algos: list
    seeds: list
    traces: int = 1
    n: int = 16
    d: int = 1
    B: int = 3
    c: int = 3
    kind: str = "uniform"
    count: int = 20
    span: int | None = None
    slack: int | None = None
    trace_seed: int = 0
    oracle: bool = False
    gamma: float | None = None
    enforce_domain: bool = True

    @classmethod
    def from_mapping(cls, m: dict) -> "ExperimentConfig":
        def get(key, conv, default):
            return conv(m[key]) if key in m and m[key] != "" else default

        algos = m.get("algos", m.get("algo", "det"))
        if isinstance(algos, str):
            algos = [a for a in algos.replace(",", " ").split() if a]
        for a in algos:
            if a not in ALGOS:
                raise ValueError(f"unknown algorithm {a!r}")
        truthy = lambda v: str(v).lower() in ("1", "true", "yes", "on")
        return cls(
            algos=list(algos),
            seeds=_int_list(m.get("seeds", m.get("seed", "0"))),
            traces=get("traces", int, 1),
            n=get("n", int, 16),
            d=get("d", int, 1),
            B=get("B", int, 3),
            c=get("c", int, 3),
            kind=get("kind", str, "uniform"),
            count=get("count", int, 20),
            span=get("span", int, None) if "span" in m else get("horizon", int, None),
            slack=get("slack", int, None),
            trace_seed=get("trace_seed", int, 0),
            oracle=get("oracle", truthy, False),
            gamma=get("gamma", float, None),
            enforce_domain=get("enforce_domain", truthy, True),
        )


def run_experiment(config: ExperimentConfig | dict) -> list[dict]:
    """One row per (algorithm, trace, seed); every output is replayed before it is reported."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_mapping(config)
    grid = GridSpec((cfg.n,) * cfg.d, cfg.B, cfg.c)
    rows = []
    for j in range(cfg.traces):
        spec = TraceGenSpec(cfg.kind, cfg.n, cfg.d, cfg.B, cfg.c, cfg.count, cfg.trace_seed + j,
                            cfg.span, cfg.slack)
        trace = generate_trace(spec)
        opt = horizon = None
        if cfg.oracle:
            try:
                res = brute_force_opt(trace, grid)
                opt, horizon = res.opt, res.stats.get("horizon")
            except OracleLimitError:
                opt = None
        for algo in cfg.algos:
            group = []
            for seed in cfg.seeds:
                row = {"algo": algo, "seed": seed, "trace": j, "n": cfg.n, "d": cfg.d, "B": cfg.B,
                       "c": cfg.c, "opt": "" if opt is None else opt, "ratio": "", "mean": "",
                       "stddev": "", "error": ""}
                t0 = time.perf_counter()
                try:
                    run = run_algorithm(algo, trace, grid, seed=seed, gamma=cfg.gamma,
                                        enforce_domain=cfg.enforce_domain)
                except ValueError as exc:
                    row.update(throughput="", runtime_ms="", error=f"config: {exc}")
                    rows.append(row)
                    continue
                row["runtime_ms"] = round(1000 * (time.perf_counter() - t0), 3)
                rep = replay(run.paths, trace, grid, run.outcomes, algo=algo)
                if rep.violations:
                    row.update(throughput="", error=f"replay: {rep.violations[0]}")
                elif not run.invariants_ok:
                    row.update(throughput=run.metrics.throughput, error=f"invariant: {run.detail}")
                else:
                    row["throughput"] = run.metrics.throughput
                    if opt is not None:
                        counted = delivered_by(run.outcomes, horizon) if horizon is not None else run.metrics.throughput
                        if counted > opt:
                            row["error"] = f"throughput {counted} above optimum {opt}"
                        row["ratio"] = opt / run.metrics.throughput if run.metrics.throughput else float("inf")
                    group.append(run.metrics.throughput)
                rows.append(row)
            if algo == "rand" and group:
                mean = statistics.fmean(group)
                sd = statistics.stdev(group) if len(group) > 1 else 0.0
                for row in rows:
                    if row["algo"] == "rand" and row["trace"] == j:
                        row["mean"], row["stddev"] = round(mean, 6), round(sd, 6)
    return rows


def rows_to_csv(rows: list[dict], stream=None) -> str:
    buf = stream or io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in CSV_FIELDS})
    return buf.getvalue() if stream is None else ""
