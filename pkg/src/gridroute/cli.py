"""Command line entry point: ``gridroute {gen-trace,simulate,oracle,bench}``.

Exit status is 0 on success, 2 when a run breaks an invariant or fails
replay, and 1 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .baselines import OracleLimitError, brute_force_opt
from .bench import ALGOS, TRACE_KINDS, ExperimentConfig, TraceGenSpec, generate_trace, parse_config, \
    rows_to_csv, run_algorithm, run_experiment
from .model import GridSpec, TraceParseError, emit_trace, parse_trace
from .sim import replay

log = logging.getLogger("gridroute")

OK, USAGE, VIOLATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--c", type=int, required=True)


def _grid(ns) -> GridSpec:
    return GridSpec((ns.n,) * ns.d, ns.B, ns.c)


def _read_trace(path: str):
    with open(path) as fh:
        return parse_trace(fh)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _format_outcomes(trace, outcomes) -> str:
    lines = ["# id outcome time"]
    for r in trace:
        o = outcomes[r.id]
        lines.append(f"{r.id} {o.kind} {'' if o.time is None else o.time}".rstrip())
    return "\n".join(lines) + "\n"


def cmd_gen_trace(ns) -> int:
    spec = TraceGenSpec(ns.kind, ns.n, ns.d, ns.B, ns.c, ns.count, ns.seed, ns.span, ns.slack)
    _write(ns.out, emit_trace(generate_trace(spec)))
    return OK


def cmd_simulate(ns) -> int:
    grid = _grid(ns)
    trace = _read_trace(ns.trace)
    run = run_algorithm(ns.algo, trace, grid, seed=ns.seed, gamma=ns.gamma,
                        enforce_domain=not ns.no_domain_check)
    events = open(ns.events, "w") if ns.events else None
    try:
        rep = replay(run.paths, trace, grid, run.outcomes, algo=ns.algo, log=events)
    finally:
        if events:
            events.close()
    _write(ns.out, _format_outcomes(trace, run.outcomes))
    m = run.metrics
    print(f"algo={ns.algo} total={m.total} delivered={m.throughput} rejected={m.rejected} "
          f"preempted={m.preempted} inflight={m.inflight}", file=sys.stderr)
    for v in rep.violations:
        print(f"violation: {v}", file=sys.stderr)
    if not run.invariants_ok:
        print(f"invariant check failed: {run.detail}", file=sys.stderr)
    return VIOLATION if rep.violations or not run.invariants_ok else OK


def cmd_oracle(ns) -> int:
    grid = _grid(ns)
    trace = _read_trace(ns.trace)
    res = brute_force_opt(trace, grid, horizon=ns.horizon)
    rep = replay(res.witness, trace, grid, res.outcomes, algo="oracle")
    lines = [f"opt {res.opt}", f"horizon {res.stats.get('horizon', '')}"]
    for rid, path in sorted(res.witness.items()):
        hops = " ".join(f"{','.join(map(str, v))}@{t}" for v, t in path)
        lines.append(f"path {rid} {hops}")
    _write(ns.out, "\n".join(lines) + "\n")
    return VIOLATION if rep.violations else OK


def cmd_bench(ns) -> int:
    with open(ns.config) as fh:
        cfg = ExperimentConfig.from_mapping(parse_config(fh.read()))
    rows = run_experiment(cfg)
    _write(ns.out, rows_to_csv(rows))
    bad = [r for r in rows if r["error"] and not r["error"].startswith("config")]
    for r in bad:
        print(f"{r['algo']} trace={r['trace']} seed={r['seed']}: {r['error']}", file=sys.stderr)
    return VIOLATION if bad else OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gridroute", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-trace", help="write a random trace")
    g.add_argument("--kind", choices=TRACE_KINDS, default="uniform")
    _grid_args(g)
    g.add_argument("--count", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--span", type=int, default=None, help="injection times lie in [0, span)")
    g.add_argument("--slack", type=int, default=None, help="add deadlines t + dist + U[0, slack]")
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_gen_trace)

    s = sub.add_parser("simulate", help="route a trace and replay the result")
    s.add_argument("--algo", choices=ALGOS, required=True)
    s.add_argument("--trace", required=True)
    _grid_args(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gamma", type=float, default=None)
    s.add_argument("--no-domain-check", action="store_true", help="allow B, c outside the analysed range")
    s.add_argument("--out", default="-")
    s.add_argument("--events", default=None, help="write the per-step event log here")
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle", help="exact optimum of a tiny trace")
    o.add_argument("--trace", required=True)
    _grid_args(o)
    o.add_argument("--horizon", type=int, default=None)
    o.add_argument("--out", default="-")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run an experiment matrix from a config file")
    b.add_argument("--config", required=True)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return ns.func(ns)
    except (OSError, TraceParseError, OracleLimitError, ValueError) as exc:
        print(f"gridroute: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
