"""Deterministic routing on a line with small buffers, checked by replay.

The router plans every packet as a path in the space-time graph. Replay then
executes those plans step by step and counts any buffer or link overflow.
"""

# %%
from gridroute.bench import TraceGenSpec, generate_trace, run_algorithm
from gridroute.model import GridSpec
from gridroute.sim import replay

grid = GridSpec.line(32, 3, 3)
trace = generate_trace(TraceGenSpec("uniform", 32, 1, 3, 3, count=600, seed=1, span=32))
print(f"{len(trace)} requests on a line of {grid.n} nodes, B={grid.B}, c={grid.c}")

# %%
for algo in ("det", "ntg", "greedy"):
    run = run_algorithm(algo, trace, grid)
    rep = replay(run.paths, trace, grid, run.outcomes)
    m = run.metrics
    print(f"{algo:>7}: delivered {m.throughput:3d}  rejected {m.rejected:3d}  preempted {m.preempted:3d}"
          f"  replay violations {len(rep.violations)}")

# %%
# The same trace with deadlines: the deadline-aware router never delivers late.
late_trace = generate_trace(TraceGenSpec("uniform", 32, 1, 3, 3, count=150, seed=1, span=64, slack=2))
run = run_algorithm("det-deadline", late_trace, grid)
late = sum(1 for r in late_trace if run.outcomes[r.id].kind == "delivered" and run.outcomes[r.id].time > r.deadline)
print(f"with deadlines: delivered {run.metrics.throughput}, late {late}")
