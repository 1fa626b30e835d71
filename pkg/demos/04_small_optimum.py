"""Comparing online policies with the exact optimum on tiny instances."""

# %%
from gridroute.baselines import brute_force_opt, delivered_by, greedy_fifo, nearest_to_go
from gridroute.bench import TraceGenSpec, generate_trace
from gridroute.model import GridSpec

for B in (0, 1):
    grid = GridSpec.line(6, B, 1)
    gaps = {"ntg": 0, "greedy": 0}
    for seed in range(30):
        trace = generate_trace(TraceGenSpec("uniform", 6, 1, B, 1, count=8, seed=seed, span=4))
        best = brute_force_opt(trace, grid)
        horizon = best.stats["horizon"]
        for name, fn in (("ntg", nearest_to_go), ("greedy", greedy_fifo)):
            gaps[name] += best.opt - delivered_by(fn(trace, grid).outcomes, horizon)
    print(f"B={B}: packets lost against the optimum over 30 traces: {gaps}")

# Without buffers nearest-to-go never loses anything; with a buffer the
# optimum can sometimes do better by holding packets back.
