"""Randomized routing with unit buffers and links.

Each run draws tile shifts and a fair coin, then serves only one class of
requests. Throughput therefore varies between seeds; the mean is what the
analysis speaks about.
"""

# %%
import statistics

from gridroute.bench import TraceGenSpec, generate_trace
from gridroute.model import GridSpec
from gridroute.rand_router import run_randomized

grid = GridSpec.line(64, 1, 1)
trace = generate_trace(TraceGenSpec("uniform", 64, 1, 1, 1, count=300, seed=5, span=128))

# %%
# a small gamma keeps more requests after thinning, which makes a short demo livelier
runs = [run_randomized(trace, grid, seed=s, gamma=0.05) for s in range(40)]
by_class = {"near": [], "far+": []}
for res in runs:
    by_class[res.stats["chosen"]].append(res.metrics.throughput)
for cls, vals in by_class.items():
    if vals:
        print(f"coin chose {cls:>4} in {len(vals):2d} runs, mean delivered {statistics.fmean(vals):.1f}")
print("post-injection failures:", sum(r.stats.get("post_injection_failures", 0) for r in runs))
