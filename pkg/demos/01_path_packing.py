"""Online path packing on a small graph.

Requests arrive one at a time and are routed along their currently lightest
path. Every accept makes the used edges heavier, so later requests drift to
other routes and are eventually refused once all routes are too heavy.
"""

# %%
from gridroute.ipp import PrimalDualState, certify, ipp_process

# a diamond with a shortcut: s -> {u, w} -> t, plus s -> t directly
edges = {"s": [("u", 1), ("w", 1), ("t", 1)], "u": [("t", 1)], "w": [("t", 1)]}
succ = lambda node: edges.get(node, [])

state = PrimalDualState(p_max=2)
for rid in range(8):
    path = ipp_process(state, rid, succ, "s", "t")
    print(f"request {rid}: {'->'.join(path.nodes) if path else 'rejected'}")

# %%
# The run carries its own certificate: the dual cost stays within twice the
# number of accepted requests, and no edge exceeds the logarithmic overload.
report = certify(state)
for key in ("throughput", "primal_cost", "max_relative_load"):
    print(f"{key:>18}: {report[key]:.3f}")
