"""Watch a flow graph grow node by node.

A flow graph is distributed like a uniform random cycle superposed with a
second, edge-thinned cycle.  The incremental sampler grows both edge sets
outward from the source, recording how many nodes sit within one hop of
the first t discovered nodes (the coverage z(t)) and the contraction
ratio F(t) = (N-z(t))/(N-t).  Early on, coverage expands at rate about
1 + q; late, the uncovered remainder contracts geometrically.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cyclecast import bfs_distances, depth, expansion_series, fgc_construct
from cyclecast.flowgraph import expansion_mean_formula

N, Q = 2000, 0.5
rng = np.random.default_rng(3)

trace = fgc_construct(N, Q, rng)
z, f = expansion_series(trace)
print(f"n={N} q={Q}: second edge set kept {len(trace.e2)} of {N} edges")

graph = trace.superposed()
print("superposed depth from the source:", depth(graph))

# The discovery order is a breadth ordering: distances along it never
# decrease, so z(t) really is "what one more hop can reach".
dist = bfs_distances(graph, 1)
d_seq = [dist[int(v)] for v in trace.order]
assert all(a <= b for a, b in zip(d_seq, d_seq[1:]))
print("distance along the discovery order is nondecreasing: ok")

ts = np.arange(1, N // 2 + 1)
observed = z[1 : N // 2 + 1] / ts
expected = [expansion_mean_formula(N, Q, int(t)) for t in ts]

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(ts, observed, lw=0.8, label="one trace: z(t)/t")
ax1.plot(ts, expected, "k--", label="mean formula")
ax1.axhline(1 + Q / 2, color="r", ls=":", label="1 + q/2 floor")
ax1.set_xlabel("t")
ax1.set_ylabel("coverage per discovered node")
ax1.legend()
ax2.plot(np.arange(N), f, lw=0.8)
ax2.set_xlabel("t")
ax2.set_ylabel("contraction ratio F(t)")
fig.tight_layout()
fig.savefig("flowgraph_growth.png", dpi=120)
print("wrote flowgraph_growth.png")
