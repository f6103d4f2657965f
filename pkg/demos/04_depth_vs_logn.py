"""Depth of superposed random cycles grows like log N.

One cycle alone has depth N-1.  Superpose an independent second cycle --
even one missing half its edges -- and the depth collapses to a small
multiple of log N.  This demo samples both regimes across sizes and plots
mean depth against N on a log axis.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cyclecast import depth, sample_thinned_pair, superpose

rng = np.random.default_rng(1)
sizes = [128, 256, 512, 1024, 2048, 4096]
trials = 60

curves = {}
for q in (1.0, 0.5, 0.25):
    means = []
    for n in sizes:
        depths = [
            depth(superpose(*sample_thinned_pair(n, q, rng), n)) for _ in range(trials)
        ]
        means.append(sum(depths) / trials)
    curves[q] = means
    print(f"q={q}: mean depths {['%.1f' % m for m in means]}")

fig, ax = plt.subplots(figsize=(6, 4))
for q, means in curves.items():
    ax.plot(sizes, means, "o-", label=f"keep probability q={q}")
ax.plot(sizes, [3.9 * math.log(n) for n in sizes], "k--", lw=1, label="~4 ln N")
ax.set_xscale("log", base=2)
ax.set_xlabel("peers N")
ax.set_ylabel("mean depth from the source")
ax.legend()
fig.tight_layout()
fig.savefig("depth_vs_logn.png", dpi=120)
print("wrote depth_vs_logn.png")
