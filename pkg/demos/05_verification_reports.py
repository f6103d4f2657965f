"""The Monte Carlo verification harness, in miniature.

Each experiment is a pure function of its parameters and one master seed:
running it twice gives bit-identical reports.  This demo runs a few
fast-scale experiments and prints their human-readable reports; the same
reports serialize to JSON for machines.
"""

from cyclecast import (
    diameter_symmetry_test,
    expansion_mean_test,
    layer_uniformity_test,
)

# Cycles produced by any churn history are uniform over all (N-1)!
# possible cycles -- here N=4, so 6 cells, checked by chi-square.
print(layer_uniformity_test(4, 6000, "mixed", seed=1).to_text())
print()

# Mean coverage growth matches its closed form within Monte Carlo error.
expansion = expansion_mean_test(400, 0.5, 200, 2000, seed=2)
print(expansion.to_text())
print()

# Depth from the source and depth toward the source share one law, and
# the exact diameter never beats the through-the-source bound.
symmetry = diameter_symmetry_test(48, 0.5, 2000, seed=3, allpairs_n=64, allpairs_trials=25)
print(symmetry.to_text())
print()

rerun = expansion_mean_test(400, 0.5, 200, 2000, seed=2)
print("reports are reproducible:", rerun.to_json() == expansion.to_json())
