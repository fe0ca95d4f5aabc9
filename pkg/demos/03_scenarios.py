"""
Splitting the pool across nodes
===============================

Every scenario places fixed numbers of points on each node plus a shared
validation and test set. Folds rotate the test set.
"""

from swarmcap.data import generate_dataset
from swarmcap.scenarios import SCENARIO_NAMES, get_scenario, partition

pool = generate_dataset(0)

for name in SCENARIO_NAMES:
    part = partition(pool, get_scenario(name), fold=0, seed=1)
    nodes = "  ".join(str(d.count_by("recorded_condition")) for d in part.nodes)
    print(f"{name:<24} {nodes}")

# the quality-biased case hides two kinds of bad data
part = partition(pool, get_scenario("quality_biased"), fold=0, seed=1)
n1, n2, n3 = part.nodes
print("node 2 true conditions", set(n2.condition), "recorded as", set(n2.recorded_condition))
print("node 3 tampered labels", int(n3.tampered.sum()), "of", len(n3))
