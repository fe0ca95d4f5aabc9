"""
A node with corrupted labels
============================

In the quality-biased case half of node 3's labels are shuffled. Its
models keep losing to the global model, so its weight collapses, while
plain averaging lets it drag the global model down.
"""

from swarmcap.data import generate_dataset
from swarmcap.experiments import ExperimentConfig, prepare, run_sl

pool = generate_dataset(0)
split = prepare(pool, "quality_biased", fold=0, seed=1)
config = ExperimentConfig(sync_cycles=40)

with_cwpa, w, hist = run_sl(split, config, seed=1, use_cwpa=True)
plain, _, _ = run_sl(split, config, seed=1, use_cwpa=False)
print(f"credibility-weighted MAPE {with_cwpa.mape:.3f}%")
print(f"uniform averaging MAPE    {plain.mape:.3f}%")
print("final weights", [round(x, 3) for x in w])
print("node 3 counters p/n", hist[-1].p[2], hist[-1].n[2])
