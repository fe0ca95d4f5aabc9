"""
Swarm, local and central learning
=================================

One fold and one seed of the volume-biased case with a short training
budget. The swarm model should land close to the central one while the
smallest node on its own does worst.
"""

from swarmcap.data import generate_dataset
from swarmcap.experiments import ExperimentConfig, prepare, run_cl, run_ll, run_sl

pool = generate_dataset(0)
split = prepare(pool, "volume_biased", fold=0, seed=1)
config = ExperimentConfig(sync_cycles=30)

for k, m in enumerate(run_ll(split, config, seed=1), start=1):
    print(f"LL node{k} ({len(split.node_y[k - 1])} points)  MAPE {m.mape:.3f}%")
m, weights, history = run_sl(split, config, seed=1)
print(f"SL  MAPE {m.mape:.3f}%  final weights {[round(w, 3) for w in weights]}")
print(f"CL  MAPE {run_cl(split, config, seed=1).mape:.3f}%")

# validation error of the merged model every 10 rounds
for rec in history[9::10]:
    print(f"  round {rec.cycle:>3}  global validation MAPE {rec.global_val_mape:.3f}%")
