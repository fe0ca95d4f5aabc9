"""
Credibility-weighted merging
============================

A node earns a point whenever its model scores better on the validation
set than the previous global model, and loses one otherwise. Points turn
into merge weights (p + alpha) / (p + n + alpha).
"""

from swarmcap.model import Architecture, init_params
from swarmcap.swarm import CwpaState, cwpa_step, merge, normalize_weights, weight

good, bad = CwpaState(), CwpaState()
for cycle in range(10):
    good = cwpa_step(good, c_i=-0.004, c_a=-0.005)
    bad = cwpa_step(bad, c_i=-0.03, c_a=-0.005)
print("good node", good, "weight", weight(good))
print("bad node ", bad, "weight", round(weight(bad), 4))
print("normalized", normalize_weights([weight(good), weight(bad)]).round(4))

a, b = init_params(Architecture(), 1), init_params(Architecture(), 2)
m = merge([a, b], [weight(good), weight(bad)])
print("first coordinate", a.values[0], b.values[0], "->", m.values[0])
