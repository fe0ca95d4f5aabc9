"""
The capacity network
====================

A 3-12-8-1 ReLU regressor kept as one flat vector of 161 numbers.
"""

import numpy as np

from swarmcap.model import AdamState, Architecture, TrainHyper, gradient, init_params, loss, predict, train_epoch

arch = Architecture()
print("layer sizes", arch.layer_sizes, "->", arch.n_params, "parameters")

p = init_params(arch, seed=0)
for W, b in p.layers():
    print("W", W.shape, "bias", b.shape)

# three normalized features in, one normalized capacity out
X = np.random.default_rng(1).random((64, 3))
y = 0.2 + X @ np.array([0.5, -0.2, 0.3])
print("untrained loss", loss(p, X, y))

# backprop against a finite difference on a single coordinate
g = gradient(p, X, y)
h, i = 1e-5, 17
up, down = p.copy(), p.copy()
up.values[i] += h
down.values[i] -= h
print("d loss / d theta[17]:", g[i], "vs", (loss(up, X, y) - loss(down, X, y)) / (2 * h))

# Adam, carrying its moment estimates across epochs
state = AdamState()
for epoch in range(400):
    p, mean_loss = train_epoch(p, X, y, TrainHyper(), seed=epoch, state=state)
print("after 400 epochs", mean_loss)
print("prediction for the first row", predict(p, X[0]), "target", y[0])
