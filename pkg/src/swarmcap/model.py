"""Small fully-connected regressor trained with plain numpy.

Parameters live in one flat float64 vector so that nodes can exchange and
average them directly. Canonical layout: for each layer, the weight matrix
of shape ``(n_in, n_out)`` in row-major order, followed by its ``n_out``
biases. Hidden layers use ReLU, the output layer is linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConfigError, InputError, ShapeError

DEFAULT_LAYERS = (3, 12, 8, 1)


@dataclass(frozen=True)
class Architecture:
    layer_sizes: tuple[int, ...] = DEFAULT_LAYERS

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ConfigError(f"need at least 2 layers, got {sizes}")
        if any(s < 1 for s in sizes):
            raise ConfigError(f"layer sizes must be >= 1, got {sizes}")
        if sizes[-1] != 1:
            raise ConfigError(f"output width must be 1, got {sizes[-1]}")

    @property
    def n_params(self) -> int:
        return sum(a * b + b for a, b in zip(self.layer_sizes, self.layer_sizes[1:]))

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]


@lru_cache(maxsize=None)
def _slices(sizes: tuple[int, ...]) -> tuple[tuple[slice, tuple[int, int], slice], ...]:
    out = []
    off = 0
    for n_in, n_out in zip(sizes, sizes[1:]):
        w = slice(off, off + n_in * n_out)
        off += n_in * n_out
        b = slice(off, off + n_out)
        off += n_out
        out.append((w, (n_in, n_out), b))
    return tuple(out)


@dataclass
class ParamVector:
    arch: Architecture
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (self.arch.n_params,):
            raise ShapeError(
                f"expected {self.arch.n_params} values for {self.arch.layer_sizes}, "
                f"got shape {self.values.shape}"
            )

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(W, b) views into ``values``; writing to them mutates the vector."""
        return [
            (self.values[w].reshape(shape), self.values[b])
            for w, shape, b in _slices(self.arch.layer_sizes)
        ]

    def copy(self) -> "ParamVector":
        return ParamVector(self.arch, self.values.copy())

    def __eq__(self, other):
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.arch == other.arch and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32

    def __post_init__(self):
        if not self.learning_rate >= 0:
            # lr = 0 is accepted as a no-op trainer for testing
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class Metrics:
    """Capacity error. ``mape`` is in percent, ``rmse`` in Ah."""

    mape: float
    rmse: float
    n: int


def init_params(arch: Architecture, seed: int) -> ParamVector:
    """Glorot-uniform weights, zero biases.

    Each layer draws from its own PCG64 stream spawned from ``seed``.
    """
    if not isinstance(arch, Architecture):
        arch = Architecture(tuple(arch))
    values = np.zeros(arch.n_params)
    streams = np.random.SeedSequence(seed).spawn(len(arch.layer_sizes) - 1)
    for (w, (n_in, n_out), _), ss in zip(_slices(arch.layer_sizes), streams):
        limit = np.sqrt(6.0 / (n_in + n_out))
        values[w] = np.random.Generator(np.random.PCG64(ss)).uniform(
            -limit, limit, size=n_in * n_out
        )
    return ParamVector(arch, values)


def _check_inputs(params: ParamVector, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != params.arch.n_inputs:
        raise ShapeError(f"expected {params.arch.n_inputs} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise InputError("non-finite feature value")
    return X


def _forward(layers, X):
    acts = [X]
    h = X
    last = len(layers) - 1
    for i, (W, b) in enumerate(layers):
        h = h @ W + b
        if i < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return acts


def predict(params: ParamVector, X) -> np.ndarray | float:
    """Normalized capacity estimate for one feature row or a ``(n, d)`` batch."""
    single = np.ndim(X) == 1
    X = _check_inputs(params, X)
    out = _forward(params.layers(), X)[-1][:, 0]
    return float(out[0]) if single else out


def loss(params: ParamVector, X, y) -> float:
    """Mean squared error on normalized targets."""
    X = _check_inputs(params, X)
    r = _forward(params.layers(), X)[-1][:, 0] - np.asarray(y, dtype=np.float64)
    return float(np.mean(r * r))


def _backprop(params: ParamVector, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    layers = params.layers()
    acts = _forward(layers, X)
    r = acts[-1][:, 0] - y
    grad = np.empty_like(params.values)
    delta = (2.0 / len(y)) * r[:, None]
    spans = _slices(params.arch.layer_sizes)
    for i in range(len(layers) - 1, -1, -1):
        w, shape, b = spans[i]
        grad[w] = (acts[i].T @ delta).ravel()
        grad[b] = delta.sum(axis=0)
        if i:
            delta = (delta @ layers[i][0].T) * (acts[i] > 0.0)
    return grad, float(np.mean(r * r))


def gradient(params: ParamVector, X, y) -> np.ndarray:
    """Gradient of the batch MSE w.r.t. every parameter, canonical layout."""
    X = _check_inputs(params, X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) == 0:
        raise InputError("empty batch")
    if len(y) != len(X):
        raise ShapeError(f"{len(X)} feature rows but {len(y)} targets")
    return _backprop(params, X, y)[0]


@dataclass
class AdamState:
    """Moment estimates carried between epochs of one model; updated in place."""

    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0


def train_epoch(
    params: ParamVector, X, y, hyper: TrainHyper, seed: int, state: AdamState | None = None
) -> tuple[ParamVector, float]:
    """One pass over ``(X, y)`` in seeded-shuffled mini-batches.

    Pass the same ``state`` on every epoch of a model to keep Adam's moments;
    without it the optimizer starts fresh. The returned loss is the
    batch-size-weighted mean of the per-batch MSE seen during the pass.
    """
    X = _check_inputs(params, X)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = len(y)
    if n == 0:
        raise InputError("empty training set")
    if n != len(X):
        raise ShapeError(f"{len(X)} feature rows but {n} targets")

    out = params.copy()
    theta = out.values
    order = np.random.default_rng(seed).permutation(n)
    bs = hyper.batch_size
    lr = hyper.learning_rate
    adam = hyper.optimizer == "adam"
    if adam:
        if state is None:
            state = AdamState()
        if state.m is None:
            state.m = np.zeros_like(theta)
            state.v = np.zeros_like(theta)
        m, v = state.m, state.v
        b1, b2, eps = hyper.beta1, hyper.beta2, hyper.epsilon
    total = 0.0
    for start in range(0, n, bs):
        idx = order[start:start + bs]
        g, batch_loss = _backprop(out, X[idx], y[idx])
        total += batch_loss * len(idx)
        if adam:
            state.t += 1
            t = state.t
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            step = lr * np.sqrt(1.0 - b2**t) / (1.0 - b1**t)
            theta -= step * m / (np.sqrt(v) + eps * np.sqrt(1.0 - b2**t))
        else:
            theta -= lr * g
    return out, total / n


def score(pred, target) -> Metrics:
    """MAPE (percent) and RMSE between capacity predictions and labels in Ah."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    target = np.asarray(target, dtype=np.float64).ravel()
    if len(target) == 0:
        raise InputError("empty evaluation set")
    if pred.shape != target.shape:
        raise ShapeError(f"{len(pred)} predictions for {len(target)} labels")
    if np.any(target <= 0):
        raise InputError("capacity labels must be positive")
    err = pred - target
    return Metrics(
        mape=float(100.0 * np.mean(np.abs(err) / target)),
        rmse=float(np.sqrt(np.mean(err * err))),
        n=len(target),
    )


def evaluate(params: ParamVector, X, capacity, denormalize=None) -> Metrics:
    """Score ``params`` against capacity labels in Ah.

    ``denormalize`` maps raw network outputs back to Ah (for instance
    ``NormStats.denormalize_capacity``); without it outputs are taken as Ah.
    """
    capacity = np.asarray(capacity, dtype=np.float64).ravel()
    if len(capacity) == 0:
        raise InputError("empty evaluation set")
    pred = predict(params, np.atleast_2d(X))
    if denormalize is not None:
        pred = denormalize(pred)
    return score(pred, capacity)


def axpy_params(coefficients: Sequence[float], params_list: Sequence[ParamVector]) -> ParamVector:
    """Element-wise linear combination, accumulated in list order."""
    if len(coefficients) != len(params_list) or not params_list:
        raise ShapeError(
            f"{len(coefficients)} coefficients for {len(params_list)} parameter vectors"
        )
    arch = params_list[0].arch
    for p in params_list[1:]:
        if p.arch != arch:
            raise ShapeError(f"architecture mismatch: {p.arch.layer_sizes} vs {arch.layer_sizes}")
    acc = np.zeros(arch.n_params)
    for c, p in zip(coefficients, params_list):
        acc += float(c) * p.values
    return ParamVector(arch, acc)
