import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swarmcap.errors import ConfigError, InputError, ShapeError
from swarmcap.model import (
    AdamState,
    Architecture,
    ParamVector,
    TrainHyper,
    axpy_params,
    evaluate,
    gradient,
    init_params,
    loss,
    predict,
    score,
    train_epoch,
)


def fd_gradient(params, X, y, h=1e-5):
    """Central finite differences of the batch MSE, one coordinate at a time."""
    g = np.zeros_like(params.values)
    for i in range(len(g)):
        plus = params.copy()
        minus = params.copy()
        plus.values[i] += h
        minus.values[i] -= h
        g[i] = (loss(plus, X, y) - loss(minus, X, y)) / (2 * h)
    return g


def test_default_architecture_has_161_params():
    arch = Architecture()
    assert arch.layer_sizes == (3, 12, 8, 1)
    assert arch.n_params == 3 * 12 + 12 + 12 * 8 + 8 + 8 * 1 + 1 == 161
    assert len(init_params(arch, 0).values) == 161


@given(st.lists(st.integers(1, 9), min_size=1, max_size=4))
def test_param_count_formula(hidden):
    sizes = (3, *hidden, 1)
    expected = sum(a * b + b for a, b in zip(sizes, sizes[1:]))
    assert Architecture(sizes).n_params == expected
    assert init_params(Architecture(sizes), 3).values.shape == (expected,)


@pytest.mark.parametrize("sizes", [(3,), (3, 0, 1), (3, 4, 2)])
def test_bad_architecture(sizes):
    with pytest.raises(ConfigError):
        Architecture(sizes)


def test_init_is_seeded_and_glorot_bounded():
    a = init_params(Architecture(), 1)
    assert a == init_params(Architecture(), 1)
    assert not np.array_equal(a.values, init_params(Architecture(), 2).values)
    for (W, b), (n_in, n_out) in zip(a.layers(), [(3, 12), (12, 8), (8, 1)]):
        assert np.all(np.abs(W) <= np.sqrt(6 / (n_in + n_out)))
        assert np.all(b == 0)


def test_zero_network_predicts_zero():
    p = ParamVector(Architecture(), np.zeros(161))
    assert predict(p, [0.3, 0.1, 0.9]) == 0.0


def test_constant_network_predicts_output_bias():
    p = init_params(Architecture(), 0)
    p.values[:] = 0.0
    p.values[-1] = 0.42
    assert predict(p, [5.0, -1.0, 2.0]) == 0.42


@pytest.mark.parametrize("x, expected", [
    # hand evaluation: relu(2*1 - 1*0.25 + 0.5) = 2.25, then 3*2.25 - 1
    ((1.0, 0.25), 5.75),
    # relu(-0.5) = 0, output is the bias
    ((0.0, 1.0), -1.0),
])
def test_one_hidden_unit_by_hand(x, expected):
    p = ParamVector(Architecture((2, 1, 1)), np.array([2.0, -1.0, 0.5, 3.0, -1.0]))
    assert predict(p, x) == pytest.approx(expected, abs=1e-15)


def test_predict_rejects_nonfinite():
    with pytest.raises(InputError):
        predict(init_params(Architecture(), 0), [np.nan, 0, 0])


def test_gradient_zero_at_exact_fit():
    p = init_params(Architecture(), 5)
    x = np.array([[0.2, 0.7, 0.4]])
    y = np.array([predict(p, x[0])])
    assert np.linalg.norm(gradient(p, x, y)) <= 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    p = init_params(Architecture(), seed)
    p.values[:] += 0.1 * rng.standard_normal(161)
    X = rng.uniform(-1, 2, size=(7, 3))
    y = rng.uniform(0, 1, size=7)
    g = gradient(p, X, y)
    fd = fd_gradient(p, X, y)
    big = np.maximum(np.abs(g), np.abs(fd)) > 1e-8
    rel = np.abs(g - fd)[big] / np.maximum(np.abs(g), np.abs(fd))[big]
    assert rel.max() < 1e-4


def test_gradient_is_a_batch_mean():
    rng = np.random.default_rng(0)
    p = init_params(Architecture(), 0)
    X, y = rng.random((5, 3)), rng.random(5)
    np.testing.assert_allclose(
        gradient(p, np.vstack([X, X]), np.concatenate([y, y])), gradient(p, X, y), rtol=1e-12, atol=1e-15
    )


def test_gradient_empty_batch():
    with pytest.raises(InputError):
        gradient(init_params(Architecture(), 0), np.zeros((0, 3)), [])


def test_zero_learning_rate_leaves_params():
    rng = np.random.default_rng(1)
    p = init_params(Architecture(), 1)
    X, y = rng.random((50, 3)), rng.random(50)
    q, epoch_loss = train_epoch(p, X, y, TrainHyper(learning_rate=0.0), seed=3)
    assert q == p
    assert epoch_loss == pytest.approx(loss(p, X, y), rel=1e-12)


def test_single_point_overfits():
    p = init_params(Architecture(), 2)
    X, y = np.array([[0.3, 0.6, 0.9]]), np.array([0.75])
    state = AdamState()
    for e in range(500):
        p, epoch_loss = train_epoch(p, X, y, TrainHyper(), seed=e, state=state)
    assert state.t == 500
    assert loss(p, X, y) < 1e-6


def test_training_reduces_loss_on_linear_map():
    rng = np.random.default_rng(4)
    X = rng.random((256, 3))
    y = 0.2 + 0.5 * X[:, 0] - 0.3 * X[:, 1] + 0.1 * X[:, 2]
    p = init_params(Architecture(), 4)
    losses = []
    for e in range(100):
        p, epoch_loss = train_epoch(p, X, y, TrainHyper(), seed=e)
        losses.append(epoch_loss)
    assert losses[-1] < losses[0]


def test_train_epoch_deterministic_and_sgd():
    rng = np.random.default_rng(7)
    X, y = rng.random((40, 3)), rng.random(40)
    p = init_params(Architecture(), 7)
    for hyper in (TrainHyper(), TrainHyper(optimizer="sgd", learning_rate=0.05, batch_size=8)):
        a = train_epoch(p, X, y, hyper, seed=11)
        b = train_epoch(p, X, y, hyper, seed=11)
        assert a[0] == b[0] and a[1] == b[1]
        assert a[0] != p


def test_train_epoch_empty():
    with pytest.raises(InputError):
        train_epoch(init_params(Architecture(), 0), np.zeros((0, 3)), [], TrainHyper(), 0)


def test_score_examples():
    m = score([0.9], [1.0])
    assert m.mape == pytest.approx(10.0) and m.rmse == pytest.approx(0.1) and m.n == 1
    # |1-1.25|/1.25 = 0.2 and 0 -> 10 %; sqrt((0.0625 + 0) / 2)
    m = score([1.0, 2.0], [1.25, 2.0])
    assert m.mape == pytest.approx(10.0)
    assert m.rmse == pytest.approx(np.sqrt(0.0625 / 2)) == pytest.approx(0.1768, abs=1e-4)


def test_evaluate_perfect_predictor_and_denormalization():
    p = init_params(Architecture(), 3)
    X = np.random.default_rng(3).random((20, 3))
    pred = predict(p, X)
    m = evaluate(p, X, 2.0 + pred * 1.5, denormalize=lambda y: 2.0 + y * 1.5)
    assert m.mape == pytest.approx(0, abs=1e-12) and m.rmse == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("labels", [[], [1.0, 0.0]])
def test_evaluate_rejects_bad_labels(labels):
    with pytest.raises(InputError):
        score([1.0] * len(labels), labels)


@given(
    st.lists(st.floats(0.5, 4.0), min_size=1, max_size=20),
    st.floats(0.01, 100.0),
    st.integers(0, 2**16),
)
def test_mape_scale_invariant(labels, c, seed):
    labels = np.array(labels)
    pred = labels * np.random.default_rng(seed).uniform(0.8, 1.2, len(labels))
    assert score(pred * c, labels * c).mape == pytest.approx(score(pred, labels).mape, rel=1e-9, abs=1e-12)


def test_axpy_examples():
    v = init_params(Architecture(), 9)
    assert axpy_params([1.0], [v]) == v
    np.testing.assert_allclose(axpy_params([0.5, 0.5], [v, v]).values, v.values, rtol=0, atol=1e-15)
    np.testing.assert_allclose(axpy_params([2.0, -1.0], [v, v]).values, v.values, rtol=0, atol=1e-15)


def test_axpy_shape_errors():
    v = init_params(Architecture(), 0)
    w = init_params(Architecture((3, 4, 1)), 0)
    with pytest.raises(ShapeError):
        axpy_params([1, 1], [v, w])
    with pytest.raises(ShapeError):
        axpy_params([1], [v, v])


@settings(max_examples=50)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 1000))
def test_axpy_linear(a, b, seed):
    v = init_params(Architecture(), seed)
    lhs = axpy_params([a + b], [v]).values
    rhs = axpy_params([a], [v]).values + axpy_params([b], [v]).values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
