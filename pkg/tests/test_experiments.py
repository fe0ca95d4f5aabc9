import numpy as np
import pytest

from swarmcap.data import generate_dataset
from swarmcap.errors import ConfigError
from swarmcap.experiments import (
    ExperimentConfig,
    RunRecord,
    RunReport,
    prepare,
    run_case_study,
    run_cl,
    run_ll,
    run_sl,
    train_isolated,
)

TINY = ExperimentConfig(sync_cycles=3)


@pytest.fixture(scope="module")
def pool():
    return generate_dataset(0)


@pytest.fixture(scope="module")
def split(pool):
    return prepare(pool, "volume_biased", 0, 1)


def test_prepare_normalizes_on_train_only(split):
    train_X = np.concatenate(split.node_X)
    assert train_X.min() == 0.0 and train_X.max() == 1.0
    y = np.concatenate(split.node_y)
    assert y.min() == 0.0 and y.max() == 1.0
    assert [len(y) for y in split.node_y] == [1000, 2000, 5000]
    assert len(split.test_capacity) == 1000 and len(split.validation) == 1000


def test_isolated_training_is_seeded(split):
    a = train_isolated(split.node_X[0], split.node_y[0], TINY, 1)
    b = train_isolated(split.node_X[0], split.node_y[0], TINY, 1)
    c = train_isolated(split.node_X[0], split.node_y[0], TINY, 2)
    assert a == b and a != c


def test_modes_run(split):
    ll = run_ll(split, TINY, 1)
    assert len(ll) == 3
    cl = run_cl(split, TINY, 1)
    m, w, hist = run_sl(split, TINY, 1)
    assert len(hist) == 3 and abs(sum(w) - 1) < 1e-12
    for metric in (*ll, cl, m):
        assert metric.n == 1000 and np.isfinite(metric.mape) and metric.mape > 0


def test_case_study_layout(pool):
    r = run_case_study(pool, "feature_biased_light", ("cl", "ll", "sl"), folds=2, seeds=(1, 2), config=TINY)
    assert r.modes == ("ll", "sl", "cl")
    assert len(r.values("ll")) == 2 * 2 * 2
    assert len(r.values("sl")) == len(r.values("cl")) == 4
    assert len(r.weights) == 4 * 2
    assert set(r.histories) == {("sl", f, s) for f in range(2) for s in (1, 2)}
    rows = r.summary()
    assert [(x["mode"], x["label"]) for x in rows] == [
        ("ll", "node1"), ("ll", "node2"), ("ll", "node_mean"), ("sl", "global"), ("cl", "global"),
    ]
    ll_mean = next(x for x in rows if x["label"] == "node_mean")["mean_mape"]
    assert ll_mean == pytest.approx(np.mean([x.mape for x in r.values("ll")]))


def test_case_study_parallel_matches_serial(pool):
    kw = dict(modes=("sl",), folds=1, seeds=(1, 2), config=TINY)
    a = run_case_study(pool, "balanced", **kw)
    b = run_case_study(pool, "balanced", jobs=2, **kw)
    assert a.records == b.records and a.weights == b.weights


def test_summary_uses_population_std():
    r = RunReport("balanced", ("cl",), 1, (1, 2), records=[
        RunRecord("cl", "global", 0, 1, 1.0, 0.1),
        RunRecord("cl", "global", 0, 2, 3.0, 0.3),
    ])
    (row,) = r.summary()
    assert row["mean_mape"] == 2.0 and row["std_mape"] == 1.0
    assert row["std_rmse"] == pytest.approx(0.1)


@pytest.mark.parametrize("kw", [dict(modes=("xx",)), dict(folds=0), dict(folds=6)])
def test_case_study_rejects_bad_config(pool, kw):
    with pytest.raises(ConfigError):
        run_case_study(pool, "balanced", **kw)
