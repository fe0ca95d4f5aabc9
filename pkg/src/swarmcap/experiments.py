"""Local, central and swarm learning runs over folds and seeds."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset, NormStats, fit_norm
from .errors import ConfigError
from .model import AdamState, Architecture, Metrics, ParamVector, TrainHyper, evaluate, init_params, train_epoch
from .scenarios import Partition, get_scenario, partition
from .swarm import NodeState, SwarmConfig, SyncRecord, ValidationSet, epoch_seed, run_swarm

log = logging.getLogger(__name__)

MODES = ("ll", "sl", "sl_no_cwpa", "cl")


@dataclass(frozen=True)
class ExperimentConfig:
    sync_cycles: int = 100
    local_epochs_per_cycle: int = 1
    alpha: float = 1.0
    hyper: TrainHyper = TrainHyper()
    arch: Architecture = Architecture()

    @property
    def epochs(self) -> int:
        """Training budget of every LL and CL model."""
        return self.sync_cycles * self.local_epochs_per_cycle

    def swarm(self, seed: int, use_cwpa: bool) -> SwarmConfig:
        return SwarmConfig(
            sync_cycles=self.sync_cycles,
            local_epochs_per_cycle=self.local_epochs_per_cycle,
            alpha=self.alpha,
            use_cwpa=use_cwpa,
            hyper=self.hyper,
            seed=seed,
            arch=self.arch,
        )


@dataclass
class Split:
    """Normalized arrays for one (scenario, fold, seed)."""

    partition: Partition
    norm: NormStats
    node_X: list[np.ndarray]
    node_y: list[np.ndarray]
    validation: ValidationSet
    test_X: np.ndarray
    test_capacity: np.ndarray


def prepare(pool: Dataset, case: str, fold: int, seed: int) -> Split:
    """Partition the pool and normalize with stats of the pooled train data."""
    part = partition(pool, get_scenario(case), fold, seed)
    norm = fit_norm(part.train)
    node_X, node_y = [], []
    for d in part.nodes:
        X, y = norm.apply(d)
        node_X.append(X)
        node_y.append(y)
    val_X, _ = norm.apply(part.validation)
    test_X, _ = norm.apply(part.test)
    return Split(
        partition=part,
        norm=norm,
        node_X=node_X,
        node_y=node_y,
        validation=ValidationSet(val_X, part.validation.capacity, norm.denormalize_capacity),
        test_X=test_X,
        test_capacity=part.test.capacity,
    )


def train_isolated(X, y, config: ExperimentConfig, seed: int) -> ParamVector:
    """Same init and per-epoch shuffle seeds as a swarm node, without merging."""
    params = init_params(config.arch, seed)
    state = AdamState()
    for cycle in range(1, config.sync_cycles + 1):
        for e in range(config.local_epochs_per_cycle):
            params, _ = train_epoch(params, X, y, config.hyper, epoch_seed(seed, cycle, e), state)
    return params


def _test(params: ParamVector, split: Split) -> Metrics:
    return evaluate(params, split.test_X, split.test_capacity, split.norm.denormalize_capacity)


def run_ll(split: Split, config: ExperimentConfig, seed: int) -> list[Metrics]:
    return [
        _test(train_isolated(X, y, config, seed), split)
        for X, y in zip(split.node_X, split.node_y)
    ]


def run_cl(split: Split, config: ExperimentConfig, seed: int) -> Metrics:
    X = np.concatenate(split.node_X)
    y = np.concatenate(split.node_y)
    return _test(train_isolated(X, y, config, seed), split)


def run_sl(
    split: Split, config: ExperimentConfig, seed: int, use_cwpa: bool = True
) -> tuple[Metrics, tuple[float, ...], list[SyncRecord]]:
    nodes = [
        NodeState(node_id=i + 1, X=X, y=y)
        for i, (X, y) in enumerate(zip(split.node_X, split.node_y))
    ]
    final, history = run_swarm(nodes, split.validation, config.swarm(seed, use_cwpa))
    return _test(final, split), history[-1].w_norm, history


# ---------------------------------------------------------------------------
# Case studies


@dataclass(frozen=True)
class RunRecord:
    mode: str
    label: str  # "node<k>" for ll, "global" otherwise
    fold: int
    seed: int
    mape: float
    rmse: float


@dataclass(frozen=True)
class WeightRecord:
    mode: str
    label: str
    fold: int
    seed: int
    weight: float


@dataclass
class RunReport:
    scenario: str
    modes: tuple[str, ...]
    folds: int
    seeds: tuple[int, ...]
    records: list[RunRecord] = field(default_factory=list)
    weights: list[WeightRecord] = field(default_factory=list)
    histories: dict = field(default_factory=dict, repr=False)
    wall_time_s: float = 0.0

    def values(self, mode: str, label: str | None = None) -> list[RunRecord]:
        return [r for r in self.records if r.mode == mode and (label is None or r.label == label)]

    def run_mapes(self, mode: str) -> np.ndarray:
        """One value per (fold, seed); LL runs are reduced to the node mean."""
        return np.array([m for m, _ in self._per_run(mode)])

    def _per_run(self, mode: str) -> list[tuple[float, float]]:
        out = []
        for fold in range(self.folds):
            for seed in self.seeds:
                rs = [r for r in self.records if r.mode == mode and r.fold == fold and r.seed == seed]
                if rs:
                    out.append((float(np.mean([r.mape for r in rs])), float(np.mean([r.rmse for r in rs]))))
        return out

    def summary(self) -> list[dict]:
        """Mean and population std over (fold, seed) runs, per mode and label."""
        rows = []
        for mode in self.modes:
            labels = sorted({r.label for r in self.values(mode)}, key=_label_key)
            if mode == "ll":
                labels.append("node_mean")
            for label in labels:
                if label == "node_mean":
                    pairs = self._per_run(mode)
                    mapes = np.array([p[0] for p in pairs])
                    rmses = np.array([p[1] for p in pairs])
                else:
                    rs = self.values(mode, label)
                    mapes = np.array([r.mape for r in rs])
                    rmses = np.array([r.rmse for r in rs])
                rows.append({
                    "mode": mode,
                    "label": label,
                    "mean_mape": float(mapes.mean()),
                    "std_mape": float(mapes.std()),
                    "mean_rmse": float(rmses.mean()),
                    "std_rmse": float(rmses.std()),
                    "n": len(mapes),
                })
        return rows

    def headline(self, mode: str) -> float:
        """Mean test MAPE of a mode (LL uses the node mean)."""
        return float(self.run_mapes(mode).mean())

    def final_weights(self, mode: str = "sl") -> dict[str, list[float]]:
        out: dict[str, list[float]] = {}
        for w in self.weights:
            if w.mode == mode:
                out.setdefault(w.label, []).append(w.weight)
        return out


def _label_key(label: str):
    return (0, int(label[4:])) if label.startswith("node") and label[4:].isdigit() else (1, label)


def _run_one(pool: Dataset, case: str, mode: str, fold: int, seed: int, config: ExperimentConfig):
    split = prepare(pool, case, fold, seed)
    if mode == "ll":
        ms = run_ll(split, config, seed)
        return [RunRecord(mode, f"node{k + 1}", fold, seed, m.mape, m.rmse) for k, m in enumerate(ms)], [], None
    if mode == "cl":
        m = run_cl(split, config, seed)
        return [RunRecord(mode, "global", fold, seed, m.mape, m.rmse)], [], None
    m, w, hist = run_sl(split, config, seed, use_cwpa=(mode == "sl"))
    weights = [WeightRecord(mode, f"node{k + 1}", fold, seed, x) for k, x in enumerate(w)]
    return [RunRecord(mode, "global", fold, seed, m.mape, m.rmse)], weights, hist


def run_case_study(
    pool: Dataset,
    case: str,
    modes: Sequence[str] = ("ll", "sl", "cl"),
    folds: int = 5,
    seeds: Sequence[int] = (1, 2, 3),
    config: ExperimentConfig | None = None,
    jobs: int = 1,
) -> RunReport:
    """Every (fold, seed, mode) run, assembled in canonical order."""
    config = config or ExperimentConfig()
    spec = get_scenario(case)
    bad = [m for m in modes if m not in MODES]
    if bad:
        raise ConfigError(f"unknown mode {bad[0]!r}; choose from {', '.join(MODES)}")
    if not 1 <= folds <= spec.cv_folds:
        raise ConfigError(f"folds must be in [1, {spec.cv_folds}], got {folds}")
    modes = tuple(m for m in MODES if m in modes)
    seeds = tuple(int(s) for s in seeds)
    tasks = [(mode, f, s) for mode in modes for f in range(folds) for s in seeds]

    t0 = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futures = [ex.submit(_run_one, pool, case, m, f, s, config) for m, f, s in tasks]
            results = [fu.result() for fu in futures]
    else:
        results = [_run_one(pool, case, m, f, s, config) for m, f, s in tasks]

    report = RunReport(scenario=case, modes=modes, folds=folds, seeds=seeds)
    for (mode, f, s), (recs, ws, hist) in zip(tasks, results):
        report.records.extend(recs)
        report.weights.extend(ws)
        if hist is not None:
            report.histories[(mode, f, s)] = hist
    report.wall_time_s = time.perf_counter() - t0
    log.info("%s: %d runs in %.1fs", case, len(tasks), report.wall_time_s)
    return report
