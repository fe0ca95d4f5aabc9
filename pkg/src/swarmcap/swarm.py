"""Swarm learning rounds with credibility-weighted parameter merging.

Each round every node trains from its current parameters, is scored on
the shared validation set, and its credibility is compared against the
score of the previous global model. A node that beats the global model
gets its positive counter bumped, otherwise its negative counter. Raw
merge weights are ``(p + alpha) / (p + n + alpha)``; the merged model is
the normalized weighted average, which every node then adopts.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateMergeError, InputError
from .model import (
    AdamState,
    Architecture,
    ParamVector,
    TrainHyper,
    axpy_params,
    init_params,
    predict,
    train_epoch,
)

HISTORY_COLUMNS = ("cycle", "node_id", "c_i", "c_a", "p", "n", "w_raw", "w_norm", "global_val_mape")


@dataclass(frozen=True)
class CwpaState:
    p: int = 0
    n: int = 0
    alpha: float = 1.0

    def __post_init__(self):
        if self.p < 0 or self.n < 0:
            raise InputError("CWPA counters must be nonnegative")
        if self.alpha < 0:
            raise InputError("alpha must be nonnegative")


@dataclass(frozen=True)
class ValidationSet:
    """Normalized features plus capacity labels in Ah."""

    X: np.ndarray
    capacity: np.ndarray
    denormalize: object = None

    def __len__(self):
        return len(self.capacity)


@dataclass
class NodeState:
    node_id: int
    X: np.ndarray
    y: np.ndarray
    params: ParamVector | None = None
    cwpa: CwpaState = field(default_factory=CwpaState)
    optimizer: AdamState = field(default_factory=AdamState, repr=False)

    def __post_init__(self):
        if len(self.y) == 0:
            raise InputError(f"node {self.node_id} has no local data")


@dataclass(frozen=True)
class SwarmConfig:
    sync_cycles: int = 100
    local_epochs_per_cycle: int = 1
    alpha: float = 1.0
    use_cwpa: bool = True
    hyper: TrainHyper = TrainHyper()
    seed: int = 0
    arch: Architecture = Architecture()

    def __post_init__(self):
        if self.sync_cycles < 1:
            raise InputError("sync_cycles must be >= 1")
        if self.local_epochs_per_cycle < 1:
            raise InputError("local_epochs_per_cycle must be >= 1")


@dataclass(frozen=True)
class SyncRecord:
    cycle: int
    coordinator: int
    node_ids: tuple[int, ...]
    c_i: tuple[float, ...]
    c_a: float
    p: tuple[int, ...]
    n: tuple[int, ...]
    w_raw: tuple[float, ...]
    w_norm: tuple[float, ...]
    global_val_mape: float


def _val_mape(params: ParamVector, validation: ValidationSet) -> float:
    if len(validation) == 0:
        raise InputError("empty validation set")
    pred = predict(params, validation.X)
    if validation.denormalize is not None:
        pred = validation.denormalize(pred)
    q = validation.capacity
    return float(np.mean(np.abs(pred - q) / q))


def credibility(params: ParamVector, validation: ValidationSet) -> float:
    """Negated validation MAPE as a fraction; 0 is a perfect model."""
    return -_val_mape(params, validation)


def cwpa_step(state: CwpaState, c_i: float, c_a: float) -> CwpaState:
    if not (math.isfinite(c_i) and math.isfinite(c_a)):
        raise InputError(f"non-finite credibility score ({c_i}, {c_a})")
    if c_i > c_a:
        return dataclasses.replace(state, p=state.p + 1)
    return dataclasses.replace(state, n=state.n + 1)


def weight(state: CwpaState) -> float:
    denom = state.p + state.n + state.alpha
    if denom == 0:
        raise DegenerateMergeError("weight undefined for p = n = 0 with alpha = 0")
    return (state.p + state.alpha) / denom


def normalize_weights(raw_weights: Sequence[float]) -> np.ndarray:
    raw = np.asarray(raw_weights, dtype=np.float64)
    if np.any(raw < 0) or not np.all(np.isfinite(raw)):
        raise DegenerateMergeError(f"merge weights must be finite and nonnegative: {raw}")
    total = raw.sum()
    if not total > 0:
        raise DegenerateMergeError("all merge weights are zero")
    return raw / total


def merge(params_list: Sequence[ParamVector], raw_weights: Sequence[float]) -> ParamVector:
    """Normalized weighted average, accumulated in the given (node id) order."""
    if len(params_list) != len(raw_weights) or not params_list:
        raise InputError(f"{len(raw_weights)} weights for {len(params_list)} models")
    return axpy_params(normalize_weights(raw_weights), params_list)


def epoch_seed(seed: int, cycle: int, epoch: int) -> int:
    """Shuffle seed for one local epoch; independent of the node id."""
    return int(np.random.SeedSequence([seed, cycle, epoch]).generate_state(1, np.uint64)[0])


def sync_round(
    nodes: Sequence[NodeState],
    global_prev: ParamVector,
    validation: ValidationSet,
    config: SwarmConfig,
    cycle: int = 1,
    coordinator: int | None = None,
) -> tuple[ParamVector, SyncRecord]:
    """One train / score / merge round. Mutates ``nodes`` in place."""
    if not nodes:
        raise InputError("no nodes")
    nodes = sorted(nodes, key=lambda nd: nd.node_id)
    for nd in nodes:
        params = nd.params if nd.params is not None else global_prev
        for e in range(config.local_epochs_per_cycle):
            params, _ = train_epoch(
                params, nd.X, nd.y, config.hyper, epoch_seed(config.seed, cycle, e), nd.optimizer
            )
        nd.params = params

    c_a = credibility(global_prev, validation)
    c_i = []
    for nd in nodes:
        c = credibility(nd.params, validation)
        c_i.append(c)
        nd.cwpa = cwpa_step(nd.cwpa, c, c_a)

    if config.use_cwpa:
        w_raw = [weight(nd.cwpa) for nd in nodes]
    else:
        w_raw = [1.0] * len(nodes)
    w_norm = normalize_weights(w_raw)
    global_new = axpy_params(w_norm, [nd.params for nd in nodes])
    for nd in nodes:
        nd.params = global_new.copy()

    record = SyncRecord(
        cycle=cycle,
        coordinator=nodes[0].node_id if coordinator is None else coordinator,
        node_ids=tuple(nd.node_id for nd in nodes),
        c_i=tuple(c_i),
        c_a=c_a,
        p=tuple(nd.cwpa.p for nd in nodes),
        n=tuple(nd.cwpa.n for nd in nodes),
        w_raw=tuple(float(w) for w in w_raw),
        w_norm=tuple(float(w) for w in w_norm),
        global_val_mape=100.0 * _val_mape(global_new, validation),
    )
    return global_new, record


def run_swarm(
    nodes: Sequence[NodeState],
    validation: ValidationSet,
    config: SwarmConfig,
    coordinator_order: Sequence[int] | None = None,
) -> tuple[ParamVector, list[SyncRecord]]:
    """Initialize every node from one shared seed, then run ``sync_cycles`` rounds.

    The coordinator for round ``c`` is taken round-robin from
    ``coordinator_order`` (default: ascending node ids). It is recorded in the
    history only and never touches the numbers.
    """
    ids = [nd.node_id for nd in nodes]
    if len(set(ids)) != len(ids):
        raise InputError(f"duplicate node ids {ids}")
    order = list(coordinator_order) if coordinator_order is not None else sorted(ids)
    global_params = init_params(config.arch, config.seed)
    for nd in nodes:
        nd.params = global_params.copy()
        nd.cwpa = CwpaState(alpha=config.alpha)
        nd.optimizer = AdamState()
    history = []
    for cycle in range(1, config.sync_cycles + 1):
        global_params, rec = sync_round(
            nodes, global_params, validation, config,
            cycle=cycle, coordinator=order[(cycle - 1) % len(order)],
        )
        history.append(rec)
    return global_params, history


# ---------------------------------------------------------------------------
# History export


def history_rows(history: Sequence[SyncRecord]) -> list[dict]:
    rows = []
    for rec in history:
        for k, node_id in enumerate(rec.node_ids):
            rows.append({
                "cycle": rec.cycle,
                "node_id": node_id,
                "c_i": rec.c_i[k],
                "c_a": rec.c_a,
                "p": rec.p[k],
                "n": rec.n[k],
                "w_raw": rec.w_raw[k],
                "w_norm": rec.w_norm[k],
                "global_val_mape": rec.global_val_mape,
            })
    return rows


def history_to_csv(history: Sequence[SyncRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_COLUMNS)
    for row in history_rows(history):
        w.writerow([repr(v) if isinstance(v, float) else v for v in row.values()])
    return buf.getvalue()


def history_to_json(history: Sequence[SyncRecord]) -> str:
    return json.dumps([dataclasses.asdict(r) for r in history], indent=1) + "\n"
