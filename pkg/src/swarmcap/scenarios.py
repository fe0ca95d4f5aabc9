"""The four data-limited case studies as declarative node assignments.

Each scenario fixes how many points of each condition go to every node,
the validation set and the test set. Bias levels of the feature-biased
case are separate scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CY25_05, CY45_05, Condition, Dataset, kfold, sensor_bias, tamper_labels
from .errors import ConfigError

SCENARIO_NAMES = (
    "balanced",
    "volume_biased",
    "feature_biased_absolute",
    "feature_biased_strong",
    "feature_biased_light",
    "quality_biased",
)


@dataclass(frozen=True)
class Assignment:
    """``count`` points of ``condition``; ``corruption`` is None, 'tamper' or a
    recorded condition tag for sensor bias."""

    condition: Condition
    count: int
    corruption: str | None = None


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    nodes: tuple[tuple[Assignment, ...], ...]
    validation: tuple[Assignment, ...]
    test: tuple[Assignment, ...]
    cv_folds: int = 5

    def demand(self) -> dict[Condition, int]:
        out: dict[Condition, int] = {}
        for a in (*[a for node in self.nodes for a in node], *self.validation, *self.test):
            out[a.condition] = out.get(a.condition, 0) + a.count
        return out


def _a(cond, count, corruption=None):
    return Assignment(cond, count, corruption)


def _feature_biased(name, cy45, cy25):
    return ScenarioSpec(
        name=name,
        nodes=(
            (_a(CY45_05, cy45), _a(CY25_05, cy25)),
            (_a(CY45_05, cy25), _a(CY25_05, cy45)),
        ),
        validation=(_a(CY45_05, 400), _a(CY25_05, 400)),
        test=(_a(CY45_05, 400), _a(CY25_05, 400)),
    )


SCENARIOS = {
    "balanced": ScenarioSpec(
        name="balanced",
        nodes=tuple((_a(CY45_05, 2000),) for _ in range(4)),
        validation=(_a(CY45_05, 1000),),
        test=(_a(CY45_05, 1000),),
    ),
    "volume_biased": ScenarioSpec(
        name="volume_biased",
        nodes=((_a(CY45_05, 1000),), (_a(CY45_05, 2000),), (_a(CY45_05, 5000),)),
        validation=(_a(CY45_05, 1000),),
        test=(_a(CY45_05, 1000),),
    ),
    "feature_biased_absolute": _feature_biased("feature_biased_absolute", 0, 2400),
    "feature_biased_strong": _feature_biased("feature_biased_strong", 200, 2200),
    "feature_biased_light": _feature_biased("feature_biased_light", 800, 1600),
    "quality_biased": ScenarioSpec(
        name="quality_biased",
        nodes=(
            (_a(CY45_05, 2000),),
            (_a(CY45_05, 2000, CY25_05.tag),),
            (_a(CY45_05, 1000), _a(CY45_05, 1000, "tamper")),
        ),
        validation=(_a(CY45_05, 1000),),
        test=(_a(CY45_05, 1000),),
    ),
}


def get_scenario(name: str) -> ScenarioSpec:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}"
        ) from None


@dataclass
class Partition:
    """Pool row indices per role plus the materialized (possibly corrupted) sets."""

    node_indices: list[np.ndarray]
    validation_indices: np.ndarray
    test_indices: np.ndarray
    nodes: list[Dataset]
    validation: Dataset
    test: Dataset

    @property
    def train(self) -> Dataset:
        """Union of node data, i.e. the central-learning train set."""
        return Dataset.concat(self.nodes)


def _role_seed(seed: int, *tags) -> int:
    entropy = [seed] + [int.from_bytes(str(t).encode(), "little") % (2**63) for t in tags]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def partition(pool: Dataset, spec: ScenarioSpec, fold: int, seed: int) -> Partition:
    """Sample node / validation / test sets for one cross-validation fold.

    For every condition the pool rows are split into ``cv_folds`` blocks with
    :func:`kfold`; fold ``f`` reads the blocks starting at block ``f`` and takes
    the test set first, then validation, then node data, without replacement.
    Test blocks of different folds are disjoint whenever the test demand of a
    condition fits in one block.
    """
    if not 0 <= fold < spec.cv_folds:
        raise ConfigError(f"fold {fold} outside [0, {spec.cv_folds})")
    cond_tags = pool.condition.astype(str)
    streams: dict[Condition, list[int]] = {}
    for cond, need in spec.demand().items():
        available = np.flatnonzero(cond_tags == cond.tag)
        if need > len(available):
            raise ConfigError(
                f"scenario {spec.name} needs {need} points of {cond.tag}, pool has {len(available)}"
            )
        if need == 0:
            streams[cond] = []
            continue
        blocks = kfold(available, spec.cv_folds, _role_seed(seed, "cv", cond.tag))
        streams[cond] = list(np.concatenate(blocks[fold:] + blocks[:fold]))

    cursor = {c: 0 for c in streams}

    def draw(assignments):
        idx, parts = [], []
        for a in assignments:
            start = cursor[a.condition]
            rows = np.asarray(streams[a.condition][start:start + a.count], dtype=np.int64)
            cursor[a.condition] = start + a.count
            part = pool.take(rows)
            if a.corruption == "tamper":
                part = tamper_labels(part, _role_seed(seed, "tamper", fold, int(rows[0])))
            elif a.corruption is not None:
                part = sensor_bias(part, Condition.from_tag(a.corruption))
            idx.append(rows)
            parts.append(part)
        return (np.concatenate(idx) if idx else np.zeros(0, np.int64)), Dataset.concat(parts)

    test_idx, test = draw(spec.test)
    val_idx, val = draw(spec.validation)
    node_idx, nodes = [], []
    for assignments in spec.nodes:
        i, d = draw(assignments)
        node_idx.append(i)
        nodes.append(d)
    return Partition(node_idx, val_idx, test_idx, nodes, val, test)
