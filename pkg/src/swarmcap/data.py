"""Battery relaxation data: conditions, features, synthetic cells, CSV I/O.

A dataset is stored column-wise in :class:`Dataset`; :class:`DataPoint`
is the row view. Features are the population variance, skewness and
maximum of the post-charge relaxation voltage curve.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, InputError, ParseError

CSV_COLUMNS = (
    "cell_id",
    "cycle_index",
    "condition",
    "recorded_condition",
    "feature_variance",
    "feature_skewness",
    "feature_max",
    "capacity_ah",
)

_TAG_RE = re.compile(r"^CY(-?\d+(?:\.\d+)?)-(\d+(?:\.\d+)?)/(\d+(?:\.\d+)?)$")


@dataclass(frozen=True, order=True)
class Condition:
    temperature_c: float
    charge_c_rate: float
    discharge_c_rate: float

    @property
    def tag(self) -> str:
        return f"CY{self.temperature_c:g}-{self.charge_c_rate:g}/{self.discharge_c_rate:g}"

    @classmethod
    def from_tag(cls, tag: str) -> "Condition":
        m = _TAG_RE.match(tag.strip())
        if not m:
            raise ConfigError(f"bad condition tag {tag!r}, expected 'CY{{X}}-{{M}}/{{N}}'")
        return cls(*(float(g) for g in m.groups()))

    def __str__(self):
        return self.tag


CY25_025 = Condition(25, 0.25, 1)
CY25_05 = Condition(25, 0.5, 1)
CY25_1 = Condition(25, 1, 1)
CY45_05 = Condition(45, 0.5, 1)

# (condition, number of cells, number of data points)
POOL_COMPOSITION = (
    (CY25_025, 7, 1853),
    (CY25_05, 19, 3278),
    (CY25_1, 9, 260),
    (CY45_05, 28, 15775),
)
SUPPORTED_CONDITIONS = tuple(c for c, _, _ in POOL_COMPOSITION)


@dataclass(frozen=True)
class FeatureVector:
    variance: float
    skewness: float
    max_voltage: float

    def as_array(self) -> np.ndarray:
        return np.array([self.variance, self.skewness, self.max_voltage])


@dataclass(frozen=True)
class RelaxationCurve:
    time_s: np.ndarray
    voltage_v: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.time_s, dtype=np.float64)
        v = np.asarray(self.voltage_v, dtype=np.float64)
        object.__setattr__(self, "time_s", t)
        object.__setattr__(self, "voltage_v", v)
        if t.shape != v.shape or t.ndim != 1:
            raise InputError("time and voltage must be 1-d and equally long")
        if len(v) < 8:
            raise InputError(f"relaxation curve needs >= 8 samples, got {len(v)}")
        if not np.all(np.isfinite(v)):
            raise InputError("non-finite voltage sample")
        if np.any(np.diff(t) <= 0):
            raise InputError("time must be strictly increasing")


def _moments(v: np.ndarray) -> np.ndarray:
    """Features for each row of ``v`` (shape ``(n_curves, n_samples)``)."""
    # shift by the first sample first; keeps a flat curve exactly flat
    shifted = v - v[:, :1]
    d = shifted - shifted.mean(axis=1, keepdims=True)
    m2 = np.mean(d * d, axis=1)
    m3 = np.mean(d * d * d, axis=1)
    flat = m2 < 1e-15
    skew = np.where(flat, 0.0, m3 / np.where(flat, 1.0, m2) ** 1.5)
    return np.column_stack([m2, skew, v.max(axis=1)])


def extract_features(curve: RelaxationCurve | Sequence[float]) -> FeatureVector:
    """Variance, skewness and maximum of the voltage samples.

    Population moments (divide by n). Skewness is 0 for a flat curve
    (second moment below 1e-15).
    """
    v = curve.voltage_v if isinstance(curve, RelaxationCurve) else np.asarray(curve, float)
    if v.ndim != 1 or len(v) == 0:
        raise InputError("expected a non-empty 1-d voltage sequence")
    if not np.all(np.isfinite(v)):
        raise InputError("non-finite voltage sample")
    return FeatureVector(*(float(x) for x in _moments(v[None, :])[0]))


# ---------------------------------------------------------------------------
# Dataset container


@dataclass(frozen=True)
class DataPoint:
    cell_id: str
    cycle_index: int
    condition: Condition
    recorded_condition: Condition
    features: FeatureVector
    capacity: float
    tampered: bool = False


@dataclass(eq=False)
class Dataset:
    """Column store of data points. ``tampered`` is generator-side truth."""

    cell_id: np.ndarray
    cycle_index: np.ndarray
    condition: np.ndarray
    recorded_condition: np.ndarray
    features: np.ndarray
    capacity: np.ndarray
    tampered: np.ndarray = None

    def __post_init__(self):
        n = len(self.capacity)
        self.cell_id = np.asarray(self.cell_id, dtype=object).reshape(n)
        self.cycle_index = np.asarray(self.cycle_index, dtype=np.int64).reshape(n)
        self.condition = np.asarray(self.condition, dtype=object).reshape(n)
        self.recorded_condition = np.asarray(self.recorded_condition, dtype=object).reshape(n)
        self.features = np.asarray(self.features, dtype=np.float64).reshape(n, 3)
        self.capacity = np.asarray(self.capacity, dtype=np.float64).reshape(n)
        if self.tampered is None:
            self.tampered = np.zeros(n, dtype=bool)
        self.tampered = np.asarray(self.tampered, dtype=bool).reshape(n)

    @classmethod
    def empty(cls) -> "Dataset":
        return cls([], [], [], [], np.zeros((0, 3)), [], [])

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty()
        return cls(**{
            f.name: np.concatenate([getattr(p, f.name) for p in parts])
            for f in dataclasses.fields(cls)
        })

    def __len__(self) -> int:
        return len(self.capacity)

    def __getitem__(self, i: int) -> DataPoint:
        return DataPoint(
            cell_id=self.cell_id[i],
            cycle_index=int(self.cycle_index[i]),
            condition=Condition.from_tag(self.condition[i]),
            recorded_condition=Condition.from_tag(self.recorded_condition[i]),
            features=FeatureVector(*(float(x) for x in self.features[i])),
            capacity=float(self.capacity[i]),
            tampered=bool(self.tampered[i]),
        )

    def __iter__(self) -> Iterator[DataPoint]:
        return (self[i] for i in range(len(self)))

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(**{f.name: getattr(self, f.name)[idx] for f in dataclasses.fields(self)})

    def replace(self, **changes) -> "Dataset":
        cols = {f.name: getattr(self, f.name).copy() for f in dataclasses.fields(self)}
        cols.update(changes)
        return Dataset(**cols)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name))
            for f in dataclasses.fields(self)
        )

    def count_by(self, column: str = "condition") -> dict[str, int]:
        tags, counts = np.unique(getattr(self, column).astype(str), return_counts=True)
        return {str(t): int(c) for t, c in zip(tags, counts)}

    @classmethod
    def from_points(cls, points: Sequence[DataPoint]) -> "Dataset":
        if not points:
            return cls.empty()
        return cls(
            cell_id=[p.cell_id for p in points],
            cycle_index=[p.cycle_index for p in points],
            condition=[p.condition.tag for p in points],
            recorded_condition=[p.recorded_condition.tag for p in points],
            features=[p.features.as_array() for p in points],
            capacity=[p.capacity for p in points],
            tampered=[p.tampered for p in points],
        )


# ---------------------------------------------------------------------------
# Synthetic generator


@dataclass(frozen=True)
class ConditionEffect:
    fade_offset: float = 0.0
    tau1_offset_s: float = 0.0
    tau2_offset_s: float = 0.0
    amp_scale: float = 1.0


_DEFAULT_EFFECTS = {
    CY25_025.tag: ConditionEffect(fade_offset=-0.04, tau1_offset_s=4.0, tau2_offset_s=40.0, amp_scale=1.3),
    CY25_05.tag: ConditionEffect(fade_offset=-0.03, tau1_offset_s=4.0, tau2_offset_s=40.0, amp_scale=1.3),
    CY25_1.tag: ConditionEffect(fade_offset=0.0, tau1_offset_s=4.0, tau2_offset_s=40.0, amp_scale=1.3),
    CY45_05.tag: ConditionEffect(),
}


@dataclass(frozen=True)
class GeneratorParams:
    """Constants of the synthetic degradation and relaxation model.

    Capacity fade per cell: ``Q(k) = Q0 * (1 - a * (k/K)**b)`` with
    ``a ~ U(fade_depth) + fade_offset`` and ``b ~ U(fade_shape)``.
    Relaxation: ``V(t) = V_ocv(SOH) + A1 exp(-t/tau1) + A2 exp(-t/tau2) + noise``
    with ``V_ocv`` affine in SOH, amplitudes affine in ``1 - SOH`` and time
    constants scaled by ``2 - SOH``.

    Each cell also draws a standard normal quality score ``z``: its nominal
    capacity is scaled by ``1 + q0_cell_spread * z`` and both amplitudes by
    ``exp(-amp_quality_coupling * z)``. Without it every cell shares one
    feature-to-capacity map and a few hundred points already saturate a model.
    """

    q0_ah: float = 3.5
    q0_cell_spread: float = 0.03
    fade_depth: tuple[float, float] = (0.15, 0.35)
    fade_shape: tuple[float, float] = (0.8, 1.2)
    tau1_s: float = 10.0
    tau2_s: float = 100.0
    v_ocv: tuple[float, float] = (3.9, 4.2)
    amp1_v: float = 0.010
    amp2_v: float = 0.015
    amp_aging: float = 3.0
    amp_cell_spread: float = 0.0
    amp_quality_coupling: float = 0.3
    noise_v: float = 0.001
    n_samples: int = 120
    duration_s: float = 1800.0
    conditions: dict = field(default_factory=lambda: dict(_DEFAULT_EFFECTS))

    @classmethod
    def from_overrides(cls, overrides: dict | None = None) -> "GeneratorParams":
        """Defaults with ``overrides`` applied. Unknown keys raise ``ConfigError``."""
        if not overrides:
            return cls()
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in overrides.items():
            if key not in known:
                raise ConfigError(f"unknown generator key {key!r}")
            if key == "conditions":
                effects = dict(_DEFAULT_EFFECTS)
                eknown = {f.name for f in dataclasses.fields(ConditionEffect)}
                for tag, eff in value.items():
                    if tag not in effects:
                        raise ConfigError(f"unknown generator key 'conditions.{tag}'")
                    bad = set(eff) - eknown
                    if bad:
                        raise ConfigError(f"unknown generator key 'conditions.{tag}.{sorted(bad)[0]}'")
                    effects[tag] = dataclasses.replace(effects[tag], **eff)
                value = effects
            elif key in ("fade_depth", "fade_shape", "v_ocv"):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["conditions"] = {k: dataclasses.asdict(v) for k, v in self.conditions.items()}
        for k in ("fade_depth", "fade_shape", "v_ocv"):
            d[k] = list(d[k])
        return d


def cell_seed(dataset_seed: int, cell_index: int) -> int:
    return int(np.random.SeedSequence([dataset_seed, cell_index]).generate_state(1, np.uint64)[0])


def generate_cell(
    condition: Condition,
    cell_seed: int,
    n_cycles: int,
    params: GeneratorParams | None = None,
    cell_id: str | None = None,
) -> Dataset:
    """Simulate one cell: ``n_cycles`` relaxation curves reduced to features."""
    params = params or GeneratorParams()
    if condition.tag not in params.conditions:
        raise ConfigError(f"unsupported condition {condition.tag}")
    if n_cycles < 1:
        raise InputError("n_cycles must be >= 1")
    eff = params.conditions[condition.tag]
    rng = np.random.default_rng(cell_seed)

    a = np.clip(rng.uniform(*params.fade_depth) + eff.fade_offset, 0.0, 0.95)
    b = rng.uniform(*params.fade_shape)
    quality = rng.standard_normal()
    q0 = params.q0_ah * (1.0 + params.q0_cell_spread * quality)
    # higher-capacity cells relax with smaller polarization amplitudes
    amp_cell = (1.0 + params.amp_cell_spread * rng.standard_normal(2)) * np.exp(
        -params.amp_quality_coupling * quality
    )

    k = np.arange(n_cycles)
    soh = 1.0 - a * (k / n_cycles) ** b
    capacity = q0 * soh

    t = np.linspace(0.0, params.duration_s, params.n_samples)
    lo, hi = params.v_ocv
    v_ocv = lo + (hi - lo) * soh
    aging = 1.0 + params.amp_aging * (1.0 - soh)
    a1 = params.amp1_v * eff.amp_scale * amp_cell[0] * aging
    a2 = params.amp2_v * eff.amp_scale * amp_cell[1] * aging
    tau1 = (params.tau1_s + eff.tau1_offset_s) * (2.0 - soh)
    tau2 = (params.tau2_s + eff.tau2_offset_s) * (2.0 - soh)
    v = (
        v_ocv[:, None]
        + a1[:, None] * np.exp(-t[None, :] / tau1[:, None])
        + a2[:, None] * np.exp(-t[None, :] / tau2[:, None])
    )
    if params.noise_v > 0:
        v = v + params.noise_v * rng.standard_normal(v.shape)

    tag = condition.tag
    cid = cell_id if cell_id is not None else f"{tag}:s{cell_seed}"
    return Dataset(
        cell_id=[cid] * n_cycles,
        cycle_index=k,
        condition=[tag] * n_cycles,
        recorded_condition=[tag] * n_cycles,
        features=_moments(v),
        capacity=capacity,
    )


def cycles_per_cell(total: int, cells: int) -> list[int]:
    base, extra = divmod(total, cells)
    return [base + (1 if j < extra else 0) for j in range(cells)]


def generate_dataset(seed: int = 0, params: GeneratorParams | None = None) -> Dataset:
    """Synthetic pool with the per-condition cell and point counts of POOL_COMPOSITION."""
    params = params or GeneratorParams()
    parts = []
    cell_index = 0
    for cond, n_cells, total in POOL_COMPOSITION:
        for j, n in enumerate(cycles_per_cell(total, n_cells)):
            parts.append(generate_cell(
                cond, cell_seed(seed, cell_index), n, params, cell_id=f"{cond.tag}:c{j:02d}"
            ))
            cell_index += 1
    return Dataset.concat(parts)


# ---------------------------------------------------------------------------
# Corruption operators


def tamper_labels(points: Dataset, seed: int) -> Dataset:
    """Shuffle capacity labels with a seeded permutation free of fixed points."""
    n = len(points)
    if n < 2:
        raise InputError("tampering needs at least 2 points")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fixed = np.flatnonzero(perm == np.arange(n))
    if len(fixed) >= 2:
        perm[fixed] = perm[np.roll(fixed, 1)]
    elif len(fixed) == 1:
        i = fixed[0]
        j = (i + 1 + rng.integers(n - 1)) % n
        perm[i], perm[j] = perm[j], perm[i]
    return points.replace(capacity=points.capacity[perm], tampered=np.ones(n, dtype=bool))


def sensor_bias(points: Dataset, recorded: Condition) -> Dataset:
    """Overwrite the recorded condition; features and labels stay untouched."""
    return points.replace(recorded_condition=np.full(len(points), recorded.tag, dtype=object))


# ---------------------------------------------------------------------------
# Folds and normalization


def kfold(indices, k: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle, then ``k`` contiguous folds whose sizes differ by <= 1."""
    indices = np.asarray(indices)
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    if k > len(indices):
        raise InputError(f"k={k} exceeds pool size {len(indices)}")
    shuffled = indices[np.random.default_rng(seed).permutation(len(indices))]
    return np.array_split(shuffled, k)


@dataclass(frozen=True)
class NormStats:
    feature_min: tuple[float, ...]
    feature_max: tuple[float, ...]
    capacity_min: float
    capacity_max: float

    def normalize_features(self, features) -> np.ndarray:
        lo = np.asarray(self.feature_min)
        return (np.asarray(features, float) - lo) / (np.asarray(self.feature_max) - lo)

    def normalize_capacity(self, capacity) -> np.ndarray:
        return (np.asarray(capacity, float) - self.capacity_min) / (self.capacity_max - self.capacity_min)

    def denormalize_capacity(self, y) -> np.ndarray:
        return np.asarray(y, float) * (self.capacity_max - self.capacity_min) + self.capacity_min

    def apply(self, points: Dataset) -> tuple[np.ndarray, np.ndarray]:
        return self.normalize_features(points.features), self.normalize_capacity(points.capacity)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}


def fit_norm(train: Dataset) -> NormStats:
    """Min-max statistics of features and capacity."""
    if len(train) == 0:
        raise InputError("cannot fit normalization on an empty set")
    fmin = train.features.min(axis=0)
    fmax = train.features.max(axis=0)
    names = ("variance", "skewness", "max_voltage")
    for name, lo, hi in zip(names, fmin, fmax):
        if not hi > lo:
            raise ConfigError(f"feature {name} is constant in the training data")
    cmin, cmax = float(train.capacity.min()), float(train.capacity.max())
    if not cmax > cmin:
        raise ConfigError("capacity is constant in the training data")
    return NormStats(tuple(map(float, fmin)), tuple(map(float, fmax)), cmin, cmax)


def apply_norm(stats: NormStats, points: Dataset) -> tuple[np.ndarray, np.ndarray]:
    return stats.apply(points)


# ---------------------------------------------------------------------------
# CSV


def save_csv(points: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i in range(len(points)):
            f = points.features[i]
            w.writerow([
                points.cell_id[i],
                int(points.cycle_index[i]),
                points.condition[i],
                points.recorded_condition[i],
                repr(float(f[0])),
                repr(float(f[1])),
                repr(float(f[2])),
                repr(float(points.capacity[i])),
            ])


def load_csv(path) -> Dataset:
    """Read a dataset CSV. Errors name the 1-based file line."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header", row=1) from None
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"missing column {missing[0]!r}", row=1)
        unknown = [c for c in header if c not in CSV_COLUMNS]
        if unknown:
            raise ParseError(f"unknown column {unknown[0]!r}", row=1)
        pos = [header.index(c) for c in CSV_COLUMNS]
        cols = {c: [] for c in CSV_COLUMNS}
        for line, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=line)
            vals = [row[p] for p in pos]
            try:
                cycle = int(vals[1])
                Condition.from_tag(vals[2])
                Condition.from_tag(vals[3])
                nums = [float(x) for x in vals[4:]]
            except (ValueError, ConfigError) as exc:
                raise ParseError(str(exc), row=line) from None
            if cycle < 0:
                raise ParseError("negative cycle_index", row=line)
            if not all(np.isfinite(nums)):
                raise ParseError("non-finite number", row=line)
            if nums[3] <= 0:
                raise ParseError(f"capacity_ah must be positive, got {vals[7]}", row=line)
            cols["cell_id"].append(vals[0])
            cols["cycle_index"].append(cycle)
            cols["condition"].append(vals[2])
            cols["recorded_condition"].append(vals[3])
            cols["feature_variance"].append(nums[0])
            cols["feature_skewness"].append(nums[1])
            cols["feature_max"].append(nums[2])
            cols["capacity_ah"].append(nums[3])
    n = len(cols["capacity_ah"])
    return Dataset(
        cell_id=cols["cell_id"],
        cycle_index=cols["cycle_index"],
        condition=cols["condition"],
        recorded_condition=cols["recorded_condition"],
        features=np.column_stack([
            cols["feature_variance"], cols["feature_skewness"], cols["feature_max"]
        ]) if n else np.zeros((0, 3)),
        capacity=cols["capacity_ah"],
    )


def load_generator_config(path) -> GeneratorParams:
    with open(path, encoding="utf-8") as fh:
        return GeneratorParams.from_overrides(json.load(fh))


def write_generator_manifest(params: GeneratorParams, seed: int, path) -> None:
    Path(path).write_text(json.dumps({"seed": seed, "params": params.to_dict()}, indent=2, sort_keys=True) + "\n")
