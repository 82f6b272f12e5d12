"""Dataset-to-tensor preprocessing: encoding, standardization, windowing, splits.

The two forecasting horizons use different supervised layouts:

* intra-day (phase 1): n input days of five slot vectors -> next day's five demands;
* daily (phase 2): six daily averages -> the seventh day's average.

Windows are built per split so no sample ever straddles a split boundary, and
scalers are fitted on the training split only.
"""

import json
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from demandlab.simulation.config import SLOTS, WEATHER_KINDS
from demandlab.simulation.engine import Dataset

ORDINAL_EVENT = {"High": 2, "Medium": 1, "Low": 0, "None": 0}

_MAGIC = b"DLWD1\n"


class PreprocessError(ValueError):
    pass


def one_hot_encode(value: str, categories) -> np.ndarray:
    """Binary indicator vector over `categories` with a single 1 at `value`."""
    categories = list(categories)
    if value not in categories:
        raise PreprocessError(f"unknown category {value!r}; expected one of {categories}")
    out = np.zeros(len(categories))
    out[categories.index(value)] = 1.0
    return out


def ordinal_encode_event(importance: str) -> int:
    """High -> 2, Medium -> 1, Low -> 0, None -> 0 (order-preserving)."""
    if importance not in ORDINAL_EVENT:
        raise PreprocessError(f"unknown event importance {importance!r}")
    return ORDINAL_EVENT[importance]


@dataclass
class FeatureSchema:
    """Input layout for one platform's forecaster.

    The target demand column doubles as the autoregressive history channel and
    is standardized together with the numeric features; one-hot and ordinal
    codes stay on their natural 0/1/2 scale.
    """

    target: str
    numeric_features: list
    one_hot_features: list  # (column, ordered category tuple)
    ordinal_features: list = field(default_factory=lambda: ["event_importance"])

    def __post_init__(self):
        groups = [self.numeric_features, [c for c, _ in self.one_hot_features],
                  self.ordinal_features]
        seen = set()
        for group in groups:
            for column in group:
                if column in seen:
                    raise PreprocessError(f"column {column!r} appears in two feature groups")
                seen.add(column)
        if self.target in seen:
            raise PreprocessError("target column must not appear in an encoding group")

    @classmethod
    def for_platform(cls, platform: str, food_categories) -> "FeatureSchema":
        return cls(
            target=f"demand_{platform}",
            numeric_features=[f"price_{platform}", f"lead_time_{platform}",
                              f"distance_{platform}"],
            one_hot_features=[("weather_condition", tuple(WEATHER_KINDS)),
                              ("food_category", tuple(food_categories))],
        )

    @property
    def feature_names(self) -> list:
        names = [self.target] + list(self.numeric_features) + list(self.ordinal_features)
        for column, categories in self.one_hot_features:
            names.extend(f"{column}={c}" for c in categories)
        return names

    @property
    def scaled_features(self) -> list:
        return [self.target] + list(self.numeric_features)


def build_day_tensor(dataset: Dataset, schema: FeatureSchema):
    """Raw (unscaled) feature tensor [days x 5 x features] plus targets [days x 5]."""
    n_days, k = dataset.n_days, len(SLOTS)
    names = schema.feature_names
    features = np.zeros((n_days, k, len(names)))
    idx = 0
    features[:, :, idx] = dataset.column(schema.target).reshape(n_days, k)
    idx += 1
    for column in schema.numeric_features:
        features[:, :, idx] = dataset.column(column).reshape(n_days, k)
        idx += 1
    for column in schema.ordinal_features:
        codes = [ordinal_encode_event(v) for v in dataset.column(column)]
        features[:, :, idx] = np.asarray(codes, dtype=float).reshape(n_days, k)
        idx += 1
    for column, categories in schema.one_hot_features:
        values = dataset.column(column)
        block = np.stack([one_hot_encode(v, categories) for v in values])
        width = len(categories)
        features[:, :, idx:idx + width] = block.reshape(n_days, k, width)
        idx += width
    targets = features[:, :, 0].copy()
    return features, targets, names


class Scaler:
    """Column-wise standardization to zero mean / unit (population) sd."""

    def __init__(self, mean, sd, feature_names, segment):
        self.mean = np.asarray(mean, dtype=float)
        self.sd = np.asarray(sd, dtype=float)
        self.feature_names = list(feature_names)
        self.segment = segment

    @classmethod
    def fit(cls, matrix: np.ndarray, feature_names, segment: str) -> "Scaler":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != len(feature_names):
            raise PreprocessError("scaler expects a [rows x features] matrix")
        mean = matrix.mean(axis=0)
        sd = matrix.std(axis=0)  # population form
        for j, s in enumerate(sd):
            if s <= 0.0:
                raise PreprocessError(
                    f"feature {feature_names[j]!r} has zero variance on segment "
                    f"{segment!r}; cannot standardize")
        return cls(mean, sd, feature_names, segment)

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        return (np.asarray(matrix, dtype=float) - self.mean) / self.sd

    def inverse_transform(self, matrix: np.ndarray) -> np.ndarray:
        return np.asarray(matrix, dtype=float) * self.sd + self.mean

    def _column(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise PreprocessError(f"scaler has no feature {name!r}") from None

    def transform_column(self, name: str, values):
        j = self._column(name)
        return (np.asarray(values, dtype=float) - self.mean[j]) / self.sd[j]

    def inverse_column(self, name: str, values):
        j = self._column(name)
        return np.asarray(values, dtype=float) * self.sd[j] + self.mean[j]

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "sd": self.sd.tolist(),
                "feature_names": self.feature_names, "segment": self.segment}

    @classmethod
    def from_dict(cls, data: dict) -> "Scaler":
        return cls(data["mean"], data["sd"], data["feature_names"], data["segment"])


@dataclass
class WindowedDataset:
    """Supervised tensors: X [samples x timesteps x features], Y [samples x outputs]."""

    phase: int
    X: np.ndarray
    Y: np.ndarray
    sample_days: np.ndarray  # absolute day index of each sample's target
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        self.sample_days = np.asarray(self.sample_days, dtype=int)
        if self.X.shape[0] != self.Y.shape[0] or self.X.shape[0] != len(self.sample_days):
            raise PreprocessError("X, Y and sample_days must agree on sample count")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    def save(self, path) -> None:
        header = json.dumps({
            "phase": self.phase,
            "x_shape": list(self.X.shape),
            "y_shape": list(self.Y.shape),
            "sample_days": self.sample_days.tolist(),
            "feature_names": self.feature_names,
        }).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<Q", len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.X, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.Y, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "WindowedDataset":
        with open(path, "rb") as fh:
            magic = fh.read(len(_MAGIC))
            if magic != _MAGIC:
                raise PreprocessError(f"{path}: not a windowed-dataset container")
            (header_len,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(header_len).decode("utf-8"))
            x_shape = tuple(header["x_shape"])
            y_shape = tuple(header["y_shape"])
            x_count = int(np.prod(x_shape)) if x_shape else 0
            y_count = int(np.prod(y_shape)) if y_shape else 0
            X = np.frombuffer(fh.read(8 * x_count), dtype="<f8").reshape(x_shape)
            Y = np.frombuffer(fh.read(8 * y_count), dtype="<f8").reshape(y_shape)
        return cls(phase=header["phase"], X=X.copy(), Y=Y.copy(),
                   sample_days=np.asarray(header["sample_days"], dtype=int),
                   feature_names=header["feature_names"])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            t, f = self.X.shape[1], self.X.shape[2]
            x_cols = [f"x_t{i}_f{j}" for i in range(t) for j in range(f)]
            y_cols = [f"y_{j}" for j in range(self.Y.shape[1])]
            fh.write(",".join(["sample_day"] + y_cols + x_cols) + "\n")
            for s in range(self.n_samples):
                row = [str(int(self.sample_days[s]))]
                row += [f"{v:.6f}" for v in self.Y[s]]
                row += [f"{v:.6f}" for v in self.X[s].reshape(-1)]
                fh.write(",".join(row) + "\n")


def window_phase1(slot_features: np.ndarray, slot_targets: np.ndarray, n: int = 1,
                  day_offset: int = 0, feature_names=None) -> WindowedDataset:
    """Sliding windows of n days (5n slot vectors) predicting the next day's 5 demands."""
    slot_features = np.asarray(slot_features, dtype=float)
    slot_targets = np.asarray(slot_targets, dtype=float)
    if n < 1:
        raise PreprocessError("window length n must be >= 1")
    n_days, k, n_feat = slot_features.shape
    samples = n_days - n
    if samples <= 0:
        warnings.warn(f"phase-1 windowing needs more than {n} days, got {n_days}; "
                      "returning an empty dataset")
        return WindowedDataset(1, np.zeros((0, k * n, n_feat)), np.zeros((0, k)),
                               np.zeros(0, dtype=int), list(feature_names or []))
    X = np.zeros((samples, k * n, n_feat))
    Y = np.zeros((samples, k))
    for s in range(samples):
        X[s] = slot_features[s:s + n].reshape(k * n, n_feat)
        Y[s] = slot_targets[s + n]
    days = np.arange(samples, dtype=int) + n + day_offset
    return WindowedDataset(1, X, Y, days, list(feature_names or []))


def window_phase2(daily_series: np.ndarray, window: int = 6,
                  day_offset: int = 0) -> WindowedDataset:
    """Six consecutive daily averages predicting the seventh day's average."""
    daily_series = np.asarray(daily_series, dtype=float).reshape(-1)
    n_days = daily_series.shape[0]
    samples = n_days - window
    if samples <= 0:
        raise PreprocessError(f"phase-2 windowing needs more than {window} days, got {n_days}")
    X = np.zeros((samples, window, 1))
    Y = np.zeros((samples, 1))
    for s in range(samples):
        X[s, :, 0] = daily_series[s:s + window]
        Y[s, 0] = daily_series[s + window]
    days = np.arange(samples, dtype=int) + window + day_offset
    return WindowedDataset(2, X, Y, days, ["daily_average"])


def daily_average(day_slots) -> float:
    """Arithmetic mean of one day's five slot demands."""
    values = np.asarray(day_slots, dtype=float).reshape(-1)
    if values.shape[0] != len(SLOTS):
        raise PreprocessError(f"expected {len(SLOTS)} slot values, got {values.shape[0]}")
    return float(values.mean())


def daily_averages(demand_matrix: np.ndarray) -> np.ndarray:
    """Daily average series for a [days x 5] demand matrix."""
    matrix = np.asarray(demand_matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != len(SLOTS):
        raise PreprocessError("expected a [days x 5] demand matrix")
    return matrix.mean(axis=1)


@dataclass
class SplitSpec:
    """Chronological train/validation/test day fractions."""

    train_fraction: float = 0.70
    validation_fraction: float = 0.15
    test_fraction: float = 0.15

    def __post_init__(self):
        total = self.train_fraction + self.validation_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise PreprocessError(f"split fractions sum to {total}, not 1")
        if min(self.train_fraction, self.validation_fraction, self.test_fraction) < 0:
            raise PreprocessError("split fractions must be non-negative")

    def resolve(self, n_days: int):
        """Day counts (train, validation, test); the test split takes the remainder."""
        n_train = int(n_days * self.train_fraction)
        n_val = int(n_days * self.validation_fraction)
        n_test = n_days - n_train - n_val
        if n_train < 1 or n_val < 1 or n_test < 1:
            raise PreprocessError(f"{n_days} days cannot be split {self}")
        return n_train, n_val, n_test


def chronological_split(dataset: Dataset, spec: SplitSpec):
    """Contiguous (train, validation, test) datasets in time order, no shuffling."""
    n_train, n_val, n_test = spec.resolve(dataset.n_days)
    train = dataset.slice_days(0, n_train)
    validation = dataset.slice_days(n_train, n_train + n_val)
    test = dataset.slice_days(n_train + n_val, dataset.n_days)
    assert train.n_days + validation.n_days + test.n_days == dataset.n_days
    return train, validation, test
