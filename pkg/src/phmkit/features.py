"""Per-cycle statistical feature extraction: the fixed 129-column schema.

For each of the 18 signals we take the mean, the population standard
deviation, and the five-number summary (min, q1, median, q3, max), in that
order, followed by the cycle duration (timestamp count), the cycle number,
and the flight class. Quantiles interpolate linearly at index (m-1)*p.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError
from .types import SIGNAL_NAMES, CycleRecord, LabelVector

STAT_NAMES = ("mean", "std", "min", "q1", "median", "q3", "max")

EXTRA_NAMES = ("duration", "cycle_number", "flight_class")

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{sig}_{stat}" for sig in SIGNAL_NAMES for stat in STAT_NAMES
) + EXTRA_NAMES

N_FEATURES = len(FEATURE_NAMES)  # 18 * 7 + 3 = 129


def schema_hash() -> str:
    """Fingerprint of the feature schema, used to guard persisted artifacts."""
    return hashlib.sha256(",".join(FEATURE_NAMES).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class FeatureMatrix:
    """n x 129 feature values with aligned (unit, cycle) row keys."""

    values: np.ndarray
    row_keys: tuple[tuple[int, int], ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != N_FEATURES:
            raise DataError(f"feature matrix must be n x {N_FEATURES}, got {values.shape}")
        if not np.isfinite(values).all():
            raise DataError("feature matrix contains non-finite entries")
        if len(self.row_keys) != values.shape[0]:
            raise DataError("row_keys length does not match matrix rows")
        if len(set(self.row_keys)) != len(self.row_keys):
            raise DataError("duplicate (unit, cycle) row keys")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def extract_cycle_features(record: CycleRecord) -> np.ndarray:
    """129-vector of per-signal stats plus duration, cycle number, flight class."""
    series = record.series
    out = np.empty(N_FEATURES)
    means = series.mean(axis=1)
    stds = series.std(axis=1)  # population divisor: defined for length-1 cycles
    quants = np.percentile(series, [0, 25, 50, 75, 100], axis=1)
    block = out[: len(SIGNAL_NAMES) * 7].reshape(len(SIGNAL_NAMES), 7)
    block[:, 0] = means
    block[:, 1] = stds
    block[:, 2:] = quants.T
    out[-3] = record.length
    out[-2] = record.cycle_number
    out[-1] = record.flight_class
    if not np.isfinite(out).all():
        raise DataError(
            f"unit {record.unit_id} cycle {record.cycle_number}: non-finite feature"
        )
    return out


def extract_matrix(
    pairs: list[tuple[CycleRecord, LabelVector]],
) -> tuple[FeatureMatrix, list[LabelVector]]:
    """Row i holds the features of pair i; labels come back aligned by index."""
    if not pairs:
        raise DataError("cannot extract features from an empty dataset")
    values = np.empty((len(pairs), N_FEATURES))
    keys = []
    labels = []
    for i, (rec, lab) in enumerate(pairs):
        values[i] = extract_cycle_features(rec)
        keys.append((rec.unit_id, rec.cycle_number))
        labels.append(lab)
    return FeatureMatrix(values=values, row_keys=tuple(keys)), labels


def write_cache(matrix: FeatureMatrix, path) -> None:
    """Persist features as CSV ``unit,cycle,<129 schema names>``."""
    df = pd.DataFrame(matrix.values, columns=list(FEATURE_NAMES))
    df.insert(0, "cycle", [k[1] for k in matrix.row_keys])
    df.insert(0, "unit", [k[0] for k in matrix.row_keys])
    df.to_csv(path, index=False, lineterminator="\n")


def read_cache(path) -> FeatureMatrix:
    df = pd.read_csv(path, float_precision="round_trip")
    expected = ["unit", "cycle"] + list(FEATURE_NAMES)
    if list(df.columns) != expected:
        raise DataError(f"feature cache {path} does not match the 129-feature schema")
    keys = tuple(zip(df["unit"].astype(int), df["cycle"].astype(int)))
    return FeatureMatrix(values=df[list(FEATURE_NAMES)].to_numpy(dtype=float), row_keys=keys)
