"""Core domain model: flight cycles, failure flags, labels, unit manifest entries.

All types are immutable value objects; they can be shared freely across
threads. Series data is stored as a read-only (18, length) float array whose
row order is ``SIGNAL_NAMES``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

# Flight descriptors first, then sensor measurements. This is also the
# column order of the canonical CSV after the four auxiliary columns.
SIGNAL_NAMES = (
    "alt", "Mach", "TRA", "T2",
    "Wf", "Nf", "Nc", "T24", "T30", "T48", "T50",
    "P15", "P2", "P21", "P24", "Ps30", "P40", "P50",
)

COMPONENTS = ("fan", "lpc", "hpc", "hpt", "lpt")

SUBSET_NAMES = ("DS01", "DS03", "DS04", "DS05", "DS06", "DS07", "DS08a", "DS08c")

SPLITS = ("train", "test")


@dataclass(frozen=True)
class FailureFlags:
    """Which of the five rotating components eventually fail."""

    fan: int = 0
    lpc: int = 0
    hpc: int = 0
    hpt: int = 0
    lpt: int = 0

    def __post_init__(self):
        for name in COMPONENTS:
            value = getattr(self, name)
            if value not in (0, 1):
                raise DataError(f"failure flag {name!r} must be 0 or 1, got {value!r}")

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.fan, self.lpc, self.hpc, self.hpt, self.lpt)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)


_SUBSET_FAILURES = {
    "DS01": FailureFlags(hpt=1),
    "DS03": FailureFlags(hpt=1, lpt=1),
    "DS04": FailureFlags(fan=1),
    "DS05": FailureFlags(hpc=1),
    "DS06": FailureFlags(lpc=1, hpc=1),
    "DS07": FailureFlags(lpt=1),
    "DS08a": FailureFlags(fan=1, lpc=1, hpc=1, hpt=1, lpt=1),
    "DS08c": FailureFlags(fan=1, lpc=1, hpc=1, hpt=1, lpt=1),
}


def failure_flags_for_subset(subset_name: str) -> FailureFlags:
    """Eventual-failure flags for one of the eight known dataset subsets."""
    try:
        return _SUBSET_FAILURES[subset_name]
    except KeyError:
        raise DataError(f"unknown subset name {subset_name!r}") from None


@dataclass(frozen=True, eq=False)
class CycleRecord:
    """One flight cycle: identity fields plus 18 aligned time series."""

    unit_id: int
    cycle_number: int
    flight_class: int
    health_state: int
    series: np.ndarray  # (18, length) float64, rows ordered as SIGNAL_NAMES

    def __post_init__(self):
        if self.unit_id < 1:
            raise DataError(f"unit_id must be positive, got {self.unit_id}")
        if self.cycle_number < 1:
            raise DataError(f"cycle_number must be positive, got {self.cycle_number}")
        if self.flight_class not in (1, 2, 3):
            raise DataError(f"flight_class must be in {{1,2,3}}, got {self.flight_class}")
        if self.health_state not in (0, 1):
            raise DataError(f"health_state must be 0 or 1, got {self.health_state}")
        series = np.ascontiguousarray(self.series, dtype=float)
        if series.ndim != 2 or series.shape[0] != len(SIGNAL_NAMES):
            raise DataError(f"series must have shape (18, length), got {series.shape}")
        if series.shape[1] < 1:
            raise DataError(
                f"unit {self.unit_id} cycle {self.cycle_number}: empty series"
            )
        series.setflags(write=False)
        object.__setattr__(self, "series", series)

    @property
    def length(self) -> int:
        return self.series.shape[1]

    def signal(self, name: str) -> np.ndarray:
        return self.series[SIGNAL_NAMES.index(name)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CycleRecord):
            return NotImplemented
        return (
            self.unit_id == other.unit_id
            and self.cycle_number == other.cycle_number
            and self.flight_class == other.flight_class
            and self.health_state == other.health_state
            and self.series.shape == other.series.shape
            and np.array_equal(self.series, other.series)
        )


@dataclass(frozen=True)
class LabelVector:
    """Ground truth per cycle: health state, eventual failures, and RUL."""

    hs: int
    ef: FailureFlags
    rul: int

    def __post_init__(self):
        if self.hs not in (0, 1):
            raise DataError(f"hs must be 0 or 1, got {self.hs}")
        if self.rul < 0:
            raise DataError(f"rul must be nonnegative, got {self.rul}")

    def as_array(self) -> np.ndarray:
        """[hs, fan, lpc, hpc, hpt, lpt, rul] as floats."""
        return np.concatenate(([float(self.hs)], self.ef.as_array(), [float(self.rul)]))


@dataclass(frozen=True)
class UnitManifestEntry:
    """Per-unit bookkeeping: subset, split assignment, lifetime, failures."""

    unit_id: int
    subset: str
    split: str
    t_eol: int
    failures: FailureFlags

    def __post_init__(self):
        if self.unit_id < 1:
            raise DataError(f"unit_id must be positive, got {self.unit_id}")
        if self.split not in SPLITS:
            raise DataError(f"split must be 'train' or 'test', got {self.split!r}")
        if self.t_eol < 1:
            raise DataError(f"t_eol must be positive, got {self.t_eol}")


def build_label_vector(record: CycleRecord, entry: UnitManifestEntry) -> LabelVector:
    """Label one cycle from its manifest entry: rul = t_eol - cycle_number."""
    if record.unit_id != entry.unit_id:
        raise DataError(
            f"record unit {record.unit_id} does not match manifest unit {entry.unit_id}"
        )
    if record.cycle_number > entry.t_eol:
        raise DataError(
            f"unit {record.unit_id}: cycle_number {record.cycle_number} exceeds "
            f"t_eol {entry.t_eol} (inconsistent manifest)"
        )
    return LabelVector(
        hs=record.health_state,
        ef=entry.failures,
        rul=entry.t_eol - record.cycle_number,
    )


def labels_to_class_matrix(labels: list[LabelVector]) -> np.ndarray:
    """n x 6 bit matrix ordered [hs, fan, lpc, hpc, hpt, lpt]."""
    out = np.empty((len(labels), 6), dtype=float)
    for i, lab in enumerate(labels):
        out[i, 0] = lab.hs
        out[i, 1:] = lab.ef.as_array()
    return out


def labels_to_rul(labels: list[LabelVector]) -> np.ndarray:
    return np.array([lab.rul for lab in labels], dtype=float)
