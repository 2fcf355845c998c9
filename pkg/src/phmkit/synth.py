"""Deterministic synthetic run-to-failure fleet generator.

Produces a desk-scale fleet with the same structure as the real telemetry:
per-unit lifetimes, a single healthy -> unhealthy transition, and
component-specific degradation drift so the full pipeline has learnable
signal. Each unit draws from its own PRNG stream derived from the master
seed, so output is independent of generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .ingest import Manifest
from .types import (
    COMPONENTS,
    SIGNAL_NAMES,
    SUBSET_NAMES,
    CycleRecord,
    UnitManifestEntry,
    failure_flags_for_subset,
)

# Nominal cruise-ish levels per signal, in the units of the telemetry schema.
_BASELINES = {
    "alt": 25000.0, "Mach": 0.62, "TRA": 65.0, "T2": 510.0,
    "Wf": 2.2, "Nf": 2100.0, "Nc": 8500.0, "T24": 555.0, "T30": 1250.0,
    "T48": 1700.0, "T50": 1150.0, "P15": 18.0, "P2": 14.0, "P21": 19.0,
    "P24": 28.0, "Ps30": 250.0, "P40": 280.0, "P50": 12.0,
}

# Additive offset per flight-class step (Fc - 2). Zero on the drift sensors
# below so degradation stays linearly separable from operating condition.
_CLASS_GAINS = {
    "alt": 6000.0, "Mach": 0.12, "TRA": 6.0, "T2": 8.0,
    "Wf": 0.35, "Nf": 0.0, "Nc": 180.0, "T24": 0.0, "T30": 0.0,
    "T48": 0.0, "T50": 0.0, "P15": 1.5, "P2": 1.0, "P21": 0.0,
    "P24": 0.0, "Ps30": 0.0, "P40": 0.0, "P50": 0.0,
}

# Gaussian noise sigma per signal at noise_scale = 1.
_NOISE_UNITS = {
    "alt": 300.0, "Mach": 0.01, "TRA": 1.2, "T2": 2.0,
    "Wf": 0.05, "Nf": 12.0, "Nc": 30.0, "T24": 1.5, "T30": 3.0,
    "T48": 4.0, "T50": 3.0, "P15": 0.3, "P2": 0.2, "P21": 0.3,
    "P24": 0.5, "Ps30": 3.0, "P40": 3.5, "P50": 0.25,
}

# Degradation drift reached at end of life, per failing component. Signals
# chosen for physical adjacency: turbine failures heat their outlets, etc.
DRIFT_SIGNALS = {
    "fan": {"Nf": -90.0, "P21": -2.4},
    "lpc": {"T24": 14.0, "P24": -4.0},
    "hpc": {"T30": 35.0, "Ps30": -22.0},
    "hpt": {"T48": 55.0, "P40": -25.0},
    "lpt": {"T50": 32.0, "P50": -2.2},
}


def _default_mix() -> dict[str, float]:
    return {name: 1.0 / len(SUBSET_NAMES) for name in SUBSET_NAMES}


@dataclass(frozen=True)
class SynthConfig:
    n_units: int
    lifetime_range: tuple[int, int] = (60, 100)
    cycle_length_range: tuple[int, int] = (200, 600)
    subset_mix: Mapping[str, float] = field(default_factory=_default_mix)
    noise_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_units < 1:
            raise ConfigError(f"n_units must be positive, got {self.n_units}")
        lo, hi = self.lifetime_range
        if not (1 <= lo <= hi):
            raise ConfigError(f"empty lifetime_range {self.lifetime_range}")
        lo, hi = self.cycle_length_range
        if not (1 <= lo <= hi):
            raise ConfigError(f"empty cycle_length_range {self.cycle_length_range}")
        if abs(sum(self.subset_mix.values()) - 1.0) > 1e-9:
            raise ConfigError("subset_mix proportions must sum to 1")
        for name, prop in self.subset_mix.items():
            if name not in SUBSET_NAMES:
                raise ConfigError(f"unknown subset {name!r} in subset_mix")
            if prop < 0:
                raise ConfigError(f"negative proportion for subset {name!r}")
        if self.noise_scale < 0:
            raise ConfigError(f"noise_scale must be nonnegative, got {self.noise_scale}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")


def _allocate_subsets(config: SynthConfig) -> list[str]:
    """Largest-remainder allocation of units to subsets, in unit order."""
    names = [n for n in SUBSET_NAMES if config.subset_mix.get(n, 0.0) > 0.0]
    exact = {n: config.subset_mix[n] * config.n_units for n in names}
    counts = {n: int(math.floor(exact[n])) for n in names}
    shortfall = config.n_units - sum(counts.values())
    by_remainder = sorted(names, key=lambda n: (-(exact[n] - counts[n]), n))
    for n in by_remainder[:shortfall]:
        counts[n] += 1
    out: list[str] = []
    for n in names:
        out.extend([n] * counts[n])
    return out


def _unit_split(unit_id: int) -> str:
    # Every third unit goes to test; at 90 units this yields the 60/30 split.
    return "test" if unit_id % 3 == 0 else "train"


def _generate_unit(unit_id: int, subset: str, config: SynthConfig):
    rng = np.random.default_rng([config.seed, unit_id])
    lo, hi = config.lifetime_range
    t_eol = int(rng.integers(lo, hi + 1))
    # Healthy through cycle tau - 1, unhealthy from tau onward.
    tau_lo = max(2, math.ceil(0.4 * t_eol))
    tau_hi = max(tau_lo, math.floor(0.8 * t_eol))
    tau = int(rng.integers(tau_lo, tau_hi + 1))

    failures = failure_flags_for_subset(subset)
    drift_eol = np.zeros(len(SIGNAL_NAMES))
    for comp, flag in zip(COMPONENTS, failures.as_tuple()):
        if flag:
            for sig, amp in DRIFT_SIGNALS[comp].items():
                drift_eol[SIGNAL_NAMES.index(sig)] += amp

    base = np.array([_BASELINES[s] for s in SIGNAL_NAMES])
    gains = np.array([_CLASS_GAINS[s] for s in SIGNAL_NAMES])
    noise_sd = config.noise_scale * np.array([_NOISE_UNITS[s] for s in SIGNAL_NAMES])

    len_lo, len_hi = config.cycle_length_range
    third = (len_hi - len_lo + 1) / 3.0

    records = []
    for c in range(1, t_eol + 1):
        fc = int(rng.integers(1, 4))
        # Flight class bins the length range into thirds: short/medium/long.
        bin_lo = len_lo + int(round((fc - 1) * third))
        bin_hi = len_lo + int(round(fc * third)) - 1
        bin_hi = max(bin_lo, min(bin_hi, len_hi))
        length = int(rng.integers(bin_lo, bin_hi + 1))

        level = base + gains * (fc - 2) + drift_eol * (c / t_eol)
        noise = rng.standard_normal((len(SIGNAL_NAMES), length)) * noise_sd[:, None]
        records.append(
            CycleRecord(
                unit_id=unit_id,
                cycle_number=c,
                flight_class=fc,
                health_state=1 if c < tau else 0,
                series=level[:, None] + noise,
            )
        )
    entry = UnitManifestEntry(
        unit_id=unit_id,
        subset=subset,
        split=_unit_split(unit_id),
        t_eol=t_eol,
        failures=failures,
    )
    return records, entry


def generate_fleet(config: SynthConfig) -> tuple[list[CycleRecord], Manifest]:
    """Generate a deterministic fleet; identical config yields identical output."""
    subsets = _allocate_subsets(config)
    records: list[CycleRecord] = []
    entries: list[UnitManifestEntry] = []
    for unit_id in range(1, config.n_units + 1):
        unit_records, entry = _generate_unit(unit_id, subsets[unit_id - 1], config)
        records.extend(unit_records)
        entries.append(entry)
    manifest = Manifest(units=tuple(entries), source=f"phmkit-synth(seed={config.seed})")
    return records, manifest
