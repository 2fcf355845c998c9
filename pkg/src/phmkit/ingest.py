"""Canonical telemetry CSV and manifest JSON parsing, plus split assembly.

The canonical CSV has the exact 22-column header in ``CSV_HEADER``, one row
per timestamp, rows grouped by (unit, cycle) ascending and temporally ordered
within a cycle. The manifest JSON carries per-unit subset, split, t_eol, and
optional explicit failure flags.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError
from .types import (
    SIGNAL_NAMES,
    SUBSET_NAMES,
    COMPONENTS,
    CycleRecord,
    FailureFlags,
    LabelVector,
    UnitManifestEntry,
    build_label_vector,
    failure_flags_for_subset,
)

AUX_COLUMNS = ("unit", "cycle", "Fc", "hs")
CSV_COLUMNS = AUX_COLUMNS + SIGNAL_NAMES
CSV_HEADER = ",".join(CSV_COLUMNS)


@dataclass(frozen=True)
class Manifest:
    """Validated per-unit bookkeeping for a dataset."""

    units: tuple[UnitManifestEntry, ...]
    source: str = ""

    def __post_init__(self):
        seen = set()
        for entry in self.units:
            if entry.unit_id in seen:
                raise DataError(f"duplicate unit_id {entry.unit_id} in manifest")
            seen.add(entry.unit_id)

    def by_unit(self) -> dict[int, UnitManifestEntry]:
        return {e.unit_id: e for e in self.units}


def _read_text(source) -> str:
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    return Path(source).read_text(encoding="utf-8")


def _first_bad_line(series: pd.Series) -> int:
    """1-based CSV line of the first entry that is not a finite number."""
    numeric = pd.to_numeric(series, errors="coerce")
    bad = numeric.isna() | ~np.isfinite(numeric.to_numpy(dtype=float))
    return int(bad.idxmax()) + 2  # +1 header, +1 zero-based


def parse_canonical_csv(source) -> list[CycleRecord]:
    """Parse the canonical CSV into one CycleRecord per (unit, cycle) group.

    ``source`` is a path or a readable (byte or text) stream. Errors carry
    the 1-based line number of the offending row.
    """
    text = _read_text(source)
    newline = text.find("\n")
    header = text[: newline if newline >= 0 else len(text)].rstrip("\r")
    if header != CSV_HEADER:
        raise DataError(f"header does not match canonical schema: {header!r}", line=1)
    body = text[newline + 1 :] if newline >= 0 else ""
    if body.strip() == "":
        return []

    df = pd.read_csv(
        io.StringIO(body),
        header=None,
        names=CSV_COLUMNS,
        float_precision="round_trip",
    )
    if df.shape[1] != len(CSV_COLUMNS):
        raise DataError(f"expected {len(CSV_COLUMNS)} columns, found {df.shape[1]}")

    for col in CSV_COLUMNS:
        values = df[col]
        if values.dtype == object or values.isna().any():
            raise DataError(
                f"non-numeric or missing value in column {col!r}",
                line=_first_bad_line(values),
            )
    for col in AUX_COLUMNS:
        values = df[col].to_numpy()
        if not np.issubdtype(values.dtype, np.integer):
            frac = values != np.floor(values)
            if frac.any():
                raise DataError(
                    f"column {col!r} must be integral",
                    line=int(np.flatnonzero(frac)[0]) + 2,
                )

    unit = df["unit"].to_numpy(dtype=np.int64)
    cycle = df["cycle"].to_numpy(dtype=np.int64)
    fc = df["Fc"].to_numpy(dtype=np.int64)
    hs = df["hs"].to_numpy(dtype=np.int64)
    signals = df[list(SIGNAL_NAMES)].to_numpy(dtype=float)
    n = len(df)

    key_change = (np.diff(unit) != 0) | (np.diff(cycle) != 0)
    starts = np.concatenate(([0], np.flatnonzero(key_change) + 1))
    ends = np.concatenate((starts[1:], [n]))

    # Flight class and health state must be constant within a (unit, cycle) group.
    for name, col in (("Fc", fc), ("hs", hs)):
        inner_change = np.flatnonzero((np.diff(col) != 0) & ~key_change)
        if inner_change.size:
            raise DataError(
                f"{name} changes within a (unit, cycle) group",
                line=int(inner_change[0]) + 1 + 2,
            )

    # Groups must be strictly ascending by (unit, cycle).
    for g in range(1, len(starts)):
        prev, cur = starts[g - 1], starts[g]
        if (unit[cur], cycle[cur]) <= (unit[prev], cycle[prev]):
            raise DataError(
                f"(unit, cycle) groups out of order at unit {unit[cur]} cycle {cycle[cur]}",
                line=int(cur) + 2,
            )

    records: list[CycleRecord] = []
    prev_unit = None
    prev_cycle = 0
    prev_hs = 1
    for s, e in zip(starts, ends):
        u, c = int(unit[s]), int(cycle[s])
        if u != prev_unit:
            prev_unit, prev_cycle, prev_hs = u, 0, 1
        if c != prev_cycle + 1:
            raise DataError(
                f"unit {u}: cycle numbers must be contiguous from 1, "
                f"got {c} after {prev_cycle}",
                line=int(s) + 2,
            )
        h = int(hs[s])
        if h > prev_hs:
            raise DataError(
                f"unit {u}: health state flips 0 -> 1 at cycle {c}",
                line=int(s) + 2,
            )
        prev_cycle, prev_hs = c, h
        records.append(
            CycleRecord(
                unit_id=u,
                cycle_number=c,
                flight_class=int(fc[s]),
                health_state=h,
                series=signals[s:e].T,
            )
        )
    return records


def serialize_canonical_csv(records: list[CycleRecord], path) -> None:
    """Write records as canonical CSV. Floats use shortest round-trip decimals."""
    frames = {col: [] for col in CSV_COLUMNS}
    for rec in records:
        m = rec.length
        frames["unit"].append(np.full(m, rec.unit_id, dtype=np.int64))
        frames["cycle"].append(np.full(m, rec.cycle_number, dtype=np.int64))
        frames["Fc"].append(np.full(m, rec.flight_class, dtype=np.int64))
        frames["hs"].append(np.full(m, rec.health_state, dtype=np.int64))
        for j, name in enumerate(SIGNAL_NAMES):
            frames[name].append(rec.series[j])
    df = pd.DataFrame(
        {col: np.concatenate(chunks) if chunks else np.array([], dtype=float)
         for col, chunks in frames.items()}
    )
    df.to_csv(path, index=False, lineterminator="\n")


def load_manifest(source) -> Manifest:
    """Parse and validate the manifest JSON."""
    text = _read_text(source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(raw, dict) or "units" not in raw:
        raise DataError("manifest must be an object with a 'units' list")

    entries = []
    for item in raw["units"]:
        for key in ("unit", "subset", "split", "t_eol"):
            if key not in item:
                raise DataError(f"manifest entry missing {key!r}: {item}")
        subset = item["subset"]
        if "failures" in item:
            flags = item["failures"]
            missing = [c for c in COMPONENTS if c not in flags]
            if missing:
                raise DataError(f"failures override missing keys {missing} for unit {item['unit']}")
            failures = FailureFlags(**{c: int(flags[c]) for c in COMPONENTS})
        elif subset in SUBSET_NAMES:
            failures = failure_flags_for_subset(subset)
        else:
            raise DataError(
                f"unit {item['unit']}: unknown subset {subset!r} and no failures override"
            )
        entries.append(
            UnitManifestEntry(
                unit_id=int(item["unit"]),
                subset=subset,
                split=item["split"],
                t_eol=int(item["t_eol"]),
                failures=failures,
            )
        )
    return Manifest(units=tuple(entries), source=raw.get("source", ""))


def write_manifest(manifest: Manifest, path) -> None:
    payload = {
        "source": manifest.source,
        "units": [
            {
                "unit": e.unit_id,
                "subset": e.subset,
                "split": e.split,
                "t_eol": e.t_eol,
                "failures": dict(zip(COMPONENTS, e.failures.as_tuple())),
            }
            for e in manifest.units
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


Pair = tuple[CycleRecord, LabelVector]


def assemble_dataset(
    records: list[CycleRecord], manifest: Manifest
) -> tuple[list[Pair], list[Pair]]:
    """Label records and route them into (train, test) by manifest split.

    Within each split, pairs are ordered by (unit_id, cycle_number) ascending.
    """
    by_unit = manifest.by_unit()
    train: list[Pair] = []
    test: list[Pair] = []
    for rec in records:
        entry = by_unit.get(rec.unit_id)
        if entry is None:
            raise DataError(f"unit {rec.unit_id} not present in manifest")
        pair = (rec, build_label_vector(rec, entry))
        (train if entry.split == "train" else test).append(pair)
    key = lambda p: (p[0].unit_id, p[0].cycle_number)
    train.sort(key=key)
    test.sort(key=key)
    return train, test
