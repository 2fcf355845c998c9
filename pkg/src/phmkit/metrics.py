"""Threshold-free classification metrics and RUL regression metrics.

AUROC uses the Mann-Whitney pair formulation with ties counting one half;
AUPR is average precision with tied scores grouped at a single threshold.
Single-class heads are reported as undefined (None), never as a silent
number. RMSE and the NASA score delegate to the loss module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError
from .ingest import Manifest
from .loss import LossConfig, PredictionBatch, nasa_score, rmse
from .types import LabelVector, labels_to_class_matrix, labels_to_rul

HEAD_NAMES = ("health_state", "fan", "lpc", "hpc", "hpt", "lpt")

PREDICTIONS_COLUMNS = (
    "unit", "cycle",
    "hs_score", "fan_score", "lpc_score", "hpc_score", "hpt_score", "lpt_score",
    "rul_pred",
)


def _check_binary(labels, scores) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(labels, dtype=float)
    s = np.asarray(scores, dtype=float)
    if y.ndim != 1 or y.shape != s.shape:
        raise DataError(f"labels/scores must be 1-d and aligned, got {y.shape} vs {s.shape}")
    if y.size == 0:
        raise DataError("empty metric input")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("labels must be binary")
    return y, s


def _midranks(scores: np.ndarray) -> np.ndarray:
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    boundaries = np.concatenate(([0], np.flatnonzero(np.diff(s) != 0) + 1, [len(s)]))
    ranks = np.empty(len(s))
    for a, b in zip(boundaries[:-1], boundaries[1:]):
        ranks[order[a:b]] = (a + b - 1) / 2.0 + 1.0
    return ranks


def auroc(labels, scores) -> float | None:
    """Fraction of (positive, negative) pairs ranked correctly, ties at 1/2.

    Returns None (undefined) when only one class is present.
    """
    y, s = _check_binary(labels, scores)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _midranks(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def aupr(labels, scores) -> float | None:
    """Average precision over descending distinct-score thresholds.

    Returns None (undefined) when there are no positives.
    """
    y, s = _check_binary(labels, scores)
    n_pos = int(y.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-s, kind="stable")
    s_desc = s[order]
    y_desc = y[order]
    group_ends = np.concatenate((np.flatnonzero(np.diff(s_desc) != 0) + 1, [len(s_desc)]))
    tp_cum = np.cumsum(y_desc)[group_ends - 1]
    count_cum = group_ends.astype(float)
    precision = tp_cum / count_cum
    recall = tp_cum / n_pos
    delta_recall = np.diff(np.concatenate(([0.0], recall)))
    return float(np.sum(precision * delta_recall))


def mae_and_pct(rul_true, rul_pred, t_eol) -> tuple[float, float]:
    """Mean absolute RUL error in cycles and as a percentage of unit lifetime."""
    t = np.asarray(rul_true, dtype=float)
    p = np.asarray(rul_pred, dtype=float)
    eol = np.asarray(t_eol, dtype=float)
    if not (t.shape == p.shape == eol.shape) or t.ndim != 1:
        raise DataError("rul_true, rul_pred, t_eol must be aligned 1-d vectors")
    if (eol <= 0).any():
        raise DataError("t_eol must be positive for every sample")
    err = np.abs(p - t)
    return float(err.mean()), float((100.0 * err / eol).mean())


@dataclass(frozen=True)
class HeadReport:
    auroc: float | None
    aupr: float | None
    positives: int


@dataclass(frozen=True)
class MetricsReport:
    """One Table-row set of results: six heads plus the RUL error block."""

    heads: dict[str, HeadReport]
    rmse: float
    nasa: float
    mae_cycles: float
    mae_pct: float
    n: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "heads": {
                name: {
                    "auroc": h.auroc,
                    "aupr": h.aupr,
                    "positives": h.positives,
                }
                for name, h in self.heads.items()
            },
            "rul": {
                "rmse": self.rmse,
                "nasa": self.nasa,
                "mae_cycles": self.mae_cycles,
                "mae_pct": self.mae_pct,
            },
        }

    def to_text(self) -> str:
        def fmt(v):
            return "undefined" if v is None else f"{v:.4f}"

        lines = [f"{'Output':<14}{'Metric':<14}{'Value':>12}"]
        for name, h in self.heads.items():
            lines.append(f"{name:<14}{'AUROC':<14}{fmt(h.auroc):>12}")
            lines.append(f"{'':<14}{'AUPR':<14}{fmt(h.aupr):>12}")
        lines.append(f"{'RUL':<14}{'RMSE':<14}{self.rmse:>12.4f}")
        lines.append(f"{'':<14}{'NASA':<14}{self.nasa:>12.4f}")
        lines.append(f"{'':<14}{'MAE (cycles)':<14}{self.mae_cycles:>12.4f}")
        lines.append(f"{'':<14}{'MAE (%)':<14}{self.mae_pct:>12.4f}")
        return "\n".join(lines) + "\n"


def evaluate(
    labels: list[LabelVector],
    preds: PredictionBatch,
    manifest: Manifest,
    row_keys: list[tuple[int, int]],
    loss_config: LossConfig = LossConfig(),
) -> MetricsReport:
    """Score one model: AUROC/AUPR per head plus the four RUL error metrics."""
    if not (len(labels) == preds.n == len(row_keys)):
        raise DataError("labels, predictions, and row keys must be aligned")
    class_true = labels_to_class_matrix(labels)
    rul_true = labels_to_rul(labels)
    by_unit = manifest.by_unit()
    try:
        t_eol = np.array([by_unit[unit].t_eol for unit, _ in row_keys], dtype=float)
    except KeyError as exc:
        raise DataError(f"unit {exc.args[0]} missing from manifest") from None

    heads = {}
    for j, name in enumerate(HEAD_NAMES):
        y = class_true[:, j]
        s = preds.class_probs[:, j]
        heads[name] = HeadReport(
            auroc=auroc(y, s), aupr=aupr(y, s), positives=int(y.sum())
        )
    mae_cycles, mae_pct = mae_and_pct(rul_true, preds.rul_pred, t_eol)
    return MetricsReport(
        heads=heads,
        rmse=rmse(rul_true, preds.rul_pred),
        nasa=nasa_score(rul_true, preds.rul_pred, loss_config),
        mae_cycles=mae_cycles,
        mae_pct=mae_pct,
        n=len(labels),
    )


def save_report(report: MetricsReport, json_path, text_path=None) -> None:
    Path(json_path).write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    if text_path is not None:
        Path(text_path).write_text(report.to_text(), encoding="utf-8")


def write_predictions(row_keys, preds: PredictionBatch, path) -> None:
    """Persist predictions in the external-import CSV format."""
    df = pd.DataFrame(preds.class_probs, columns=list(PREDICTIONS_COLUMNS[2:8]))
    df.insert(0, "cycle", [k[1] for k in row_keys])
    df.insert(0, "unit", [k[0] for k in row_keys])
    df["rul_pred"] = preds.rul_pred
    df.to_csv(path, index=False, lineterminator="\n")


def read_predictions(path) -> tuple[list[tuple[int, int]], PredictionBatch]:
    """Read an externally produced predictions CSV for identical scoring."""
    df = pd.read_csv(path, float_precision="round_trip")
    if list(df.columns) != list(PREDICTIONS_COLUMNS):
        raise DataError(
            f"predictions file must have columns {','.join(PREDICTIONS_COLUMNS)}"
        )
    keys = list(zip(df["unit"].astype(int), df["cycle"].astype(int)))
    batch = PredictionBatch(
        class_probs=df[list(PREDICTIONS_COLUMNS[2:8])].to_numpy(dtype=float),
        rul_pred=df["rul_pred"].to_numpy(dtype=float),
    )
    return keys, batch
