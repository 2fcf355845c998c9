"""Report products behind the evaluation figures: parity table, sorted-RUL
curve, and RUL-error box plots sliced by health state and by eventual
failing component, plus a dependency-free deterministic SVG renderer.

Error sign convention is pred - true everywhere, so overestimates are
positive. Box quartiles use the same linear-interpolation quantile rule as
the feature extractor; whiskers follow the Tukey 1.5*IQR rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError
from .loss import PredictionBatch
from .types import COMPONENTS, LabelVector, labels_to_rul

SVG_KINDS = ("parity", "sorted_rul", "box")


@dataclass(frozen=True)
class BoxStats:
    """Tukey box-and-whisker summary of one group of errors."""

    label: str
    n: int
    median: float | None
    q1: float | None
    q3: float | None
    whisker_low: float | None
    whisker_high: float | None
    outliers: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outliers": list(self.outliers),
        }


def box_stats(values, label: str) -> BoxStats:
    """Five-number box with whiskers at the most extreme data within
    1.5*IQR of the quartiles; everything beyond is listed as an outlier."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return BoxStats(label, 0, None, None, None, None, None, ())
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    whisker_low = float(inside.min())
    whisker_high = float(inside.max())
    outliers = np.sort(arr[(arr < lo_fence) | (arr > hi_fence)])
    return BoxStats(
        label=label,
        n=int(arr.size),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        whisker_low=whisker_low,
        whisker_high=whisker_high,
        outliers=tuple(float(v) for v in outliers),
    )


def parity_data(rul_true, rul_pred) -> pd.DataFrame:
    """Rows in input order with the identity-line residual (pred - true)."""
    t = np.asarray(rul_true, dtype=float)
    p = np.asarray(rul_pred, dtype=float)
    if t.shape != p.shape or t.ndim != 1:
        raise DataError("rul_true and rul_pred must be aligned 1-d vectors")
    return pd.DataFrame({"true": t, "pred": p, "residual": p - t})


def sorted_rul_curve(rul_true, rul_pred) -> pd.DataFrame:
    """Rows sorted by ascending true RUL, stable on ties by original index."""
    t = np.asarray(rul_true, dtype=float)
    p = np.asarray(rul_pred, dtype=float)
    if t.shape != p.shape or t.ndim != 1:
        raise DataError("rul_true and rul_pred must be aligned 1-d vectors")
    order = np.argsort(t, kind="stable")
    return pd.DataFrame(
        {"original_index": order, "true": t[order], "pred": p[order]}
    )


def error_box_by_health(labels: list[LabelVector], preds: PredictionBatch) -> list[BoxStats]:
    """RUL error boxes for healthy (hs=1) and unhealthy (hs=0) cycles."""
    errors = preds.rul_pred - labels_to_rul(labels)
    hs = np.array([lab.hs for lab in labels])
    groups = []
    for label, mask in (("healthy", hs == 1), ("unhealthy", hs == 0)):
        if mask.any():
            groups.append(box_stats(errors[mask], label))
        else:
            warnings.warn(f"no {label} cycles present; emitting a single group")
    return groups


def error_box_by_component(labels: list[LabelVector], preds: PredictionBatch) -> list[BoxStats]:
    """One error box per component over the cycles whose eventual-failure
    flag is set; groups overlap for multi-failure units."""
    errors = preds.rul_pred - labels_to_rul(labels)
    flags = np.array([lab.ef.as_tuple() for lab in labels])
    return [
        box_stats(errors[flags[:, j] == 1], comp) for j, comp in enumerate(COMPONENTS)
    ]


# --- SVG rendering ---------------------------------------------------------

_W, _H = 640, 480
_MARGIN = 64


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span == 0:
        span = 1.0
    return out_lo + (np.asarray(values, dtype=float) - lo) * (out_hi - out_lo) / span


def _axes(lo_x, hi_x, lo_y, hi_y, x_label, y_label, title):
    parts = [
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - _MARGIN}" y2="{_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_H - _MARGIN}" stroke="black"/>',
        f'<text x="{_W // 2}" y="{_H - 16}" text-anchor="middle" font-size="13">{x_label}</text>',
        f'<text x="18" y="{_H // 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {_H // 2})">{y_label}</text>',
        f'<text x="{_W // 2}" y="28" text-anchor="middle" font-size="15">{title}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        vx = lo_x + frac * (hi_x - lo_x)
        px = _MARGIN + frac * (_W - 2 * _MARGIN)
        parts.append(
            f'<text x="{_fmt(px)}" y="{_H - _MARGIN + 18}" text-anchor="middle" '
            f'font-size="11">{vx:.4g}</text>'
        )
        vy = lo_y + frac * (hi_y - lo_y)
        py = _H - _MARGIN - frac * (_H - 2 * _MARGIN)
        parts.append(
            f'<text x="{_MARGIN - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-size="11">{vy:.4g}</text>'
        )
    return parts


def _svg_document(parts: list[str]) -> str:
    body = "\n".join(parts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">\n{body}\n</svg>\n'
    )


def _render_parity(df: pd.DataFrame) -> str:
    t = df["true"].to_numpy(dtype=float)
    p = df["pred"].to_numpy(dtype=float)
    lo = float(min(t.min(), p.min()))
    hi = float(max(t.max(), p.max()))
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    parts = _axes(lo, hi, lo, hi, "actual RUL (cycles)", "predicted RUL (cycles)", "Parity")
    x0 = _scale([lo, hi], lo, hi, _MARGIN, _W - _MARGIN)
    y0 = _scale([lo, hi], lo, hi, _H - _MARGIN, _MARGIN)
    parts.append(
        f'<line x1="{_fmt(x0[0])}" y1="{_fmt(y0[0])}" x2="{_fmt(x0[1])}" '
        f'y2="{_fmt(y0[1])}" stroke="gray" stroke-dasharray="4 3"/>'
    )
    xs = _scale(t, lo, hi, _MARGIN, _W - _MARGIN)
    ys = _scale(p, lo, hi, _H - _MARGIN, _MARGIN)
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2" fill="steelblue" fill-opacity="0.6"/>')
    return _svg_document(parts)


def _render_sorted(df: pd.DataFrame) -> str:
    t = df["true"].to_numpy(dtype=float)
    p = df["pred"].to_numpy(dtype=float)
    n = len(t)
    lo = float(min(t.min(), p.min()))
    hi = float(max(t.max(), p.max()))
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    parts = _axes(0, n - 1 if n > 1 else 1, lo, hi, "cycles sorted by true RUL", "RUL (cycles)", "Sorted RUL")
    xs = _scale(np.arange(n), 0, max(n - 1, 1), _MARGIN, _W - _MARGIN)
    ys_p = _scale(p, lo, hi, _H - _MARGIN, _MARGIN)
    ys_t = _scale(t, lo, hi, _H - _MARGIN, _MARGIN)
    for x, y in zip(xs, ys_p):
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2" fill="indianred" fill-opacity="0.6"/>')
    points = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys_t))
    parts.append(f'<polyline points="{points}" fill="none" stroke="black" stroke-width="1.5"/>')
    return _svg_document(parts)


def _render_box(boxes: list[BoxStats]) -> str:
    populated = [b for b in boxes if b.n > 0]
    if not populated:
        raise DataError("no populated groups to render")
    values = [v for b in populated for v in (b.whisker_low, b.whisker_high, *b.outliers)]
    lo, hi = float(min(values)), float(max(values))
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    parts = _axes(0, len(boxes), lo, hi, "group", "RUL error (cycles)", "RUL error distribution")

    def y(v):
        return _scale([v], lo, hi, _H - _MARGIN, _MARGIN)[0]

    slot = (_W - 2 * _MARGIN) / len(boxes)
    width = slot * 0.4
    for i, b in enumerate(boxes):
        cx = _MARGIN + slot * (i + 0.5)
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_H - _MARGIN + 34}" text-anchor="middle" '
            f'font-size="12">{b.label} (n={b.n})</text>'
        )
        if b.n == 0:
            continue
        x1, x2 = cx - width / 2, cx + width / 2
        parts.append(
            f'<rect x="{_fmt(x1)}" y="{_fmt(y(b.q3))}" width="{_fmt(width)}" '
            f'height="{_fmt(y(b.q1) - y(b.q3))}" fill="lightsteelblue" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y(b.median))}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y(b.median))}" stroke="black" stroke-width="2"/>'
        )
        for q, w in ((b.q3, b.whisker_high), (b.q1, b.whisker_low)):
            parts.append(
                f'<line x1="{_fmt(cx)}" y1="{_fmt(y(q))}" x2="{_fmt(cx)}" '
                f'y2="{_fmt(y(w))}" stroke="black"/>'
            )
            parts.append(
                f'<line x1="{_fmt(cx - width / 4)}" y1="{_fmt(y(w))}" '
                f'x2="{_fmt(cx + width / 4)}" y2="{_fmt(y(w))}" stroke="black"/>'
            )
        for v in b.outliers:
            parts.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(y(v))}" r="2" fill="black"/>')
    return _svg_document(parts)


def render_svg(data, kind: str) -> str:
    """Self-contained deterministic SVG for one report product."""
    if kind not in SVG_KINDS:
        raise DataError(f"unknown SVG kind {kind!r}")
    if kind == "box":
        if not data:
            raise DataError("empty box data")
        return _render_box(list(data))
    if not isinstance(data, pd.DataFrame) or len(data) == 0:
        raise DataError("empty plot data")
    return _render_parity(data) if kind == "parity" else _render_sorted(data)
