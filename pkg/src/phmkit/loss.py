"""Composite training objective: asymmetric RUL score plus weighted BCE.

The RUL term is the NASA scoring criterion, 0.5*RMSE + 0.5*s_c, where s_c
exponentially penalizes errors at rate 1/13 for underestimates and 1/10 for
overestimates. The classification term is binary cross-entropy over the six
outputs [h_s, fan, lpc, hpc, hpt, lpt], weighted by gamma.

All reductions use numpy's pairwise summation, so values are deterministic
for a fixed input ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .types import LabelVector, labels_to_class_matrix, labels_to_rul

N_CLASS_OUTPUTS = 6


@dataclass(frozen=True)
class LossConfig:
    gamma: float = 10.0
    alpha_under: float = 1.0 / 13.0
    alpha_over: float = 1.0 / 10.0
    prob_clamp: float = 1e-12
    rmse_guard: float = 1e-12

    def __post_init__(self):
        if self.gamma < 0:
            raise DataError(f"gamma must be nonnegative, got {self.gamma}")
        if not (self.alpha_over > self.alpha_under > 0):
            raise DataError("need alpha_over > alpha_under > 0")


@dataclass(frozen=True)
class PredictionBatch:
    """Model outputs for n cycles: six class scores plus a RUL estimate.

    ``class_probs`` columns are ordered [h_s, fan, lpc, hpc, hpt, lpt].
    Score-style batches (tree regressors, MSE networks) may fall outside
    (0, 1); probabilities are clamped wherever BCE needs them.
    """

    class_probs: np.ndarray
    rul_pred: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.class_probs, dtype=float)
        rul = np.asarray(self.rul_pred, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != N_CLASS_OUTPUTS:
            raise DataError(f"class_probs must be n x {N_CLASS_OUTPUTS}, got {probs.shape}")
        if rul.shape != (probs.shape[0],):
            raise DataError("rul_pred length must match class_probs rows")
        if not (np.isfinite(probs).all() and np.isfinite(rul).all()):
            raise DataError("prediction batch contains non-finite values")
        probs.setflags(write=False)
        rul.setflags(write=False)
        object.__setattr__(self, "class_probs", probs)
        object.__setattr__(self, "rul_pred", rul)

    @property
    def n(self) -> int:
        return self.rul_pred.shape[0]


def _check_rul_args(rul_true, rul_pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(rul_true, dtype=float)
    p = np.asarray(rul_pred, dtype=float)
    if t.ndim != 1 or p.shape != t.shape:
        raise DataError(f"RUL vectors must be 1-d and equal length, got {t.shape} vs {p.shape}")
    if t.size == 0:
        raise DataError("empty RUL vectors")
    return t, p


def _alphas(delta: np.ndarray, config: LossConfig) -> np.ndarray:
    # Strict indicator: the overestimation rate applies only when pred > true.
    return np.where(delta > 0, config.alpha_over, config.alpha_under)


def sc_score(rul_true, rul_pred, config: LossConfig = LossConfig()) -> float:
    """Asymmetric exponential score; 0 iff every prediction is exact."""
    t, p = _check_rul_args(rul_true, rul_pred)
    delta = p - t
    u = _alphas(delta, config) * np.abs(delta)
    return float(np.mean(np.exp(u)) - 1.0)


def rmse(rul_true, rul_pred) -> float:
    t, p = _check_rul_args(rul_true, rul_pred)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def nasa_score(rul_true, rul_pred, config: LossConfig = LossConfig()) -> float:
    return 0.5 * rmse(rul_true, rul_pred) + 0.5 * sc_score(rul_true, rul_pred, config)


def clamp_probs(probs: np.ndarray, config: LossConfig = LossConfig()) -> np.ndarray:
    return np.clip(probs, config.prob_clamp, 1.0 - config.prob_clamp)


def bce(class_true, class_probs, config: LossConfig = LossConfig()) -> float:
    """Binary cross-entropy averaged over all n * 6 entries."""
    y = np.asarray(class_true, dtype=float)
    p = np.asarray(class_probs, dtype=float)
    if y.shape != p.shape or y.ndim != 2:
        raise DataError(f"shape mismatch in BCE: {y.shape} vs {p.shape}")
    p = clamp_probs(p, config)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def composite_loss(
    labels: list[LabelVector],
    preds: PredictionBatch,
    config: LossConfig = LossConfig(),
) -> float:
    """NASA(RUL, RUL_hat) + gamma * BCE(y, y_hat)."""
    if len(labels) != preds.n:
        raise DataError(f"batch misaligned: {len(labels)} labels vs {preds.n} predictions")
    rul_true = labels_to_rul(labels)
    class_true = labels_to_class_matrix(labels)
    return nasa_score(rul_true, preds.rul_pred, config) + config.gamma * bce(
        class_true, preds.class_probs, config
    )


def composite_loss_grad(
    labels: list[LabelVector],
    preds: PredictionBatch,
    config: LossConfig = LossConfig(),
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of the composite loss.

    Returns (d/d class_probs, d/d rul_pred). At delta = 0 the s_c term takes
    subgradient 0; when RMSE is below the guard its term's gradient is 0.
    """
    if len(labels) != preds.n:
        raise DataError(f"batch misaligned: {len(labels)} labels vs {preds.n} predictions")
    n = preds.n
    rul_true = labels_to_rul(labels)
    class_true = labels_to_class_matrix(labels)

    delta = preds.rul_pred - rul_true
    root = rmse(rul_true, preds.rul_pred)
    grad_rul = np.zeros(n)
    if root > config.rmse_guard:
        grad_rul += 0.5 * delta / (n * root)
    alphas = _alphas(delta, config)
    u = alphas * np.abs(delta)
    grad_rul += 0.5 / n * np.exp(u) * alphas * np.sign(delta)

    p = clamp_probs(preds.class_probs, config)
    grad_probs = config.gamma * (p - class_true) / (n * N_CLASS_OUTPUTS * p * (1.0 - p))
    return grad_probs, grad_rul
