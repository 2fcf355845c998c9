"""Min-max normalization and PCA orthogonalization of the feature matrix.

The PCA step eigendecomposes the sample correlation matrix of the
normalized training features with a cyclic Jacobi solver and keeps all
components. Two projection modes are supported:

* ``literal`` (default): project the normalized matrix directly onto the
  eigenvectors, with no centering.
* ``standardized``: center and scale columns by the training statistics
  before projecting, which makes projected training columns uncorrelated.

Fitted transforms are immutable and safe for concurrent use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError
from .features import FeatureMatrix, schema_hash

PCA_MODES = ("literal", "standardized")


@dataclass(frozen=True)
class MinMaxParams:
    """Columnwise training min/max used by the normalization map."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=float)
        maxs = np.asarray(self.maxs, dtype=float)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise DataError("min/max vectors must be 1-d and equal length")
        if (maxs < mins).any():
            raise DataError("max < min in min-max parameters")
        for name, arr in (("mins", mins), ("maxs", maxs)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p(self) -> int:
        return self.mins.shape[0]


def fit_minmax(X: FeatureMatrix | np.ndarray) -> MinMaxParams:
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    if values.ndim != 2 or values.shape[0] < 1:
        raise DataError("min-max fitting needs at least one row")
    if not np.isfinite(values).all():
        raise DataError("min-max fitting rejects non-finite entries")
    return MinMaxParams(mins=values.min(axis=0), maxs=values.max(axis=0))


def apply_minmax(params: MinMaxParams, X: FeatureMatrix | np.ndarray) -> np.ndarray:
    """(x - min) / (max - min); zero-range columns map to 0; no clipping."""
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    if values.ndim != 2 or values.shape[1] != params.p:
        raise DataError(
            f"expected {params.p} columns, got {values.shape[1] if values.ndim == 2 else 'non-matrix'}"
        )
    span = params.maxs - params.mins
    safe = np.where(span > 0, span, 1.0)
    out = (values - params.mins) / safe
    out[:, span == 0] = 0.0
    return out


def symmetric_eig(
    Q: np.ndarray, *, tol: float = 1e-12, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (V, lam) with eigenvalues descending and each eigenvector's
    largest-magnitude entry positive (ties break at the lowest index).
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DataError(f"expected a square matrix, got shape {Q.shape}")
    if np.abs(Q - Q.T).max() > 1e-10:
        raise DataError("matrix is not symmetric within 1e-10")

    p = Q.shape[0]
    A = np.array(Q, dtype=float)
    V = np.eye(p)
    if p == 1:
        return V, A.diagonal().copy()

    off_mask = ~np.eye(p, dtype=bool)
    for _ in range(max_sweeps):
        if np.abs(A[off_mask]).max() <= tol:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                apq = A[i, j]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[j, j] - A[i, i]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J with J embedding [[c, s], [-s, c]] at (i, j).
                row_i = A[i, :].copy()
                row_j = A[j, :].copy()
                A[i, :] = c * row_i - s * row_j
                A[j, :] = s * row_i + c * row_j
                col_i = A[:, i].copy()
                col_j = A[:, j].copy()
                A[:, i] = c * col_i - s * col_j
                A[:, j] = s * col_i + c * col_j
                A[i, j] = 0.0
                A[j, i] = 0.0
                v_i = V[:, i].copy()
                V[:, i] = c * v_i - s * V[:, j]
                V[:, j] = s * v_i + c * V[:, j]
    else:
        raise NumericError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    lam = A.diagonal().copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    V = V[:, order]
    for k in range(p):
        pivot = np.argmax(np.abs(V[:, k]))
        if V[pivot, k] < 0:
            V[:, k] = -V[:, k]
    return V, lam


@dataclass(frozen=True)
class PcaTransform:
    """Eigenbasis of the training-feature correlation matrix, all PCs kept."""

    eigenvectors: np.ndarray  # p x p, columns are components
    eigenvalues: np.ndarray  # descending
    mode: str = "literal"
    col_means: np.ndarray | None = None
    col_stds: np.ndarray | None = None

    def __post_init__(self):
        V = np.asarray(self.eigenvectors, dtype=float)
        lam = np.asarray(self.eigenvalues, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or lam.shape != (V.shape[0],):
            raise DataError("eigenvector/eigenvalue shapes are inconsistent")
        if self.mode not in PCA_MODES:
            raise DataError(f"unknown PCA mode {self.mode!r}")
        gram = V.T @ V
        if np.abs(gram - np.eye(V.shape[0])).max() > 1e-8:
            raise NumericError("eigenvector matrix is not orthogonal within 1e-8")
        if (np.diff(lam) > 0).any():
            raise DataError("eigenvalues must be sorted descending")
        if lam.min() < -1e-8:
            raise NumericError(f"eigenvalue {lam.min()} below -1e-8")
        lam = np.where(lam < 0, 0.0, lam)
        means = None if self.col_means is None else np.asarray(self.col_means, dtype=float)
        stds = None if self.col_stds is None else np.asarray(self.col_stds, dtype=float)
        for name, arr in (
            ("eigenvectors", V),
            ("eigenvalues", lam),
            ("col_means", means),
            ("col_stds", stds),
        ):
            if arr is not None:
                arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p(self) -> int:
        return self.eigenvectors.shape[0]


def correlation_matrix(X: np.ndarray) -> np.ndarray:
    """Sample correlation of columns; zero-variance columns get a unit
    diagonal and zero off-diagonal so they stay inert."""
    X = np.asarray(X, dtype=float)
    centered = X - X.mean(axis=0)
    cross = centered.T @ centered
    norms = np.sqrt(cross.diagonal())
    alive = norms > 0
    safe = np.where(alive, norms, 1.0)
    Q = cross / np.outer(safe, safe)
    Q[~alive, :] = 0.0
    Q[:, ~alive] = 0.0
    np.fill_diagonal(Q, 1.0)
    return (Q + Q.T) / 2.0


def fit_pca(Xbar: np.ndarray, mode: str = "literal") -> PcaTransform:
    """Eigendecompose the correlation matrix of the normalized training data."""
    Xbar = np.asarray(Xbar, dtype=float)
    if Xbar.ndim != 2 or Xbar.shape[0] < 2:
        raise DataError("PCA fitting needs at least two rows")
    if mode not in PCA_MODES:
        raise DataError(f"unknown PCA mode {mode!r}")
    Q = correlation_matrix(Xbar)
    V, lam = symmetric_eig(Q)
    stds = Xbar.std(axis=0, ddof=1)
    return PcaTransform(
        eigenvectors=V,
        eigenvalues=lam,
        mode=mode,
        col_means=Xbar.mean(axis=0),
        col_stds=stds,
    )


def apply_pca(transform: PcaTransform, Xbar: np.ndarray) -> np.ndarray:
    """Project onto the eigenbasis; literal mode applies no centering."""
    Xbar = np.asarray(Xbar, dtype=float)
    if Xbar.ndim != 2 or Xbar.shape[1] != transform.p:
        raise DataError(f"expected {transform.p} columns for PCA projection")
    if transform.mode == "literal":
        return Xbar @ transform.eigenvectors
    stds = np.where(transform.col_stds > 0, transform.col_stds, 1.0)
    standardized = (Xbar - transform.col_means) / stds
    standardized[:, transform.col_stds == 0] = 0.0
    return standardized @ transform.eigenvectors


def identity_pca(p: int) -> PcaTransform:
    """Identity projection recorded when the PCA stage is disabled."""
    return PcaTransform(
        eigenvectors=np.eye(p),
        eigenvalues=np.ones(p),
        mode="literal",
        col_means=np.zeros(p),
        col_stds=np.ones(p),
    )


@dataclass(frozen=True)
class PipelineTransform:
    """Persisted preprocessing state: min-max bounds plus the PCA stage."""

    minmax: MinMaxParams
    pca: PcaTransform
    pca_enabled: bool
    schema: str  # schema hash of the feature pipeline

    def apply(self, X: FeatureMatrix | np.ndarray) -> np.ndarray:
        return apply_pca(self.pca, apply_minmax(self.minmax, X))


def fit_pipeline(
    X_train: FeatureMatrix | np.ndarray,
    *,
    pca_enabled: bool = True,
    pca_mode: str = "literal",
) -> PipelineTransform:
    """Fit min-max then PCA on training data only."""
    minmax = fit_minmax(X_train)
    if pca_enabled:
        pca = fit_pca(apply_minmax(minmax, X_train), mode=pca_mode)
    else:
        pca = identity_pca(minmax.p)
    return PipelineTransform(
        minmax=minmax, pca=pca, pca_enabled=pca_enabled, schema=schema_hash()
    )


def save_transform(transform: PipelineTransform, path) -> None:
    payload = {
        "schema_hash": transform.schema,
        "minmax": {
            "min": transform.minmax.mins.tolist(),
            "max": transform.minmax.maxs.tolist(),
        },
        "pca": {
            "enabled": transform.pca_enabled,
            "mode": transform.pca.mode,
            "eigenvalues": transform.pca.eigenvalues.tolist(),
            "eigenvectors": transform.pca.eigenvectors.tolist(),  # row-major
            "col_means": transform.pca.col_means.tolist(),
            "col_stds": transform.pca.col_stds.tolist(),
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_transform(path) -> PipelineTransform:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    pca_raw = raw["pca"]
    return PipelineTransform(
        minmax=MinMaxParams(
            mins=np.array(raw["minmax"]["min"], dtype=float),
            maxs=np.array(raw["minmax"]["max"], dtype=float),
        ),
        pca=PcaTransform(
            eigenvectors=np.array(pca_raw["eigenvectors"], dtype=float),
            eigenvalues=np.array(pca_raw["eigenvalues"], dtype=float),
            mode=pca_raw["mode"],
            col_means=np.array(pca_raw["col_means"], dtype=float),
            col_stds=np.array(pca_raw["col_stds"], dtype=float),
        ),
        pca_enabled=bool(pca_raw["enabled"]),
        schema=raw["schema_hash"],
    )
