"""Multi-output regression-tree ensembles: random forest and extra trees.

Trees minimize the total squared-error criterion summed over the seven
outputs [h_s, fan, lpc, hpc, hpt, lpt, RUL]. The RF variant bootstraps and
scans every midpoint threshold; the ERF variant uses the full sample and one
uniform random threshold per candidate feature. All candidate features are
considered at every split. Ties in variance reduction break toward the
lowest feature index, then the lowest threshold.

Each tree draws from its own PRNG stream derived from the master seed, so
fitted forests do not depend on tree scheduling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .loss import PredictionBatch
from .types import LabelVector

N_TARGETS = 7

_PURITY_EPS = 1e-12


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    variant: str = "rf"
    max_depth: int | None = None
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.variant not in ("rf", "erf"):
            raise ConfigError(f"variant must be 'rf' or 'erf', got {self.variant!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1 or None, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ConfigError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")

    @property
    def bootstrap(self) -> bool:
        return self.variant == "rf"


@dataclass
class _Tree:
    """Flat node arrays; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    values: np.ndarray  # n_nodes x 7 target means


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[_Tree, ...]
    config: ForestConfig
    target_low: np.ndarray
    target_high: np.ndarray


def scale_labels(labels: list[LabelVector], scale: float) -> np.ndarray:
    """n x 7 regression targets: binary labels times ``scale``, RUL unchanged."""
    if scale <= 0:
        raise ConfigError(f"label scale must be positive, got {scale}")
    out = np.empty((len(labels), N_TARGETS))
    for i, lab in enumerate(labels):
        out[i, 0] = lab.hs * scale
        out[i, 1:6] = lab.ef.as_array() * scale
        out[i, 6] = lab.rul
    return out


_SCAN_BLOCK = 16  # feature block size keeps the cumulative arrays cache-resident


def _best_split_scan(Xs: np.ndarray, Ys: np.ndarray, sq: np.ndarray, msl: int):
    """Exhaustive midpoint scan over all features; returns (red, feat, thr)."""
    m, p = Xs.shape
    k = np.arange(1, m, dtype=float)[:, None]
    total_sum = Ys.sum(axis=0)  # 7
    total_sq = sq.sum()
    child_sse = np.empty((m - 1, p))
    Xsorted = np.empty_like(Xs)
    block = _SCAN_BLOCK if m >= 2048 else p  # blocking only pays off for big nodes
    for a in range(0, p, block):
        b = min(a + block, p)
        order = np.argsort(Xs[:, a:b], axis=0, kind="stable")
        Xsorted[:, a:b] = np.take_along_axis(Xs[:, a:b], order, axis=0)
        cum = np.cumsum(Ys[order], axis=0)[:-1]  # (m-1) x block x 7
        cumsq = np.cumsum(sq[order], axis=0)
        left_sse = cumsq[:-1] - np.einsum("ijk,ijk->ij", cum, cum) / k
        right_sum = total_sum[None, None, :] - cum
        right_sse = (total_sq - cumsq[:-1]) - np.einsum(
            "ijk,ijk->ij", right_sum, right_sum
        ) / (m - k)
        child_sse[:, a:b] = left_sse + right_sse

    valid = Xsorted[1:] > Xsorted[:-1]
    if msl > 1:
        pos_ok = (k >= msl) & (m - k >= msl)
        valid &= pos_ok
    child_sse[~valid] = np.inf
    best = child_sse.min()
    if not np.isfinite(best):
        return None
    cand = np.argwhere(child_sse == best)
    feat = int(cand[:, 1].min())
    pos = int(cand[cand[:, 1] == feat, 0].min())
    lo, hi = Xsorted[pos, feat], Xsorted[pos + 1, feat]
    thr = (lo + hi) / 2.0
    if thr >= hi:  # adjacent floats: fall back to the left value
        thr = lo
    parent_sse = sq.sum() - (Ys.sum(axis=0) ** 2).sum() / m
    return parent_sse - best, feat, float(thr)


def _best_split_random(Xs, Ys, sq, msl, rng):
    """One uniform threshold per feature; returns (red, feat, thr)."""
    m = Xs.shape[0]
    lo = Xs.min(axis=0)
    hi = Xs.max(axis=0)
    thr = lo + rng.uniform(size=Xs.shape[1]) * (hi - lo)
    mask = (Xs <= thr).astype(float)
    counts = mask.sum(axis=0)
    valid = (counts >= msl) & (m - counts >= msl) & (hi > lo)
    if not valid.any():
        return None
    counts_safe = np.where(valid, counts, 1.0)
    sum_left = mask.T @ Ys  # p x 7
    sq_left = mask.T @ sq  # p
    sse_left = sq_left - (sum_left**2).sum(axis=1) / counts_safe
    sum_right = Ys.sum(axis=0)[None, :] - sum_left
    right_counts = np.where(valid, m - counts, 1.0)
    sse_right = (sq.sum() - sq_left) - (sum_right**2).sum(axis=1) / right_counts
    child_sse = np.where(valid, sse_left + sse_right, np.inf)
    feat = int(np.argmin(child_sse))
    parent_sse = sq.sum() - (Ys.sum(axis=0) ** 2).sum() / m
    return parent_sse - child_sse[feat], feat, float(thr[feat])


def _grow_tree(X: np.ndarray, Y: np.ndarray, config: ForestConfig, rng) -> _Tree:
    n = X.shape[0]
    if config.bootstrap:
        idx0 = rng.integers(0, n, size=n)
    else:
        idx0 = np.arange(n)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    values: list[np.ndarray] = []

    sq_all = (Y**2).sum(axis=1)

    def new_node(idx) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        values.append(Y[idx].mean(axis=0))
        return len(feature) - 1

    root = new_node(idx0)
    stack = [(root, idx0, 0)]
    while stack:
        node, idx, depth = stack.pop()
        m = idx.shape[0]
        if m < 2 * config.min_samples_leaf:
            continue
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        Ys = Y[idx]
        sq = sq_all[idx]
        total_var = (sq.sum() - (Ys.sum(axis=0) ** 2).sum() / m) / m
        if total_var <= _PURITY_EPS:
            continue
        Xs = X[idx]
        if config.variant == "rf":
            split = _best_split_scan(Xs, Ys, sq, config.min_samples_leaf)
        else:
            split = _best_split_random(Xs, Ys, sq, config.min_samples_leaf, rng)
        if split is None:
            continue
        _, feat, thr = split
        go_left = Xs[:, feat] <= thr
        idx_left = idx[go_left]
        idx_right = idx[~go_left]
        if idx_left.size == 0 or idx_right.size == 0:
            continue
        feature[node] = feat
        threshold[node] = thr
        child_l = new_node(idx_left)
        child_r = new_node(idx_right)
        left[node] = child_l
        right[node] = child_r
        stack.append((child_r, idx_right, depth + 1))
        stack.append((child_l, idx_left, depth + 1))

    return _Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        values=np.array(values, dtype=float),
    )


def fit_forest(X: np.ndarray, Y: np.ndarray, config: ForestConfig = ForestConfig()) -> ForestModel:
    """Grow ``n_estimators`` trees; deterministic in the seed."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"forest fitting needs an n x p matrix with n >= 2, got {X.shape}")
    if Y.shape != (X.shape[0], N_TARGETS):
        raise DataError(f"targets must be n x {N_TARGETS}, got {Y.shape}")
    if not np.isfinite(Y).all():
        raise DataError("non-finite training targets")
    if not np.isfinite(X).all():
        raise DataError("non-finite training features")

    trees = tuple(
        _grow_tree(X, Y, config, np.random.default_rng([config.seed, t]))
        for t in range(config.n_estimators)
    )
    return ForestModel(
        trees=trees,
        config=config,
        target_low=Y.min(axis=0),
        target_high=Y.max(axis=0),
    )


def _tree_predict(tree: _Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int32)
    while True:
        active = np.flatnonzero(tree.feature[node] >= 0)
        if active.size == 0:
            break
        cur = node[active]
        go_left = X[active, tree.feature[cur]] <= tree.threshold[cur]
        node[active] = np.where(go_left, tree.left[cur], tree.right[cur])
    return tree.values[node]


def forest_predict(model: ForestModel, X: np.ndarray, scale: float = 100.0) -> PredictionBatch:
    """Mean over trees; classification columns come back divided by ``scale``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("prediction input must be a matrix")
    total = np.zeros((X.shape[0], N_TARGETS))
    for tree in model.trees:
        total += _tree_predict(tree, X)
    mean = total / len(model.trees)
    return PredictionBatch(class_probs=mean[:, :6] / scale, rul_pred=mean[:, 6])


def save_forest(model: ForestModel, schema: str, path) -> None:
    payload = {
        "kind": "forest",
        "schema_hash": schema,
        "config": {
            "n_estimators": model.config.n_estimators,
            "variant": model.config.variant,
            "max_depth": model.config.max_depth,
            "min_samples_leaf": model.config.min_samples_leaf,
            "seed": model.config.seed,
        },
        "target_low": model.target_low.tolist(),
        "target_high": model.target_high.tolist(),
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "values": t.values.tolist(),
            }
            for t in model.trees
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_forest(path) -> tuple[ForestModel, str]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("kind") != "forest":
        raise DataError(f"{path} is not a forest model file")
    cfg = raw["config"]
    config = ForestConfig(
        n_estimators=int(cfg["n_estimators"]),
        variant=cfg["variant"],
        max_depth=cfg["max_depth"],
        min_samples_leaf=int(cfg["min_samples_leaf"]),
        seed=int(cfg["seed"]),
    )
    trees = tuple(
        _Tree(
            feature=np.array(t["feature"], dtype=np.int32),
            threshold=np.array(t["threshold"], dtype=float),
            left=np.array(t["left"], dtype=np.int32),
            right=np.array(t["right"], dtype=np.int32),
            values=np.array(t["values"], dtype=float),
        )
        for t in raw["trees"]
    )
    model = ForestModel(
        trees=trees,
        config=config,
        target_low=np.array(raw["target_low"], dtype=float),
        target_high=np.array(raw["target_high"], dtype=float),
    )
    return model, raw["schema_hash"]
