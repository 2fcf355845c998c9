"""Multi-head MLP: input -> 64 -> 32 -> 7, trained full-batch with ADAM.

Head order is [h_s, fan, lpc, hpc, hpt, lpt, RUL]. In composite mode the six
classification heads pass through a sigmoid and the loss is the composite
objective; in MSE mode all heads are linear and the targets carry the
classification labels scaled by ``label_scale``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .loss import LossConfig, PredictionBatch, clamp_probs, composite_loss, composite_loss_grad
from .types import LabelVector

HIDDEN_1 = 64
HIDDEN_2 = 32
N_OUTPUTS = 7

LOSS_MODES = ("composite", "mse")


@dataclass(frozen=True)
class ModelParams:
    W1: np.ndarray  # 64 x p
    b1: np.ndarray
    W2: np.ndarray  # 32 x 64
    b2: np.ndarray
    W3: np.ndarray  # 7 x 32
    b3: np.ndarray

    def __post_init__(self):
        shapes = {
            "W1": (HIDDEN_1, self.W1.shape[1]),
            "b1": (HIDDEN_1,),
            "W2": (HIDDEN_2, HIDDEN_1),
            "b2": (HIDDEN_2,),
            "W3": (N_OUTPUTS, HIDDEN_2),
            "b3": (N_OUTPUTS,),
        }
        for name, expected in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != expected:
                raise DataError(f"{name} must have shape {expected}, got {arr.shape}")
            if not np.isfinite(arr).all():
                raise NumericError(f"non-finite values in {name}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def input_width(self) -> int:
        return self.W1.shape[1]

    @property
    def n_parameters(self) -> int:
        return sum(getattr(self, n).size for n in ("W1", "b1", "W2", "b2", "W3", "b3"))

    def tensors(self) -> tuple[np.ndarray, ...]:
        return (self.W1, self.b1, self.W2, self.b2, self.W3, self.b3)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    loss: str = "composite"
    gamma: float = 10.0
    label_scale: float = 100.0
    seed: int = 0
    rul_rectify: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.label_scale <= 0:
            raise ConfigError(f"label_scale must be positive, got {self.label_scale}")
        if self.loss not in LOSS_MODES:
            raise ConfigError(f"loss must be one of {LOSS_MODES}, got {self.loss!r}")

    def loss_config(self) -> LossConfig:
        return LossConfig(gamma=self.gamma)


def parameter_count(p: int) -> int:
    return p * HIDDEN_1 + HIDDEN_1 + HIDDEN_1 * HIDDEN_2 + HIDDEN_2 + HIDDEN_2 * N_OUTPUTS + N_OUTPUTS


def init_network(p: int, seed: int = 0) -> ModelParams:
    """Glorot-uniform weights, zero biases, deterministic in the seed."""
    if p < 1:
        raise ConfigError(f"input width must be >= 1, got {p}")
    rng = np.random.default_rng(seed)

    def glorot(fan_out: int, fan_in: int) -> np.ndarray:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_out, fan_in))

    return ModelParams(
        W1=glorot(HIDDEN_1, p),
        b1=np.zeros(HIDDEN_1),
        W2=glorot(HIDDEN_2, HIDDEN_1),
        b2=np.zeros(HIDDEN_2),
        W3=glorot(N_OUTPUTS, HIDDEN_2),
        b3=np.zeros(N_OUTPUTS),
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_cached(params: ModelParams, X: np.ndarray) -> dict[str, np.ndarray]:
    z1 = X @ params.W1.T + params.b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params.W2.T + params.b2
    h2 = np.maximum(z2, 0.0)
    z = h2 @ params.W3.T + params.b3
    return {"X": X, "z1": z1, "h1": h1, "z2": z2, "h2": h2, "z": z}


def _heads(z: np.ndarray, loss_mode: str) -> PredictionBatch:
    if loss_mode == "composite":
        return PredictionBatch(class_probs=_sigmoid(z[:, :6]), rul_pred=z[:, 6])
    return PredictionBatch(class_probs=z[:, :6], rul_pred=z[:, 6])


def forward(params: ModelParams, X: np.ndarray, loss_mode: str = "composite") -> PredictionBatch:
    """ReLU MLP forward pass; composite mode puts sigmoids on the class heads."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.input_width:
        raise DataError(f"expected n x {params.input_width} inputs, got {X.shape}")
    if loss_mode not in LOSS_MODES:
        raise ConfigError(f"unknown loss mode {loss_mode!r}")
    cache = _forward_cached(params, X)
    if not np.isfinite(cache["z"]).all():
        raise NumericError("non-finite activation in forward pass")
    return _heads(cache["z"], loss_mode)


def _backward(
    params: ModelParams, cache: dict[str, np.ndarray], dz: np.ndarray
) -> tuple[np.ndarray, ...]:
    dW3 = dz.T @ cache["h2"]
    db3 = dz.sum(axis=0)
    dh2 = dz @ params.W3
    dz2 = dh2 * (cache["z2"] > 0)
    dW2 = dz2.T @ cache["h1"]
    db2 = dz2.sum(axis=0)
    dh1 = dz2 @ params.W2
    dz1 = dh1 * (cache["z1"] > 0)
    dW1 = dz1.T @ cache["X"]
    db1 = dz1.sum(axis=0)
    return dW1, db1, dW2, db2, dW3, db3


def loss_and_grads(
    params: ModelParams,
    X: np.ndarray,
    labels: list[LabelVector],
    config: TrainConfig,
    targets_mse: np.ndarray | None = None,
) -> tuple[float, tuple[np.ndarray, ...]]:
    """Composite or MSE loss with gradients for every parameter tensor."""
    cache = _forward_cached(params, X)
    z = cache["z"]
    if not np.isfinite(z).all():
        raise NumericError("non-finite activation in forward pass")
    if config.loss == "composite":
        batch = _heads(z, "composite")
        loss_cfg = config.loss_config()
        value = composite_loss(labels, batch, loss_cfg)
        if not np.isfinite(value):
            raise NumericError("non-finite loss value")
        grad_probs, grad_rul = composite_loss_grad(labels, batch, loss_cfg)
        probs = clamp_probs(batch.class_probs, loss_cfg)
        dz = np.empty_like(z)
        dz[:, :6] = grad_probs * probs * (1.0 - probs)
        dz[:, 6] = grad_rul
    else:
        assert targets_mse is not None
        diff = z - targets_mse
        value = float(np.mean(diff**2))
        if not np.isfinite(value):
            raise NumericError("non-finite loss value")
        dz = 2.0 * diff / diff.size
    return value, _backward(params, cache, dz)


def train(
    X_train: np.ndarray,
    labels_train: list[LabelVector],
    config: TrainConfig = TrainConfig(),
) -> tuple[ModelParams, np.ndarray]:
    """Full-batch ADAM; returns trained params and the pre-step loss history."""
    X = np.asarray(X_train, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError(f"training needs an n x p matrix with n >= 2, got {X.shape}")
    if len(labels_train) != X.shape[0]:
        raise DataError("labels misaligned with training matrix")

    targets = None
    if config.loss == "mse":
        from .forest import scale_labels

        targets = scale_labels(labels_train, config.label_scale)

    params = init_network(X.shape[1], config.seed)
    tensors = [t.copy() for t in params.tensors()]
    m = [np.zeros_like(t) for t in tensors]
    v = [np.zeros_like(t) for t in tensors]
    history = np.empty(config.epochs)

    for epoch in range(config.epochs):
        try:
            current = ModelParams(*tensors)
            value, grads = loss_and_grads(current, X, labels_train, config, targets)
        except NumericError as exc:
            raise NumericError(f"{exc} at epoch {epoch}") from None
        history[epoch] = value
        t = epoch + 1
        for k, g in enumerate(grads):
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g
            m_hat = m[k] / (1.0 - config.beta1**t)
            v_hat = v[k] / (1.0 - config.beta2**t)
            tensors[k] = tensors[k] - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)

    return ModelParams(*tensors), history


def predict(params: ModelParams, X: np.ndarray, config: TrainConfig) -> PredictionBatch:
    """Forward pass; MSE-mode class scores are rescaled back to [0, 1] units
    and the RUL head is clamped at zero when rectification is enabled."""
    batch = forward(params, X, config.loss)
    probs = batch.class_probs
    rul = batch.rul_pred
    if config.loss == "mse":
        probs = probs / config.label_scale
    if config.rul_rectify:
        rul = np.maximum(rul, 0.0)
    return PredictionBatch(class_probs=probs, rul_pred=rul)


def save_model(params: ModelParams, config: TrainConfig, schema: str, path) -> None:
    payload = {
        "kind": "ann",
        "schema_hash": schema,
        "config": {
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "beta1": config.beta1,
            "beta2": config.beta2,
            "adam_eps": config.adam_eps,
            "loss": config.loss,
            "gamma": config.gamma,
            "label_scale": config.label_scale,
            "seed": config.seed,
            "rul_rectify": config.rul_rectify,
        },
        "layers": {
            name: {"shape": list(getattr(params, name).shape),
                   "values": getattr(params, name).ravel().tolist()}
            for name in ("W1", "b1", "W2", "b2", "W3", "b3")
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_model(path) -> tuple[ModelParams, TrainConfig, str]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("kind") != "ann":
        raise DataError(f"{path} is not an ANN model file")
    arrays = {}
    for name, entry in raw["layers"].items():
        arrays[name] = np.array(entry["values"], dtype=float).reshape(entry["shape"])
    cfg = raw["config"]
    config = TrainConfig(
        epochs=int(cfg["epochs"]),
        learning_rate=float(cfg["learning_rate"]),
        beta1=float(cfg["beta1"]),
        beta2=float(cfg["beta2"]),
        adam_eps=float(cfg["adam_eps"]),
        loss=cfg["loss"],
        gamma=float(cfg["gamma"]),
        label_scale=float(cfg["label_scale"]),
        seed=int(cfg["seed"]),
        rul_rectify=bool(cfg["rul_rectify"]),
    )
    return ModelParams(**arrays), config, raw["schema_hash"]
