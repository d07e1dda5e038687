"""Feedforward regressor for the minimum inter-arm distance.

Plain-numpy implementation: affine/leaky-ReLU/dropout hidden layers, a
linear output in meters, Charbonnier loss, decoupled-weight-decay adaptive
moment updates, and a half-cosine learning-rate schedule. Training is fully
deterministic for a fixed seed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import FeatureSpec, apply_feature_spec

CHECKPOINT_FORMAT = "armprox.checkpoint"
CHECKPOINT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite during training."""

    def __init__(self, epoch: int, kind: str):
        super().__init__(f"non-finite {kind} loss at epoch {epoch}; lower the learning rate or use mini-batches")
        self.epoch = epoch


class CheckpointError(ValueError):
    """Raised for malformed or inconsistent checkpoint files."""


@dataclass(frozen=True)
class MlpSpec:
    """Network shape and regularization knobs."""

    input_dim: int
    hidden: tuple[int, ...] = (200, 100, 100, 25)
    output_dim: int = 1
    leaky_slope: float = 0.001
    dropout_rate: float = 0.001

    def validate(self) -> "MlpSpec":
        if self.input_dim < 1 or self.output_dim < 1 or any(w < 1 for w in self.hidden):
            raise ValueError("all layer widths must be at least 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.leaky_slope <= 0.0:
            raise ValueError("leaky_slope must be positive")
        return self

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        widths = [self.input_dim, *self.hidden, self.output_dim]
        return list(zip(widths[:-1], widths[1:]))


@dataclass
class MlpParams:
    """Per-layer weight matrices (fan_in, fan_out) and bias vectors."""

    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "MlpParams":
        return MlpParams(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; ``batch_size`` None means full-batch updates."""

    epochs: int = 2500
    learning_rate: float = 0.05
    weight_decay: float = 1e-5
    lr_floor: float = 1e-5
    charbonnier_eps: float = 1e-3
    batch_size: int | None = None
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.learning_rate <= 0.0 or self.charbonnier_eps <= 0.0:
            raise ValueError("learning_rate and charbonnier_eps must be positive")
        if self.lr_floor < 0.0 or self.lr_floor > self.learning_rate:
            raise ValueError("lr_floor must lie in [0, learning_rate]")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be at least 1 when given")
        return self


@dataclass(frozen=True)
class Metrics:
    """Regression metrics in meters; ``r2`` is None when targets are constant."""

    mae: float
    rmse: float
    r2: float | None


@dataclass
class LossHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            for e, (tr, va) in enumerate(zip(self.train_loss, self.val_loss)):
                fh.write(f"{e},{tr!r},{va!r}\n")


def init_model(spec: MlpSpec, seed: int) -> MlpParams:
    """Fan-in-scaled uniform weights, zero biases; deterministic in the seed."""
    spec.validate()
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in spec.layer_dims:
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(spec, weights, biases)


def leaky_relu(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z > 0.0, z, slope * z)


def charbonnier_loss(pred, target, eps: float):
    """sqrt(residual^2 + eps^2); the mean over records for batched inputs."""
    if eps <= 0.0:
        raise ValueError("charbonnier eps must be positive")
    r = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    loss = np.sqrt(r * r + eps * eps)
    return float(loss) if loss.ndim == 0 else float(loss.mean())


def _forward_pass(params: MlpParams, x: np.ndarray, mode: str, rng, keep_cache: bool):
    spec = params.spec
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    dropout = mode == "train" and spec.dropout_rate > 0.0
    if dropout and rng is None:
        raise ValueError("train-mode forward with dropout needs an rng")
    h = x
    cache = []
    n_hidden = len(spec.hidden)
    for i in range(n_hidden):
        z = h @ params.weights[i] + params.biases[i]
        a = leaky_relu(z, spec.leaky_slope)
        if dropout:
            keep = 1.0 - spec.dropout_rate
            # inverted scaling: eval mode needs no rescale
            mask = (rng.random(a.shape) < keep) / keep
            out = a * mask
        else:
            mask = None
            out = a
        if keep_cache:
            cache.append((h, z, mask))
        h = out
    y = h @ params.weights[n_hidden] + params.biases[n_hidden]
    if keep_cache:
        cache.append((h, None, None))
    return y[..., 0], cache


def forward(params: MlpParams, x, mode: str = "eval", rng: np.random.Generator | None = None):
    """Network output in meters; a float for a single feature vector."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if arr.shape[-1] != params.spec.input_dim:
        raise ValueError(
            f"input dimension {arr.shape[-1]} does not match model input_dim {params.spec.input_dim}"
        )
    y, _ = _forward_pass(params, arr.reshape(-1, params.spec.input_dim), mode, rng, keep_cache=False)
    return float(y[0]) if single else y


def loss_and_gradients(
    params: MlpParams,
    x: np.ndarray,
    y: np.ndarray,
    eps: float,
    mode: str = "train",
    rng: np.random.Generator | None = None,
):
    """Batch Charbonnier loss plus analytic parameter gradients (backprop)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pred, cache = _forward_pass(params, x, mode, rng, keep_cache=True)
    r = pred - y
    root = np.sqrt(r * r + eps * eps)
    loss = float(root.mean())
    n = x.shape[0]
    spec = params.spec

    grads_w = [np.empty_like(w) for w in params.weights]
    grads_b = [np.empty_like(b) for b in params.biases]
    delta = (r / root / n)[:, None]
    h_last = cache[-1][0]
    grads_w[-1][:] = h_last.T @ delta
    grads_b[-1][:] = delta.sum(axis=0)
    upstream = delta @ params.weights[-1].T
    for i in range(len(spec.hidden) - 1, -1, -1):
        h_in, z, mask = cache[i]
        if mask is not None:
            upstream = upstream * mask
        upstream = upstream * np.where(z > 0.0, 1.0, spec.leaky_slope)
        grads_w[i][:] = h_in.T @ upstream
        grads_b[i][:] = upstream.sum(axis=0)
        if i > 0:
            upstream = upstream @ params.weights[i].T
    return loss, grads_w, grads_b


def cosine_lr(cfg: TrainConfig, epoch: int) -> float:
    """Half-cosine decay from learning_rate to lr_floor across the epoch budget."""
    if cfg.epochs == 1:
        return cfg.learning_rate
    phase = math.pi * epoch / (cfg.epochs - 1)
    return cfg.lr_floor + 0.5 * (cfg.learning_rate - cfg.lr_floor) * (1.0 + math.cos(phase))


def train(
    params: MlpParams,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig,
) -> tuple[MlpParams, LossHistory]:
    """Optimize a copy of ``params``; returns the trained model and per-epoch losses.

    One scheduler step per epoch; a non-finite training or validation loss
    aborts with the offending epoch.
    """
    cfg.validate()
    x_train, y_train = (np.asarray(a, dtype=float) for a in train_set)
    x_val, y_val = (np.asarray(a, dtype=float) for a in val_set)
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("training and validation sets must be non-empty")
    if x_train.shape[1] != params.spec.input_dim or x_val.shape[1] != params.spec.input_dim:
        raise ValueError("feature dimension does not match the model input_dim")

    params = params.copy()
    rng = np.random.default_rng(cfg.seed)
    m_w = [np.zeros_like(w) for w in params.weights]
    v_w = [np.zeros_like(w) for w in params.weights]
    m_b = [np.zeros_like(b) for b in params.biases]
    v_b = [np.zeros_like(b) for b in params.biases]
    step = 0
    history = LossHistory()

    n = len(x_train)
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    for epoch in range(cfg.epochs):
        lr = cosine_lr(cfg, epoch)
        if batch == n:
            starts: list[np.ndarray] = [np.arange(n)]
        else:
            order = rng.permutation(n)
            starts = [order[at:at + batch] for at in range(0, n, batch)]
        epoch_loss = 0.0
        for idx in starts:
            loss, grads_w, grads_b = loss_and_gradients(
                params, x_train[idx], y_train[idx], cfg.charbonnier_eps, "train", rng
            )
            epoch_loss += loss * len(idx)
            step += 1
            bc1 = 1.0 - ADAM_BETA1 ** step
            bc2 = 1.0 - ADAM_BETA2 ** step
            for ps, gs, ms, vs in (
                (params.weights, grads_w, m_w, v_w),
                (params.biases, grads_b, m_b, v_b),
            ):
                for p, g, m, v in zip(ps, gs, ms, vs):
                    m *= ADAM_BETA1
                    m += (1.0 - ADAM_BETA1) * g
                    v *= ADAM_BETA2
                    v += (1.0 - ADAM_BETA2) * (g * g)
                    if cfg.weight_decay:
                        p *= 1.0 - lr * cfg.weight_decay
                    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
        train_loss = epoch_loss / n
        val_pred = forward(params, x_val)
        val_loss = charbonnier_loss(val_pred, y_val, cfg.charbonnier_eps)
        if not math.isfinite(train_loss):
            raise TrainingDiverged(epoch, "training")
        if not math.isfinite(val_loss):
            raise TrainingDiverged(epoch, "validation")
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
    return params, history


def evaluate(params: MlpParams, data: tuple[np.ndarray, np.ndarray]) -> Metrics:
    """MAE, RMSE and R^2 of eval-mode predictions against targets."""
    x, y = (np.asarray(a, dtype=float) for a in data)
    if len(x) == 0:
        raise ValueError("evaluation set must be non-empty")
    pred = forward(params, x)
    return metrics_from_predictions(pred, y)


def metrics_from_predictions(pred: np.ndarray, target: np.ndarray) -> Metrics:
    err = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    mae = float(np.abs(err).mean())
    rmse = float(np.sqrt((err * err).mean()))
    sst = float(((target - target.mean()) ** 2).sum())
    if sst == 0.0:
        return Metrics(mae=mae, rmse=rmse, r2=None)
    return Metrics(mae=mae, rmse=rmse, r2=1.0 - float((err * err).sum()) / sst)


def error_metric(d_a: float, d_b: float) -> float:
    """Absolute difference between two distance estimates."""
    return abs(float(d_a) - float(d_b))


def predict_min_distance(params: MlpParams, fspec: FeatureSpec, rel_pos, q1, q2) -> float:
    """Eval-mode prediction (meters) for one configuration of raw inputs."""
    if fspec.input_dim != params.spec.input_dim:
        raise ValueError(
            f"feature spec keeps {fspec.input_dim} inputs but the model expects {params.spec.input_dim}"
        )
    raw = np.concatenate([
        np.asarray(rel_pos, dtype=float).reshape(3),
        np.asarray(q1, dtype=float).reshape(7),
        np.asarray(q2, dtype=float).reshape(7),
    ])
    x = apply_feature_spec(raw[None, :], fspec)
    return float(forward(params, x)[0])


def save_checkpoint(
    path: str | Path,
    params: MlpParams,
    fspec: FeatureSpec,
    cfg: TrainConfig | None = None,
) -> None:
    """Self-describing JSON checkpoint with full float precision."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "mlp_spec": {
            "input_dim": params.spec.input_dim,
            "hidden": list(params.spec.hidden),
            "output_dim": params.spec.output_dim,
            "leaky_slope": params.spec.leaky_slope,
            "dropout_rate": params.spec.dropout_rate,
        },
        "feature_spec": {
            "mask": sorted(fspec.mask),
            "scale": fspec.scale,
            "pos_scale": fspec.pos_scale,
        },
        "train_config": None if cfg is None else {
            "epochs": cfg.epochs,
            "learning_rate": cfg.learning_rate,
            "weight_decay": cfg.weight_decay,
            "lr_floor": cfg.lr_floor,
            "charbonnier_eps": cfg.charbonnier_eps,
            "batch_size": cfg.batch_size,
            "seed": cfg.seed,
        },
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[MlpParams, FeatureSpec, TrainConfig | None]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not an armprox checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    try:
        ms = doc["mlp_spec"]
        spec = MlpSpec(
            input_dim=int(ms["input_dim"]),
            hidden=tuple(int(w) for w in ms["hidden"]),
            output_dim=int(ms["output_dim"]),
            leaky_slope=float(ms["leaky_slope"]),
            dropout_rate=float(ms["dropout_rate"]),
        ).validate()
        fs = doc["feature_spec"]
        fspec = FeatureSpec(
            mask=frozenset(int(i) for i in fs["mask"]),
            scale=float(fs["scale"]),
            pos_scale=None if fs["pos_scale"] is None else float(fs["pos_scale"]),
        ).validate()
        weights = [np.asarray(w, dtype=float) for w in doc["weights"]]
        biases = [np.asarray(b, dtype=float) for b in doc["biases"]]
        tc = doc.get("train_config")
        cfg = None if tc is None else TrainConfig(
            epochs=int(tc["epochs"]),
            learning_rate=float(tc["learning_rate"]),
            weight_decay=float(tc["weight_decay"]),
            lr_floor=float(tc["lr_floor"]),
            charbonnier_eps=float(tc["charbonnier_eps"]),
            batch_size=None if tc["batch_size"] is None else int(tc["batch_size"]),
            seed=int(tc["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint: {exc}") from None
    expected = spec.layer_dims
    if len(weights) != len(expected) or len(biases) != len(expected):
        raise CheckpointError(f"{path}: wrong number of parameter arrays")
    for (fan_in, fan_out), w, b in zip(expected, weights, biases):
        if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
            raise CheckpointError(f"{path}: parameter shapes do not chain with the declared spec")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise CheckpointError(f"{path}: non-finite parameters")
    if fspec.input_dim != spec.input_dim:
        raise CheckpointError(
            f"{path}: feature spec keeps {fspec.input_dim} inputs but the model declares {spec.input_dim}"
        )
    return MlpParams(spec, weights, biases), fspec, cfg
