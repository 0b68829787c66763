"""Binary classifier training: weighted cross-entropy, SGD with momentum,
and validation-based early stopping.

Improvement means a strict decrease of the validation loss; the retained
parameters are those of the last improving epoch, and training stops once
`patience` consecutive epochs fail to improve. Batches are drawn from a
seeded per-epoch shuffle, so a fixed seed reproduces the checkpoint
byte for byte. Validation loss is unweighted by default so that model
selection reflects the true class mix (set weighted_validation to change
that).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .nn import ConvNet, ModelConfig, backward_batch, forward_batch


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 16
    max_epochs: int = 100
    patience: int = 10
    pos_weight: float | None = None  # None: N_neg / N_pos of the training set
    weighted_validation: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            # patience >= max_epochs is allowed: the stopping rule then never fires
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.pos_weight is not None and self.pos_weight <= 0:
            raise ValueError(f"pos_weight must be > 0, got {self.pos_weight}")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    improved: bool


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z):
    # log(1 + exp(z)) without overflow
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def weighted_ce_loss(logits, labels, pos_weight: float = 1.0) -> float:
    """Mean of -[w*Y*log(sigmoid(z)) + (1-Y)*log(1-sigmoid(z))] over the batch."""
    if pos_weight <= 0:
        raise ValueError(f"pos_weight must be > 0, got {pos_weight}")
    z = np.asarray(logits, dtype=float)
    y = np.asarray(labels, dtype=float)
    per_sample = pos_weight * y * _softplus(-z) + (1.0 - y) * _softplus(z)
    return float(per_sample.mean())


def _ce_grad(logits, labels, pos_weight):
    """d(mean loss)/d(logit) per sample."""
    z = np.asarray(logits, dtype=float)
    y = np.asarray(labels, dtype=float)
    s = _sigmoid(z)
    return (pos_weight * y * (s - 1.0) + (1.0 - y) * s) / z.shape[0]


def predict_proba(net: ConvNet, images) -> np.ndarray:
    """Sigmoid of the logit for each image; a pure loop over single images."""
    probs = np.empty(len(images))
    for i, image in enumerate(images):
        cache = forward_batch(net, np.asarray(image, dtype=float)[None])
        probs[i] = _sigmoid(cache.logits)[0]
    return probs


def _dataset_loss(net, images, labels, pos_weight, batch_size=64):
    total = 0.0
    for start in range(0, len(images), batch_size):
        chunk = images[start : start + batch_size]
        cache = forward_batch(net, chunk)
        z = cache.logits
        y = labels[start : start + batch_size]
        total += (pos_weight * y * _softplus(-z) + (1.0 - y) * _softplus(z)).sum()
    return total / len(images)


def train(
    train_images: np.ndarray,
    train_labels: np.ndarray,
    val_images: np.ndarray,
    val_labels: np.ndarray,
    model_config: ModelConfig,
    config: TrainConfig,
) -> tuple[ConvNet, list[EpochStats]]:
    """Train from a fresh He-uniform init; returns the early-stopped model
    and the per-epoch loss history."""
    train_images = np.asarray(train_images, dtype=float)
    train_labels = np.asarray(train_labels, dtype=float)
    val_images = np.asarray(val_images, dtype=float)
    val_labels = np.asarray(val_labels, dtype=float)

    n_pos = int(train_labels.sum())
    n_neg = len(train_labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError(
            f"training set must contain both classes (got {n_pos} positive, {n_neg} negative)"
        )
    pos_weight = config.pos_weight if config.pos_weight is not None else n_neg / n_pos
    val_weight = pos_weight if config.weighted_validation else 1.0

    init_ss, shuffle_ss = np.random.SeedSequence(config.seed).spawn(2)
    net = ConvNet.initialize(model_config, np.random.Generator(np.random.PCG64(init_ss)))
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_ss))

    velocity = {k: np.zeros_like(v) for k, v in net.params.items()}
    best_params = net.copy_params()
    best_val = np.inf
    stall = 0
    history: list[EpochStats] = []

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(len(train_images))
        batch_losses = []
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            cache = forward_batch(net, train_images[idx])
            y = train_labels[idx]
            batch_losses.append(weighted_ce_loss(cache.logits, y, pos_weight))
            grads = backward_batch(net, cache, _ce_grad(cache.logits, y, pos_weight))
            for k, g in grads.param_grads.items():
                velocity[k] = config.momentum * velocity[k] - config.learning_rate * g
                net.params[k] += velocity[k]
            net.bump_version()
        train_loss = float(np.mean(batch_losses))
        val_loss = float(_dataset_loss(net, val_images, val_labels, val_weight))
        if not np.isfinite(train_loss) or not np.isfinite(val_loss):
            raise NumericError(f"training diverged at epoch {epoch} "
                               f"(train loss {train_loss}, val loss {val_loss})")
        improved = val_loss < best_val
        history.append(EpochStats(epoch, train_loss, val_loss, improved))
        if improved:
            best_val = val_loss
            best_params = net.copy_params()
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break

    net.load_params(best_params)
    return net, history


def write_history(path, history: list[EpochStats]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "improved"])
        for row in history:
            writer.writerow([row.epoch, repr(row.train_loss), repr(row.val_loss), int(row.improved)])


def read_history(path) -> list[EpochStats]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        EpochStats(int(r["epoch"]), float(r["train_loss"]), float(r["val_loss"]), bool(int(r["improved"])))
        for r in rows
    ]
