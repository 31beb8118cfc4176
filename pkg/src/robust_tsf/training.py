"""Mini-batch training with optional sample selection and per-epoch test metrics."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._rng import stream
from .models import LossKind, Model
from .series import mae, mse

DEFAULT_SCHEDULE = ((1, 10, 0.01), (11, 30, 0.001))


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings.

    ``lr_schedule`` holds ``(first_epoch, last_epoch, lr)`` triples with
    1-based inclusive epoch ranges that must cover every epoch.
    """

    epochs: int = 30
    batch_size: int = 128
    lr_schedule: tuple = DEFAULT_SCHEDULE
    optimizer: str = "Adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    shuffle_seed: int = 0
    selection_mask: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in ("Adam", "SGD"):
            raise ValueError(f"optimizer must be 'Adam' or 'SGD', got {self.optimizer!r}")
        schedule = tuple((int(a), int(b), float(lr)) for a, b, lr in self.lr_schedule)
        for a, b, lr in schedule:
            if lr < 0 or a > b:
                raise ValueError(f"bad schedule entry {(a, b, lr)}")
        object.__setattr__(self, "lr_schedule", schedule)
        for epoch in range(1, self.epochs + 1):
            self.lr_at(epoch)

    def lr_at(self, epoch: int) -> float:
        for a, b, lr in self.lr_schedule:
            if a <= epoch <= b:
                return lr
        raise ValueError(f"learning-rate schedule does not cover epoch {epoch}")


def constant_schedule(lr: float, epochs: int) -> tuple:
    return ((1, epochs, lr),)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    test_mae: float
    test_mse: float
    wall_ms: int

    def to_dict(self) -> dict:
        return asdict(self)


class _Adam:
    def __init__(self, n, beta1, beta2, eps):
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def step(self, params, grad, lr):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        params -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


class _SGD:
    def step(self, params, grad, lr):
        params -= lr * grad


def _arrays(data):
    if data is None:
        return None
    if isinstance(data, tuple):
        return np.asarray(data[0], dtype=float), np.asarray(data[1], dtype=float)
    return data.inputs, data.labels


def train(
    model: Model,
    data,
    loss: LossKind,
    cfg: TrainConfig,
    test_set=None,
    c_x: Optional[Sequence[float]] = None,
    on_epoch_end: Optional[Callable[[int, Model], None]] = None,
) -> tuple[Model, list[EpochRecord]]:
    """Train a copy of ``model`` and record metrics after every epoch.

    Args:
        model: initial model; not modified.
        data: :class:`SupervisedDataset`, :class:`Triplets` or ``(X, Y)``.
        loss: training loss.
        cfg: optimizer settings. When ``cfg.selection_mask`` is set only the
            masked-in samples take part in training.
        test_set: clean evaluation windows; MAE/MSE are NaN when omitted.
        c_x: per-sample constants for ``NormalizedMAE``.
        on_epoch_end: called as ``fn(epoch, model)`` after each epoch.

    Returns:
        (trained model, epoch records 1..E)
    """
    X, Y = _arrays(data)
    n = X.shape[0]
    if cfg.selection_mask is None:
        pool = np.arange(n)
    else:
        mask = np.asarray(cfg.selection_mask, dtype=bool)
        if mask.shape != (n,):
            raise ValueError(f"selection mask has shape {mask.shape}, expected ({n},)")
        pool = np.flatnonzero(mask)
    if pool.size == 0:
        raise TrainingError("selection leaves no training samples")
    if c_x is not None:
        c_x = np.asarray(c_x, dtype=float)
    test = _arrays(test_set)

    model = model.copy()
    opt = _Adam(model.params.size, cfg.beta1, cfg.beta2, cfg.eps) if cfg.optimizer == "Adam" else _SGD()
    history = []
    start = time.monotonic()
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr_at(epoch)
        order = stream(cfg.shuffle_seed, f"train.shuffle.{epoch}").permutation(pool)
        total = 0.0
        for lo in range(0, order.size, cfg.batch_size):
            batch = order[lo:lo + cfg.batch_size]
            value, grad = model.loss_and_grad(X[batch], Y[batch], loss,
                                              None if c_x is None else c_x[batch])
            if not np.isfinite(value):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            total += value * batch.size
            opt.step(model.params, grad, lr)
        if test is not None:
            pred = model.predict(test[0])
            test_mae, test_mse = mae(pred, test[1]), mse(pred, test[1])
        else:
            test_mae = test_mse = float("nan")
        history.append(EpochRecord(epoch, total / order.size, test_mae, test_mse,
                                   int((time.monotonic() - start) * 1000)))
        if on_epoch_end is not None:
            on_epoch_end(epoch, model)
    return model, history
