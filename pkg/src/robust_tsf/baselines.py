"""Comparison methods: vanilla training, detection-imputation-retraining,
small-loss sample selection and simple imputers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .models import LossKind, Model, pointwise_loss
from .series import SupervisedDataset, TimeSeries, WindowConfig, window
from .training import EpochRecord, TrainConfig, TrainingError, train

DIR_DELTAS = (0.5, 0.6, 0.7, 0.8)

METHOD_KEYS = ("vanilla_mae", "vanilla_mse", "offline_dir", "loss_sel",
               "zero_impute", "interp_impute", "trend_only", "robust_tsf")


def vanilla_train(model: Model, dataset: SupervisedDataset, loss: LossKind, cfg: TrainConfig,
                  test_set=None) -> tuple[Model, list[EpochRecord]]:
    """Train on every window, ignoring any selection mask in ``cfg``."""
    return train(model, dataset, loss, replace(cfg, selection_mask=None), test_set)


@dataclass(frozen=True)
class DirConfig:
    delta: float = 0.5
    pretrain_epochs: int = 30
    retrain_cfg: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.pretrain_epochs < 1:
            raise ValueError("pretrain_epochs must be positive")


def dir_impute(model: Model, values, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """One forward pass replacing observations the model misses by more than ``delta``.

    Each forecast uses the already-imputed history. The first ``K`` points have
    no full input window and are left as they are. Only the first horizon
    step is used.

    Returns:
        (imputed values, boolean flags of replaced points)
    """
    z = np.array(values.values if isinstance(values, TimeSeries) else values, dtype=float)
    K = model.spec.input_len
    flags = np.zeros(z.size, dtype=bool)
    if math.isinf(delta):
        return z, flags
    for t in range(K, z.size):
        pred = model.predict(z[t - K:t])[0]
        if abs(pred - z[t]) > delta:
            z[t] = pred
            flags[t] = True
    return z, flags


def offline_dir(model: Model, series_noisy, cfg: DirConfig, window_cfg: WindowConfig,
                loss: LossKind, test_set=None) -> tuple[Model, list[EpochRecord]]:
    """Pretrain, impute large residuals once, then retrain from ``model``'s initial weights."""
    z = series_noisy.values if isinstance(series_noisy, TimeSeries) else np.asarray(series_noisy, dtype=float)
    pre_cfg = replace(cfg.retrain_cfg, epochs=cfg.pretrain_epochs, selection_mask=None)
    pretrained, _ = train(model, window(z, window_cfg), loss, pre_cfg)
    imputed, _ = dir_impute(pretrained, z, cfg.delta)
    return train(model, window(imputed, window_cfg), loss,
                 replace(cfg.retrain_cfg, selection_mask=None), test_set)


@dataclass(frozen=True)
class LossSelConfig:
    pretrain_epochs: int = 3
    keep_fraction: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.keep_fraction <= 1.0:
            raise ValueError(f"keep_fraction must lie in (0, 1], got {self.keep_fraction}")
        if self.pretrain_epochs < 1:
            raise ValueError("pretrain_epochs must be positive")


def loss_selection_mask(model: Model, dataset: SupervisedDataset, cfg: LossSelConfig,
                        train_cfg: TrainConfig, loss: LossKind) -> np.ndarray:
    """Keep the samples with the smallest pretraining loss.

    Per-sample losses are recorded after each pretraining epoch. Samples are
    ranked by mean loss, ties broken by loss standard deviation, then index.
    """
    n = len(dataset.inputs)
    keep = int(math.floor(cfg.keep_fraction * n + 1e-9))
    if keep < 1:
        raise ValueError(f"keep_fraction {cfg.keep_fraction} keeps no sample out of {n}")
    if keep == n:
        return np.ones(n, dtype=bool)
    records = []

    def record(_epoch, m):
        records.append(pointwise_loss(m.predict(dataset.inputs), dataset.labels, loss.kind))

    pre_cfg = replace(train_cfg, epochs=cfg.pretrain_epochs, selection_mask=None)
    train(model, dataset, loss, pre_cfg, on_epoch_end=record)
    losses = np.vstack(records)
    order = np.lexsort((losses.std(axis=0), losses.mean(axis=0)))
    mask = np.zeros(n, dtype=bool)
    mask[order[:keep]] = True
    return mask


def loss_based_selection(model: Model, dataset: SupervisedDataset, cfg: LossSelConfig,
                         train_cfg: TrainConfig, loss: LossKind,
                         test_set=None) -> tuple[Model, list[EpochRecord]]:
    mask = loss_selection_mask(model, dataset, cfg, train_cfg, loss)
    return train(model, dataset, loss, replace(train_cfg, selection_mask=mask), test_set)


class Imputed(NamedTuple):
    zero_imputed: np.ndarray
    interpolated: np.ndarray
    trend_only: np.ndarray
    flags: np.ndarray


def simple_imputers(series_noisy, trend, tau: float) -> Imputed:
    """Zero, linear-interpolation and trend-only repairs of points off the trend by more than ``tau``."""
    z = np.asarray(series_noisy.values if isinstance(series_noisy, TimeSeries) else series_noisy, dtype=float)
    s = np.asarray(trend, dtype=float)
    if z.shape != s.shape:
        raise ValueError(f"trend of shape {s.shape} does not match series of shape {z.shape}")
    flags = np.abs(z - s) > tau
    if flags.all():
        raise ValueError("every point is flagged; nothing to interpolate from")
    t = np.arange(z.size)
    zero = np.where(flags, 0.0, z)
    interp = z.copy()
    # np.interp clamps to the nearest unflagged value outside the known range
    interp[flags] = np.interp(t[flags], t[~flags], z[~flags])
    return Imputed(zero, interp, s.copy(), flags)


def impute_then_train(model: Model, series: np.ndarray, window_cfg: WindowConfig, loss: LossKind,
                      cfg: TrainConfig, test_set=None) -> tuple[Model, list[EpochRecord]]:
    return vanilla_train(model, window(series, window_cfg), loss, cfg, test_set)


__all__ = ["DIR_DELTAS", "METHOD_KEYS", "DirConfig", "Imputed", "LossSelConfig", "TrainingError",
           "dir_impute", "impute_then_train", "loss_based_selection", "loss_selection_mask",
           "offline_dir", "simple_imputers", "vanilla_train"]
