"""Robust time-series forecasting under training-set anomalies.

Trend-filter anomaly scores select clean-looking windows, and the forecaster
is trained on them with MAE loss. The package also ships anomaly injectors,
baseline methods, theorem probes and a config-driven experiment harness.
"""

from .anomalies import AnomalySpec, inject_label, inject_point, inject_positional, inject_subsequence
from .models import LossKind, Model, ModelSpec
from .scoring import SelectionConfig, WeightSpec, anomaly_score, repair_test_window, select, weights
from .series import (DataError, NormParams, SupervisedDataset, TimeSeries, WindowConfig, load_csv,
                     normalize, split, window)
from .training import EpochRecord, TrainConfig, train
from .trend import TrendConfig, TrendSolution, fit_trend, trend_windows

__version__ = "0.1.0"

__all__ = [
    "AnomalySpec", "DataError", "EpochRecord", "LossKind", "Model", "ModelSpec", "NormParams",
    "SelectionConfig", "SupervisedDataset", "TimeSeries", "TrainConfig", "TrendConfig",
    "TrendSolution", "WeightSpec", "WindowConfig", "anomaly_score", "fit_trend", "inject_label",
    "inject_point", "inject_positional", "inject_subsequence", "load_csv", "normalize",
    "repair_test_window", "select", "split", "train", "trend_windows", "weights", "window",
]
