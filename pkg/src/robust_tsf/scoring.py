"""Window anomaly scores, threshold selection and test-window repair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trend import Triplets

WEIGHT_KINDS = ("Dirac", "Exponential")


@dataclass(frozen=True)
class WeightSpec:
    """Per-position weights over a window of length ``window_len``.

    Positions are 1-based in the definitions below. ``Dirac`` puts weight 1 on
    ``k_prime <= k <= K`` (``closed=True``) or on ``k_prime <= k < K``
    (``closed=False``, which leaves the last step unweighted). ``Exponential``
    uses ``exp(-(k - K)**2)`` and ignores ``k_prime``.
    """

    kind: str = "Dirac"
    k_prime: int = 1
    window_len: int = 2
    closed: bool = True

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"weight kind must be one of {WEIGHT_KINDS}, got {self.kind!r}")
        if self.window_len < 1:
            raise ValueError("window_len must be positive")
        if not 1 <= self.k_prime <= self.window_len:
            raise ValueError(f"k_prime must lie in [1, {self.window_len}], got {self.k_prime}")
        if self.kind == "Dirac" and not self.closed and self.k_prime == self.window_len:
            raise ValueError("open Dirac window with k_prime = K has no weighted positions")


@dataclass(frozen=True)
class SelectionConfig:
    tau: float = 0.3
    weight: WeightSpec = WeightSpec()

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def default_weight(K: int) -> WeightSpec:
    return WeightSpec("Dirac", k_prime=max(K - 1, 1), window_len=K)


def weights(spec: WeightSpec) -> np.ndarray:
    K = spec.window_len
    k = np.arange(1, K + 1)
    if spec.kind == "Exponential":
        # exp underflows to 0 beyond ~27 steps from the end; keep weights positive
        return np.maximum(np.exp(-((k - K) ** 2.0)), np.finfo(float).tiny)
    upper = k <= K if spec.closed else k < K
    return ((k >= spec.k_prime) & upper).astype(float)


def anomaly_score(x, s, w) -> float:
    x, s, w = (np.asarray(a, dtype=float) for a in (x, s, w))
    if not x.shape == s.shape == w.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape}, {s.shape}, {w.shape}")
    return float(np.sum(w * np.abs(x - s)))


def scores(triplets: Triplets, w) -> np.ndarray:
    """Anomaly score of every triplet at once."""
    w = np.asarray(w, dtype=float)
    if triplets.inputs.shape[1] != w.size:
        raise ValueError(f"weights of length {w.size} do not match windows of length {triplets.inputs.shape[1]}")
    return np.abs(triplets.inputs - triplets.trends) @ w


def select(triplets: Triplets, cfg: SelectionConfig) -> np.ndarray:
    """Boolean mask of triplets whose score is strictly below ``tau``."""
    if len(triplets) == 0:
        raise ValueError("cannot select from an empty triplet set")
    if cfg.weight.window_len != triplets.inputs.shape[1]:
        raise ValueError("weight window_len does not match the triplet windows")
    return scores(triplets, weights(cfg.weight)) < cfg.tau


def repair_test_window(x, s, tau: float) -> np.ndarray:
    """Replace the last input value by the trend when it deviates by ``>= tau``."""
    x = np.array(x, dtype=float, copy=True)
    s = np.asarray(s, dtype=float)
    if x.shape != s.shape or x.ndim != 1 or x.size == 0:
        raise ValueError(f"length mismatch: {x.shape} vs {s.shape}")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if abs(x[-1] - s[-1]) >= tau:
        x[-1] = s[-1]
    return x
