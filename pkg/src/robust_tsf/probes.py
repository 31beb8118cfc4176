"""Executable checks of the loss-robustness results.

* :func:`loss_identity_probe` checks that MAE against a clean and an anomalous
  label sums to a constant for predictions between the two labels.
* :func:`risk_affinity_probe` estimates by Monte Carlo that the noisy MAE risk is
  an affine function ``gamma1 * R + gamma2`` of the clean risk, ``gamma1 = 1 - 2 eta``.
* :func:`gaussian_optimum_probe` locates the minimizer of the expected loss under
  zero-mean Gaussian label noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._rng import stream
from .anomalies import AnomalySpec
from .models import LossKind, Model

AFFINITY_OFFSETS = np.linspace(-0.5, 0.5, 11)
AFFINITY_BATCHES = 20


@dataclass(frozen=True)
class IdentityAudit:
    c_x: float
    mae_sums: np.ndarray
    mse_sums: np.ndarray
    max_ulp_error: float

    @property
    def mse_varies(self) -> bool:
        return bool(np.ptp(self.mse_sums) > 0)


def loss_identity_probe(y: float, y_anom: float, q_samples: Sequence[float]) -> IdentityAudit:
    """Evaluate ``l(q, y) + l(q, y_anom)`` for MAE and MSE at each ``q``.

    ``max_ulp_error`` measures the MAE sums against ``|y - y_anom|`` in units of
    the spacing of that constant, over the samples strictly between the labels.

    Raises:
        ValueError: ``y == y_anom`` or no samples.
    """
    q = np.asarray(q_samples, dtype=float).ravel()
    if q.size == 0:
        raise ValueError("q_samples is empty")
    if y == y_anom:
        raise ValueError("y and y_anom must differ")
    c = abs(y - y_anom)
    mae_sums = np.abs(q - y) + np.abs(q - y_anom)
    mse_sums = (q - y) ** 2 + (q - y_anom) ** 2
    inside = (q > min(y, y_anom)) & (q < max(y, y_anom))
    err = np.abs(mae_sums[inside] - c) / np.spacing(c)
    return IdentityAudit(c, mae_sums, mse_sums, float(err.max()) if err.size else 0.0)


@dataclass(frozen=True)
class LossAudit:
    """Fitted affine relation between noisy and clean risk.

    ``gamma1_se`` is a batch-means Monte-Carlo standard error of ``gamma1``.
    """

    gamma1: float
    gamma2: float
    c_x_mean: float
    eta: float = 0.0
    gamma1_se: float = 0.0
    clean_risk: np.ndarray = field(default_factory=lambda: np.zeros(0))
    noisy_risk: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def expected_gamma1(self) -> float:
        return 1.0 - 2.0 * self.eta

    def consistent(self, n_se: float = 3.0) -> bool:
        return abs(self.gamma1 - self.expected_gamma1) <= n_se * self.gamma1_se + 1e-12


def _affine_fit(r, rt):
    A = np.column_stack((r, np.ones_like(r)))
    (g1, g2), *_ = np.linalg.lstsq(A, rt, rcond=None)
    return float(g1), float(g2)


def _risks(pred, y, y_noisy, lo, hi):
    f = np.clip(pred[None, :] + AFFINITY_OFFSETS[:, None], lo, hi)
    return np.abs(f - y).mean(axis=1), np.abs(f - y_noisy).mean(axis=1)


def risk_affinity_probe(predictor: Model, clean_data, eta: float, anomaly: AnomalySpec,
                        n_samples: int, seed: int = 0) -> LossAudit:
    """Monte-Carlo check that noisy MAE risk is affine in clean MAE risk.

    Windows are resampled with replacement from ``clean_data``. Each label is
    replaced by its anomalous value with probability ``eta``. A family of
    predictors is built from the model output shifted by fixed offsets and
    clamped into the band between clean and anomalous label, where the MAE
    sum identity holds. ``(clean risk, noisy risk)`` pairs across the family
    are regressed to obtain ``gamma1`` and ``gamma2``.

    Args:
        predictor: fixed model.
        clean_data: :class:`SupervisedDataset` or ``(X, Y)`` of clean windows.
        eta: flip probability, ``0 <= eta < 0.5``.
        anomaly: ``Constant`` (label + scale) or ``Missing`` (label := scale).
        n_samples: Monte-Carlo sample count.
        seed: resampling seed.
    """
    if not 0.0 <= eta < 0.5:
        raise ValueError(f"eta must lie in [0, 0.5), got {eta}")
    if anomaly.kind not in ("Constant", "Missing"):
        raise ValueError(f"anomaly kind must be Constant or Missing, got {anomaly.kind!r}")
    if n_samples < 2 * AFFINITY_BATCHES:
        raise ValueError(f"n_samples must be at least {2 * AFFINITY_BATCHES}")
    if isinstance(clean_data, tuple):
        X, Y = (np.asarray(a, dtype=float) for a in clean_data)
    else:
        X, Y = clean_data.inputs, clean_data.labels

    rng = stream(seed, "probe.affinity")
    idx = rng.integers(0, X.shape[0], size=n_samples)
    y = Y[idx, 0]
    pred = predictor.predict(X[idx])[:, 0]
    y_anom = y + anomaly.scale if anomaly.kind == "Constant" else np.full_like(y, anomaly.scale)
    flip = rng.random(n_samples) < eta
    y_noisy = np.where(flip, y_anom, y)
    lo, hi = np.minimum(y, y_anom), np.maximum(y, y_anom)
    c_x = hi - lo

    r, rt = _risks(pred, y, y_noisy, lo, hi)
    g1, g2 = _affine_fit(r, rt)

    batch_g1 = []
    for part in np.array_split(np.arange(n_samples), AFFINITY_BATCHES):
        br, brt = _risks(pred[part], y[part], y_noisy[part], lo[part], hi[part])
        batch_g1.append(_affine_fit(br, brt)[0])
    se = float(np.std(batch_g1, ddof=1) / np.sqrt(AFFINITY_BATCHES))
    return LossAudit(g1, g2, float(c_x.mean()), eta, se, r, rt)


def gaussian_optimum_probe(y: float, sigma: float, eta: float, n_samples: int,
                           loss: LossKind, seed: int = 0) -> float:
    """Minimizer of ``(1 - eta) l(q, y) + eta * mean l(q, y + eps)``, eps ~ N(0, sigma^2).

    MSE has the closed form ``y + eta * mean(eps)``. MAE-type losses are
    minimized by bounded Brent search over the hull of the targets, which
    contains the minimizer of any sum of convex distance losses.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    eps = stream(seed, "probe.gaussian").normal(0.0, sigma, size=n_samples)
    if loss.kind == "MSE":
        return float(y + eta * eps.mean())
    targets = y + eps
    lo, hi = min(y, targets.min()), max(y, targets.max())
    if not hi > lo:
        raise ValueError("degenerate search interval")

    def risk(q):
        return (1.0 - eta) * abs(q - y) + eta * np.mean(np.abs(q - targets))

    res = minimize_scalar(risk, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
    return float(res.x)
