"""Small numpy forecasters with hand-written gradients.

Parameters live in one flat float64 vector; named weight matrices are views
into it, so optimizers update ``model.params`` in place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._rng import stream

MODEL_KINDS = ("LinearAR", "MLP1")
LOSS_KINDS = ("MAE", "MSE", "NormalizedMAE")


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "LinearAR"
    input_len: int = 16
    horizon: int = 1
    hidden: int = 32
    activation: str = "tanh"
    init_seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"model kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.activation not in ("tanh", "relu"):
            raise ValueError(f"activation must be 'tanh' or 'relu', got {self.activation!r}")
        if self.input_len < 1 or self.horizon < 1 or self.hidden < 1:
            raise ValueError("input_len, horizon and hidden must be positive")

    @property
    def shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        K, O, H = self.input_len, self.horizon, self.hidden
        if self.kind == "LinearAR":
            return [("W", (O, K)), ("b", (O,))]
        return [("W1", (H, K)), ("b1", (H,)), ("W2", (O, H)), ("b2", (O,))]

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.shapes)


@dataclass(frozen=True)
class LossKind:
    """Training loss. ``NormalizedMAE`` divides each sample's MAE by ``c_x``."""

    kind: str = "MAE"

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}, got {self.kind!r}")


class Model:
    def __init__(self, spec: ModelSpec, params: Optional[np.ndarray] = None):
        self.spec = spec
        if params is None:
            params = _init_params(spec)
        params = np.array(params, dtype=float)
        if params.shape != (spec.n_params,):
            raise ValueError(f"expected {spec.n_params} parameters, got shape {params.shape}")
        self.params = params
        self._bind()

    def _bind(self):
        self.views = {}
        offset = 0
        for name, shape in self.spec.shapes:
            size = int(np.prod(shape))
            self.views[name] = self.params[offset:offset + size].reshape(shape)
            offset += size

    def __getitem__(self, name) -> np.ndarray:
        return self.views[name]

    def copy(self) -> "Model":
        return Model(self.spec, self.params.copy())

    def predict(self, x) -> np.ndarray:
        """Forecast for one window (K,) or a batch (N, K)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = x[None, :] if single else x
        if X.ndim != 2 or X.shape[1] != self.spec.input_len:
            raise ValueError(f"expected inputs of length {self.spec.input_len}, got shape {x.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("model input contains non-finite values")
        out = self._forward(X)[0]
        return out[0] if single else out

    def _forward(self, X):
        if self.spec.kind == "LinearAR":
            return X @ self["W"].T + self["b"], None
        pre = X @ self["W1"].T + self["b1"]
        act = np.tanh(pre) if self.spec.activation == "tanh" else np.maximum(pre, 0.0)
        return act @ self["W2"].T + self["b2"], (pre, act)

    def loss_and_grad(self, X, Y, loss: LossKind, c_x=None) -> tuple[float, np.ndarray]:
        """Mean loss over every batch entry and its gradient w.r.t. ``params``.

        The MAE subgradient at a zero residual is taken as 0.
        """
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.shape[0] == 0:
            raise ValueError("empty batch")
        pred, cache = self._forward(X)
        value, dpred = loss_value_and_grad(pred, Y, loss, c_x)
        return value, self._backward(X, dpred, cache)

    def _backward(self, X, dpred, cache):
        grad = np.empty_like(self.params)
        parts = []
        if self.spec.kind == "LinearAR":
            parts = [dpred.T @ X, dpred.sum(axis=0)]
        else:
            pre, act = cache
            dW2 = dpred.T @ act
            db2 = dpred.sum(axis=0)
            dact = dpred @ self["W2"]
            if self.spec.activation == "tanh":
                dpre = dact * (1.0 - act * act)
            else:
                dpre = dact * (pre > 0)
            parts = [dpre.T @ X, dpre.sum(axis=0), dW2, db2]
        offset = 0
        for part in parts:
            grad[offset:offset + part.size] = part.ravel()
            offset += part.size
        return grad

    def to_json(self) -> str:
        s = self.spec
        return json.dumps({
            "kind": s.kind, "K": s.input_len, "O": s.horizon, "H": s.hidden,
            "activation": s.activation, "params": self.params.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Model":
        d = json.loads(text)
        spec = ModelSpec(kind=d["kind"], input_len=d["K"], horizon=d["O"], hidden=d["H"],
                         activation=d.get("activation", "tanh"))
        return cls(spec, np.asarray(d["params"], dtype=float))


def _init_params(spec: ModelSpec) -> np.ndarray:
    # uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer
    rng = stream(spec.init_seed, f"model.init.{spec.kind}")
    chunks = []
    for name, shape in spec.shapes:
        fan_in = spec.input_len if name in ("W", "b", "W1", "b1") else spec.hidden
        bound = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-bound, bound, size=int(np.prod(shape))))
    return np.concatenate(chunks)


def loss_value_and_grad(pred, Y, loss: LossKind, c_x=None) -> tuple[float, np.ndarray]:
    """Mean loss over all entries of ``pred`` and its gradient w.r.t. ``pred``."""
    if pred.shape != Y.shape:
        raise ValueError(f"prediction shape {pred.shape} does not match labels {Y.shape}")
    n = pred.size
    diff = pred - Y
    if loss.kind == "MSE":
        return float(np.mean(diff * diff)), 2.0 * diff / n
    if loss.kind == "MAE":
        return float(np.mean(np.abs(diff))), np.sign(diff) / n
    if c_x is None:
        raise ValueError("NormalizedMAE needs per-sample c_x")
    c = np.asarray(c_x, dtype=float).reshape(-1, 1)
    if c.shape[0] != pred.shape[0] or np.any(c <= 0):
        raise ValueError("c_x must hold one positive constant per sample")
    return float(np.mean(np.abs(diff) / c)), np.sign(diff) / c / n


def pointwise_loss(pred, y, kind: str) -> np.ndarray:
    """Per-sample loss (mean over the horizon) without gradients."""
    diff = np.asarray(pred, dtype=float) - np.asarray(y, dtype=float)
    per = np.abs(diff) if kind in ("MAE", "NormalizedMAE") else diff * diff
    return per.reshape(per.shape[0], -1).mean(axis=1)
