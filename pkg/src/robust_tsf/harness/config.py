"""Flat ``key = value`` experiment configuration.

One setting per line, dotted keys, ``#`` starts a comment. Lines of the form
``sweep.<key> = v1, v2, ...`` declare sweep axes over any other key.

Example::

    data.source = synthetic
    data.name = sine
    anomaly.kind = Missing
    anomaly.rate = 0.3
    methods = robust_tsf, vanilla_mae
    seeds = 0, 1, 2
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from ..anomalies import KINDS, POSITIONS
from ..baselines import METHOD_KEYS


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when it came from a file."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


def _float(text: str) -> float:
    return float(text)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError("must be a positive integer")
    return value


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected true/false")


def _choice(*options):
    def parse(text):
        for opt in options:
            if text.lower() == opt.lower():
                return opt
        raise ValueError(f"expected one of {', '.join(options)}")
    return parse


def _list(item: Callable[[str], Any]):
    def parse(text):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(item(p) for p in parts)
    return parse


def _schedule(text: str) -> tuple:
    """``1-10:0.01, 11-30:0.001`` or a single rate applied to every epoch."""
    if ":" not in text:
        return (("all", float(text)),)
    out = []
    for part in text.split(","):
        span, lr = part.split(":")
        a, b = span.split("-")
        out.append((int(a), int(b), float(lr)))
    return tuple(out)


def _opt_int(text: str) -> Optional[int]:
    return None if text.lower() in ("", "none", "auto") else int(text)


def _opt_float(text: str) -> Optional[float]:
    return None if text.lower() in ("", "none", "auto") else float(text)


# key -> (parser, default)
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "data.source": (_choice("synthetic", "csv"), "synthetic"),
    "data.name": (_choice("sine", "sine_trend"), "sine"),
    "data.length": (_positive_int, 2000),
    "data.seed": (int, 0),
    "data.path": (str, ""),
    "data.column": (str, "0"),
    "data.train_fraction": (_float, 0.7),
    "window.input_len": (_positive_int, 16),
    "window.horizon": (_positive_int, 1),
    "window.stride": (_positive_int, 1),
    "anomaly.kind": (_choice(*KINDS), "Gaussian"),
    "anomaly.rate": (_float, 0.0),
    "anomaly.scale": (_float, 2.0),
    "anomaly.shape": (_float, 0.0),
    "anomaly.position": (_choice(*POSITIONS), "uniform"),
    "anomaly.seed": (int, 0),
    "trend.lam": (_float, 0.3),
    "trend.fidelity": (_choice("L1", "L2"), "L1"),
    "selection.tau": (_float, 0.3),
    "selection.weight_kind": (_choice("Dirac", "Exponential"), "Dirac"),
    "selection.k_prime": (_opt_int, None),
    "train.epochs": (_positive_int, 30),
    "train.batch_size": (_positive_int, 128),
    "train.lr": (_schedule, ((1, 10, 0.01), (11, 30, 0.001))),
    "train.optimizer": (_choice("Adam", "SGD"), "Adam"),
    "model.kind": (_choice("LinearAR", "MLP1"), "LinearAR"),
    "model.hidden": (_positive_int, 32),
    "model.activation": (_choice("tanh", "relu"), "tanh"),
    "dir.delta": (_float, 0.5),
    "dir.pretrain_epochs": (_opt_int, None),
    "dir.loss": (_choice("MAE", "MSE"), "MSE"),
    "loss_sel.keep_fraction": (_opt_float, None),
    "loss_sel.pretrain_epochs": (_positive_int, 3),
    "loss_sel.loss": (_choice("MAE", "MSE"), "MSE"),
    "methods": (_list(_choice(*METHOD_KEYS)), ("robust_tsf",)),
    "seeds": (_list(int), (0,)),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed flat settings plus raw text for every explicitly set key."""

    values: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    axes: tuple = ()

    def __getitem__(self, key: str):
        return self.values[key]

    def echo(self) -> dict:
        """JSON-friendly view of every setting."""
        out = {}
        for key, value in sorted(self.values.items()):
            out[key] = _jsonable(value)
        return out

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        raw = dict(self.raw)
        raw.update({k: str(v) for k, v in overrides.items()})
        return build_config(raw, axes=self.axes)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def parse_value(key: str, text: str, line: Optional[int] = None):
    if key not in SCHEMA:
        raise ConfigError("unknown key", key, line)
    parser = SCHEMA[key][0]
    try:
        return parser(text.strip())
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value {text.strip()!r} ({exc})", key, line) from None


def build_config(raw: dict, axes=(), lines: Optional[dict] = None) -> ExperimentConfig:
    lines = lines or {}
    values = {key: default for key, (_, default) in SCHEMA.items()}
    for key, text in raw.items():
        values[key] = parse_value(key, text, lines.get(key))
    _validate(values, lines)
    return ExperimentConfig(values, dict(raw), tuple(axes))


def _validate(values: dict, lines: dict):
    def fail(msg, key):
        raise ConfigError(msg, key, lines.get(key))

    if not 0.0 <= values["anomaly.rate"] < 1.0:
        fail("rate must lie in [0, 1)", "anomaly.rate")
    if not values["selection.tau"] > 0:
        fail("tau must be positive", "selection.tau")
    if not values["trend.lam"] > 0:
        fail("lambda must be positive", "trend.lam")
    if not values["dir.delta"] > 0:
        fail("delta must be positive", "dir.delta")
    if not 0.0 < values["data.train_fraction"] < 1.0:
        fail("train fraction must lie in (0, 1)", "data.train_fraction")
    if values["data.source"] == "csv" and not values["data.path"]:
        fail("csv source needs data.path", "data.path")
    if len(set(values["methods"])) != len(values["methods"]):
        fail("duplicate method", "methods")
    kp = values["selection.k_prime"]
    if kp is not None and not 1 <= kp <= values["window.input_len"]:
        fail("k_prime must lie in [1, input_len]", "selection.k_prime")


def parse_config_text(text: str) -> ExperimentConfig:
    raw, lines, axes = {}, {}, []
    for number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", None, number)
        key, value = (part.strip() for part in body.split("=", 1))
        if key.startswith("sweep."):
            target = key[len("sweep."):]
            axes.append((target, parse_axis_values(target, value, number)))
            continue
        if key in raw:
            raise ConfigError("duplicate key", key, number)
        parse_value(key, value, number)
        raw[key] = value
        lines[key] = number
    return build_config(raw, axes, lines)


def parse_axis_values(key: str, text: str, line: Optional[int] = None) -> tuple:
    """Split ``v1, v2, ...`` and check every value against ``key``'s parser."""
    if key not in SCHEMA:
        raise ConfigError("unknown sweep key", key, line)
    items = [p.strip() for p in text.split(",") if p.strip()]
    if not items:
        raise ConfigError("empty sweep value list", key, line)
    for item in items:
        parse_value(key, item, line)
    return tuple(items)


def parse_axis(spec: str) -> tuple[str, tuple]:
    """Parse a command-line axis ``key=v1,v2``."""
    if "=" not in spec:
        raise ConfigError(f"axis {spec!r} must look like key=v1,v2")
    key, values = spec.split("=", 1)
    return key.strip(), parse_axis_values(key.strip(), values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config_text(text)
