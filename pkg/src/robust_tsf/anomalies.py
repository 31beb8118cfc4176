"""Anomaly injection: point, positional, label-only and subsequence contamination.

All functions are pure given the :class:`AnomalySpec`; the spec's seed fixes
every draw. Draw convention for point kinds: one uniform per position decides
the flip (``u < rate``), and one noise draw per position is taken whether or
not the position flips, so the stream is aligned to positions rather than to
the number of anomalies.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._rng import stream
from .series import SupervisedDataset, TimeSeries

POINT_KINDS = ("Constant", "Missing", "Gaussian", "StudentT", "GenPareto")
KINDS = POINT_KINDS + ("SubsequenceGaussian",)
POSITIONS = ("uniform", "front", "middle", "back")

# Variance of the continuation step inside an anomalous run.
SUBSEQUENCE_STEP_VAR = 0.1


@dataclass(frozen=True)
class AnomalySpec:
    """Anomaly model parameters.

    ``scale`` is the constant offset (Constant), the replacement value
    (Missing), the noise std (Gaussian, SubsequenceGaussian) or a multiplier on
    the standard heavy-tailed draw (StudentT, GenPareto). ``shape`` is nu for
    StudentT, c for GenPareto and the run-continuation probability phi for
    SubsequenceGaussian.
    """

    kind: str = "Gaussian"
    rate: float = 0.0
    scale: float = 1.0
    shape: float = 0.0
    position: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        kind = _canonical(self.kind, KINDS, "kind")
        position = _canonical(self.position, POSITIONS, "position")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "position", position)
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"anomaly rate must lie in [0, 1), got {self.rate}")
        if not math.isfinite(self.scale):
            raise ValueError("anomaly scale must be finite")
        if kind in ("Gaussian", "SubsequenceGaussian") and self.scale <= 0:
            raise ValueError(f"{kind} anomalies need sigma > 0, got {self.scale}")
        if kind == "StudentT" and self.shape <= 0:
            raise ValueError(f"StudentT needs nu > 0, got {self.shape}")
        if kind == "GenPareto" and self.shape <= 0:
            raise ValueError(f"GenPareto needs c > 0, got {self.shape}")
        if kind == "SubsequenceGaussian" and not 0.0 <= self.shape < 1.0:
            raise ValueError(f"SubsequenceGaussian needs 0 <= phi < 1, got {self.shape}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalySpec":
        known = {"kind", "rate", "scale", "shape", "position", "seed"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown anomaly fields: {sorted(extra)}")
        kw = dict(d)
        for key in ("rate", "scale", "shape"):
            if key in kw:
                kw[key] = float(kw[key])
        if "seed" in kw:
            kw["seed"] = int(kw["seed"])
        return cls(**kw)


def _canonical(value, options, what):
    for opt in options:
        if str(value).lower() == opt.lower():
            return opt
    raise ValueError(f"unknown anomaly {what} {value!r}; expected one of {options}")


def _point_noise(kind, scale, shape, rng, size):
    if kind == "Gaussian":
        return rng.standard_normal(size) * scale
    if kind == "StudentT":
        return rng.standard_t(shape, size) * scale
    if kind == "GenPareto":
        v = rng.random(size)
        # inverse CDF of the standard generalized Pareto, support [0, inf)
        return np.expm1(-shape * np.log1p(-v)) / shape * scale
    return None


def _apply_point(z, flips, kind, scale, noise):
    out = np.array(z, dtype=float, copy=True)
    if kind == "Constant":
        out[flips] = z[flips] + scale
    elif kind == "Missing":
        out[flips] = scale
    else:
        out[flips] = z[flips] + noise[flips]
    return out


def _draw_point(spec: AnomalySpec, shape, tag):
    rng = stream(spec.seed, tag)
    u = rng.random(shape)
    noise = _point_noise(spec.kind, spec.scale, spec.shape, rng, shape)
    return u, noise


def inject_point(ts: TimeSeries, spec: AnomalySpec) -> tuple[TimeSeries, np.ndarray]:
    """Flip each point independently with probability ``spec.rate``.

    Returns:
        (contaminated series, boolean mask of replaced points)
    """
    if spec.kind not in POINT_KINDS:
        raise ValueError(f"inject_point needs a point kind, got {spec.kind}")
    if spec.position != "uniform":
        raise ValueError("inject_point only supports position='uniform'; use inject_positional")
    z = ts.values
    u, noise = _draw_point(spec, z.shape, "anomaly.point")
    flips = u < spec.rate
    return ts.with_values(_apply_point(z, flips, spec.kind, spec.scale, noise)), flips


def position_region(K: int, position: str) -> np.ndarray:
    """Zero-based window offsets eligible for contamination under ``position``."""
    if K < 3:
        raise ValueError(f"positional injection needs input_len >= 3, got {K}")
    third = math.ceil(K / 3)
    if position == "front":
        return np.arange(third)
    if position == "back":
        return np.arange(K - third, K)
    if position == "middle":
        return np.arange(third, K - third)
    if position == "uniform":
        return np.arange(K)
    raise ValueError(f"unknown position {position!r}")


def inject_positional(dataset: SupervisedDataset, spec: AnomalySpec) -> tuple[SupervisedDataset, np.ndarray]:
    """Contaminate window inputs inside one third of every window.

    The in-region flip rate is ``rate * K / len(region)`` so the expected
    number of anomalies per window equals the uniform case. Labels are left
    untouched.

    Returns:
        (contaminated dataset, (N, K) boolean mask over window inputs)
    """
    if spec.kind not in POINT_KINDS:
        raise ValueError(f"inject_positional needs a point kind, got {spec.kind}")
    K = dataset.config.input_len
    if dataset.config.stride < K:
        raise ValueError("positional injection needs non-overlapping windows (stride >= input_len)")
    region = position_region(K, spec.position)
    local_rate = spec.rate * K / region.size
    if local_rate > 1.0:
        raise ValueError(f"rate {spec.rate} is too high to fit in the {spec.position} region")
    u, noise = _draw_point(spec, dataset.inputs.shape, "anomaly.positional")
    eligible = np.zeros(K, dtype=bool)
    eligible[region] = True
    flips = (u < local_rate) & eligible[None, :]
    inputs = _apply_point(dataset.inputs, flips, spec.kind, spec.scale, noise)
    return dataset.replace(inputs=inputs), flips


def inject_label(dataset: SupervisedDataset, spec: AnomalySpec) -> tuple[SupervisedDataset, np.ndarray]:
    """Contaminate labels only; inputs are returned unchanged (same array)."""
    if spec.kind not in POINT_KINDS:
        raise ValueError(f"inject_label needs a point kind, got {spec.kind}")
    u, noise = _draw_point(spec, dataset.labels.shape, "anomaly.label")
    flips = u < spec.rate
    labels = _apply_point(dataset.labels, flips, spec.kind, spec.scale, noise)
    return dataset.replace(labels=labels), flips


def inject_subsequence(ts: TimeSeries, spec: AnomalySpec) -> tuple[TimeSeries, np.ndarray]:
    """Markov run anomalies.

    After a clean point, the next point flips with probability ``rate`` using
    the Gaussian point rule (offset ~ N(0, scale**2)). After an anomalous point,
    with probability ``shape`` (phi) the run continues as the previous observed
    value plus N(0, 0.1) noise; otherwise the point is clean.

    The flip uniforms and Gaussian offsets come from the same stream as
    :func:`inject_point`, so with phi = 0 every run start coincides with a
    point-injection flip; the difference is that a point right after an
    anomaly is always clean.
    """
    if spec.kind != "SubsequenceGaussian":
        raise ValueError(f"inject_subsequence needs kind SubsequenceGaussian, got {spec.kind}")
    z = ts.values
    rng = stream(spec.seed, "anomaly.point")
    u = rng.random(z.size)
    offsets = rng.standard_normal(z.size) * spec.scale
    steps = stream(spec.seed, "anomaly.subsequence").standard_normal(z.size) * math.sqrt(SUBSEQUENCE_STEP_VAR)

    out = z.tolist()
    mask = [False] * z.size
    rate, phi = spec.rate, spec.shape
    u, offsets, steps = u.tolist(), offsets.tolist(), steps.tolist()
    prev_anomalous = False
    for t in range(z.size):
        if prev_anomalous:
            if u[t] < phi:
                out[t] = out[t - 1] + steps[t]
                mask[t] = True
        elif u[t] < rate:
            out[t] = out[t] + offsets[t]
            mask[t] = True
        prev_anomalous = mask[t]
    return ts.with_values(out), np.array(mask, dtype=bool)


def run_lengths(mask: np.ndarray) -> np.ndarray:
    """Lengths of maximal runs of True in a boolean sequence."""
    m = np.concatenate(([False], np.asarray(mask, dtype=bool), [False])).astype(np.int8)
    edges = np.diff(m)
    return np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)
