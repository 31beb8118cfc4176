"""Seeded synthetic series for desk-scale experiments."""

from __future__ import annotations

import numpy as np

from .._rng import stream
from ..series import TimeSeries, normalize

SYNTH_NAMES = ("sine", "sine_trend")
SINE_PERIOD = 50
NOISE_STD = 0.05
DRIFT_PER_STEP = 0.001
MIN_LENGTH = 64


def synth(name: str, length: int, seed: int = 0) -> TimeSeries:
    """Sine with period 50 plus N(0, 0.05^2) noise, normalized to mean 0, std 1.

    ``sine_trend`` adds a linear drift of 0.001 per step before normalizing.
    """
    if name not in SYNTH_NAMES:
        raise ValueError(f"unknown synthetic series {name!r}; expected one of {SYNTH_NAMES}")
    if length < MIN_LENGTH:
        raise ValueError(f"synthetic length must be at least {MIN_LENGTH}, got {length}")
    t = np.arange(length, dtype=float)
    z = np.sin(2.0 * np.pi * t / SINE_PERIOD)
    z += stream(seed, f"synth.{name}").normal(0.0, NOISE_STD, size=length)
    if name == "sine_trend":
        z += DRIFT_PER_STEP * t
    out, _ = normalize(TimeSeries(z, name=name))
    return out
